//! Hodge splitting `jv = dψ + d*β + h` of the normalized current on a planar
//! slice, on a staggered lattice: currents on edges, `ψ` on nodes, `β` on
//! cell centres.
//!
//! Orientation: `d*β = (∂₂β, -∂₁β)` and `-Δβ = φ·djv`, so that
//! `d(d*β) = φ·djv` and a degree-one vortex gives `β ≈ log(1/r)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, OneFormField, ScalarField, TwoFormField};
use crate::grid::GridSpec;
use crate::ops::jacobian_two_form;
use crate::par;
use crate::poisson::DirichletPoisson;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Radial cutoff `φ`: 1 on `D_inner(center)`, 0 off `D_outer(center)`,
/// quintic smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
}

fn smoothstep5(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

impl Cutoff {
    /// Plateau `D_{3R/4}`, support `D_{7R/8}`, `R` the half-width of the box.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let (x0, x1) = grid.x_range();
        let (y0, y1) = grid.y_range();
        let r = 0.5 * (x1 - x0).min(y1 - y0);
        Cutoff {
            center: [0.5 * (x0 + x1), 0.5 * (y0 + y1)],
            inner: 0.75 * r,
            outer: 0.875 * r,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x - self.center[0]).hypot(y - self.center[1]);
        1.0 - smoothstep5((r - self.inner) / (self.outer - self.inner))
    }

    pub fn in_plateau(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).hypot(y - self.center[1]) <= self.inner
    }
}

/// Normalizing weight `χ`: 1 on `[0, 1/4]`, `1/t` on `[1/2, ∞)`, quintic
/// Hermite blend matching value and two derivatives at both ends.
pub fn chi(t: f64) -> f64 {
    if t <= 0.25 {
        return 1.0;
    }
    if t >= 0.5 {
        return 1.0 / t;
    }
    let l = 0.25;
    let s = (t - 0.25) / l;
    let (p0, d0, a0) = (1.0, 0.0, 0.0);
    let (p1, d1, a1) = (2.0, -4.0 * l, 16.0 * l * l);
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    h0 * p0 + h1 * d0 + h2 * a0 + h3 * a1 + h4 * d1 + h5 * p1
}

/// Staggered one-form: `x[j*(nx-1)+i]` on the edge `(i,j)→(i+1,j)`,
/// `y[j*nx+i]` on the edge `(i,j)→(i,j+1)`.
#[derive(Clone, Debug)]
pub struct EdgeField {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    x: Vec<f64>,
    y: Vec<f64>,
}

impl EdgeField {
    fn zeros(grid: &GridSpec) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let o = grid.origin();
        EdgeField {
            nx,
            ny,
            h: grid.spacing(),
            origin: [o[0], o[1]],
            x: vec![0.0; (nx - 1) * ny],
            y: vec![0.0; nx * (ny - 1)],
        }
    }

    pub fn x_edge(&self, i: usize, j: usize) -> f64 {
        self.x[j * (self.nx - 1) + i]
    }

    pub fn y_edge(&self, i: usize, j: usize) -> f64 {
        self.y[j * self.nx + i]
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    /// Circulation density on cell `(i, j)`.
    pub fn curl_at(&self, i: usize, j: usize) -> f64 {
        (self.x_edge(i, j) + self.y_edge(i + 1, j) - self.x_edge(i, j + 1) - self.y_edge(i, j)) / self.h
    }

    /// Divergence at an interior node.
    pub fn div_at(&self, i: usize, j: usize) -> f64 {
        (self.x_edge(i, j) - self.x_edge(i - 1, j) + self.y_edge(i, j) - self.y_edge(i, j - 1)) / self.h
    }

    /// `Σ h² |e|²` over edges whose midpoints satisfy `keep`.
    pub fn l2_sq_where<F: Fn(f64, f64) -> bool + Sync>(&self, keep: F) -> f64 {
        let (nx, h, o) = (self.nx, self.h, self.origin);
        let [sx] = par::sum_n::<1, _>(self.x.len(), |k| {
            let (i, j) = (k % (nx - 1), k / (nx - 1));
            let (xm, ym) = (o[0] + (i as f64 + 0.5) * h, o[1] + j as f64 * h);
            [if keep(xm, ym) { self.x[k] * self.x[k] } else { 0.0 }]
        });
        let [sy] = par::sum_n::<1, _>(self.y.len(), |k| {
            let (i, j) = (k % nx, k / nx);
            let (xm, ym) = (o[0] + i as f64 * h, o[1] + (j as f64 + 0.5) * h);
            [if keep(xm, ym) { self.y[k] * self.y[k] } else { 0.0 }]
        });
        (sx + sy) * h * h
    }

    /// Nodal average of the adjacent edges.
    pub fn to_nodal(&self, grid: &GridSpec) -> OneFormField {
        let (nx, ny) = (self.nx, self.ny);
        let mut cx = vec![0.0; nx * ny];
        let mut cy = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let idx = j * nx + i;
                let (mut s, mut c) = (0.0, 0.0);
                if i > 0 {
                    s += self.x_edge(i - 1, j);
                    c += 1.0;
                }
                if i + 1 < nx {
                    s += self.x_edge(i, j);
                    c += 1.0;
                }
                cx[idx] = s / c;
                let (mut s, mut c) = (0.0, 0.0);
                if j > 0 {
                    s += self.y_edge(i, j - 1);
                    c += 1.0;
                }
                if j + 1 < ny {
                    s += self.y_edge(i, j);
                    c += 1.0;
                }
                cy[idx] = s / c;
            }
        }
        OneFormField {
            grid: grid.clone(),
            valid: vec![true; nx * ny],
            comps: vec![cx, cy],
        }
    }
}

/// Result of [`hodge_decompose`].
#[derive(Clone, Debug)]
pub struct HodgeParts {
    cutoff: Cutoff,
    epsilon: f64,
    node_grid: GridSpec,
    cell_grid: GridSpec,
    psi: ScalarField,
    beta: ScalarField,
    ju: EdgeField,
    jv: EdgeField,
    harmonic: EdgeField,
    source_mass: f64,
}

fn edge_currents(u: &ComplexField) -> (EdgeField, EdgeField) {
    let g = u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let h = g.spacing();
    let mut ju = EdgeField::zeros(g);
    let mut jv = EdgeField::zeros(g);
    let v = u.values();
    let w: Vec<f64> = v.iter().map(|z| chi(z.norm()) * z.norm()).collect();
    let edge = |a: usize, b: usize| -> (f64, f64) {
        let p: Complex64 = v[a].conj() * v[b];
        (p.im / h, w[a] * w[b] * p.im.atan2(p.re) / h)
    };
    for j in 0..ny {
        for i in 0..nx - 1 {
            let (c, n) = edge(j * nx + i, j * nx + i + 1);
            ju.x[j * (nx - 1) + i] = c;
            jv.x[j * (nx - 1) + i] = n;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let (c, n) = edge(j * nx + i, (j + 1) * nx + i);
            ju.y[j * nx + i] = c;
            jv.y[j * nx + i] = n;
        }
    }
    (ju, jv)
}

/// Free-space potential `Σ q (1/2π) log(1/|z - w|)` of point charges at the
/// requested targets, via per-block multipole expansions.
fn free_space_potential(charges: &[(f64, f64, f64)], block: f64, targets: &[(f64, f64)]) -> Vec<f64> {
    const P: usize = 24;
    type Charges = Vec<(f64, f64, f64)>;
    let mut blocks: std::collections::BTreeMap<(i64, i64), Charges> = Default::default();
    for &(x, y, q) in charges {
        if q != 0.0 {
            let key = ((x / block).floor() as i64, (y / block).floor() as i64);
            blocks.entry(key).or_default().push((x, y, q));
        }
    }
    let expansions: Vec<(Complex64, Vec<Complex64>)> = blocks
        .values()
        .map(|pts| {
            let n = pts.len() as f64;
            let c = Complex64::new(
                pts.iter().map(|p| p.0).sum::<f64>() / n,
                pts.iter().map(|p| p.1).sum::<f64>() / n,
            );
            let mut a = vec![Complex64::new(0.0, 0.0); P + 1];
            for &(x, y, q) in pts {
                let d = Complex64::new(x, y) - c;
                let mut pw = Complex64::new(q, 0.0);
                for ak in a.iter_mut() {
                    *ak += pw;
                    pw *= d;
                }
            }
            (c, a)
        })
        .collect();
    targets
        .par_iter()
        .map(|&(x, y)| {
            let z = Complex64::new(x, y);
            let mut acc = 0.0;
            for (c, a) in &expansions {
                let dz = z - c;
                let w = dz.inv();
                let mut s = Complex64::new(0.0, 0.0);
                for k in (1..=P).rev() {
                    s = (s + a[k] / k as f64) * w;
                }
                acc += (a[0] * dz.ln() - s).re;
            }
            -acc / TWO_PI
        })
        .collect()
}

/// Splits the normalized current `jv = χ(|u|)² ju` of a fully active planar
/// field with the cutoff fitted to its box.
pub fn hodge_decompose(u: &ComplexField) -> Result<HodgeParts> {
    hodge_decompose_with(u, Cutoff::for_grid(u.grid()))
}

pub fn hodge_decompose_with(u: &ComplexField, cutoff: Cutoff) -> Result<HodgeParts> {
    let g = u.grid();
    if g.ndim() != 2 || !u.active().iter().all(|&a| a) {
        return Err(Error::InvalidGrid("Hodge splitting needs a fully active planar field".into()));
    }
    let (nx, ny) = (g.nx(), g.ny());
    if nx < 8 || ny < 8 {
        return Err(Error::GridTooSmall("Hodge"));
    }
    if !(cutoff.inner > 0.0 && cutoff.outer > cutoff.inner) {
        return Err(Error::InvalidParameter("cutoff needs 0 < inner < outer".into()));
    }
    let h = g.spacing();
    for idx in 0..g.len() {
        let [x, y, _] = g.coords(idx);
        if u.value(idx).norm() <= 0.5 && !cutoff.in_plateau(x, y) {
            return Err(Error::VorticityOutsideCutoff { x, y });
        }
    }
    let (ju, jv) = edge_currents(u);
    let o = g.origin();

    // ψ on nodes: Δψ = div(jv - ju), ψ = 0 on the boundary.
    let (ix, iy) = (nx - 2, ny - 2);
    let mut rhs: Vec<f64> = (0..ix * iy)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % ix + 1, k / ix + 1);
            -(jv.div_at(i, j) - ju.div_at(i, j))
        })
        .collect();
    DirichletPoisson::new(ix, iy, h)?.solve(&mut rhs, 0.0)?;
    let mut psi = vec![0.0; nx * ny];
    for k in 0..ix * iy {
        psi[(k / ix + 1) * nx + k % ix + 1] = rhs[k];
    }

    // β on cells: -Δβ = φ·djv, free-space values on the outer ring.
    let (cx, cy) = (nx - 1, ny - 1);
    let cell_grid = GridSpec::rectangle(cx, cy, h, [o[0] + 0.5 * h, o[1] + 0.5 * h])?;
    let src: Vec<f64> = (0..cx * cy)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % cx, k / cx);
            let (x, y) = (o[0] + (i as f64 + 0.5) * h, o[1] + (j as f64 + 0.5) * h);
            cutoff.eval(x, y) * jv.curl_at(i, j)
        })
        .collect();
    let source_mass = src.iter().sum::<f64>() * h * h;
    let charges: Vec<(f64, f64, f64)> = src
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (i, j) = (k % cx, k / cx);
            (o[0] + (i as f64 + 0.5) * h, o[1] + (j as f64 + 0.5) * h, s * h * h)
        })
        .collect();
    let ring: Vec<usize> = (0..cx * cy)
        .filter(|&k| {
            let (i, j) = (k % cx, k / cx);
            i == 0 || j == 0 || i == cx - 1 || j == cy - 1
        })
        .collect();
    let targets: Vec<(f64, f64)> = ring.iter().map(|&k| (charges[k].0, charges[k].1)).collect();
    // Blocks small enough that every expansion converges with ratio ≤ 1/4.
    let edge_dist = {
        let r = 0.5 * ((cx - 1) as f64).min((cy - 1) as f64) * h;
        (r - cutoff.outer).max(h)
    };
    let block = (0.25 * edge_dist / std::f64::consts::SQRT_2).min(64.0 * h);
    let ring_vals = free_space_potential(&charges, block, &targets);
    let mut beta = vec![0.0; cx * cy];
    for (&k, &v) in ring.iter().zip(&ring_vals) {
        beta[k] = v;
    }
    let (bx, by) = (cx - 2, cy - 2);
    let h2 = h * h;
    let mut rhs: Vec<f64> = (0..bx * by)
        .map(|k| {
            let (i, j) = (k % bx + 1, k / bx + 1);
            let mut r = src[j * cx + i];
            if i == 1 {
                r += beta[j * cx] / h2;
            }
            if i == cx - 2 {
                r += beta[j * cx + cx - 1] / h2;
            }
            if j == 1 {
                r += beta[i] / h2;
            }
            if j == cy - 2 {
                r += beta[(cy - 1) * cx + i] / h2;
            }
            r
        })
        .collect();
    DirichletPoisson::new(bx, by, h)?.solve(&mut rhs, 0.0)?;
    for k in 0..bx * by {
        beta[(k / bx + 1) * cx + k % bx + 1] = rhs[k];
    }

    let mut harmonic = jv.clone();
    for j in 0..ny {
        for i in 0..nx - 1 {
            let mut d = (psi[j * nx + i + 1] - psi[j * nx + i]) / h;
            if j > 0 && j < ny - 1 {
                d += (beta[j * cx + i] - beta[(j - 1) * cx + i]) / h;
            }
            harmonic.x[j * (nx - 1) + i] -= d;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let mut d = (psi[(j + 1) * nx + i] - psi[j * nx + i]) / h;
            if i > 0 && i < nx - 1 {
                d -= (beta[j * cx + i] - beta[j * cx + i - 1]) / h;
            }
            harmonic.y[j * nx + i] -= d;
        }
    }

    Ok(HodgeParts {
        cutoff,
        epsilon: u.epsilon(),
        node_grid: g.clone(),
        psi: ScalarField::new(g.clone(), vec![true; nx * ny], psi)?,
        beta: ScalarField::new(cell_grid.clone(), vec![true; cx * cy], beta)?,
        cell_grid,
        ju,
        jv,
        harmonic,
        source_mass,
    })
}

impl HodgeParts {
    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }
    /// `β` sampled at cell centres.
    pub fn beta(&self) -> &ScalarField {
        &self.beta
    }
    pub fn ju(&self) -> &EdgeField {
        &self.ju
    }
    pub fn jv(&self) -> &EdgeField {
        &self.jv
    }
    /// Remainder `h = jv - dψ - d*β` on edges.
    pub fn harmonic(&self) -> &EdgeField {
        &self.harmonic
    }
    pub fn harmonic_nodal(&self) -> OneFormField {
        self.harmonic.to_nodal(&self.node_grid)
    }
    /// `∫ φ djv`; `2π Σκ` when every vortex sits in the plateau.
    pub fn source_mass(&self) -> f64 {
        self.source_mass
    }

    fn beta_cell(&self, i: usize, j: usize) -> f64 {
        self.beta.data[j * self.cell_grid.nx() + i]
    }

    /// `d*β` on edges (zero on the outer boundary edges where it is undefined).
    pub fn rot_grad_beta(&self) -> EdgeField {
        let (nx, ny, h) = (self.node_grid.nx(), self.node_grid.ny(), self.node_grid.spacing());
        let mut e = EdgeField::zeros(&self.node_grid);
        for j in 1..ny - 1 {
            for i in 0..nx - 1 {
                e.x[j * (nx - 1) + i] = (self.beta_cell(i, j) - self.beta_cell(i, j - 1)) / h;
            }
        }
        for j in 0..ny - 1 {
            for i in 1..nx - 1 {
                e.y[j * nx + i] = -(self.beta_cell(i, j) - self.beta_cell(i - 1, j)) / h;
            }
        }
        e
    }

    /// `max |jv - dψ - d*β - h|` over all edges.
    pub fn reconstruction_defect(&self) -> f64 {
        let (nx, ny, h) = (self.node_grid.nx(), self.node_grid.ny(), self.node_grid.spacing());
        let db = self.rot_grad_beta();
        let p = &self.psi.data;
        let mut m: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx - 1 {
                let k = j * (nx - 1) + i;
                let d = (p[j * nx + i + 1] - p[j * nx + i]) / h;
                m = m.max((self.jv.x[k] - d - db.x[k] - self.harmonic.x[k]).abs());
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let k = j * nx + i;
                let d = (p[(j + 1) * nx + i] - p[j * nx + i]) / h;
                m = m.max((self.jv.y[k] - d - db.y[k] - self.harmonic.y[k]).abs());
            }
        }
        m
    }

    /// `(max |dh|, max |d*h|)` over cells and interior nodes of the plateau.
    pub fn harmonicity_defect(&self) -> (f64, f64) {
        let g = &self.node_grid;
        let (nx, ny, h) = (g.nx(), g.ny(), g.spacing());
        let o = g.origin();
        let mut curl: f64 = 0.0;
        for j in 1..ny - 2 {
            for i in 1..nx - 2 {
                let (x, y) = (o[0] + (i as f64 + 0.5) * h, o[1] + (j as f64 + 0.5) * h);
                if self.cutoff.in_plateau(x, y) {
                    curl = curl.max(self.harmonic.curl_at(i, j).abs());
                }
            }
        }
        let mut div: f64 = 0.0;
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                if self.cutoff.in_plateau(g.x(i), g.y(j)) {
                    div = div.max(self.harmonic.div_at(i, j).abs());
                }
            }
        }
        (curl, div)
    }

    /// `∫ |j - d*β|²` over edges whose midpoints satisfy `keep`, with `j = jv`
    /// when `normalized` and `j = ju` otherwise.
    pub fn coexact_gap_sq<F: Fn(f64, f64) -> bool + Sync>(&self, normalized: bool, keep: F) -> f64 {
        let mut diff = if normalized { self.jv.clone() } else { self.ju.clone() };
        let db = self.rot_grad_beta();
        for (a, b) in diff.x.iter_mut().zip(&db.x) {
            *a -= b;
        }
        for (a, b) in diff.y.iter_mut().zip(&db.y) {
            *a -= b;
        }
        diff.l2_sq_where(keep)
    }

    /// Bilinear `β` at points of the cutoff plateau.
    pub fn beta_at(&self, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        let cg = &self.cell_grid;
        points
            .iter()
            .map(|&[x, y]| {
                if !self.cutoff.in_plateau(x, y) {
                    return Err(Error::OutsideCutoff { x, y });
                }
                let (fx, fy) = cg.fractional_index(x, y);
                let i = (fx.floor() as usize).min(cg.nx() - 2);
                let j = (fy.floor() as usize).min(cg.ny() - 2);
                let (tx, ty) = (fx - i as f64, fy - j as f64);
                Ok((1.0 - tx) * (1.0 - ty) * self.beta_cell(i, j)
                    + tx * (1.0 - ty) * self.beta_cell(i + 1, j)
                    + (1.0 - tx) * ty * self.beta_cell(i, j + 1)
                    + tx * ty * self.beta_cell(i + 1, j + 1))
            })
            .collect()
    }

    /// Angular means of `β` on circles about `center`, for `β` versus `log r` plots.
    pub fn beta_line_profile(&self, center: [f64; 2], radii: &[f64]) -> Result<Vec<(f64, f64)>> {
        const N: usize = 32;
        radii
            .iter()
            .map(|&r| {
                let pts: Vec<[f64; 2]> = (0..N)
                    .map(|k| {
                        let a = TWO_PI * k as f64 / N as f64;
                        [center[0] + r * a.cos(), center[1] + r * a.sin()]
                    })
                    .collect();
                let v = self.beta_at(&pts)?;
                Ok((r, v.iter().sum::<f64>() / N as f64))
            })
            .collect()
    }
}

/// `β(p_i) ≈ κ_i|log ε| + Σ_{j≠i} κ_j log(1/|p_i - p_j|)`.
pub fn predicted_beta(centers: &[[f64; 2]], degrees: &[i32], epsilon: f64) -> Vec<f64> {
    let le = epsilon.ln().abs();
    (0..centers.len())
        .map(|i| {
            let mut b = degrees[i] as f64 * le;
            for j in 0..centers.len() {
                if j != i {
                    let d = (centers[i][0] - centers[j][0]).hypot(centers[i][1] - centers[j][1]);
                    b += degrees[j] as f64 * (1.0 / d).ln();
                }
            }
            b
        })
        .collect()
}

/// `(1/|log ε|) ∫ |ju - d*β|²` over the cutoff plateau.
pub fn coex_defect(parts: &HodgeParts) -> f64 {
    let c = parts.cutoff;
    parts.coexact_gap_sq(false, |x, y| c.in_plateau(x, y)) / parts.epsilon.ln().abs()
}

/// `(1/|log ε|) Σ_i κ_i β(p_i)`.
pub fn theta_via_beta(parts: &HodgeParts, centers: &[[f64; 2]], degrees: &[i32]) -> Result<f64> {
    if centers.len() != degrees.len() {
        return Err(Error::InvalidParameter("centers and degrees differ in length".into()));
    }
    let b = parts.beta_at(centers)?;
    Ok(b.iter().zip(degrees).map(|(b, &k)| b * k as f64).sum::<f64>() / parts.epsilon.ln().abs())
}

/// `(‖J_{xt}‖² + ‖J_{yt}‖²) / ‖J_{xy}‖²` for a 3D field: the transverse
/// Jacobian components relative to the slice component.
pub fn transverse_jacobian_ratio(u: &ComplexField) -> Result<f64> {
    if u.grid().ndim() != 3 {
        return Err(Error::InvalidGrid("transverse ratio needs a 3D field".into()));
    }
    let j: TwoFormField = jacobian_two_form(u);
    let sq = |p: usize| -> f64 {
        let c = j.component(p);
        c.iter()
            .zip(j.valid())
            .filter(|(_, v)| **v)
            .map(|(x, _)| x * x)
            .sum::<f64>()
    };
    let base = sq(0);
    if base == 0.0 {
        return Ok(0.0);
    }
    Ok((sq(1) + sq(2)) / base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_vortex_product, VortexSpec};

    #[test]
    fn chi_is_smooth_and_normalizing() {
        assert_eq!(chi(0.1), 1.0);
        assert!((chi(0.7) * 0.7 - 1.0).abs() < 1e-15);
        for t in [0.25, 0.5] {
            let d = 1e-6;
            assert!((chi(t + d) - chi(t - d)).abs() < 1e-4, "jump at {t}");
            let s1 = (chi(t + d) - chi(t)) / d;
            let s0 = (chi(t) - chi(t - d)) / d;
            assert!((s1 - s0).abs() < 1e-3, "kink at {t}");
        }
    }

    #[test]
    fn multipole_matches_direct_sum() {
        let charges: Vec<(f64, f64, f64)> = (0..200)
            .map(|k| {
                let a = k as f64 * 0.37;
                (0.3 * a.cos() * (k as f64 / 200.0), 0.3 * a.sin(), (k % 7) as f64 - 3.0)
            })
            .collect();
        let targets = vec![(1.0, 0.2), (-0.9, -1.0), (0.0, 1.1)];
        let fast = free_space_potential(&charges, 0.1, &targets);
        for (t, f) in targets.iter().zip(&fast) {
            let d: f64 = charges
                .iter()
                .map(|&(x, y, q)| -q * (t.0 - x).hypot(t.1 - y).ln() / TWO_PI)
                .sum();
            assert!((d - f).abs() < 1e-12 * (1.0 + d.abs()), "{d} vs {f}");
        }
    }

    fn vortex_field(centers: Vec<[f64; 2]>, degrees: Vec<i32>, eps: f64, h: f64) -> ComplexField {
        let spec = VortexSpec::new(centers, degrees).unwrap();
        let grid = GridSpec::centered_square(1.0, h).unwrap();
        build_vortex_product(&spec, eps, &grid).unwrap()
    }

    #[test]
    fn single_vortex_log_potential() {
        let eps = 0.01;
        let u = vortex_field(vec![[0.0, 0.0]], vec![1], eps, 1.0 / 256.0);
        let parts = hodge_decompose(&u).unwrap();
        assert!((parts.source_mass() - TWO_PI).abs() < 1e-6, "{}", parts.source_mass());
        assert!(parts.reconstruction_defect() < 1e-10);
        let (r1, r2) = (0.1, 0.25);
        let prof = parts.beta_line_profile([0.0, 0.0], &[r1, r2]).unwrap();
        let slope = (prof[1].1 - prof[0].1) / (r2.ln() - r1.ln());
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
        let b0 = parts.beta_at(&[[0.0, 0.0]]).unwrap()[0];
        assert!((b0 / eps.ln().abs() - 1.0).abs() < 0.15, "{b0}");
        let (curl, _) = parts.harmonicity_defect();
        assert!(curl < 1e-8, "curl {curl}");
        assert!(parts.beta_at(&[[0.9, 0.0]]).is_err());
    }

    #[test]
    fn conjugation_negates_beta() {
        let u = vortex_field(vec![[0.1, 0.0], [-0.2, 0.1]], vec![1, 2], 0.02, 1.0 / 128.0);
        let a = hodge_decompose(&u).unwrap();
        let b = hodge_decompose(&u.conj()).unwrap();
        let err = a
            .beta()
            .data()
            .iter()
            .zip(b.beta().data())
            .map(|(x, y)| (x + y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!((coex_defect(&a) - coex_defect(&b)).abs() < 1e-9);
    }

    #[test]
    fn smooth_phase_has_no_beta() {
        let grid = GridSpec::centered_square(1.0, 1.0 / 64.0).unwrap();
        let u = ComplexField::from_fn(grid, 0.05, |x, _, _| Complex64::from_polar(1.0, 1.3 * x)).unwrap();
        let parts = hodge_decompose(&u).unwrap();
        assert!(parts.beta().sup() < 1e-12);
        assert!(parts.psi().sup() < 1e-12);
        let (curl, div) = parts.harmonicity_defect();
        assert!(curl < 1e-9 && div < 1e-9, "{curl} {div}");
    }

    #[test]
    fn vorticity_near_cutoff_is_rejected() {
        let u = vortex_field(vec![[0.78, 0.0]], vec![1], 0.01, 1.0 / 128.0);
        assert!(matches!(hodge_decompose(&u), Err(Error::VorticityOutsideCutoff { .. })));
    }
}
