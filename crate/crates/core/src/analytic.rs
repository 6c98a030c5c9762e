//! Maps known in closed form (up to profile interpolation), and quadratures
//! that integrate their energy densities without a stored grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{planar_fraction, Region};
use crate::ops::potential_w;
use crate::par;

/// A planar map with exact first derivatives.
pub trait AnalyticMap: Sync {
    /// `(u, ∂x u, ∂y u)` at `(x, y)`.
    fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64);

    fn epsilon(&self) -> f64;

    fn value(&self, x: f64, y: f64) -> Complex64 {
        self.eval(x, y).0
    }
}

impl<M: AnalyticMap + ?Sized> AnalyticMap for &M {
    fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        (**self).eval(x, y)
    }
    fn epsilon(&self) -> f64 {
        (**self).epsilon()
    }
}

/// Which energy density to integrate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    /// `|du|²/2 + W/ε²`, split as (dirichlet, potential).
    Planar,
    /// Helically reduced density `|dv|²/2 + |Av|²/2 + W/ε²` with
    /// `A = iκ - ∂_θ`; the rotational part is counted as dirichlet.
    Helical { kappa: i32 },
}

#[inline]
pub fn density<M: AnalyticMap + ?Sized>(map: &M, kind: Density, x: f64, y: f64) -> (f64, f64) {
    let (u, ux, uy) = map.eval(x, y);
    let eps = map.epsilon();
    let mut d = 0.5 * (ux.norm_sqr() + uy.norm_sqr());
    if let Density::Helical { kappa } = kind {
        let dtheta = x * uy - y * ux;
        let a = Complex64::new(0.0, kappa as f64) * u - dtheta;
        d += 0.5 * a.norm_sqr();
    }
    (d, potential_w(u) / (eps * eps))
}

/// Node sum of the density over `region` on the lattice `origin + h·(i, j)`
/// covering `[-half, half]²`, with covered-fraction weights. Nothing is stored,
/// so very fine lattices are affordable.
pub fn lattice_energy<M: AnalyticMap + ?Sized>(
    map: &M,
    kind: Density,
    half_width: f64,
    spacing: f64,
    region: &Region,
) -> Result<(f64, f64)> {
    let cells = (2.0 * half_width / spacing).round() as usize;
    let n = cells + 1;
    let start = -0.5 * cells as f64 * spacing;
    let bounds = crate::grid::planar_bounds(region);
    if let Some((lo, hi)) = bounds {
        let lim = -start + 0.5 * spacing + 1e-12;
        if lo[0] < -lim || lo[1] < -lim || hi[0] > lim || hi[1] > lim {
            return Err(Error::RegionOutsideDomain("region exceeds the lattice".into()));
        }
    }
    let h2 = spacing * spacing;
    let [d, p] = par::sum_n::<2, _>(n, |j| {
        let y = start + j as f64 * spacing;
        let (i0, i1) = match bounds {
            Some((lo, hi)) => {
                if y < lo[1] - spacing || y > hi[1] + spacing {
                    return [0.0, 0.0];
                }
                let a = (((lo[0] - start) / spacing).floor() as isize - 1).max(0) as usize;
                let b = ((((hi[0] - start) / spacing).ceil() as usize) + 1).min(n - 1);
                (a, b)
            }
            None => (0, n - 1),
        };
        let mut acc = [0.0, 0.0];
        for i in i0..=i1 {
            let x = start + i as f64 * spacing;
            let w = match region {
                Region::All => {
                    let ex = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    let ey = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    ex * ey
                }
                _ => planar_fraction(region, x, y, spacing),
            };
            if w > 0.0 {
                let (dd, pp) = density(map, kind, x, y);
                acc[0] += w * dd;
                acc[1] += w * pp;
            }
        }
        acc
    });
    Ok((d * h2, p * h2))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let legendre = |z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

struct Cell {
    r: [f64; 2],
    t: [f64; 2],
    value: [f64; 2],
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive polar cubature of the density over the annulus
/// `inner <= |x - c| <= outer`, to relative accuracy `rtol`.
pub struct PolarCubature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub rtol: f64,
    pub max_cells: usize,
}

impl Default for PolarCubature {
    fn default() -> Self {
        let (nodes, weights) = gauss_legendre(6);
        PolarCubature {
            nodes,
            weights,
            rtol: 1e-7,
            max_cells: 400_000,
        }
    }
}

impl PolarCubature {
    fn rule<M: AnalyticMap + ?Sized>(&self, map: &M, kind: Density, c: [f64; 2], r: [f64; 2], t: [f64; 2]) -> [f64; 2] {
        let (rm, rh) = (0.5 * (r[0] + r[1]), 0.5 * (r[1] - r[0]));
        let (tm, th) = (0.5 * (t[0] + t[1]), 0.5 * (t[1] - t[0]));
        let mut acc = [0.0, 0.0];
        for (xi, wi) in self.nodes.iter().zip(&self.weights) {
            let rr = rm + rh * xi;
            for (xj, wj) in self.nodes.iter().zip(&self.weights) {
                let tt = tm + th * xj;
                let (d, p) = density(map, kind, c[0] + rr * tt.cos(), c[1] + rr * tt.sin());
                let w = wi * wj * rr * rh * th;
                acc[0] += w * d;
                acc[1] += w * p;
            }
        }
        acc
    }

    fn cell<M: AnalyticMap + ?Sized>(&self, map: &M, kind: Density, c: [f64; 2], r: [f64; 2], t: [f64; 2]) -> Cell {
        let coarse = self.rule(map, kind, c, r, t);
        let (rm, tm) = (0.5 * (r[0] + r[1]), 0.5 * (t[0] + t[1]));
        let mut fine = [0.0, 0.0];
        for rr in [[r[0], rm], [rm, r[1]]] {
            for tt in [[t[0], tm], [tm, t[1]]] {
                let q = self.rule(map, kind, c, rr, tt);
                fine[0] += q[0];
                fine[1] += q[1];
            }
        }
        let err = (fine[0] - coarse[0]).abs() + (fine[1] - coarse[1]).abs();
        Cell { r, t, value: fine, err }
    }

    /// Returns (dirichlet, potential, error estimate).
    pub fn integrate<M: AnalyticMap + ?Sized>(
        &self,
        map: &M,
        kind: Density,
        center: [f64; 2],
        inner: f64,
        outer: f64,
        radial_breaks: &[f64],
    ) -> Result<(f64, f64, f64)> {
        if !(outer > inner) || inner < 0.0 {
            return Err(Error::InvalidParameter(format!("bad annulus [{inner}, {outer}]")));
        }
        let mut breaks: Vec<f64> = vec![inner];
        breaks.extend(radial_breaks.iter().copied().filter(|b| *b > inner && *b < outer));
        breaks.push(outer);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut heap = BinaryHeap::new();
        let tau = std::f64::consts::TAU;
        for w in breaks.windows(2) {
            for k in 0..16 {
                let t = [tau * k as f64 / 16.0, tau * (k + 1) as f64 / 16.0];
                heap.push(self.cell(map, kind, center, [w[0], w[1]], t));
            }
        }
        let mut cells = heap.len();
        loop {
            let (mut tot, mut err) = ([0.0, 0.0], 0.0);
            for c in heap.iter() {
                tot[0] += c.value[0];
                tot[1] += c.value[1];
                err += c.err;
            }
            let scale = (tot[0] + tot[1]).abs().max(1e-300);
            if err <= self.rtol * scale {
                return Ok((tot[0], tot[1], err));
            }
            if cells >= self.max_cells {
                return Err(Error::NoConvergence(format!(
                    "polar cubature: error {err:e} after {cells} cells"
                )));
            }
            // Refine the worst cells in a batch to amortize the bookkeeping.
            let batch = (heap.len() / 8).max(1);
            for _ in 0..batch {
                let Some(c) = heap.pop() else { break };
                if c.err <= self.rtol * scale / heap.len().max(1) as f64 {
                    heap.push(c);
                    break;
                }
                let (rm, tm) = (0.5 * (c.r[0] + c.r[1]), 0.5 * (c.t[0] + c.t[1]));
                for rr in [[c.r[0], rm], [rm, c.r[1]]] {
                    for tt in [[c.t[0], tm], [tm, c.t[1]]] {
                        heap.push(self.cell(map, kind, center, rr, tt));
                    }
                }
                cells += 3;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Phase;
    impl AnalyticMap for Phase {
        fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
            let r2 = x * x + y * y;
            let u = Complex64::new(x, y) / r2.sqrt();
            let i = Complex64::new(0.0, 1.0);
            (u, i * u * (-y / r2), i * u * (x / r2))
        }
        fn epsilon(&self) -> f64 {
            0.1
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polar_cubature_of_phase_annulus() {
        let q = PolarCubature::default();
        let (d, p, _) = q.integrate(&Phase, Density::Planar, [0.0, 0.0], 0.1, 1.0, &[]).unwrap();
        assert!((d - PI * 10f64.ln()).abs() < 1e-6);
        assert!(p.abs() < 1e-12);
        // Off-center annulus still avoids the singularity.
        let (d2, _, _) = q.integrate(&Phase, Density::Planar, [0.05, 0.0], 0.5, 1.0, &[]).unwrap();
        assert!(d2 > 0.0);
    }

    #[test]
    fn helical_density_vanishes_for_equivariant_phase() {
        // e^{iθ} satisfies ∂_θ u = i u, so A u = 0 for κ = 1.
        let (d, _) = density(&Phase, Density::Helical { kappa: 1 }, 0.3, -0.2);
        let (d0, _) = density(&Phase, Density::Planar, 0.3, -0.2);
        assert!((d - d0).abs() < 1e-12);
    }

    #[test]
    fn lattice_energy_matches_exact_annulus() {
        let region = Region::Annulus {
            center: [0.0, 0.0],
            inner: 0.25,
            outer: 1.0,
        };
        let (d, _) = lattice_energy(&Phase, Density::Planar, 1.0, 1.0 / 512.0, &region).unwrap();
        assert!((d - PI * 4f64.ln()).abs() / d < 2e-3);
    }
}
