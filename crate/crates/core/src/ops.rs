//! Discrete differential operators and energy quantities on sampled fields.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, OneFormField, ScalarField, TensorField, TwoFormField};
use crate::grid::{region_weights, GridSpec, Region};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
    pub normalized_theta: f64,
}

impl EnergyBreakdown {
    /// `scale` is `ω_{n-2} r^{n-2}` of the normalizing ball (1 in the plane).
    pub fn new(dirichlet: f64, potential: f64, epsilon: f64, scale: f64) -> Self {
        let total = dirichlet + potential;
        EnergyBreakdown {
            dirichlet,
            potential,
            total,
            normalized_theta: total / (std::f64::consts::PI * epsilon.ln().abs() * scale),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnergyOptions {
    pub allow_under_resolved: bool,
}

/// Ginzburg-Landau potential `W(u) = (1 - |u|^2)^2 / 4`.
#[inline]
pub fn potential_w(u: Complex64) -> f64 {
    let s = 1.0 - u.norm_sqr();
    0.25 * s * s
}

/// Partial derivative along `axis`: central where both neighbors are active,
/// one-sided where only one is, `None` for isolated nodes.
#[inline]
pub fn partial(u: &ComplexField, idx: usize, axis: usize) -> Option<Complex64> {
    let g = u.grid();
    let h = g.spacing();
    let act = u.active();
    let fwd = g.neighbor(idx, axis, 1).filter(|&n| act[n]);
    let bwd = g.neighbor(idx, axis, -1).filter(|&n| act[n]);
    match (fwd, bwd) {
        (Some(f), Some(b)) => Some((u.value(f) - u.value(b)) / (2.0 * h)),
        (Some(f), None) => Some((u.value(f) - u.value(idx)) / h),
        (None, Some(b)) => Some((u.value(idx) - u.value(b)) / h),
        (None, None) => None,
    }
}

/// Gradient at a node, one entry per axis (zero where undefined).
#[inline]
pub fn gradient(u: &ComplexField, idx: usize) -> [Complex64; 3] {
    let mut d = [Complex64::new(0.0, 0.0); 3];
    for (axis, slot) in d.iter_mut().enumerate().take(u.grid().ndim()) {
        *slot = partial(u, idx, axis).unwrap_or_default();
    }
    d
}

/// Energy density `|du|^2/2 + W(u)/ε^2` split as (dirichlet, potential).
#[inline]
pub fn energy_density(u: &ComplexField, idx: usize) -> (f64, f64) {
    let d = gradient(u, idx);
    let grad2: f64 = d.iter().map(|c| c.norm_sqr()).sum();
    let eps = u.epsilon();
    (0.5 * grad2, potential_w(u.value(idx)) / (eps * eps))
}

fn check_resolution(u: &ComplexField, opts: &EnergyOptions) -> Result<()> {
    if !u.is_resolved() && !opts.allow_under_resolved {
        return Err(Error::UnderResolved {
            epsilon: u.epsilon(),
            spacing: u.grid().spacing(),
        });
    }
    Ok(())
}

/// Normalization `ω_{n-2} r^{n-2}` used for `normalized_theta`.
pub fn theta_scale(grid: &GridSpec, region: &Region) -> f64 {
    if grid.ndim() == 2 {
        return 1.0;
    }
    match region {
        Region::Ball { radius, .. } => 2.0 * radius,
        _ => grid.period().unwrap_or(1.0),
    }
}

/// Quadrature of the GL energy over `region`.
pub fn energy_breakdown(u: &ComplexField, region: &Region, opts: &EnergyOptions) -> Result<EnergyBreakdown> {
    check_resolution(u, opts)?;
    let weights = region_weights(u.grid(), u.active(), region)?;
    let [dir, pot] = par::sum_n::<2, _>(weights.len(), |k| {
        let (idx, w) = weights[k];
        let (d, p) = energy_density(u, idx);
        [w * d, w * p]
    });
    if !(dir.is_finite() && pot.is_finite()) {
        return Err(Error::InvalidField("energy quadrature produced a non-finite value".into()));
    }
    Ok(EnergyBreakdown::new(dir, pot, u.epsilon(), theta_scale(u.grid(), region)))
}

/// Nodes whose full 5/7-point stencil is active.
pub fn interior_mask(u: &ComplexField) -> Vec<bool> {
    let g = u.grid();
    let act = u.active();
    (0..g.len())
        .map(|idx| {
            act[idx]
                && (0..g.ndim()).all(|axis| {
                    [-1isize, 1]
                        .iter()
                        .all(|&d| g.neighbor(idx, axis, d).is_some_and(|n| act[n]))
                })
        })
        .collect()
}

#[inline]
fn laplacian_at(u: &ComplexField, idx: usize) -> Complex64 {
    let g = u.grid();
    let h2 = g.spacing() * g.spacing();
    let c = u.value(idx);
    let mut acc = Complex64::new(0.0, 0.0);
    for axis in 0..g.ndim() {
        let f = g.neighbor(idx, axis, 1).unwrap();
        let b = g.neighbor(idx, axis, -1).unwrap();
        acc += u.value(f) + u.value(b) - 2.0 * c;
    }
    acc / h2
}

/// `|ε² Δ_h u + (1 - |u|²) u|` on interior nodes.
pub fn gl_residual(u: &ComplexField) -> Result<ScalarField> {
    let g = u.grid();
    let valid = interior_mask(u);
    if !valid.iter().any(|&v| v) {
        return Err(Error::GridTooSmall("Laplacian"));
    }
    let eps2 = u.epsilon() * u.epsilon();
    let data: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            if !valid[idx] {
                return 0.0;
            }
            let v = u.value(idx);
            (eps2 * laplacian_at(u, idx) + (1.0 - v.norm_sqr()) * v).norm()
        })
        .collect();
    ScalarField::new(g.clone(), valid, data)
}

/// `ju = u¹ du² - u² du¹` with central differences.
pub fn current_one_form(u: &ComplexField) -> OneFormField {
    let g = u.grid();
    let nd = g.ndim();
    let act = u.active();
    let mut comps = vec![vec![0.0; g.len()]; nd];
    let valid: Vec<bool> = act.to_vec();
    for (axis, comp) in comps.iter_mut().enumerate() {
        comp.par_iter_mut().enumerate().for_each(|(idx, out)| {
            if !act[idx] {
                return;
            }
            if let Some(d) = partial(u, idx, axis) {
                let v = u.value(idx);
                *out = v.re * d.im - v.im * d.re;
            }
        });
    }
    OneFormField {
        grid: g.clone(),
        valid,
        comps,
    }
}

/// `J = ½ d(ju)` with central differences of the nodal current.
pub fn jacobian_two_form(u: &ComplexField) -> TwoFormField {
    let ju = current_one_form(u);
    let g = u.grid();
    let h = g.spacing();
    let valid = interior_mask(u);
    let pairs: &[(usize, usize)] = if g.ndim() == 2 {
        &[(0, 1)]
    } else {
        &[(0, 1), (0, 2), (1, 2)]
    };
    let comps = pairs
        .iter()
        .map(|&(a, b)| {
            (0..g.len())
                .into_par_iter()
                .map(|idx| {
                    if !valid[idx] {
                        return 0.0;
                    }
                    let db = |comp: &[f64], axis: usize| {
                        let f = g.neighbor(idx, axis, 1).unwrap();
                        let bk = g.neighbor(idx, axis, -1).unwrap();
                        (comp[f] - comp[bk]) / (2.0 * h)
                    };
                    0.5 * (db(&ju.comps[b], a) - db(&ju.comps[a], b))
                })
                .collect()
        })
        .collect();
    TwoFormField {
        grid: g.clone(),
        valid,
        comps,
    }
}

/// `T = e I - du ⊗ du` per active node.
pub fn stress_energy(u: &ComplexField) -> TensorField {
    let g = u.grid();
    let d = g.ndim();
    let act = u.active();
    let mut data = vec![0.0; g.len() * d * d];
    data.par_chunks_mut(d * d).enumerate().for_each(|(idx, out)| {
        if !act[idx] {
            return;
        }
        let grad = gradient(u, idx);
        let (ed, ep) = energy_density(u, idx);
        let e = ed + ep;
        for a in 0..d {
            for b in 0..d {
                let dd = grad[a].re * grad[b].re + grad[a].im * grad[b].im;
                out[a * d + b] = if a == b { e } else { 0.0 } - dd;
            }
        }
    });
    TensorField {
        grid: g.clone(),
        valid: act.to_vec(),
        dim: d,
        data,
    }
}

/// Central-difference divergence `(div T)_b = Σ_a ∂_a T_ab` on interior nodes;
/// returns the Euclidean norm per node.
pub fn stress_divergence(t: &TensorField, interior: &[bool]) -> ScalarField {
    let g = t.grid();
    let d = t.dim();
    let h = g.spacing();
    let data: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            if !interior[idx] {
                return 0.0;
            }
            let mut acc = 0.0;
            for b in 0..d {
                let mut s = 0.0;
                for a in 0..d {
                    let f = g.neighbor(idx, a, 1).unwrap();
                    let bk = g.neighbor(idx, a, -1).unwrap();
                    s += (t.at(f)[a * d + b] - t.at(bk)[a * d + b]) / (2.0 * h);
                }
                acc += s * s;
            }
            acc.sqrt()
        })
        .collect();
    ScalarField {
        grid: g.clone(),
        valid: interior.to_vec(),
        data,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallEnergy {
    pub radius: f64,
    pub energy: f64,
    /// `∫_{B_r} 2W/ε² = ∫ (1-|u|²)²/(2ε²)`.
    pub potential2: f64,
}

/// Cumulative energies over concentric balls (disks in the plane).
pub fn ball_energy_profile(
    u: &ComplexField,
    center: [f64; 3],
    radii: &[f64],
    opts: &EnergyOptions,
) -> Result<Vec<BallEnergy>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let region = if u.grid().ndim() == 2 {
                Region::Disk {
                    center: [center[0], center[1]],
                    radius: r,
                }
            } else {
                Region::Ball { center, radius: r }
            };
            let e = energy_breakdown(u, &region, opts)?;
            Ok(BallEnergy {
                radius: r,
                energy: e.total,
                potential2: 2.0 * e.potential,
            })
        })
        .collect()
}

/// `∫_Ω J` over a planar region (2D fields only).
pub fn jacobian_integral(u: &ComplexField, region: &Region) -> Result<f64> {
    if u.grid().ndim() != 2 {
        return Err(Error::InvalidParameter("jacobian_integral needs a 2D field".into()));
    }
    let j = jacobian_two_form(u);
    let w = region_weights(u.grid(), &j.valid, region)?;
    let [s] = par::sum_n::<1, _>(w.len(), |k| [w[k].1 * j.comps[0][w[k].0]]);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn phase_field(h: f64, kappa: i32) -> ComplexField {
        let g = GridSpec::centered_square(1.0, h).unwrap();
        ComplexField::from_fn(g, 0.05, move |x, y, _| {
            if x == 0.0 && y == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, kappa as f64 * y.atan2(x))
            }
        })
        .unwrap()
    }

    #[test]
    fn constant_map_has_zero_energy() {
        let g = GridSpec::centered_square(1.0, 1.0 / 32.0).unwrap();
        let u = ComplexField::constant(g, 0.1, Complex64::from_polar(1.0, 0.7)).unwrap();
        let e = energy_breakdown(&u, &Region::All, &EnergyOptions::default()).unwrap();
        assert!(e.dirichlet.abs() < 1e-20 && e.potential.abs() < 1e-20);
        assert!(gl_residual(&u).unwrap().sup() < 1e-15);
        let t = stress_energy(&u);
        assert!(t.data.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn zero_map_is_a_critical_point() {
        let g = GridSpec::centered_square(1.0, 1.0 / 16.0).unwrap();
        let u = ComplexField::constant(g, 0.1, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(gl_residual(&u).unwrap().sup(), 0.0);
    }

    #[test]
    fn annulus_energy_of_phase_map() {
        let u = phase_field(1.0 / 256.0, 1);
        let region = Region::Annulus {
            center: [0.0, 0.0],
            inner: 0.25,
            outer: 1.0,
        };
        let e = energy_breakdown(&u, &region, &EnergyOptions::default()).unwrap();
        let exact = PI * 4f64.ln();
        assert!((e.dirichlet - exact).abs() / exact < 0.01, "{} vs {}", e.dirichlet, exact);
    }

    #[test]
    fn current_of_phase_map_is_dtheta() {
        let h = 1.0 / 128.0;
        let u = phase_field(h, 1);
        let ju = current_one_form(&u);
        for idx in 0..u.grid().len() {
            let p = u.grid().coords(idx);
            let r = p[0].hypot(p[1]);
            if r >= 8.0 * h && p[0].abs() < 1.0 - h && p[1].abs() < 1.0 - h {
                assert!((ju.norm_at(idx) * r - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn conjugation_flips_current_and_jacobian_exactly() {
        let u = phase_field(1.0 / 32.0, 2);
        let v = u.conj();
        let (ja, jb) = (current_one_form(&u), current_one_form(&v));
        for axis in 0..2 {
            for (a, b) in ja.component(axis).iter().zip(jb.component(axis)) {
                assert_eq!(*a, -*b);
            }
        }
        let (ja, jb) = (jacobian_two_form(&u), jacobian_two_form(&v));
        for (a, b) in ja.component(0).iter().zip(jb.component(0)) {
            assert_eq!(*a, -*b);
        }
        let o = EnergyOptions {
            allow_under_resolved: true,
        };
        assert_eq!(
            energy_breakdown(&u, &Region::All, &o).unwrap(),
            energy_breakdown(&v, &Region::All, &o).unwrap()
        );
    }

    #[test]
    fn stress_identity_nodewise() {
        let u = phase_field(1.0 / 32.0, 1);
        let t = stress_energy(&u);
        let w = [0.6, -0.8];
        for idx in (0..u.grid().len()).step_by(37) {
            let m = t.at(idx);
            let tw = [m[0] * w[0] + m[1] * w[1], m[2] * w[0] + m[3] * w[1]];
            let lhs = tw[0] * w[0] + tw[1] * w[1];
            let g = gradient(&u, idx);
            let duw = g[0] * w[0] + g[1] * w[1];
            let (ed, ep) = energy_density(&u, idx);
            assert!((lhs - (ed + ep - duw.norm_sqr())).abs() < 1e-9 * (1.0 + lhs.abs()));
            assert!((m[0] + m[3] - (2.0 * (ed + ep) - 2.0 * ed)).abs() < 1e-9 * (1.0 + ed));
        }
    }

    #[test]
    fn ball_profile_of_phase_map() {
        let u = phase_field(1.0 / 256.0, 1);
        let prof = ball_energy_profile(&u, [0.0; 3], &[0.2, 0.9], &EnergyOptions::default()).unwrap();
        let diff = prof[1].energy - prof[0].energy;
        assert!((diff - PI * 4.5f64.ln()).abs() / diff < 0.01);
        assert!(ball_energy_profile(&u, [0.0; 3], &[0.5, 1.5], &EnergyOptions::default()).is_err());
    }

    #[test]
    fn under_resolved_needs_opt_in() {
        let g = GridSpec::centered_square(1.0, 0.1).unwrap();
        let u = ComplexField::constant(g, 0.1, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            energy_breakdown(&u, &Region::All, &EnergyOptions::default()),
            Err(Error::UnderResolved { .. })
        ));
        let opts = EnergyOptions {
            allow_under_resolved: true,
        };
        assert!(energy_breakdown(&u, &Region::All, &opts).is_ok());
    }
}
