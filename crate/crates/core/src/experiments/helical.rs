//! Helically symmetric fields `v(z, t) = e^{iκt} ṽ(e^{-it} z)`: the reduced
//! solve with its 3D reconstruction, and energy growth of helical ansätze.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Comparison, ExperimentReport, Table};
use crate::analytic::{Density, PolarCubature};
use crate::ansatz::{build_helical_field, sample_map, Interpolation, VortexProduct, VortexSpec};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::GridSpec;
use crate::ops::gl_residual;
use crate::profile::shared_profile;
use crate::solver::{helical_reduced_solve, helical_residual, SolveConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HelicalSolveConfig {
    pub kappa: i32,
    pub epsilon: f64,
    /// Slices per period; the planar spacing is `2π/nt` on both grids.
    pub nt: usize,
    /// Half width of the reduced square.
    pub half_width: f64,
    /// Half width of the reconstructed cylinder.
    pub lift_half_width: f64,
    pub solver: SolveConfig,
    /// Allowed `sup ||ṽ| - f(r/ε)|`.
    pub profile_tol: f64,
}

impl Default for HelicalSolveConfig {
    fn default() -> Self {
        HelicalSolveConfig {
            kappa: 1,
            epsilon: 0.15,
            nt: 256,
            half_width: 1.5,
            lift_half_width: 1.0,
            solver: SolveConfig {
                residual_tol: 1e-8,
                newton_switch: 1e-2,
                ..SolveConfig::default()
            },
            profile_tol: 0.02,
        }
    }
}

/// Applies `A_h = iκ - (x D_y - y D_x)` with central differences; nodes
/// without a full stencil get `None`.
fn apply_rotation(v: &[Option<Complex64>], g: &GridSpec, kappa: i32) -> Vec<Option<Complex64>> {
    let h = g.spacing();
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let c = v[i]?;
            let nb = |a: usize, d: isize| g.neighbor(i, a, d).and_then(|n| v[n]);
            let dx = (nb(0, 1)? - nb(0, -1)?) / (2.0 * h);
            let dy = (nb(1, 1)? - nb(1, -1)?) / (2.0 * h);
            let p = g.coords(i);
            Some(Complex64::new(0.0, kappa as f64) * c - (p[0] * dy - p[1] * dx))
        })
        .collect()
}

/// Reduced solve from the centered vortex ansatz, comparison of the modulus
/// with the radial profile, and the residual of the 3D reconstruction
/// against `5 × reduced residual + interpolation allowance + truncation`.
pub fn helical_reduced_check(cfg: &HelicalSolveConfig) -> Result<(ExperimentReport, ComplexField)> {
    let t0 = Instant::now();
    if cfg.nt < 8 || !(cfg.lift_half_width * std::f64::consts::SQRT_2 < cfg.half_width) {
        return Err(Error::InvalidParameter(
            "the rotated lift must stay inside the reduced square (lift_half_width·√2 < half_width)".into(),
        ));
    }
    let h = TAU / cfg.nt as f64;
    let grid = GridSpec::centered_square(cfg.half_width, h)?;
    let eps = cfg.epsilon;
    let map = VortexProduct::new(VortexSpec::new(vec![[0.0, 0.0]], vec![cfg.kappa])?, eps)?;
    let v0 = sample_map(&map, &grid)?;
    let out = helical_reduced_solve(cfg.kappa, &v0, &cfg.solver)?;
    let v = &out.field;

    let prof = shared_profile(cfg.kappa.unsigned_abs())?;
    let mut worst: f64 = 0.0;
    for i in (0..grid.len()).filter(|&i| v.active()[i]) {
        let p = grid.coords(i);
        worst = worst.max((v.value(i).norm() - prof.value(p[0].hypot(p[1]) / eps)).abs());
    }
    let res_red = helical_residual(v, cfg.kappa)?.sup();

    // Truncation of the angular second difference against the periodic t
    // direction: ε² h²/12 sup |A_h⁴ ṽ|.
    let mut a: Vec<Option<Complex64>> = v.values().iter().map(|c| Some(*c)).collect();
    for _ in 0..4 {
        a = apply_rotation(&a, &grid, cfg.kappa);
    }
    let a4 = a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let trunc = eps * eps * h * h / 12.0 * a4;

    let grid3 = GridSpec::helical_cylinder(cfg.lift_half_width, cfg.nt)?;
    let v3 = build_helical_field(v, cfg.kappa, &grid3, Interpolation::Bicubic)?;
    let v3_lin = build_helical_field(v, cfg.kappa, &grid3, Interpolation::Bilinear)?;
    let delta = v3.sup_distance(&v3_lin);
    let res3 = gl_residual(&v3)?.sup();
    // 7-point Laplacian has ∞-norm 12/h²; the reaction term is 4-Lipschitz on |v| ≤ 1.
    let interp = (12.0 * eps * eps / (h * h) + 4.0) * delta;
    let bound = 5.0 * res_red + interp + trunc;
    let report = ExperimentReport::new("helical_reduced", cfg, Comparison::AtMost, 0.0, worst, cfg.profile_tol)
        .check("converged", out.converged)
        .check("reconstruction_within_bound", res3 <= bound)
        .detail("reduced_residual", res_red)
        .detail("reconstruction_residual", res3)
        .detail("reconstruction_bound", bound)
        .detail("interpolation_gap", delta)
        .detail("truncation", trunc)
        .timed(t0.elapsed());
    Ok((report, out.field))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HelicalAuditConfig {
    pub kappa: i32,
    pub tau: f64,
    pub epsilons: Vec<f64>,
    /// Inner radius of the outer annulus as a fraction of `ε^{-τ}`.
    pub delta: f64,
    /// Distance of each filament from the axis; `√(κ-1)/√|log ε|` when absent.
    pub helix_radius: Option<f64>,
    /// Allowed relative spread of the fitted constants.
    pub spread: f64,
    /// Allowed |slope| of the annulus energy against `log(1/ε)`.
    pub slope: f64,
}

impl Default for HelicalAuditConfig {
    fn default() -> Self {
        HelicalAuditConfig {
            kappa: 2,
            tau: 0.5,
            epsilons: vec![1e-2, 3e-3],
            delta: 0.5,
            helix_radius: None,
            spread: 0.2,
            slope: 0.2,
        }
    }
}

/// Energy of the helical ansatz on `D_{ε^{-τ}} × S¹` divided by
/// `log(1/ε^{1+τ})` and the energy of the outer annulus, across `ε`.
pub fn helical_energy_audit(cfg: &HelicalAuditConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    if cfg.epsilons.len() < 2 {
        return Err(Error::InvalidParameter("the audit compares at least two epsilons".into()));
    }
    if !(0.0..1.0).contains(&cfg.tau) || !(cfg.delta > 0.0 && cfg.delta < 1.0) || cfg.kappa < 1 {
        return Err(Error::InvalidParameter("need kappa >= 1, tau in [0,1), delta in (0,1)".into()));
    }
    let mut table = Table::new("helical_energy", &["epsilon", "radius", "energy", "constant", "annulus_energy"]);
    let mut constants = Vec::new();
    let mut annulus = Vec::new();
    let mut q = PolarCubature::default();
    q.rtol = 1e-6;
    for &eps in &cfg.epsilons {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter(format!("epsilon {eps} out of (0, 1/2)")));
        }
        let le = eps.ln().abs();
        let d = cfg
            .helix_radius
            .unwrap_or(((cfg.kappa - 1) as f64).sqrt() / le.sqrt());
        let big = eps.powf(-cfg.tau);
        if big < d + 10.0 * eps || cfg.delta * big < d + 10.0 * eps {
            return Err(Error::InvalidParameter(format!(
                "domain radius {big} too small for filaments at {d} (tau = {})",
                cfg.tau
            )));
        }
        let spec = if cfg.kappa == 1 || d == 0.0 {
            VortexSpec::new(vec![[0.0, 0.0]], vec![cfg.kappa])?
        } else {
            VortexSpec::polygon(vec![1; cfg.kappa as usize], d)?
        };
        let map = VortexProduct::new(spec, eps)?;
        let kind = Density::Helical { kappa: cfg.kappa };
        let breaks = [(d - 10.0 * eps).max(0.0), d, d + 10.0 * eps, cfg.delta * big];
        let (di, pi, _) = q.integrate(&map, kind, [0.0, 0.0], 0.0, big, &breaks)?;
        let (da, pa, _) = q.integrate(&map, kind, [0.0, 0.0], cfg.delta * big, big, &[])?;
        let energy = TAU * (di + pi);
        let ann = TAU * (da + pa);
        let c = energy / ((1.0 + cfg.tau) * le);
        table.push(vec![eps, big, energy, c, ann]);
        constants.push(c);
        annulus.push((le, ann));
    }
    let mean = constants.iter().sum::<f64>() / constants.len() as f64;
    let (lo, hi) = constants.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &c| (a.0.min(c), a.1.max(c)));
    let spread = (hi - lo) / mean;
    // Least-squares slope of the annulus energy against log(1/ε).
    let n = annulus.len() as f64;
    let mx = annulus.iter().map(|p| p.0).sum::<f64>() / n;
    let my = annulus.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = annulus.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = annulus.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(ExperimentReport::new("helical_energy", cfg, Comparison::AtMost, 0.0, spread, cfg.spread)
        .check("annulus_slope_bounded", slope.abs() <= cfg.slope)
        .detail("mean_constant", mean)
        .detail("annulus_slope", slope)
        .table(table)
        .timed(t0.elapsed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_operator_annihilates_equivariant_phase() {
        let g = GridSpec::centered_square(1.0, 1.0 / 64.0).unwrap();
        let v: Vec<Option<Complex64>> = (0..g.len())
            .map(|i| {
                let p = g.coords(i);
                Some(Complex64::new(p[0], p[1]))
            })
            .collect();
        let a = apply_rotation(&v, &g, 1);
        let worst = a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        assert!(a[0].is_none());
    }

    #[test]
    fn audit_rejects_small_domains() {
        let cfg = HelicalAuditConfig {
            tau: 0.0,
            delta: 0.1,
            ..Default::default()
        };
        assert!(helical_energy_audit(&cfg).is_err());
        let one = HelicalAuditConfig {
            epsilons: vec![1e-2],
            ..Default::default()
        };
        assert!(helical_energy_audit(&one).is_err());
    }
}
