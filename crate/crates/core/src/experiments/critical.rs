//! Audits of certified critical points: the monotonicity formula, the
//! Pohozaev balance, and the relaxation suite on a disk with degree data.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{potential_degree_report, Comparison, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{GridSpec, Region, Topology};
use crate::ops::{ball_energy_profile, energy_breakdown, gl_residual, potential_w, EnergyOptions};
use crate::profile::shared_profile;
use crate::solver::{dirichlet_degree_data, relax, SolveConfig, SolveOutcome};
use crate::vortex::{detect_clusters, pointwise_bounds_audit, ClusterOptions, PointwiseCeilings};

const ALLOW: EnergyOptions = EnergyOptions {
    allow_under_resolved: true,
};

fn certify(u: &ComplexField, tol: Option<f64>) -> Result<f64> {
    let res = gl_residual(u)?.sup();
    if let Some(t) = tol {
        if !(res <= t) {
            return Err(Error::NotCertified {
                residual: res,
                tolerance: t,
            });
        }
    }
    Ok(res)
}

/// Samples `(u, ∂_ν u, ∂_τ u)` at `n` points of the circle `|x - c| = r`
/// from bicubic interpolation with central differences of step `h`.
fn circle_jets(u: &ComplexField, c: [f64; 2], r: f64, n: usize) -> Result<Vec<(Complex64, Complex64, Complex64)>> {
    let h = u.grid().spacing();
    let at = |x: f64, y: f64| {
        u.sample_bicubic(x, y, 0)
            .ok_or_else(|| Error::RegionOutsideDomain(format!("circle point ({x}, {y}) lacks an interpolation footprint")))
    };
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let (s, co) = t.sin_cos();
            let (x, y) = (c[0] + r * co, c[1] + r * s);
            let v = at(x, y)?;
            let dn = (at(x + h * co, y + h * s)? - at(x - h * co, y - h * s)?) / (2.0 * h);
            let dt = (at(x - h * s, y + h * co)? - at(x + h * s, y - h * co)?) / (2.0 * h);
            Ok((v, dn, dt))
        })
        .collect()
}

fn circle_samples(r: f64, h: f64) -> usize {
    ((2.0 * TAU * r / h).ceil() as usize).max(256)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonotonicityConfig {
    pub center: [f64; 3],
    pub radii: Vec<f64>,
    /// Allowed deficit as a fraction of the left side.
    pub slack: f64,
    /// Residual ceiling for certification; `None` records the residual only.
    pub certify_tol: Option<f64>,
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        MonotonicityConfig {
            center: [0.0; 3],
            radii: (1..=9).map(|k| k as f64 / 10.0).collect(),
            slack: 0.05,
            certify_tol: Some(1e-6),
        }
    }
}

/// Planar fields: `ΔE/Δr ≥ ∫_{∂B}|∂_ν u|² + (1/r)∫_{B_r} 2W/ε²` between
/// consecutive radii, the right side averaged by Simpson's rule. Cylinder
/// fields: nondecrease of `E(B_r)/r`. `measured` is the smallest relative
/// margin `(lhs - rhs)/lhs`.
pub fn monotonicity_audit(u: &ComplexField, cfg: &MonotonicityConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    if cfg.radii.len() < 2 || cfg.radii.windows(2).any(|w| w[1] <= w[0]) || cfg.radii[0] <= 0.0 {
        return Err(Error::InvalidParameter("need at least two increasing positive radii".into()));
    }
    let residual = certify(u, cfg.certify_tol)?;
    let three = u.grid().ndim() == 3;
    let mut table = Table::new("radius_profile", &["radius", "energy", "scaled_energy", "lhs", "rhs"]);
    let mut worst = f64::INFINITY;
    if three {
        let prof = ball_energy_profile(u, cfg.center, &cfg.radii, &ALLOW)?;
        for (k, b) in prof.iter().enumerate() {
            let s = b.energy / b.radius;
            let (lhs, rhs) = match prof.get(k + 1) {
                Some(n) => (n.energy / n.radius, s),
                None => (f64::NAN, f64::NAN),
            };
            if lhs.is_finite() {
                worst = worst.min(margin(lhs, rhs));
            }
            table.push(vec![b.radius, b.energy, s, lhs, rhs]);
        }
    } else {
        let mut all = Vec::with_capacity(2 * cfg.radii.len());
        for w in cfg.radii.windows(2) {
            all.push(w[0]);
            all.push(0.5 * (w[0] + w[1]));
        }
        all.push(*cfg.radii.last().unwrap());
        let prof = ball_energy_profile(u, cfg.center, &all, &ALLOW)?;
        let h = u.grid().spacing();
        let c = [cfg.center[0], cfg.center[1]];
        let rhs_at = |k: usize| -> Result<f64> {
            let r = all[k];
            let n = circle_samples(r, h);
            let jets = circle_jets(u, c, r, n)?;
            let flux: f64 = jets.iter().map(|j| j.1.norm_sqr()).sum::<f64>() * TAU * r / n as f64;
            Ok(flux + prof[k].potential2 / r)
        };
        let rhs: Vec<f64> = (0..all.len()).map(rhs_at).collect::<Result<_>>()?;
        for i in 0..cfg.radii.len() {
            let k = 2 * i;
            let (lhs, avg) = if i + 1 < cfg.radii.len() {
                let dr = all[k + 2] - all[k];
                let lhs = (prof[k + 2].energy - prof[k].energy) / dr;
                (lhs, (rhs[k] + 4.0 * rhs[k + 1] + rhs[k + 2]) / 6.0)
            } else {
                (f64::NAN, f64::NAN)
            };
            if lhs.is_finite() {
                worst = worst.min(margin(lhs, avg));
            }
            table.push(vec![all[k], prof[k].energy, prof[k].energy, lhs, avg]);
        }
    }
    Ok(ExperimentReport::new("monotonicity", cfg, Comparison::AtLeast, 0.0, worst, cfg.slack)
        .detail("residual", residual)
        .detail("dimension", u.grid().ndim() as f64)
        .table(table)
        .timed(t0.elapsed()))
}

fn margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (lhs - rhs) / lhs.abs().max(1e-300)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PohozaevConfig {
    pub center: [f64; 2],
    /// Circle of the balance; defaults to 0.9 of the disk radius.
    pub radius: Option<f64>,
    pub certify_tol: Option<f64>,
    /// Allowed relative gap.
    pub gap: f64,
}

impl Default for PohozaevConfig {
    fn default() -> Self {
        PohozaevConfig {
            center: [0.0, 0.0],
            radius: None,
            certify_tol: Some(1e-6),
            gap: 0.03,
        }
    }
}

/// Inner-variation balance on `D_ρ`: testing `div T = 0` against `x`
/// gives `∫_{D_ρ} 2W/ε² = ρ ∮_{∂D_ρ} (|∂_τ u|²/2 - |∂_ν u|²/2 + W/ε²)`.
/// `predicted` is the interior side, `measured` the boundary side.
pub fn pohozaev_check(u: &ComplexField, cfg: &PohozaevConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    let g = u.grid();
    let Topology::Disk { center, radius } = g.topology() else {
        return Err(Error::InvalidGrid("the balance is evaluated on disk grids".into()));
    };
    // The trace on the outermost active nodes must be unimodular.
    let act = u.active();
    for i in 0..g.len() {
        if act[i] && (0..2).any(|a| [-1, 1].iter().any(|&d| g.neighbor(i, a, d).is_none_or(|n| !act[n]))) {
            let m = u.value(i).norm();
            if (m - 1.0).abs() > 1e-9 {
                return Err(Error::BadBoundary(format!("modulus off boundary trace: |u| = {m} at node {i}")));
            }
        }
    }
    let residual = certify(u, cfg.certify_tol)?;
    let rho = cfg.radius.unwrap_or(0.9 * radius);
    let c = if cfg.center == [0.0, 0.0] { center } else { cfg.center };
    let eps = u.epsilon();
    let region = Region::Disk { center: c, radius: rho };
    let interior = 2.0 * energy_breakdown(u, &region, &ALLOW)?.potential;
    let n = circle_samples(rho, g.spacing());
    let jets = circle_jets(u, c, rho, n)?;
    let ds = TAU * rho / n as f64;
    let boundary: f64 = rho
        * ds
        * jets
            .iter()
            .map(|(v, dn, dt)| 0.5 * dt.norm_sqr() - 0.5 * dn.norm_sqr() + potential_w(*v) / (eps * eps))
            .sum::<f64>();
    // Absolute floor so that vanishing sides are not judged on round-off.
    let tol = cfg.gap * interior.abs().max(boundary.abs()) + 1e-12;
    let gap = if interior.abs().max(boundary.abs()) > 0.0 {
        (interior - boundary).abs() / interior.abs().max(boundary.abs())
    } else {
        0.0
    };
    Ok(ExperimentReport::new("pohozaev", cfg, Comparison::Within, interior, boundary, tol)
        .detail("radius", rho)
        .detail("relative_gap", gap)
        .detail("residual", residual)
        .timed(t0.elapsed()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalConfig {
    /// Nodes per axis of the disk grid.
    pub nodes: usize,
    pub epsilon: f64,
    pub kappa: i32,
    pub solver: SolveConfig,
    /// Allowed `sup ||u| - f(r/ε)|`.
    pub profile_tol: f64,
    pub monotonicity: MonotonicityConfig,
    pub pohozaev: PohozaevConfig,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        CriticalConfig {
            nodes: 512,
            epsilon: 0.05,
            kappa: 1,
            solver: SolveConfig {
                residual_tol: 1e-8,
                newton_switch: 1e-2,
                ..SolveConfig::default()
            },
            profile_tol: 0.02,
            monotonicity: MonotonicityConfig::default(),
            pohozaev: PohozaevConfig::default(),
        }
    }
}

/// Relaxes `(z/|z|)^κ` on the unit disk with the same boundary trace.
pub fn relax_degree_disk(cfg: &CriticalConfig) -> Result<SolveOutcome> {
    let grid = GridSpec::disk_with_nodes([0.0, 0.0], 1.0, cfg.nodes)?;
    let bc = dirichlet_degree_data(cfg.kappa, &grid, [0.0, 0.0])?;
    let k = cfg.kappa;
    let cone = ComplexField::from_fn(grid, cfg.epsilon, |x, y, _| {
        let z = Complex64::new(x, y);
        if z.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (z / z.norm()).powi(k)
        }
    })?;
    relax(&bc.impose(&cone)?, &bc, &cfg.solver)
}

/// Residual, profile match, pointwise constants, Pohozaev balance,
/// monotonicity and the potential/degree bound of a relaxed disk solution.
pub fn critical_point_reports(cfg: &CriticalConfig, out: &SolveOutcome) -> Result<Vec<ExperimentReport>> {
    let u = &out.field;
    let mut reports = vec![ExperimentReport::new("critical_residual", cfg, Comparison::AtMost, cfg.solver.residual_tol, out.residual, 0.0)
        .check("converged", out.converged)
        .detail("flow_steps", out.log.len().saturating_sub(1) as f64)
        .detail("newton_iterations", out.newton_history.len().saturating_sub(1) as f64)];

    let prof = shared_profile(cfg.kappa.unsigned_abs())?;
    let g = u.grid();
    let mut worst: f64 = 0.0;
    let mut table = Table::new("modulus_vs_profile", &["radius", "modulus", "profile"]);
    for i in (0..g.len()).filter(|&i| u.active()[i]) {
        let p = g.coords(i);
        let r = p[0].hypot(p[1]);
        let f = prof.value(r / cfg.epsilon);
        worst = worst.max((u.value(i).norm() - f).abs());
        let (ix, iy, _) = g.unravel(i);
        if iy == g.ny() / 2 && ix >= g.nx() / 2 {
            table.push(vec![r, u.value(i).norm(), f]);
        }
    }
    reports.push(
        ExperimentReport::new("critical_profile", cfg, Comparison::AtMost, 0.0, worst, cfg.profile_tol)
            .detail("center_modulus", u.sample_bilinear(0.0, 0.0, 0).map_or(f64::NAN, |v| v.norm()))
            .table(table),
    );

    let pb = pointwise_bounds_audit(u, PointwiseCeilings::default());
    reports.push(
        ExperimentReport::new("pointwise_bounds", cfg, Comparison::AtMost, pb.ceilings.c1.min(pb.ceilings.c2), pb.c1.max(pb.c2), 0.0)
            .check("constants_finite", pb.c1.is_finite() && pb.c2.is_finite() && pb.c3.is_finite())
            .check("within_ceilings", pb.pass)
            .detail("c1", pb.c1)
            .detail("c2", pb.c2)
            .detail("c3", pb.c3),
    );
    reports.push(pohozaev_check(u, &cfg.pohozaev)?);
    reports.push(monotonicity_audit(u, &cfg.monotonicity)?);
    let clusters = detect_clusters(u, &ClusterOptions::default())?;
    reports.push(potential_degree_report("critical_point", &clusters).detail("detected_degree", clusters.total_degree() as f64));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_passes_both_audits() {
        let g = GridSpec::disk_with_nodes([0.0, 0.0], 1.25, 81).unwrap();
        let u = ComplexField::constant(g, 0.1, Complex64::new(1.0, 0.0)).unwrap();
        let m = monotonicity_audit(&u, &MonotonicityConfig::default()).unwrap();
        assert!(m.pass && m.measured == 0.0, "{m:?}");
        let p = pohozaev_check(&u, &PohozaevConfig::default()).unwrap();
        assert!(p.pass && p.predicted == 0.0 && p.measured.abs() < 1e-20, "{p:?}");
    }

    #[test]
    fn uncertified_input_is_rejected() {
        let g = GridSpec::disk_with_nodes([0.0, 0.0], 1.0, 65).unwrap();
        let u = ComplexField::from_fn(g, 0.1, |x, y, _| Complex64::new(x, y)).unwrap();
        assert!(matches!(
            monotonicity_audit(&u, &MonotonicityConfig::default()),
            Err(Error::NotCertified { .. })
        ));
        assert!(matches!(pohozaev_check(&u, &PohozaevConfig::default()), Err(Error::BadBoundary(_))));
    }

    #[test]
    fn vortex_line_energy_ratio_grows() {
        // Planar vortex extended in t on a cylinder: E(B_r)/r is nondecreasing.
        let g = GridSpec::cylinder(41, 41, 40, 0.05, [-1.0, -1.0]).unwrap();
        let prof = shared_profile(1).unwrap();
        let eps = 0.1;
        let u = ComplexField::from_fn(g, eps, |x, y, _| {
            let r = x.hypot(y);
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(x, y) / r * prof.value(r / eps)
            }
        })
        .unwrap();
        let cfg = MonotonicityConfig {
            center: [0.0, 0.0, 1.0],
            radii: vec![0.2, 0.4, 0.6, 0.8],
            certify_tol: None,
            ..Default::default()
        };
        let m = monotonicity_audit(&u, &cfg).unwrap();
        assert!(m.pass, "{m:?}");
    }
}
