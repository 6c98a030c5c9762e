//! Explicit fields built from radial profiles: multi-vortex products,
//! helically symmetric lifts and blow-down rescalings.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticMap;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{GridSpec, Topology};
use crate::profile::{shared_profile, RadialProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub centers: Vec<[f64; 2]>,
    pub degrees: Vec<i32>,
    /// Set when the centers were generated `ε^σ`-separated.
    pub separation_exponent: Option<f64>,
}

impl VortexSpec {
    pub fn new(centers: Vec<[f64; 2]>, degrees: Vec<i32>) -> Result<Self> {
        let s = VortexSpec {
            centers,
            degrees,
            separation_exponent: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.len() != self.degrees.len() {
            return Err(Error::InvalidParameter(format!(
                "{} centers but {} degrees",
                self.centers.len(),
                self.degrees.len()
            )));
        }
        if self.degrees.contains(&0) {
            return Err(Error::InvalidParameter("vortex degrees must be nonzero".into()));
        }
        if let Some(s) = self.separation_exponent {
            if !(0.0..1.0).contains(&s) {
                return Err(Error::InvalidParameter("separation_exponent out of [0,1)".into()));
            }
        }
        for (i, a) in self.centers.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite()) {
                return Err(Error::InvalidParameter("vortex centers must be finite".into()));
            }
            for b in &self.centers[..i] {
                if a == b {
                    return Err(Error::InvalidParameter(format!("duplicate vortex center {a:?}")));
                }
            }
        }
        Ok(())
    }

    /// Vortices on a regular polygon of circumradius `radius` about the
    /// origin, first vertex on the positive x-axis.
    pub fn polygon(degrees: Vec<i32>, radius: f64) -> Result<Self> {
        let m = degrees.len();
        let centers = if m == 1 {
            vec![[0.0, 0.0]]
        } else {
            (0..m)
                .map(|j| {
                    let a = std::f64::consts::TAU * j as f64 / m as f64;
                    [radius * a.cos(), radius * a.sin()]
                })
                .collect()
        };
        Self::new(centers, degrees)
    }

    /// Regular polygon whose nearest-neighbor distance is `ε^σ`.
    pub fn separated(degrees: Vec<i32>, epsilon: f64, sigma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::InvalidParameter("separation_exponent out of [0,1)".into()));
        }
        let m = degrees.len();
        let d = epsilon.powf(sigma);
        let radius = if m <= 1 {
            0.0
        } else {
            d / (2.0 * (std::f64::consts::PI / m as f64).sin())
        };
        let mut s = Self::polygon(degrees, radius)?;
        s.separation_exponent = Some(sigma);
        Ok(s)
    }

    pub fn total_degree(&self) -> i32 {
        self.degrees.iter().sum()
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[..i] {
                best = best.min((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        best
    }

    /// `Σ κ_j² + 2 Σ_{i<j} κ_i κ_j log(1/|p_i - p_j|) / |log ε|`.
    pub fn predicted_theta(&self, epsilon: f64) -> f64 {
        let le = epsilon.ln().abs();
        let mut t: f64 = self.degrees.iter().map(|k| (k * k) as f64).sum();
        for i in 0..self.centers.len() {
            for j in 0..i {
                let (a, b) = (self.centers[i], self.centers[j]);
                let d = (a[0] - b[0]).hypot(a[1] - b[1]);
                t += 2.0 * (self.degrees[i] * self.degrees[j]) as f64 * (1.0 / d).ln() / le;
            }
        }
        t
    }
}

/// Single factor `w_κ((z - p)/ε)`; negative degrees are conjugates.
#[inline]
fn factor(p: &RadialProfile, degree: i32, center: [f64; 2], eps: f64, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
    let dx = (x - center[0]) / eps;
    let dy = (y - center[1]) / eps;
    let r = dx.hypot(dy);
    let k = degree.unsigned_abs() as i32;
    let (w, wx, wy) = if r == 0.0 {
        if k == 1 {
            let a = p.slope();
            (Complex64::new(0.0, 0.0), Complex64::new(a, 0.0), Complex64::new(0.0, a))
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        }
    } else {
        let (f, df) = p.eval(r);
        let e = Complex64::new(dx / r, dy / r).powi(k);
        let kf = k as f64 * f / (r * r);
        let w = e * f;
        let wx = e * Complex64::new(df * dx / r, -kf * dy);
        let wy = e * Complex64::new(df * dy / r, kf * dx);
        (w, wx / eps, wy / eps)
    };
    if degree < 0 {
        (w.conj(), wx.conj(), wy.conj())
    } else {
        (w, wx, wy)
    }
}

/// `u(z) = Π_j w_{κ_j}((z - p_j)/ε)` with exact derivatives.
#[derive(Clone, Debug)]
pub struct VortexProduct {
    spec: VortexSpec,
    epsilon: f64,
    profiles: Vec<Arc<RadialProfile>>,
}

impl VortexProduct {
    pub fn new(spec: VortexSpec, epsilon: f64) -> Result<Self> {
        spec.validate()?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let profiles = spec
            .degrees
            .iter()
            .map(|d| shared_profile(d.unsigned_abs()))
            .collect::<Result<Vec<_>>>()?;
        Ok(VortexProduct {
            spec,
            epsilon,
            profiles,
        })
    }

    pub fn spec(&self) -> &VortexSpec {
        &self.spec
    }
}

impl AnalyticMap for VortexProduct {
    fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        let m = self.profiles.len();
        if m == 0 {
            let z = Complex64::new(0.0, 0.0);
            return (Complex64::new(1.0, 0.0), z, z);
        }
        let mut vals = [(Complex64::default(), Complex64::default(), Complex64::default()); 16];
        let mut heap_vals = Vec::new();
        let vals: &mut [(Complex64, Complex64, Complex64)] = if m <= 16 {
            &mut vals[..m]
        } else {
            heap_vals.resize(m, (Complex64::default(), Complex64::default(), Complex64::default()));
            &mut heap_vals
        };
        for (j, v) in vals.iter_mut().enumerate().take(m) {
            *v = factor(&self.profiles[j], self.spec.degrees[j], self.spec.centers[j], self.epsilon, x, y);
        }
        // Product rule du = Σ_j dw_j Π_{k≠j} w_k, accumulated left to right.
        let mut u = Complex64::new(1.0, 0.0);
        let mut ux = Complex64::new(0.0, 0.0);
        let mut uy = Complex64::new(0.0, 0.0);
        for (w, wx, wy) in vals.iter() {
            ux = ux * w + u * wx;
            uy = uy * w + u * wy;
            u *= w;
        }
        (u, ux, uy)
    }

    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Distance from `p` to the boundary of the planar domain of `grid`.
pub fn distance_to_boundary(grid: &GridSpec, p: [f64; 2]) -> f64 {
    match grid.topology() {
        Topology::Disk { center, radius } => radius - (p[0] - center[0]).hypot(p[1] - center[1]),
        _ => {
            let (xr, yr) = (grid.x_range(), grid.y_range());
            (p[0] - xr.0).min(xr.1 - p[0]).min(p[1] - yr.0).min(yr.1 - p[1])
        }
    }
}

/// Samples the product ansatz on `grid`. Cores closer than `10ε` to the
/// boundary are rejected.
pub fn build_vortex_product(spec: &VortexSpec, epsilon: f64, grid: &GridSpec) -> Result<ComplexField> {
    if grid.ndim() != 2 {
        return Err(Error::InvalidParameter("product ansatz needs a 2D grid".into()));
    }
    for c in &spec.centers {
        if distance_to_boundary(grid, *c) < 10.0 * epsilon {
            return Err(Error::CoreNearBoundary {
                x: c[0],
                y: c[1],
                margin: 10.0 * epsilon,
            });
        }
    }
    let map = VortexProduct::new(spec.clone(), epsilon)?;
    sample_map(&map, grid)
}

/// Samples any analytic map on a 2D grid.
pub fn sample_map<M: AnalyticMap + ?Sized>(map: &M, grid: &GridSpec) -> Result<ComplexField> {
    use rayon::prelude::*;
    let active = grid.active_mask();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if active[idx] {
                let p = grid.coords(idx);
                map.value(p[0], p[1])
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            }
        })
        .collect();
    ComplexField::new(grid.clone(), values, map.epsilon())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Bicubic,
}

/// `v(z, t) = e^{iκt} ṽ(e^{-it} z)` on a 3D cylinder grid of period `2π`.
pub fn build_helical_field(
    reduced: &ComplexField,
    kappa: i32,
    grid3: &GridSpec,
    interp: Interpolation,
) -> Result<ComplexField> {
    use rayon::prelude::*;
    if reduced.grid().ndim() != 2 || grid3.ndim() != 3 {
        return Err(Error::InvalidParameter("helical lift maps a 2D field to a 3D grid".into()));
    }
    let period = grid3.period().unwrap_or(0.0);
    if (period - std::f64::consts::TAU).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!("helical grids need period 2π, got {period}")));
    }
    let values: Vec<Result<Complex64>> = (0..grid3.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid3.coords(idx);
            let (s, c) = p[2].sin_cos();
            let (x, y) = (c * p[0] + s * p[1], -s * p[0] + c * p[1]);
            let v = match interp {
                Interpolation::Bilinear => reduced.sample_bilinear(x, y, 0),
                Interpolation::Bicubic => reduced.sample_bicubic(x, y, 0),
            };
            v.map(|v| Complex64::from_polar(1.0, kappa as f64 * p[2]) * v)
                .ok_or(Error::FootprintExceeded { x, y })
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    ComplexField::new(grid3.clone(), values, reduced.epsilon())
}

/// Helical lift of an analytic planar map, sampled on `grid3`.
pub fn helical_lift_analytic<M: AnalyticMap + ?Sized>(map: &M, kappa: i32, grid3: &GridSpec) -> Result<ComplexField> {
    use rayon::prelude::*;
    let values: Vec<Complex64> = (0..grid3.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid3.coords(idx);
            let (s, c) = p[2].sin_cos();
            Complex64::from_polar(1.0, kappa as f64 * p[2]) * map.value(c * p[0] + s * p[1], -s * p[0] + c * p[1])
        })
        .collect();
    ComplexField::new(grid3.clone(), values, map.epsilon())
}

/// `u(x) = v(x / ε^τ)` with `ε̃ = ε^{1+τ}`, resampled onto `target` by
/// (bi/tri)linear interpolation. A target grid of `None` keeps the grid of `v`.
pub fn blow_down(v: &ComplexField, tau: f64, target: Option<&GridSpec>) -> Result<ComplexField> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!("tau must lie in [0,1), got {tau}")));
    }
    let eps = v.epsilon();
    let new_eps = eps.powf(1.0 + tau);
    let target = target.unwrap_or(v.grid()).clone();
    if tau == 0.0 && &target == v.grid() {
        return v.clone().with_epsilon(new_eps);
    }
    if target.ndim() != v.grid().ndim() {
        return Err(Error::InvalidParameter("blow-down keeps the dimension".into()));
    }
    let s = eps.powf(tau);
    let active = target.active_mask();
    let mut values = Vec::with_capacity(target.len());
    for (idx, &on) in active.iter().enumerate() {
        if !on {
            values.push(Complex64::new(f64::NAN, f64::NAN));
            continue;
        }
        let p = target.coords(idx);
        let (x, y) = (p[0] / s, p[1] / s);
        let val = if target.ndim() == 2 {
            v.sample_bilinear(x, y, 0)
        } else {
            sample_trilinear(v, x, y, p[2] / s)
        };
        values.push(val.ok_or(Error::FootprintExceeded { x, y })?);
    }
    ComplexField::new(target, values, new_eps)
}

fn sample_trilinear(v: &ComplexField, x: f64, y: f64, t: f64) -> Option<Complex64> {
    let g = v.grid();
    let period = g.period()?;
    let ft = (t - g.origin()[2]).rem_euclid(period) / g.spacing();
    let k0 = ft.floor() as usize % g.nt();
    let k1 = (k0 + 1) % g.nt();
    let a = ft - ft.floor();
    let v0 = v.sample_bilinear(x, y, k0)?;
    let v1 = v.sample_bilinear(x, y, k1)?;
    Some(v0 * (1.0 - a) + v1 * a)
}

/// Analytic blow-down `x ↦ m(x / ε^τ)` of a planar map.
pub struct BlownDown<M> {
    pub inner: M,
    pub scale: f64,
    pub epsilon: f64,
}

impl<M: AnalyticMap> BlownDown<M> {
    pub fn new(inner: M, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0,1), got {tau}")));
        }
        let eps = inner.epsilon();
        Ok(BlownDown {
            scale: eps.powf(tau),
            epsilon: eps.powf(1.0 + tau),
            inner,
        })
    }
}

impl<M: AnalyticMap> AnalyticMap for BlownDown<M> {
    fn eval(&self, x: f64, y: f64) -> (Complex64, Complex64, Complex64) {
        let (u, ux, uy) = self.inner.eval(x / self.scale, y / self.scale);
        (u, ux / self.scale, uy / self.scale)
    }
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(VortexSpec::new(vec![[0.0, 0.0]], vec![0]).is_err());
        assert!(VortexSpec::new(vec![[0.0, 0.0], [0.0, 0.0]], vec![1, 1]).is_err());
        assert!(VortexSpec::new(vec![[0.0, 0.0]], vec![1, 1]).is_err());
        let e = VortexSpec::separated(vec![1, 1], 1e-3, 1.2).unwrap_err();
        assert!(e.to_string().contains("separation_exponent out of [0,1)"));
    }

    #[test]
    fn separated_pair_has_requested_distance() {
        let s = VortexSpec::separated(vec![1, -1], 1e-2, 0.5).unwrap();
        assert!((s.min_separation() - 0.1).abs() < 1e-14);
        assert!((s.predicted_theta(1e-2) - 1.0).abs() < 1e-12);
        let s = VortexSpec::separated(vec![1, 1, 1], 1e-3, 0.5).unwrap();
        assert!((s.min_separation() - 1e-1_f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn product_derivatives_match_finite_differences() {
        let spec = VortexSpec::new(vec![[0.1, 0.0], [-0.05, 0.07], [0.0, -0.1]], vec![1, -1, 2]).unwrap();
        let m = VortexProduct::new(spec, 0.05).unwrap();
        let h = 1e-6;
        for &(x, y) in &[(0.02, 0.03), (-0.2, 0.11), (0.3, -0.25)] {
            let (_, ux, uy) = m.eval(x, y);
            let fx = (m.value(x + h, y) - m.value(x - h, y)) / (2.0 * h);
            let fy = (m.value(x, y + h) - m.value(x, y - h)) / (2.0 * h);
            assert!((ux - fx).norm() < 1e-5 * (1.0 + fx.norm()), "{ux} {fx}");
            assert!((uy - fy).norm() < 1e-5 * (1.0 + fy.norm()));
        }
    }

    #[test]
    fn product_vanishes_exactly_at_centers() {
        let spec = VortexSpec::new(vec![[0.1, 0.0], [-0.1, 0.0]], vec![1, 2]).unwrap();
        let m = VortexProduct::new(spec, 0.02).unwrap();
        assert_eq!(m.value(0.1, 0.0).norm(), 0.0);
        assert_eq!(m.value(-0.1, 0.0).norm(), 0.0);
        assert!(m.value(0.0, 0.3).norm() < 1.0);
    }

    #[test]
    fn cores_near_boundary_are_rejected() {
        let grid = GridSpec::disk([0.0, 0.0], 1.0, 0.01).unwrap();
        let spec = VortexSpec::new(vec![[0.95, 0.0]], vec![1]).unwrap();
        assert!(matches!(
            build_vortex_product(&spec, 0.01, &grid),
            Err(Error::CoreNearBoundary { .. })
        ));
    }

    #[test]
    fn helical_lift_of_constant_and_central_vortex() {
        let g2 = GridSpec::centered_square(1.0, 1.0 / 32.0).unwrap();
        let one = ComplexField::constant(g2.clone(), 0.1, Complex64::new(1.0, 0.0)).unwrap();
        let g3 = GridSpec::helical_cylinder(0.5, 64).unwrap();
        let v = build_helical_field(&one, 0, &g3, Interpolation::Bilinear).unwrap();
        assert!(v.values().iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-14));
        let small = GridSpec::centered_square(0.3, 1.0 / 32.0).unwrap();
        let s = ComplexField::constant(small, 0.1, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            build_helical_field(&s, 0, &g3, Interpolation::Bilinear),
            Err(Error::FootprintExceeded { .. })
        ));
    }

    #[test]
    fn blow_down_identity_and_scaling() {
        let g = GridSpec::centered_square(1.0, 1.0 / 64.0).unwrap();
        let spec = VortexSpec::new(vec![[0.2, 0.0], [-0.2, 0.0]], vec![1, 1]).unwrap();
        let v = build_vortex_product(&spec, 0.05, &g).unwrap();
        let u = blow_down(&v, 0.0, None).unwrap();
        assert_eq!(u.values(), v.values());
        assert!(matches!(blow_down(&v, 0.5, None), Err(Error::FootprintExceeded { .. })));
        let s = 0.05f64.sqrt();
        let target = GridSpec::centered_square(0.9 * s, s / 64.0).unwrap();
        let u = blow_down(&v, 0.5, Some(&target)).unwrap();
        assert!((u.epsilon() - 0.05f64.powf(1.5)).abs() < 1e-15);
        // Zeros at ±0.2 move to ±0.2·ε^τ.
        let m = VortexProduct::new(spec, 0.05).unwrap();
        let b = BlownDown::new(m, 0.5).unwrap();
        assert!(b.value(0.2 * s, 0.0).norm() < 1e-14);
    }
}
