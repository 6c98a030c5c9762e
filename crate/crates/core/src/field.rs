//! Sampled fields on a [`GridSpec`].

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// A complex map sampled on the active nodes of a grid, together with the GL
/// parameter `epsilon`. Inactive nodes hold `NaN`.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: GridSpec,
    active: Vec<bool>,
    values: Vec<Complex64>,
    epsilon: f64,
}

const NAN_C: Complex64 = Complex64::new(f64::NAN, f64::NAN);

impl ComplexField {
    /// Builds a field from box-ordered values. Inactive entries are replaced by `NaN`.
    pub fn new(grid: GridSpec, mut values: Vec<Complex64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidField(format!("epsilon must be positive, got {epsilon}")));
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let active = grid.active_mask();
        for (idx, v) in values.iter_mut().enumerate() {
            if active[idx] {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { index: idx });
                }
            } else {
                *v = NAN_C;
            }
        }
        Ok(ComplexField {
            grid,
            active,
            values,
            epsilon,
        })
    }

    /// Samples `f(x, y, t)` at every active node.
    pub fn from_fn<F>(grid: GridSpec, epsilon: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Complex64,
    {
        let active = grid.active_mask();
        let values = (0..grid.len())
            .map(|idx| {
                if active[idx] {
                    let p = grid.coords(idx);
                    f(p[0], p[1], p[2])
                } else {
                    NAN_C
                }
            })
            .collect();
        Self::new(grid, values, epsilon)
    }

    pub fn constant(grid: GridSpec, epsilon: f64, c: Complex64) -> Result<Self> {
        Self::from_fn(grid, epsilon, |_, _, _| c)
    }

    /// Random field with independent entries in the closed unit disk.
    pub fn random<R: Rng>(grid: GridSpec, epsilon: f64, rng: &mut R) -> Result<Self> {
        let values = (0..grid.len())
            .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect();
        Self::new(grid, values, epsilon)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn active(&self) -> &[bool] {
        &self.active
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    #[inline]
    pub fn value(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    /// `epsilon >= 2h`.
    pub fn is_resolved(&self) -> bool {
        self.epsilon >= 2.0 * self.grid.spacing()
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidField(format!("epsilon must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Replaces the values, keeping grid and epsilon.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.epsilon)
    }

    pub fn conj(&self) -> Self {
        ComplexField {
            grid: self.grid.clone(),
            active: self.active.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
            epsilon: self.epsilon,
        }
    }

    /// Extracts the `t = k` slice of a 3D field as a 2D rectangle field.
    pub fn slice(&self, k: usize) -> Result<Self> {
        if self.grid.ndim() != 3 {
            return Err(Error::InvalidField("slices need a 3D field".into()));
        }
        let o = self.grid.origin();
        let g2 = GridSpec::rectangle(self.grid.nx(), self.grid.ny(), self.grid.spacing(), [o[0], o[1]])?;
        let n = self.grid.slice_len();
        let values = self.values[k * n..(k + 1) * n].to_vec();
        Self::new(g2, values, self.epsilon)
    }

    /// Largest modulus over active nodes.
    pub fn max_modulus(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.active)
            .filter(|(_, a)| **a)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.active)
            .filter(|(_, a)| **a)
            .map(|((a, b), _)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Bilinear interpolation in the plane of slice `k`. Returns `None` if the
    /// point is outside the box or touches an inactive node.
    pub fn sample_bilinear(&self, x: f64, y: f64, k: usize) -> Option<Complex64> {
        let g = &self.grid;
        let (fi, fj) = g.fractional_index(x, y);
        let eps = 1e-9;
        if fi < -eps || fj < -eps || fi > (g.nx() - 1) as f64 + eps || fj > (g.ny() - 1) as f64 + eps {
            return None;
        }
        let i0 = (fi.floor().max(0.0) as usize).min(g.nx() - 2);
        let j0 = (fj.floor().max(0.0) as usize).min(g.ny() - 2);
        let a = (fi - i0 as f64).clamp(0.0, 1.0);
        let b = (fj - j0 as f64).clamp(0.0, 1.0);
        let idx = |i: usize, j: usize| g.index(i, j, k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (di, wi) in [(0usize, 1.0 - a), (1, a)] {
            for (dj, wj) in [(0usize, 1.0 - b), (1, b)] {
                let w = wi * wj;
                let id = idx(i0 + di, j0 + dj);
                if !self.active[id] {
                    if w == 0.0 {
                        continue;
                    }
                    return None;
                }
                acc += self.values[id] * w;
            }
        }
        Some(acc)
    }

    /// Bicubic (Catmull-Rom) interpolation in slice `k`; falls back to `None`
    /// when the 4x4 footprint leaves the active region.
    pub fn sample_bicubic(&self, x: f64, y: f64, k: usize) -> Option<Complex64> {
        let g = &self.grid;
        let (fi, fj) = g.fractional_index(x, y);
        let i0 = fi.floor() as isize;
        let j0 = fj.floor() as isize;
        if i0 < 1 || j0 < 1 || i0 + 2 >= g.nx() as isize || j0 + 2 >= g.ny() as isize {
            return None;
        }
        let a = fi - i0 as f64;
        let b = fj - j0 as f64;
        let wa = catmull_rom(a);
        let wb = catmull_rom(b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (dj, wj) in wb.iter().enumerate() {
            for (di, wi) in wa.iter().enumerate() {
                let id = g.index((i0 - 1 + di as isize) as usize, (j0 - 1 + dj as isize) as usize, k);
                if !self.active[id] {
                    return None;
                }
                acc += self.values[id] * (wi * wj);
            }
        }
        Some(acc)
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Real scalar per node; `valid` marks nodes where the value is defined.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub(crate) grid: GridSpec,
    pub(crate) valid: Vec<bool>,
    pub(crate) data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, valid: Vec<bool>, data: Vec<f64>) -> Result<Self> {
        if valid.len() != grid.len() || data.len() != grid.len() {
            return Err(Error::InvalidField("scalar field length mismatch".into()));
        }
        for (idx, (&v, &d)) in valid.iter().zip(&data).enumerate() {
            if v && !d.is_finite() {
                return Err(Error::NonFinite { index: idx });
            }
        }
        Ok(ScalarField { grid, valid, data })
    }
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    /// Maximum over valid nodes (0 if none).
    pub fn sup(&self) -> f64 {
        self.data
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|(d, _)| d.abs())
            .fold(0.0, f64::max)
    }
}

/// One component per grid axis.
#[derive(Clone, Debug)]
pub struct OneFormField {
    pub(crate) grid: GridSpec,
    pub(crate) valid: Vec<bool>,
    pub(crate) comps: Vec<Vec<f64>>,
}

impl OneFormField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }
    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }
    pub fn norm_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }
}

/// One density in 2D; pairs (0,1), (0,2), (1,2) in 3D.
#[derive(Clone, Debug)]
pub struct TwoFormField {
    pub(crate) grid: GridSpec,
    pub(crate) valid: Vec<bool>,
    pub(crate) comps: Vec<Vec<f64>>,
}

impl TwoFormField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
    pub fn pairs(&self) -> &'static [(usize, usize)] {
        if self.comps.len() == 1 {
            &[(0, 1)]
        } else {
            &[(0, 1), (0, 2), (1, 2)]
        }
    }
    pub fn component(&self, pair: usize) -> &[f64] {
        &self.comps[pair]
    }
}

/// Symmetric `d x d` matrix per node, row-major.
#[derive(Clone, Debug)]
pub struct TensorField {
    pub(crate) grid: GridSpec,
    pub(crate) valid: Vec<bool>,
    pub(crate) dim: usize,
    pub(crate) data: Vec<f64>,
}

impl TensorField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn at(&self, idx: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.data[idx * s..(idx + 1) * s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn masked_nodes_become_nan() {
        let g = GridSpec::disk([0.0, 0.0], 1.0, 0.1).unwrap();
        let u = ComplexField::constant(g, 0.1, Complex64::new(1.0, 0.0)).unwrap();
        let corner = u.grid().index(0, 0, 0);
        assert!(!u.active()[corner]);
        assert!(u.value(corner).re.is_nan());
        let center = u.grid().index(u.grid().nx() / 2, u.grid().ny() / 2, 0);
        assert_eq!(u.value(center), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_non_finite_active_values() {
        let g = GridSpec::rectangle(8, 8, 0.1, [0.0, 0.0]).unwrap();
        let mut v = vec![Complex64::new(1.0, 0.0); 64];
        v[5] = Complex64::new(f64::INFINITY, 0.0);
        assert!(matches!(ComplexField::new(g, v, 0.1), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn resolution_flag() {
        let g = GridSpec::rectangle(8, 8, 0.1, [0.0, 0.0]).unwrap();
        let u = ComplexField::constant(g.clone(), 0.2, Complex64::new(1.0, 0.0)).unwrap();
        assert!(u.is_resolved());
        let u = ComplexField::constant(g, 0.1, Complex64::new(1.0, 0.0)).unwrap();
        assert!(!u.is_resolved());
    }

    #[test]
    fn bilinear_reproduces_linear_maps() {
        let g = GridSpec::centered_square(1.0, 0.125).unwrap();
        let u = ComplexField::from_fn(g, 0.5, |x, y, _| Complex64::new(2.0 * x - y, x + 3.0 * y)).unwrap();
        let s = u.sample_bilinear(0.31, -0.47, 0).unwrap();
        assert!((s - Complex64::new(2.0 * 0.31 + 0.47, 0.31 - 3.0 * 0.47)).norm() < 1e-12);
        assert!(u.sample_bilinear(1.2, 0.0, 0).is_none());
        let c = u.sample_bicubic(0.31, -0.47, 0).unwrap();
        assert!((c - s).norm() < 1e-12);
    }

    #[test]
    fn random_fields_stay_in_unit_disk() {
        let g = GridSpec::rectangle(9, 9, 0.1, [0.0, 0.0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = ComplexField::random(g, 0.1, &mut rng).unwrap();
        assert!(u.max_modulus() <= 1.0 + 1e-15);
    }
}
