//! Fast Dirichlet solver for `(shift - Δ_h) x = f` on a rectangular lattice,
//! diagonalized by the type-I discrete sine transform.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Solver for the interior unknowns of an `nx × ny` block (boundary values
/// are folded into the right-hand side by the caller).
pub struct DirichletPoisson {
    nx: usize,
    ny: usize,
    h: f64,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    lam_x: Vec<f64>,
    lam_y: Vec<f64>,
}

fn eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

/// In-place unnormalized DST-I of every length-`n` row of `data`.
fn dst_rows(data: &mut [f64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let m = 2 * (n + 1);
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); m],
        |buf, row| {
            buf[0] = Complex64::new(0.0, 0.0);
            buf[n + 1] = Complex64::new(0.0, 0.0);
            for j in 0..n {
                buf[j + 1] = Complex64::new(row[j], 0.0);
                buf[m - 1 - j] = Complex64::new(-row[j], 0.0);
            }
            fft.process(buf);
            for k in 0..n {
                row[k] = -0.5 * buf[k + 1].im;
            }
        },
    );
}

fn transpose(src: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
        for (j, c) in col.iter_mut().enumerate() {
            *c = src[j * nx + i];
        }
    });
    out
}

impl DirichletPoisson {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::GridTooSmall("Dirichlet Poisson"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing {h} must be positive")));
        }
        let mut planner = FftPlanner::new();
        Ok(DirichletPoisson {
            nx,
            ny,
            h,
            fft_x: planner.plan_fft_forward(2 * (nx + 1)),
            fft_y: planner.plan_fft_forward(2 * (ny + 1)),
            lam_x: eigenvalues(nx, h),
            lam_y: eigenvalues(ny, h),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Overwrites `rhs` (row-major, x fastest) with the solution of
    /// `(shift - Δ_h) x = rhs`, `shift ≥ 0`.
    pub fn solve(&self, rhs: &mut [f64], shift: f64) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        if rhs.len() != nx * ny {
            return Err(Error::InvalidParameter(format!(
                "rhs length {} != {}x{}",
                rhs.len(),
                nx,
                ny
            )));
        }
        if !(shift >= 0.0) {
            return Err(Error::InvalidParameter(format!("shift {shift} must be non-negative")));
        }
        dst_rows(rhs, nx, &self.fft_x);
        let mut t = transpose(rhs, nx, ny);
        dst_rows(&mut t, ny, &self.fft_y);
        let norm = 4.0 / ((nx + 1) as f64 * (ny + 1) as f64);
        t.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
            for (j, c) in col.iter_mut().enumerate() {
                *c *= norm / (self.lam_x[i] + self.lam_y[j] + shift);
            }
        });
        dst_rows(&mut t, ny, &self.fft_y);
        let back = transpose(&t, ny, nx);
        rhs.copy_from_slice(&back);
        dst_rows(rhs, nx, &self.fft_x);
        Ok(())
    }

    /// `(shift - Δ_h) x` with zero Dirichlet data, for verification.
    pub fn apply(&self, x: &[f64], shift: f64) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let h2 = self.h * self.h;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                0.0
            } else {
                x[j as usize * nx + i as usize]
            }
        };
        (0..nx * ny)
            .map(|idx| {
                let (i, j) = ((idx % nx) as isize, (idx / nx) as isize);
                let lap = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j);
                shift * at(i, j) - lap / h2
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_the_discrete_operator() {
        let (nx, ny, h) = (37, 22, 0.03);
        let p = DirichletPoisson::new(nx, ny, h).unwrap();
        let x: Vec<f64> = (0..nx * ny).map(|k| ((k * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        for shift in [0.0, 3.5] {
            let mut f = p.apply(&x, shift);
            p.solve(&mut f, shift).unwrap();
            let err = f.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "shift {shift}: err {err}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = DirichletPoisson::new(4, 4, 1.0).unwrap();
        assert!(p.solve(&mut [0.0; 3], 0.0).is_err());
        assert!(p.solve(&mut [0.0; 16], -1.0).is_err());
        assert!(DirichletPoisson::new(0, 4, 1.0).is_err());
    }
}
