//! Krylov solvers on complex vectors viewed as real vectors of twice the
//! length (inner product `Re Σ conj(a) b`), so real-symmetric operators on
//! `R^{2n}` are handled directly.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite `op`
/// with diagonal preconditioner `diag`; `x` holds the initial guess.
pub(crate) fn cg<F>(op: F, diag: &[f64], b: &[Complex64], x: &mut [Complex64], rtol: f64, max_iter: usize) -> Result<KrylovStats>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return Ok(KrylovStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    op(x, &mut ax);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<Complex64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    for it in 0..max_iter {
        let rn = norm(&r) / bnorm;
        if rn <= rtol {
            return Ok(KrylovStats {
                iterations: it,
                relative_residual: rn,
            });
        }
        op(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearBreakdown(format!("CG curvature {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = norm(&r) / bnorm;
    if rn <= rtol * 10.0 {
        return Ok(KrylovStats {
            iterations: max_iter,
            relative_residual: rn,
        });
    }
    Err(Error::LinearBreakdown(format!("CG stalled at relative residual {rn:e}")))
}

/// Preconditioned MINRES for a symmetric, possibly indefinite `op` with a
/// positive diagonal preconditioner; starts from zero.
pub(crate) fn minres<F>(op: F, diag: &[f64], b: &[Complex64], rtol: f64, max_iter: usize) -> Result<(Vec<Complex64>, KrylovStats)>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut r1 = b.to_vec();
    let mut y: Vec<Complex64> = r1.iter().zip(diag).map(|(r, d)| r / d).collect();
    let beta1 = dot(&r1, &y);
    if !(beta1 >= 0.0) {
        return Err(Error::LinearBreakdown("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![zero; n];
    let mut w2 = vec![zero; n];
    let mut v = vec![zero; n];
    let mut av = vec![zero; n];
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = y[i] * s;
        }
        op(&v, &mut av);
        y.copy_from_slice(&av);
        if itn >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        for i in 0..n {
            y[i] = r2[i] / diag[i];
        }
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::LinearBreakdown("preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        if rel <= rtol || beta == 0.0 {
            return Ok((
                x,
                KrylovStats {
                    iterations: itn,
                    relative_residual: rel,
                },
            ));
        }
    }
    let rel = phibar / beta1;
    Ok((
        x,
        KrylovStats {
            iterations: max_iter,
            relative_residual: rel,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(shift: f64) -> impl Fn(&[Complex64], &mut [Complex64]) {
        move |x: &[Complex64], y: &mut [Complex64]| {
            let n = x.len();
            for i in 0..n {
                let mut s = (2.0 + shift) * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        }
    }

    fn check(op: &dyn Fn(&[Complex64], &mut [Complex64]), x: &[Complex64], b: &[Complex64]) -> f64 {
        let mut ax = vec![Complex64::new(0.0, 0.0); x.len()];
        op(x, &mut ax);
        let r: Vec<Complex64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
        norm(&r) / norm(b)
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 200;
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let op = tridiag(0.1);
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        cg(&op, &vec![2.1; n], &b, &mut x, 1e-12, 2000).unwrap();
        assert!(check(&op, &x, &b) < 1e-11);
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let n = 150;
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, (i % 3) as f64)).collect();
        let op = tridiag(-1.3);
        let (x, st) = minres(&op, &vec![1.0; n], &b, 1e-11, 5000).unwrap();
        assert!(st.relative_residual < 1e-11);
        assert!(check(&op, &x, &b) < 1e-9, "{}", check(&op, &x, &b));
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let (x, _) = minres(&op, &diag, &b, 1e-11, 5000).unwrap();
        assert!(check(&op, &x, &b) < 1e-8);
    }
}
