//! Radial vortex profiles `w(z) = f(r) e^{iκθ}` of the unit-scale GL equation
//!
//! ```text
//! f'' + f'/r - κ² f / r² + (1 - f²) f = 0,   f(0) = 0,  f(∞) = 1.
//! ```
//!
//! The slope `a` in `f ~ a r^κ` is found by bisection between undershooting
//! and overshooting trajectories. Past the radius where the two bracketing
//! trajectories separate, the profile is completed by a finite-difference
//! boundary value problem whose outer value comes from the far-field series.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Default table spacing.
pub const DEFAULT_DR: f64 = 0.005;

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub max_bisections: usize,
    pub dr: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            slope_lo: 1e-8,
            slope_hi: 4.0,
            max_bisections: 200,
            dr: DEFAULT_DR,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadialProfile {
    kappa: u32,
    dr: f64,
    f: Vec<f64>,
    df: Vec<f64>,
    slope: f64,
    series: Vec<f64>,
    residual: f64,
    matching_radius: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shot {
    Over,
    Under,
    Undecided,
}

fn rhs(kappa: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    let [f, g] = y;
    [g, -g / r + kappa * kappa * f / (r * r) - (1.0 - f * f) * f]
}

/// One adaptive Dormand-Prince pass from `r0` to `r1`.
fn dopri_segment(kappa: f64, r0: f64, r1: f64, y0: [f64; 2], h_guess: &mut f64, rtol: f64) -> Result<[f64; 2]> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut r = r0;
    let mut y = y0;
    let mut steps = 0usize;
    while r < r1 {
        let h = h_guess.min(r1 - r);
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = rhs(kappa, r + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            for c in 0..2 {
                y5[c] += h * B5[s] * k[s][c];
                y4[c] += h * B4[s] * k[s][c];
            }
        }
        let err = (0..2)
            .map(|c| (y5[c] - y4[c]).abs() / (rtol * (1e-3 + y5[c].abs().max(y[c].abs()))))
            .fold(0.0, f64::max);
        if err <= 1.0 {
            r += h;
            y = y5;
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(Error::NoConvergence("profile trajectory blew up".into()));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        *h_guess = (h * factor).max(1e-12);
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::NoConvergence("profile integrator step cap".into()));
        }
    }
    Ok(y)
}

/// Regular series start `f = a r^κ (1 + b1 r² + b2 r⁴)` at radius `r`.
fn series_start(kappa: u32, a: f64, r: f64) -> [f64; 2] {
    let k = kappa as f64;
    let b1 = -1.0 / (4.0 * (k + 1.0));
    let b2 = (-b1 + if kappa == 1 { a * a } else { 0.0 }) / (8.0 * (k + 2.0));
    let r2 = r * r;
    let rk = r.powi(kappa as i32);
    let f = a * rk * (1.0 + b1 * r2 + b2 * r2 * r2);
    let df = a * rk / r * (k + (k + 2.0) * b1 * r2 + (k + 4.0) * b2 * r2 * r2);
    [f, df]
}

/// Coefficients `c_k` of `1 - f ~ Σ c_k r^{-2k}`, truncated at the smallest
/// term for radius `r_ref`.
fn far_field_series(kappa: u32, r_ref: f64) -> Vec<f64> {
    let k2 = (kappa * kappa) as f64;
    let mut c = vec![0.0];
    let mut last_term = f64::INFINITY;
    for k in 1..40usize {
        // powers of g = Σ c_j x^j, x = r^{-2}
        let sq: f64 = (1..k).map(|j| c[j] * c[k - j]).sum();
        let cube: f64 = (1..k)
            .flat_map(|i| (1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i + j < k)
            .map(|(i, j)| c[i] * c[j] * c[k - i - j])
            .sum();
        let prev = c[k - 1];
        let lin = if k == 1 { k2 } else { 4.0 * ((k - 1) * (k - 1)) as f64 * prev - k2 * prev };
        let ck = 0.5 * (lin + 3.0 * sq - cube);
        let term = (ck / r_ref.powi(2 * k as i32)).abs();
        if term > last_term {
            break;
        }
        last_term = term;
        c.push(ck);
    }
    c
}

fn eval_series(c: &[f64], r: f64) -> (f64, f64) {
    let x = 1.0 / (r * r);
    let mut g = 0.0;
    let mut dg = 0.0;
    let mut xp = x;
    for (k, ck) in c.iter().enumerate().skip(1) {
        g += ck * xp;
        dg += -2.0 * k as f64 * ck * xp / r;
        xp *= x;
    }
    (1.0 - g, -dg)
}

struct Shooter {
    kappa: u32,
    dr: f64,
    r_end: f64,
}

impl Shooter {
    fn classify(&self, a: f64) -> Result<Shot> {
        let k = self.kappa as f64;
        let mut r = self.dr;
        let mut y = series_start(self.kappa, a, r);
        let mut h = self.dr * 0.25;
        while r < self.r_end {
            y = dopri_segment(k, r, r + self.dr, y, &mut h, 1e-13)?;
            r += self.dr;
            if y[0] > 1.0 {
                return Ok(Shot::Over);
            }
            if y[1] < 0.0 || y[0] < 0.0 {
                return Ok(Shot::Under);
            }
        }
        Ok(Shot::Undecided)
    }

    fn trajectory(&self, a: f64, nodes: usize) -> Result<Vec<[f64; 2]>> {
        let k = self.kappa as f64;
        let mut out = Vec::with_capacity(nodes);
        out.push([0.0, if self.kappa == 1 { a } else { 0.0 }]);
        let mut y = series_start(self.kappa, a, self.dr);
        out.push(y);
        let mut h = self.dr * 0.25;
        for i in 1..nodes - 1 {
            let r = i as f64 * self.dr;
            y = dopri_segment(k, r, r + self.dr, y, &mut h, 1e-13)?;
            if !(y[0].is_finite()) || y[0].abs() > 10.0 {
                break;
            }
            out.push(y);
        }
        Ok(out)
    }
}

/// Thomas algorithm; `a` sub-, `b` main-, `c` super-diagonal.
pub(crate) fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut bp = b[0];
    cp[0] = c[0] / bp;
    d[0] /= bp;
    for i in 1..n {
        bp = b[i] - a[i] * cp[i - 1];
        cp[i] = if i + 1 < n { c[i] / bp } else { 0.0 };
        d[i] = (d[i] - a[i] * d[i - 1]) / bp;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Newton solve of the radial equation on nodes `i0..=i1` with Dirichlet
/// values at both ends. Uses Numerov's scheme for `F = √r f`, which obeys
/// `F'' = ((κ² - 1/4)/r² - 1 + F²/r) F`.
fn tail_bvp(kappa: u32, dr: f64, i0: usize, i1: usize, f: &mut [f64]) -> Result<()> {
    let c = (kappa * kappa) as f64 - 0.25;
    let g = |r: f64, v: f64| (c / (r * r) - 1.0 + v * v / r) * v;
    let dg = |r: f64, v: f64| c / (r * r) - 1.0 + 3.0 * v * v / r;
    let n = i1 - i0 - 1;
    let w = dr * dr / 12.0;
    let mut big: Vec<f64> = (i0..=i1).map(|i| f[i] * (i as f64 * dr).sqrt()).collect();
    let r_of = |m: usize| (i0 + m) as f64 * dr;
    let mut norm = f64::INFINITY;
    for _iter in 0..50 {
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut rhs_v = vec![0.0; n];
        norm = 0.0;
        for m in 0..n {
            let j = m + 1;
            let (rm, rc, rp) = (r_of(j - 1), r_of(j), r_of(j + 1));
            let (fm, fc, fp) = (big[j - 1], big[j], big[j + 1]);
            let res = fp - 2.0 * fc + fm - w * (g(rp, fp) + 10.0 * g(rc, fc) + g(rm, fm));
            rhs_v[m] = -res;
            norm = norm.max(res.abs());
            lo[m] = 1.0 - w * dg(rm, fm);
            di[m] = -2.0 - 10.0 * w * dg(rc, fc);
            up[m] = 1.0 - w * dg(rp, fp);
        }
        if norm < 1e-17 {
            break;
        }
        solve_tridiagonal(&lo, &di, &up, &mut rhs_v);
        let mut step = 0.0f64;
        for m in 0..n {
            big[m + 1] += rhs_v[m];
            step = step.max(rhs_v[m].abs());
        }
        if step < 1e-15 {
            for (m, v) in big.iter().enumerate() {
                f[i0 + m] = v / r_of(m).sqrt();
            }
            return Ok(());
        }
    }
    // Roundoff-limited: accept once the discrete residual is negligible.
    if norm < 1e-13 {
        for (m, v) in big.iter().enumerate() {
            f[i0 + m] = v / r_of(m).sqrt();
        }
        return Ok(());
    }
    Err(Error::NoConvergence("profile tail Newton iteration".into()))
}

/// Solves for the degree-`kappa` profile on `[0, r_max]` with default options.
pub fn solve_radial_profile(kappa: i32, r_max: f64, tol: f64) -> Result<RadialProfile> {
    solve_radial_profile_with(kappa, r_max, tol, &ProfileOptions::default())
}

pub fn solve_radial_profile_with(kappa: i32, r_max: f64, tol: f64, opts: &ProfileOptions) -> Result<RadialProfile> {
    if kappa < 1 {
        return Err(Error::InvalidParameter(format!("profile degree must be >= 1, got {kappa}")));
    }
    if !(r_max >= 20.0) {
        return Err(Error::InvalidParameter(format!("r_max must be >= 20, got {r_max}")));
    }
    if !(tol > 1e-12 && tol < 1e-4) {
        return Err(Error::InvalidParameter(format!("tol must lie in (1e-12, 1e-4), got {tol}")));
    }
    let kappa = kappa as u32;
    let dr = opts.dr;
    let shooter = Shooter {
        kappa,
        dr,
        r_end: r_max.max(40.0),
    };
    let (mut lo, mut hi) = (opts.slope_lo, opts.slope_hi);
    if shooter.classify(lo)? != Shot::Under || shooter.classify(hi)? != Shot::Over {
        return Err(Error::BracketNotFound { lo, hi });
    }
    let mut converged = false;
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        match shooter.classify(mid)? {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => {
                converged = true;
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "slope bisection did not reach machine precision in {} steps (bracket [{lo}, {hi}])",
            opts.max_bisections
        )));
    }

    // Outer node: far enough that the series is accurate to ~1e-12.
    let r_out = r_max.max(25.0 * kappa as f64);
    let n_nodes = (r_out / dr).round() as usize + 1;
    let r_out = (n_nodes - 1) as f64 * dr;
    let lo_traj = shooter.trajectory(lo, n_nodes)?;
    let hi_traj = shooter.trajectory(hi, n_nodes)?;
    let mut i_s = 1;
    while i_s + 1 < lo_traj.len().min(hi_traj.len()) {
        let d = (lo_traj[i_s + 1][0] - hi_traj[i_s + 1][0]).abs();
        if d > 1e-12 {
            break;
        }
        i_s += 1;
    }
    // Step back a little from the separation point.
    let i_s = (i_s as f64 * 0.8) as usize;
    if i_s < 10 {
        return Err(Error::NoConvergence("bracketing trajectories separate immediately".into()));
    }

    let series = far_field_series(kappa, r_out);
    let mut f = vec![0.0; n_nodes];
    let mut df = vec![0.0; n_nodes];
    for i in 0..=i_s {
        f[i] = 0.5 * (lo_traj[i][0] + hi_traj[i][0]);
        df[i] = 0.5 * (lo_traj[i][1] + hi_traj[i][1]);
    }
    // Initial tail guess from the series, blended to the shot value.
    let (f_out, df_out) = eval_series(&series, r_out);
    let f_s = f[i_s];
    for (i, slot) in f.iter_mut().enumerate().skip(i_s + 1) {
        let r = i as f64 * dr;
        *slot = eval_series(&series, r).0.clamp(f_s, 1.0);
    }
    f[n_nodes - 1] = f_out;
    tail_bvp(kappa, dr, i_s, n_nodes - 1, &mut f)?;
    // Tail derivatives: fourth-order central differences.
    for i in i_s + 1..n_nodes {
        df[i] = if i + 2 < n_nodes && i >= 2 {
            (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * dr)
        } else if i + 1 < n_nodes {
            (f[i + 1] - f[i - 1]) / (2.0 * dr)
        } else {
            df_out
        };
    }
    let keep = (r_max / dr).round() as usize + 1;
    let keep = keep.min(n_nodes);
    f.truncate(keep);
    df.truncate(keep);
    let mut prof = RadialProfile {
        kappa,
        dr,
        f,
        df,
        slope: 0.5 * (lo + hi),
        series: far_field_series(kappa, r_max.min(r_out)),
        residual: 0.0,
        matching_radius: i_s as f64 * dr,
    };
    prof.residual = prof.ode_residual();
    if prof.residual >= tol {
        return Err(Error::NoConvergence(format!(
            "profile residual {:.3e} exceeds tol {tol:e}",
            prof.residual
        )));
    }
    prof.check_invariants()?;
    Ok(prof)
}

fn second_derivative(kappa: u32, r: f64, f: f64, df: f64, slope: f64) -> f64 {
    if r == 0.0 {
        return if kappa == 2 { 2.0 * slope } else { 0.0 };
    }
    let k2 = (kappa * kappa) as f64;
    -df / r + k2 * f / (r * r) - (1.0 - f * f) * f
}

impl RadialProfile {
    pub fn kappa(&self) -> u32 {
        self.kappa
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn r_max(&self) -> f64 {
        (self.f.len() - 1) as f64 * self.dr
    }
    pub fn r_grid(&self) -> Vec<f64> {
        (0..self.f.len()).map(|i| i as f64 * self.dr).collect()
    }
    pub fn values(&self) -> &[f64] {
        &self.f
    }
    pub fn derivatives(&self) -> &[f64] {
        &self.df
    }
    /// The shooting slope `a` in `f ~ a r^κ`.
    pub fn slope(&self) -> f64 {
        self.slope
    }
    /// Sup-norm ODE residual measured at interval midpoints of the quintic
    /// Hermite interpolant of `(f, f', f'')`.
    pub fn residual(&self) -> f64 {
        self.residual
    }
    /// Radius where the shot hands over to the boundary value tail.
    pub fn matching_radius(&self) -> f64 {
        self.matching_radius
    }

    fn ode_residual(&self) -> f64 {
        let k2 = (self.kappa * self.kappa) as f64;
        let h = self.dr;
        let mut worst = 0.0f64;
        for i in 1..self.f.len() - 1 {
            let (r0, r1) = (i as f64 * h, (i + 1) as f64 * h);
            let p0 = [self.f[i], self.df[i], second_derivative(self.kappa, r0, self.f[i], self.df[i], self.slope)];
            let p1 = [
                self.f[i + 1],
                self.df[i + 1],
                second_derivative(self.kappa, r1, self.f[i + 1], self.df[i + 1], self.slope),
            ];
            let (f, df, d2f) = quintic_hermite_mid(p0, p1, h);
            let r = 0.5 * (r0 + r1);
            let res = d2f + df / r - k2 * f / (r * r) + (1.0 - f * f) * f;
            worst = worst.max(res.abs());
        }
        worst
    }

    fn check_invariants(&self) -> Result<()> {
        if self.f[0] != 0.0 {
            return Err(Error::NoConvergence("profile must vanish at the origin".into()));
        }
        for i in 1..self.f.len() {
            if !(self.f[i] > self.f[i - 1]) || !(self.f[i] < 1.0) {
                return Err(Error::NoConvergence(format!(
                    "profile not strictly increasing below 1 at r = {}",
                    i as f64 * self.dr
                )));
            }
        }
        if self.r_max() >= 20.0 * self.kappa as f64 && self.f[self.f.len() - 1] <= 0.99 {
            return Err(Error::NoConvergence("profile has not reached 0.99 at r_max".into()));
        }
        Ok(())
    }

    /// `(f(r), f'(r))` by cubic Hermite interpolation; far-field series past `r_max`.
    #[inline]
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let x = r / self.dr;
        let i = x as usize;
        if i + 1 >= self.f.len() {
            return eval_series(&self.series, r.max(self.r_max()));
        }
        let t = x - i as f64;
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let (d0, d1) = (self.df[i] * self.dr, self.df[i + 1] * self.dr);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let f = h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
        let g00 = 6.0 * t2 - 6.0 * t;
        let g10 = 3.0 * t2 - 4.0 * t + 1.0;
        let g01 = -6.0 * t2 + 6.0 * t;
        let g11 = 3.0 * t2 - 2.0 * t;
        let df = (g00 * f0 + g10 * d0 + g01 * f1 + g11 * d1) / self.dr;
        (f, df)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Smallest `r` with `f(r) = level`, by bisection on the monotone table.
    pub fn radius_at_level(&self, level: f64) -> f64 {
        let (mut a, mut b) = (0.0, self.r_max());
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.value(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Writes `r,f,df` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["r", "f", "df"]).map_err(|e| Error::csv(path, e))?;
        for (i, (f, df)) in self.f.iter().zip(&self.df).enumerate() {
            w.write_record(&[
                format!("{}", i as f64 * self.dr),
                format!("{f}"),
                format!("{df}"),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// `∫_0^∞ (1 - f²)² / 2 · 2π r dr`, the potential mass `∫ 2W` of the
    /// unit-scale vortex.
    pub fn potential_mass(&self) -> f64 {
        let h = self.dr;
        let mut s = 0.0;
        for (i, f) in self.f.iter().enumerate() {
            let r = i as f64 * h;
            let w = if i == 0 || i + 1 == self.f.len() { 0.5 } else { 1.0 };
            s += w * 0.5 * (1.0 - f * f).powi(2) * r;
        }
        let mut tail = 0.0;
        // series tail: (1 - f²)² ≈ (2g)², g ≈ κ²/(2r²)
        let r0 = self.r_max();
        let c1 = self.series.get(1).copied().unwrap_or(0.0);
        tail += 0.5 * 4.0 * c1 * c1 / (2.0 * r0 * r0);
        std::f64::consts::TAU * (s * h + tail)
    }
}

fn quintic_hermite_mid(p0: [f64; 3], p1: [f64; 3], h: f64) -> (f64, f64, f64) {
    // Quintic through (f, f', f'') at both ends, evaluated at t = 1/2.
    let (f0, d0, s0) = (p0[0], p0[1] * h, p0[2] * h * h);
    let (f1, d1, s1) = (p1[0], p1[1] * h, p1[2] * h * h);
    // Basis values at t = 1/2 for value, first and second derivative.
    let f = 0.5 * (f0 + f1) + 0.15625 * (d0 - d1) + (s0 + s1) / 64.0;
    let df = (1.875 * (f1 - f0) - 0.4375 * (d0 + d1) + (s1 - s0) / 32.0) / h;
    let d2 = (1.5 * (d1 - d0) - 0.25 * (s0 + s1)) / (h * h);
    (f, df, d2)
}

static CACHE: OnceLock<Mutex<HashMap<u32, Arc<RadialProfile>>>> = OnceLock::new();

/// Shared degree-`kappa` profile on `[0, max(40, 20κ)]` at tolerance 1e-8.
pub fn shared_profile(kappa: u32) -> Result<Arc<RadialProfile>> {
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().expect("profile cache poisoned").get(&kappa) {
        return Ok(p.clone());
    }
    let p = Arc::new(solve_radial_profile(kappa as i32, (20.0 * kappa as f64).max(40.0), 1e-8)?);
    cache
        .lock()
        .expect("profile cache poisoned")
        .insert(kappa, p.clone());
    Ok(p)
}

/// Writes a profile table to any writer (used by the CLI).
pub fn write_profile_rows<W: Write>(p: &RadialProfile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "r,f,df")?;
    for (i, (f, df)) in p.f.iter().zip(&p.df).enumerate() {
        writeln!(out, "{},{},{}", i as f64 * p.dr, f, df)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_midpoint_is_exact_for_quintics() {
        let p = |x: f64| (x.powi(5) - 2.0 * x.powi(3) + x, 5.0 * x.powi(4) - 6.0 * x * x + 1.0, 20.0 * x.powi(3) - 12.0 * x);
        let (a, b) = (0.3, 0.55);
        let (f0, d0, s0) = p(a);
        let (f1, d1, s1) = p(b);
        let (f, df, d2) = quintic_hermite_mid([f0, d0, s0], [f1, d1, s1], b - a);
        let (ef, edf, ed2) = p(0.5 * (a + b));
        assert!((f - ef).abs() < 1e-13 && (df - edf).abs() < 1e-11 && (d2 - ed2).abs() < 1e-9);
    }

    #[test]
    fn series_leading_coefficients() {
        let c = far_field_series(1, 20.0);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 9.0 / 8.0).abs() < 1e-15);
        let c = far_field_series(2, 40.0);
        assert_eq!(c[1], 2.0);
        assert_eq!(c[2], 6.0);
    }

    #[test]
    fn degree_one_profile() {
        let p = solve_radial_profile(1, 20.0, 1e-8).unwrap();
        assert!(p.residual() < 1e-8, "residual {}", p.residual());
        assert!((p.slope() - 0.5831894958).abs() < 1e-6, "slope {}", p.slope());
        let f20 = p.value(20.0);
        assert!(((1.0 - f20) * 400.0 - 0.5).abs() < 0.05);
        assert_eq!(p.values()[0], 0.0);
        assert!(p.derivatives()[1..].iter().all(|d| *d > 0.0));
    }

    #[test]
    fn degree_two_profile() {
        let p = solve_radial_profile(2, 40.0, 1e-8).unwrap();
        assert!(p.residual() < 1e-8, "residual {}", p.residual());
        for r in [30.0, 40.0, 60.0] {
            let g = (1.0 - p.value(r)) * r * r;
            assert!((g - 2.0).abs() < 0.2, "r {r} g {g}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_radial_profile(0, 20.0, 1e-8).is_err());
        assert!(solve_radial_profile(1, 10.0, 1e-8).is_err());
        assert!(solve_radial_profile(1, 20.0, 1e-3).is_err());
        let opts = ProfileOptions {
            slope_lo: 1.0,
            slope_hi: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            solve_radial_profile_with(1, 20.0, 1e-8, &opts),
            Err(Error::BracketNotFound { .. })
        ));
    }

    #[test]
    fn interpolation_matches_table() {
        let p = shared_profile(1).unwrap();
        let (f, df) = p.eval(3.0);
        let i = (3.0 / p.dr()).round() as usize;
        assert!((f - p.values()[i]).abs() < 1e-14);
        assert!((df - p.derivatives()[i]).abs() < 1e-12);
        let (fa, _) = p.eval(p.r_max() - 1e-9);
        let (fb, _) = p.eval(p.r_max() + 1e-9);
        assert!((fa - fb).abs() < 1e-10);
    }
}
