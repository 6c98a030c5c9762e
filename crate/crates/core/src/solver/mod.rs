//! Relaxation to discrete critical points of the GL energy: semi-implicit
//! (or explicit) gradient flow, damped Newton refinement, Dirichlet degree
//! data and the helically reduced planar problem.

mod linalg;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, ScalarField};
use crate::grid::GridSpec;
use crate::ops::{interior_mask, potential_w};

use linalg::{cg, minres, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowScheme {
    /// Implicit Laplacian, explicit reaction.
    SemiImplicit,
    /// Forward Euler with the step also capped by the diffusive limit.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Time step in units of `ε²`.
    pub dt_factor: f64,
    pub max_steps: usize,
    /// Target sup-norm of `ε²Δu + (1 - |u|²)u`.
    pub residual_tol: f64,
    /// Finish with Newton once the flow reaches `newton_switch`.
    pub newton: bool,
    /// Initial Newton step length.
    pub damping: f64,
    pub newton_switch: f64,
    pub max_newton: usize,
    pub scheme: FlowScheme,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            dt_factor: 0.2,
            max_steps: 20_000,
            residual_tol: 1e-8,
            newton: true,
            damping: 1.0,
            newton_switch: 1e-3,
            max_newton: 30,
            scheme: FlowScheme::SemiImplicit,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.5) {
            return Err(Error::InvalidParameter(format!("dt_factor {} out of (0, 0.5]", self.dt_factor)));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter("residual_tol must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping {} out of (0, 1]", self.damping)));
        }
        if !(self.newton_switch > 0.0) {
            return Err(Error::InvalidParameter("newton_switch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Unit-modulus trace on the boundary of a planar domain.
    FixedTrace,
    /// Periodic in `t`, lateral sides held at their initial values.
    PeriodicT,
    /// Values held at their initial values, no modulus constraint.
    Frozen,
}

/// Values held fixed during relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub kind: TraceKind,
    pub nodes: Vec<usize>,
    pub values: Vec<Complex64>,
}

fn boundary_nodes(u_active: &[bool], interior: &[bool]) -> Vec<usize> {
    (0..u_active.len()).filter(|&i| u_active[i] && !interior[i]).collect()
}

/// `g = ((z - c)/|z - c|)^κ` on the boundary nodes of a planar grid.
pub fn dirichlet_degree_data(kappa: i32, grid: &GridSpec, center: [f64; 2]) -> Result<BoundaryData> {
    if grid.ndim() != 2 {
        return Err(Error::InvalidGrid("degree data needs a planar grid".into()));
    }
    let probe = ComplexField::constant(grid.clone(), 1.0, Complex64::new(1.0, 0.0))?;
    let interior = interior_mask(&probe);
    let nodes = boundary_nodes(probe.active(), &interior);
    let values = nodes
        .iter()
        .map(|&idx| {
            let [x, y, _] = grid.coords(idx);
            let z = Complex64::new(x - center[0], y - center[1]);
            if z.norm() < 1e-12 {
                return Err(Error::BadBoundary(format!("center ({}, {}) lies on the boundary", center[0], center[1])));
            }
            Ok((z / z.norm()).powi(kappa))
        })
        .collect::<Result<_>>()?;
    Ok(BoundaryData {
        kind: TraceKind::FixedTrace,
        nodes,
        values,
    })
}

impl BoundaryData {
    /// Trace of `u` on its non-interior active nodes; planar fields must have
    /// unit modulus there, 3D cylinder fields keep their sides.
    pub fn from_field(u: &ComplexField) -> Result<Self> {
        let interior = interior_mask(u);
        let nodes = boundary_nodes(u.active(), &interior);
        let values: Vec<Complex64> = nodes.iter().map(|&i| u.value(i)).collect();
        if u.grid().ndim() == 3 {
            return Ok(BoundaryData {
                kind: TraceKind::PeriodicT,
                nodes,
                values,
            });
        }
        if let Some(v) = values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::BadBoundary(format!("trace modulus {} is not 1", v.norm())));
        }
        Ok(BoundaryData {
            kind: TraceKind::FixedTrace,
            nodes,
            values,
        })
    }

    /// Holds every non-interior active node of `u` at its value.
    pub fn frozen(u: &ComplexField) -> Self {
        let interior = interior_mask(u);
        let nodes = boundary_nodes(u.active(), &interior);
        let values = nodes.iter().map(|&i| u.value(i)).collect();
        BoundaryData {
            kind: TraceKind::Frozen,
            nodes,
            values,
        }
    }

    /// Copies the boundary values into `u`.
    pub fn impose(&self, u: &ComplexField) -> Result<ComplexField> {
        let mut v = u.values().to_vec();
        for (&n, &g) in self.nodes.iter().zip(&self.values) {
            v[n] = g;
        }
        u.with_values(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Operator {
    Laplace,
    /// `Δ + (iκ - ∂_θ)²`, rotation about the origin.
    Helical { kappa: i32 },
}

/// Free unknowns, their stencils and the discrete energy.
struct Problem {
    grid: GridSpec,
    eps: f64,
    op: Operator,
    free: Vec<usize>,
    free_nb: Vec<[usize; 6]>,
    free_xy: Vec<[f64; 2]>,
    /// Nodes where `A = iκ - ∂_θ` is evaluated (helical only).
    ring: Vec<usize>,
    ring_nb: Vec<[usize; 6]>,
    ring_xy: Vec<[f64; 2]>,
    inv_h2: f64,
}

fn stencil(g: &GridSpec, idx: usize) -> [usize; 6] {
    let mut nb = [idx; 6];
    for axis in 0..g.ndim() {
        nb[2 * axis] = g.neighbor(idx, axis, 1).expect("interior node");
        nb[2 * axis + 1] = g.neighbor(idx, axis, -1).expect("interior node");
    }
    nb
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl Problem {
    fn new(u: &ComplexField, op: Operator, bc: &BoundaryData) -> Result<Self> {
        let g = u.grid();
        let interior = interior_mask(u);
        let mut free_mask: Vec<bool> = match op {
            Operator::Laplace => interior.clone(),
            Operator::Helical { .. } => (0..g.len())
                .map(|i| {
                    interior[i]
                        && (0..2).all(|a| [-1isize, 1].iter().all(|&d| g.neighbor(i, a, d).is_some_and(|n| interior[n])))
                })
                .collect(),
        };
        if bc.nodes.len() != bc.values.len() {
            return Err(Error::BadBoundary("node and value counts differ".into()));
        }
        let mut fixed = vec![false; g.len()];
        for (&n, &val) in bc.nodes.iter().zip(&bc.values) {
            if n >= g.len() || !u.active()[n] {
                return Err(Error::BadBoundary(format!("boundary node {n} is not an active node")));
            }
            if (u.value(n) - val).norm() > 1e-12 {
                return Err(Error::BadBoundary(format!("initial field differs from the trace at node {n}")));
            }
            fixed[n] = true;
            free_mask[n] = false;
        }
        if let Some(n) = (0..g.len()).find(|&i| u.active()[i] && !free_mask[i] && !fixed[i]) {
            return Err(Error::BadBoundary(format!("boundary node {n} has no prescribed value")));
        }
        let free: Vec<usize> = (0..g.len()).filter(|&i| free_mask[i]).collect();
        if free.is_empty() {
            return Err(Error::GridTooSmall("relaxation"));
        }
        let ring = match op {
            Operator::Laplace => Vec::new(),
            Operator::Helical { .. } => (0..g.len()).filter(|&i| interior[i]).collect(),
        };
        let xy = |i: &usize| {
            let [x, y, _] = g.coords(*i);
            [x, y]
        };
        Ok(Problem {
            grid: g.clone(),
            eps: u.epsilon(),
            op,
            free_nb: free.iter().map(|&i| stencil(g, i)).collect(),
            free_xy: free.iter().map(xy).collect(),
            ring_nb: ring.iter().map(|&i| stencil(g, i)).collect(),
            ring_xy: ring.iter().map(xy).collect(),
            free,
            ring,
            inv_h2: 1.0 / (g.spacing() * g.spacing()),
        })
    }

    fn h(&self) -> f64 {
        self.grid.spacing()
    }

    fn lap(&self, v: &[Complex64], idx: usize, nb: &[usize; 6]) -> Complex64 {
        let mut acc = ZERO;
        for axis in 0..self.grid.ndim() {
            acc += v[nb[2 * axis]] + v[nb[2 * axis + 1]] - 2.0 * v[idx];
        }
        acc * self.inv_h2
    }

    /// `(iκ - ∂_θ) v` at a node with coordinates `xy` by central differences.
    fn rot(&self, v: &[Complex64], idx: usize, nb: &[usize; 6], xy: [f64; 2], kappa: i32) -> Complex64 {
        let s = 0.5 / self.h();
        let dx = (v[nb[0]] - v[nb[1]]) * s;
        let dy = (v[nb[2]] - v[nb[3]]) * s;
        Complex64::new(0.0, kappa as f64) * v[idx] - (xy[0] * dy - xy[1] * dx)
    }

    /// Linear part `L v` at the free nodes for a full-length `v`.
    fn apply_full(&self, v: &[Complex64], out: &mut [Complex64]) {
        match self.op {
            Operator::Laplace => {
                for (k, &idx) in self.free.iter().enumerate() {
                    out[k] = self.lap(v, idx, &self.free_nb[k]);
                }
            }
            Operator::Helical { kappa } => {
                let mut w = vec![ZERO; self.grid.len()];
                for (r, &idx) in self.ring.iter().enumerate() {
                    w[idx] = self.rot(v, idx, &self.ring_nb[r], self.ring_xy[r], kappa);
                }
                for (k, &idx) in self.free.iter().enumerate() {
                    let nb = &self.free_nb[k];
                    out[k] = self.lap(v, idx, nb) + self.rot(&w, idx, nb, self.free_xy[k], kappa);
                }
            }
        }
    }

    /// `L` restricted to the free unknowns (fixed values zero).
    fn apply_free(&self, x: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        for (k, &idx) in self.free.iter().enumerate() {
            scratch[idx] = x[k];
        }
        self.apply_full(scratch, out);
        for &idx in &self.free {
            scratch[idx] = ZERO;
        }
    }

    /// Diagonal magnitude of `-L` at free node `k`.
    fn diag(&self, k: usize) -> f64 {
        let h2 = self.h() * self.h();
        let base = 2.0 * self.grid.ndim() as f64 / h2;
        match self.op {
            Operator::Laplace => base,
            Operator::Helical { kappa } => {
                let [x, y] = self.free_xy[k];
                base + (kappa * kappa) as f64 + (x * x + y * y) / (2.0 * h2)
            }
        }
    }

    fn full_with_zero_free(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = u.iter().map(|v| if v.is_nan() { ZERO } else { *v }).collect();
        for &idx in &self.free {
            z[idx] = ZERO;
        }
        z
    }

    /// `ε² L u + (1 - |u|²) u` at the free nodes.
    fn residual_vec(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.free.len()];
        self.apply_full(u, &mut out);
        let e2 = self.eps * self.eps;
        for (k, &idx) in self.free.iter().enumerate() {
            let v = u[idx];
            out[k] = e2 * out[k] + (1.0 - v.norm_sqr()) * v;
        }
        out
    }

    fn residual_sup(&self, u: &[Complex64]) -> f64 {
        self.residual_vec(u).iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Discrete energy whose gradient at the free nodes is
    /// `-h^n (L u + (1 - |u|²) u / ε²)`.
    fn energy(&self, u: &[Complex64], active: &[bool]) -> f64 {
        let g = &self.grid;
        let h = self.h();
        let hn = h.powi(g.ndim() as i32);
        let e2 = self.eps * self.eps;
        let mut grad = 0.0;
        let mut pot = 0.0;
        for idx in 0..g.len() {
            if !active[idx] {
                continue;
            }
            pot += potential_w(u[idx]);
            for axis in 0..g.ndim() {
                if let Some(n) = g.neighbor(idx, axis, 1) {
                    if active[n] {
                        grad += (u[n] - u[idx]).norm_sqr();
                    }
                }
            }
        }
        let mut rot = 0.0;
        if let Operator::Helical { kappa } = self.op {
            for (r, &idx) in self.ring.iter().enumerate() {
                rot += self.rot(u, idx, &self.ring_nb[r], self.ring_xy[r], kappa).norm_sqr();
            }
        }
        hn * (0.5 * grad / (h * h) + 0.5 * rot + pot / e2)
    }
}

/// One accepted flow step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub step: usize,
    pub energy: f64,
    pub residual: f64,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub field: ComplexField,
    pub log: Vec<FlowRecord>,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub field: ComplexField,
    /// Sup residual before each iteration and after the last.
    pub history: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub field: ComplexField,
    pub log: Vec<FlowRecord>,
    pub newton_history: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

fn flow_impl(p: &Problem, u0: &ComplexField, cfg: &SolveConfig, target: f64) -> Result<FlowOutcome> {
    cfg.validate()?;
    let active = u0.active().to_vec();
    let mut u = u0.values().to_vec();
    let e2 = p.eps * p.eps;
    let h = p.h();
    let dt0 = match cfg.scheme {
        FlowScheme::SemiImplicit => cfg.dt_factor * e2,
        FlowScheme::Explicit => {
            let max_diag = (0..p.free.len()).map(|k| p.diag(k)).fold(0.0, f64::max);
            (cfg.dt_factor * e2).min(0.9 / max_diag).min(0.45 * h * h)
        }
    };
    let mut dt = dt0;
    let mut energy = p.energy(&u, &active);
    let e_ref = energy.abs().max(f64::MIN_POSITIVE);
    let mut residual = p.residual_sup(&u);
    let mut log = vec![FlowRecord {
        step: 0,
        energy,
        residual,
        dt,
    }];
    let nf = p.free.len();
    let mut scratch = vec![ZERO; p.grid.len()];
    let fixed_part = p.full_with_zero_free(&u);
    let mut lfixed = vec![ZERO; nf];
    p.apply_full(&fixed_part, &mut lfixed);
    let mut x: Vec<Complex64> = p.free.iter().map(|&i| u[i]).collect();
    let mut step = 0;
    while residual > target && step < cfg.max_steps {
        let trial: Vec<Complex64> = match cfg.scheme {
            FlowScheme::SemiImplicit => {
                let rhs: Vec<Complex64> = p
                    .free
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let v = u[i];
                        v + dt * ((1.0 - v.norm_sqr()) * v / e2 + lfixed[k])
                    })
                    .collect();
                let diag: Vec<f64> = (0..nf).map(|k| 1.0 + dt * p.diag(k)).collect();
                let mut sol = x.clone();
                let sc = std::cell::RefCell::new(std::mem::take(&mut scratch));
                let op = |a: &[Complex64], out: &mut [Complex64]| {
                    p.apply_free(a, out, &mut sc.borrow_mut());
                    for k in 0..a.len() {
                        out[k] = a[k] - dt * out[k];
                    }
                };
                let res = cg(op, &diag, &rhs, &mut sol, 1e-10, 10_000);
                scratch = sc.into_inner();
                log::trace!("flow CG iterations: {}", res?.iterations);
                sol
            }
            FlowScheme::Explicit => {
                let r = p.residual_vec(&u);
                p.free.iter().zip(&r).map(|(&i, r)| u[i] + dt * r / e2).collect()
            }
        };
        let mut cand = u.clone();
        for (k, &i) in p.free.iter().enumerate() {
            cand[i] = trial[k];
        }
        let e_new = p.energy(&cand, &active);
        if !(e_new <= energy + 1e-10 * e_ref) {
            dt *= 0.5;
            if dt < 1e-12 * dt0 {
                return Err(Error::TimeStepUnderflow { step, dt });
            }
            continue;
        }
        step += 1;
        u = cand;
        x = trial;
        energy = e_new;
        residual = p.residual_sup(&u);
        log.push(FlowRecord {
            step,
            energy,
            residual,
            dt,
        });
    }
    Ok(FlowOutcome {
        field: u0.with_values(u)?,
        log,
        residual,
        converged: residual <= target,
    })
}

fn newton_impl(p: &Problem, u0: &ComplexField, cfg: &SolveConfig) -> Result<NewtonOutcome> {
    cfg.validate()?;
    let mut u = u0.values().to_vec();
    let e2 = p.eps * p.eps;
    let nf = p.free.len();
    let mut f = p.residual_vec(&u);
    let mut res = f.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut history = vec![res];
    let sc = std::cell::RefCell::new(vec![ZERO; p.grid.len()]);
    let mut it = 0;
    while res > cfg.residual_tol && it < cfg.max_newton {
        it += 1;
        let uf: Vec<Complex64> = p.free.iter().map(|&i| u[i]).collect();
        let diag: Vec<f64> = (0..nf)
            .map(|k| e2 * p.diag(k) + (1.0 - uf[k].norm_sqr()).abs() + 2.0 * uf[k].norm_sqr())
            .collect();
        let op = |a: &[Complex64], out: &mut [Complex64]| {
            p.apply_free(a, out, &mut sc.borrow_mut());
            for k in 0..a.len() {
                let v = uf[k];
                let d = a[k];
                out[k] = e2 * out[k] + (1.0 - v.norm_sqr()) * d - 2.0 * (v.re * d.re + v.im * d.im) * v;
            }
        };
        let rhs: Vec<Complex64> = f.iter().map(|r| -r).collect();
        let rtol = (1e-2 * norm(&f)).clamp(1e-12, 1e-4);
        let (delta, stats) = minres(op, &diag, &rhs, rtol, 20_000)?;
        if !stats.relative_residual.is_finite() {
            return Err(Error::LinearBreakdown("non-finite MINRES residual".into()));
        }
        log::debug!("newton step {it}: MINRES {} iterations, relative residual {:.2e}", stats.iterations, stats.relative_residual);
        let mut lambda = cfg.damping;
        loop {
            let mut cand = u.clone();
            for (k, &i) in p.free.iter().enumerate() {
                cand[i] = u[i] + lambda * delta[k];
            }
            let fc = p.residual_vec(&cand);
            let rc = fc.iter().map(|r| r.norm()).fold(0.0, f64::max);
            if rc < res {
                u = cand;
                f = fc;
                res = rc;
                break;
            }
            lambda *= 0.5;
            if lambda < 1.0 / 64.0 {
                return Err(Error::NoConvergence(format!(
                    "Newton residual increased at iteration {it} (residual {res:e}) after damping floor"
                )));
            }
        }
        history.push(res);
    }
    Ok(NewtonOutcome {
        field: u0.with_values(u)?,
        residual: res,
        converged: res <= cfg.residual_tol,
        history,
    })
}

fn check_trace(u: &ComplexField, bc: &BoundaryData) -> Result<()> {
    if bc.kind == TraceKind::FixedTrace {
        if let Some(v) = bc.values.iter().find(|v| (v.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::BadBoundary(format!("fixed trace has modulus {}", v.norm())));
        }
    }
    if bc.kind == TraceKind::PeriodicT && u.grid().ndim() != 3 {
        return Err(Error::BadBoundary("periodic-t data needs a 3D field".into()));
    }
    Ok(())
}

/// Gradient flow `u_t = Δu + (1 - |u|²)u/ε²` until the sup residual reaches
/// `cfg.residual_tol` or `cfg.max_steps` steps are taken. Steps that raise
/// the discrete energy are rejected and retried with half the step.
pub fn gradient_flow(u0: &ComplexField, bc: &BoundaryData, cfg: &SolveConfig) -> Result<FlowOutcome> {
    check_trace(u0, bc)?;
    let p = Problem::new(u0, Operator::Laplace, bc)?;
    flow_impl(&p, u0, cfg, cfg.residual_tol)
}

/// Damped Newton on the discrete equations with MINRES inner solves.
pub fn newton_refine(u: &ComplexField, bc: &BoundaryData, cfg: &SolveConfig) -> Result<NewtonOutcome> {
    check_trace(u, bc)?;
    let p = Problem::new(u, Operator::Laplace, bc)?;
    newton_impl(&p, u, cfg)
}

fn relax_impl(p: &Problem, u0: &ComplexField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    let target = if cfg.newton { cfg.newton_switch.max(cfg.residual_tol) } else { cfg.residual_tol };
    let flow = flow_impl(p, u0, cfg, target)?;
    if !cfg.newton || flow.residual <= cfg.residual_tol {
        return Ok(SolveOutcome {
            converged: flow.residual <= cfg.residual_tol,
            residual: flow.residual,
            field: flow.field,
            log: flow.log,
            newton_history: Vec::new(),
        });
    }
    let nt = newton_impl(p, &flow.field, cfg)?;
    Ok(SolveOutcome {
        field: nt.field,
        log: flow.log,
        newton_history: nt.history,
        residual: nt.residual,
        converged: nt.converged,
    })
}

/// Flow to `cfg.newton_switch`, then Newton to `cfg.residual_tol`.
pub fn relax(u0: &ComplexField, bc: &BoundaryData, cfg: &SolveConfig) -> Result<SolveOutcome> {
    check_trace(u0, bc)?;
    let p = Problem::new(u0, Operator::Laplace, bc)?;
    relax_impl(&p, u0, cfg)
}

/// Sup-norm residual `|ε²Δ_h u + (1 - |u|²)u|` over the free nodes of `bc`.
pub fn residual_sup(u: &ComplexField, bc: &BoundaryData) -> Result<f64> {
    let p = Problem::new(u, Operator::Laplace, bc)?;
    Ok(p.residual_sup(u.values()))
}

/// Discrete energy minimized by the flow.
pub fn discrete_energy(u: &ComplexField, bc: &BoundaryData) -> Result<f64> {
    let p = Problem::new(u, Operator::Laplace, bc)?;
    Ok(p.energy(u.values(), u.active()))
}

fn check_helical_grid(v: &ComplexField) -> Result<()> {
    if v.grid().ndim() != 2 {
        return Err(Error::InvalidGrid("helical reduction needs a planar grid".into()));
    }
    Ok(())
}

/// Relaxes `ε²[Δṽ + (iκ - ∂_θ)²ṽ] + (1 - |ṽ|²)ṽ = 0`, the planar equation
/// satisfied by `ṽ` when `v(z, t) = e^{iκt} ṽ(e^{-it} z)` solves the 3D
/// equation. A two-node band at the boundary keeps the values of `v0`.
pub fn helical_reduced_solve(kappa: i32, v0: &ComplexField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    check_helical_grid(v0)?;
    let bc = helical_band(v0)?;
    let p = Problem::new(v0, Operator::Helical { kappa }, &bc)?;
    relax_impl(&p, v0, cfg)
}

fn helical_band(v0: &ComplexField) -> Result<BoundaryData> {
    let g = v0.grid();
    let interior = interior_mask(v0);
    let free: Vec<bool> = (0..g.len())
        .map(|i| {
            interior[i] && (0..2).all(|a| [-1isize, 1].iter().all(|&d| g.neighbor(i, a, d).is_some_and(|n| interior[n])))
        })
        .collect();
    let nodes: Vec<usize> = (0..g.len()).filter(|&i| v0.active()[i] && !free[i]).collect();
    let values = nodes.iter().map(|&i| v0.value(i)).collect();
    Ok(BoundaryData {
        kind: TraceKind::Frozen,
        nodes,
        values,
    })
}

/// Pointwise residual of the reduced equation on nodes with a full stencil.
pub fn helical_residual(v: &ComplexField, kappa: i32) -> Result<ScalarField> {
    check_helical_grid(v)?;
    let bc = helical_band(v)?;
    let p = Problem::new(v, Operator::Helical { kappa }, &bc)?;
    let r = p.residual_vec(v.values());
    let mut data = vec![0.0; v.grid().len()];
    let mut valid = vec![false; v.grid().len()];
    for (k, &i) in p.free.iter().enumerate() {
        data[i] = r[k].norm();
        valid[i] = true;
    }
    ScalarField::new(v.grid().clone(), valid, data)
}

/// Discrete reduced energy per unit `t`.
pub fn helical_energy(v: &ComplexField, kappa: i32) -> Result<f64> {
    check_helical_grid(v)?;
    let bc = helical_band(v)?;
    let p = Problem::new(v, Operator::Helical { kappa }, &bc)?;
    Ok(p.energy(v.values(), v.active()))
}

/// Descent log as CSV with columns `step,energy,residual,dt`.
pub fn write_descent_log(log: &[FlowRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in log {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the log to any sink (for embedding in larger reports).
pub fn write_descent_rows<W: Write>(log: &[FlowRecord], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
