//! Vorticity sets, cluster coverings with winding degrees, and pointwise
//! audits of sampled or analytic fields.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticMap, Density, PolarCubature};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{planar_fraction, Region};
use crate::hodge::hodge_decompose;
use crate::ops::{energy_breakdown, energy_density, interior_mask, partial, potential_w, EnergyOptions};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Point evaluation of a planar complex map.
pub trait Sampler: Sync {
    /// `None` outside the domain of definition.
    fn sample(&self, x: f64, y: f64) -> Option<Complex64>;
}

/// Bilinear sampling of a planar field.
impl Sampler for ComplexField {
    fn sample(&self, x: f64, y: f64) -> Option<Complex64> {
        self.sample_bilinear(x, y, 0)
    }
}

/// Bilinear sampling of slice `k` of a field.
pub struct SliceSampler<'a> {
    pub field: &'a ComplexField,
    pub k: usize,
}

impl Sampler for SliceSampler<'_> {
    fn sample(&self, x: f64, y: f64) -> Option<Complex64> {
        self.field.sample_bilinear(x, y, self.k)
    }
}

/// Exact sampling of an analytic map.
pub struct MapSampler<'a, M: ?Sized>(pub &'a M);

impl<M: AnalyticMap + ?Sized> Sampler for MapSampler<'_, M> {
    fn sample(&self, x: f64, y: f64) -> Option<Complex64> {
        Some(self.0.value(x, y))
    }
}

/// `{|u| ≤ β}` over active nodes.
pub fn vorticity_mask(u: &ComplexField, beta: f64) -> Vec<bool> {
    u.values()
        .iter()
        .zip(u.active())
        .map(|(v, &a)| a && v.norm() <= beta)
        .collect()
}

/// Winding number of `u/|u|` along the circle of `radius` about `center`.
/// Phase increments are reduced to `(-π, π]`, so the sum is an exact
/// multiple of `2π` up to rounding.
pub fn loop_degree<S: Sampler + ?Sized>(u: &S, center: [f64; 2], radius: f64, samples: usize) -> Result<i32> {
    if samples < 64 {
        return Err(Error::InvalidParameter(format!("loop needs at least 64 samples, got {samples}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("loop radius {radius} must be positive")));
    }
    let pts: Vec<(f64, f64, Complex64)> = (0..samples)
        .map(|k| {
            let a = TWO_PI * k as f64 / samples as f64;
            let (x, y) = (center[0] + radius * a.cos(), center[1] + radius * a.sin());
            let v = u
                .sample(x, y)
                .ok_or_else(|| Error::InvalidParameter(format!("loop point ({x}, {y}) leaves the domain")))?;
            if v.norm() < 1e-9 {
                return Err(Error::DegreeUndefined { x, y, modulus: v.norm() });
            }
            Ok((x, y, v))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for k in 0..samples {
        let a = pts[k].2;
        let b = pts[(k + 1) % samples].2;
        let p = b * a.conj();
        let mut d = p.im.atan2(p.re);
        if d == -std::f64::consts::PI {
            d = std::f64::consts::PI;
        }
        total += d;
    }
    Ok((total / TWO_PI).round() as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// Clusters cover `{|u| < 1 - δ}`.
    pub delta: f64,
    /// Absorption radius multiplier of the greedy merge.
    pub merge_factor: f64,
    pub loop_samples: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            delta: 0.1,
            merge_factor: 5.0,
            loop_samples: 128,
        }
    }
}

impl ClusterOptions {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::InvalidParameter(format!("delta {} out of (0, 1/2]", self.delta)));
        }
        if !(self.merge_factor >= 1.0) {
            return Err(Error::InvalidParameter("merge factor must be at least 1".into()));
        }
        if self.loop_samples < 64 {
            return Err(Error::InvalidParameter("loop needs at least 64 samples".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexCluster {
    pub center: [f64; 2],
    pub radius: f64,
    pub degree: i32,
    /// `∫_{D(center, radius)} 2W/ε²`.
    pub potential_mass: f64,
    /// Number of connected components merged into this cluster.
    pub components: usize,
    /// The cluster reaches the domain boundary; excluded from identity checks.
    pub touches_boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub delta: f64,
    pub clusters: Vec<VortexCluster>,
    /// Connected components of `{|u| < 1 - δ}` before merging.
    pub component_count: usize,
}

impl ClusterReport {
    pub fn interior(&self) -> impl Iterator<Item = &VortexCluster> {
        self.clusters.iter().filter(|c| !c.touches_boundary)
    }

    pub fn total_degree(&self) -> i32 {
        self.interior().map(|c| c.degree).sum()
    }
}

struct Component {
    nodes: Vec<[f64; 2]>,
    seed: [f64; 2],
    mass: f64,
    touches: bool,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Groups labelled points (position, |u|, local mass, touches-boundary) by
/// the union-find roots of `dsu`.
fn collect_components(dsu: &mut Dsu, pts: &[([f64; 2], f64, f64, bool)]) -> Vec<Component> {
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    let mut comps: Vec<Component> = Vec::new();
    let mut best: Vec<f64> = Vec::new();
    for (k, &(p, m, w, t)) in pts.iter().enumerate() {
        let r = dsu.find(k);
        let slot = *by_root.entry(r).or_insert_with(|| {
            comps.push(Component {
                nodes: Vec::new(),
                seed: p,
                mass: 0.0,
                touches: false,
            });
            best.push(f64::INFINITY);
            comps.len() - 1
        });
        let c = &mut comps[slot];
        c.nodes.push(p);
        c.mass += w;
        c.touches |= t;
        if m < best[slot] {
            best[slot] = m;
            c.seed = p;
        }
    }
    comps
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Newton polish of a near-zero using finite differences of the sampler;
/// returns `seed` unless the iteration decreases `|u|` within `reach`.
fn polish_zero<S: Sampler + ?Sized>(u: &S, seed: [f64; 2], step: f64, reach: f64) -> [f64; 2] {
    let Some(u0) = u.sample(seed[0], seed[1]) else {
        return seed;
    };
    let mut best = (seed, u0.norm());
    let mut z = seed;
    for _ in 0..8 {
        let (Some(v), Some(xp), Some(xm), Some(yp), Some(ym)) = (
            u.sample(z[0], z[1]),
            u.sample(z[0] + step, z[1]),
            u.sample(z[0] - step, z[1]),
            u.sample(z[0], z[1] + step),
            u.sample(z[0], z[1] - step),
        ) else {
            break;
        };
        let ux = (xp - xm) / (2.0 * step);
        let uy = (yp - ym) / (2.0 * step);
        let det = ux.re * uy.im - uy.re * ux.im;
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (-v.re * uy.im + v.im * uy.re) / det;
        let dy = (-ux.re * v.im + ux.im * v.re) / det;
        z = [z[0] + dx, z[1] + dy];
        if dist(z, seed) > reach {
            break;
        }
        match u.sample(z[0], z[1]) {
            Some(w) if w.norm() < best.1 => best = (z, w.norm()),
            Some(_) => {}
            None => break,
        }
    }
    best.0
}

/// Greedy merge: largest mass first absorbs every remaining component whose
/// disk meets `factor × radius`; overlapping results are then fused until the
/// disks are pairwise disjoint. Returns (center, radius, members, touches).
fn merge(comps: Vec<(Component, [f64; 2], f64)>, factor: f64) -> Vec<([f64; 2], f64, usize, bool)> {
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&a, &b| comps[b].0.mass.total_cmp(&comps[a].0.mass).then(a.cmp(&b)));
    let mut used = vec![false; comps.len()];
    let mut disks: Vec<([f64; 2], f64, usize, bool)> = Vec::new();
    for &a in &order {
        if used[a] {
            continue;
        }
        used[a] = true;
        let (ref ca, center, r) = comps[a];
        let (mut radius, mut members, mut touches) = (r, 1, ca.touches);
        for &b in &order {
            if used[b] {
                continue;
            }
            let (ref cb, cb_center, rb) = comps[b];
            if dist(center, cb_center) - rb <= factor * r {
                used[b] = true;
                members += 1;
                touches |= cb.touches;
                radius = radius.max(dist(center, cb_center) + rb);
            }
        }
        disks.push((center, radius, members, touches));
    }
    loop {
        let mut fused = false;
        'outer: for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                let (ci, ri, mi, ti) = disks[i];
                let (cj, rj, mj, tj) = disks[j];
                let d = dist(ci, cj);
                if d < ri + rj {
                    let merged = if d + rj <= ri {
                        (ci, ri)
                    } else if d + ri <= rj {
                        (cj, rj)
                    } else {
                        let r = 0.5 * (d + ri + rj);
                        let s = (r - ri) / d;
                        ([ci[0] + s * (cj[0] - ci[0]), ci[1] + s * (cj[1] - ci[1])], r)
                    };
                    disks[i] = (merged.0, merged.1, mi + mj, ti || tj);
                    disks.remove(j);
                    fused = true;
                    break 'outer;
                }
            }
        }
        if !fused {
            break;
        }
    }
    disks
}

fn finish_clusters<S, F, G>(
    u: &S,
    comps: Vec<Component>,
    pad: f64,
    opts: &ClusterOptions,
    inside: F,
    mass_of: G,
) -> Result<Vec<VortexCluster>>
where
    S: Sampler + ?Sized,
    F: Fn([f64; 2], f64) -> bool,
    G: Fn([f64; 2], f64) -> Result<f64>,
{
    let prepared: Vec<(Component, [f64; 2], f64)> = comps
        .into_iter()
        .map(|c| {
            let center = polish_zero(u, c.seed, 0.25 * pad, 2.0 * pad);
            let r = c.nodes.iter().map(|&p| dist(p, center)).fold(0.0, f64::max) + pad;
            (c, center, r)
        })
        .collect();
    let disks = merge(prepared, opts.merge_factor);
    disks
        .into_iter()
        .map(|(center, radius, components, touches)| {
            let loop_r = radius + 2.0 * pad;
            let mut touches = touches || !inside(center, loop_r);
            let degree = if touches {
                loop_degree(u, center, loop_r, opts.loop_samples).unwrap_or(0)
            } else {
                match loop_degree(u, center, loop_r, opts.loop_samples) {
                    Ok(d) => d,
                    Err(Error::DegreeUndefined { .. }) => loop_degree(u, center, loop_r + pad, opts.loop_samples)?,
                    Err(_) => {
                        touches = true;
                        0
                    }
                }
            };
            Ok(VortexCluster {
                center,
                radius,
                degree,
                potential_mass: mass_of(center, radius)?,
                components,
                touches_boundary: touches,
            })
        })
        .collect()
}

/// Cluster covering of `{|u| < 1 - δ}` for a planar sampled field.
pub fn detect_clusters(u: &ComplexField, opts: &ClusterOptions) -> Result<ClusterReport> {
    opts.validate()?;
    let g = u.grid();
    if g.ndim() != 2 {
        return Err(Error::InvalidGrid("cluster detection needs a planar field; take a slice first".into()));
    }
    let level = 1.0 - opts.delta;
    let h = g.spacing();
    let eps2 = u.epsilon() * u.epsilon();
    let interior = interior_mask(u);
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&i| u.active()[i] && u.value(i).norm() < level)
        .collect();
    let pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut dsu = Dsu::new(nodes.len());
    for (k, &idx) in nodes.iter().enumerate() {
        for axis in 0..2 {
            if let Some(n) = g.neighbor(idx, axis, 1) {
                if let Some(&m) = pos.get(&n) {
                    dsu.union(k, m);
                }
            }
        }
    }
    let pts: Vec<([f64; 2], f64, f64, bool)> = nodes
        .iter()
        .map(|&idx| {
            let [x, y, _] = g.coords(idx);
            let v = u.value(idx);
            ([x, y], v.norm(), 2.0 * potential_w(v) / eps2 * h * h, !interior[idx])
        })
        .collect();
    let comps = collect_components(&mut dsu, &pts);
    let component_count = comps.len();
    let inside = |c: [f64; 2], r: f64| -> bool {
        (0..64).all(|k| {
            let a = TWO_PI * k as f64 / 64.0;
            u.sample(c[0] + r * a.cos(), c[1] + r * a.sin()).is_some()
        })
    };
    let mass_of = |c: [f64; 2], r: f64| -> Result<f64> {
        let region = Region::Disk { center: c, radius: r };
        let (fi0, fj0) = g.fractional_index(c[0] - r - h, c[1] - r - h);
        let (fi1, fj1) = g.fractional_index(c[0] + r + h, c[1] + r + h);
        let clampi = |f: f64, n: usize| (f.max(0.0) as usize).min(n - 1);
        let mut m = 0.0;
        for j in clampi(fj0.floor(), g.ny())..=clampi(fj1.ceil(), g.ny()) {
            for i in clampi(fi0.floor(), g.nx())..=clampi(fi1.ceil(), g.nx()) {
                let idx = g.index(i, j, 0);
                if u.active()[idx] {
                    let w = planar_fraction(&region, g.x(i), g.y(j), h);
                    m += w * 2.0 * potential_w(u.value(idx)) / eps2 * h * h;
                }
            }
        }
        Ok(m)
    };
    let clusters = finish_clusters(u, comps, h, opts, inside, mass_of)?;
    Ok(ClusterReport {
        delta: opts.delta,
        clusters,
        component_count,
    })
}

/// Cluster covering for an analytic map on the disk `domain`. A lattice of
/// spacing `min(ε, diameter/8192)` seeds the search; cells around seeds are
/// refined eightfold and flooded until the sublevel set is enclosed.
pub fn detect_clusters_map<M: AnalyticMap + ?Sized>(
    map: &M,
    domain_center: [f64; 2],
    domain_radius: f64,
    opts: &ClusterOptions,
) -> Result<ClusterReport> {
    opts.validate()?;
    if !(domain_radius > 0.0) {
        return Err(Error::InvalidParameter("domain radius must be positive".into()));
    }
    let eps = map.epsilon();
    let hc = eps.max(2.0 * domain_radius / 8192.0);
    const SUB: i64 = 8;
    let hf = hc / SUB as f64;
    let level = 1.0 - opts.delta;
    let n = (domain_radius / hc).ceil() as i64;
    let in_domain = |x: f64, y: f64| dist([x, y], domain_center) <= domain_radius;
    let coord = |i: i64, sp: f64, c: f64| c + i as f64 * sp;

    let seeds: Vec<(i64, i64)> = (-n..=n)
        .into_par_iter()
        .flat_map_iter(|j| {
            (-n..=n).filter_map(move |i| {
                let (x, y) = (coord(i, hc, domain_center[0]), coord(j, hc, domain_center[1]));
                (in_domain(x, y) && map.value(x, y).norm() < level).then_some((i, j))
            })
        })
        .collect();

    let mut fine: HashMap<(i64, i64), Complex64> = HashMap::new();
    let mut visited: std::collections::HashSet<(i64, i64)> = Default::default();
    let mut queue: std::collections::VecDeque<(i64, i64)> = Default::default();
    for &(i, j) in &seeds {
        for (di, dj) in [(-1, -1), (-1, 0), (0, -1), (0, 0)] {
            if visited.insert((i + di, j + dj)) {
                queue.push_back((i + di, j + dj));
            }
        }
    }
    while let Some((ci, cj)) = queue.pop_front() {
        if ci.abs() > n + 1 || cj.abs() > n + 1 {
            continue;
        }
        let mut spill = [false; 4];
        for b in 0..=SUB {
            for a in 0..=SUB {
                let key = (ci * SUB + a, cj * SUB + b);
                let v = *fine.entry(key).or_insert_with(|| {
                    map.value(coord(key.0, hf, domain_center[0]), coord(key.1, hf, domain_center[1]))
                });
                let (x, y) = (coord(key.0, hf, domain_center[0]), coord(key.1, hf, domain_center[1]));
                if v.norm() < level && in_domain(x, y) {
                    spill[0] |= a == 0;
                    spill[1] |= a == SUB;
                    spill[2] |= b == 0;
                    spill[3] |= b == SUB;
                }
            }
        }
        for (k, (di, dj)) in [(-1, 0), (1, 0), (0, -1), (0, 1)].into_iter().enumerate() {
            if spill[k] && visited.insert((ci + di, cj + dj)) {
                queue.push_back((ci + di, cj + dj));
            }
        }
    }

    let mut keys: Vec<(i64, i64)> = fine
        .iter()
        .filter(|(&(i, j), v)| {
            v.norm() < level && in_domain(coord(i, hf, domain_center[0]), coord(j, hf, domain_center[1]))
        })
        .map(|(k, _)| *k)
        .collect();
    keys.sort_unstable_by_key(|&(i, j)| (j, i));
    let pos: HashMap<(i64, i64), usize> = keys.iter().enumerate().map(|(k, &key)| (key, k)).collect();
    let mut dsu = Dsu::new(keys.len());
    for (k, &(i, j)) in keys.iter().enumerate() {
        for nb in [(i + 1, j), (i, j + 1)] {
            if let Some(&m) = pos.get(&nb) {
                dsu.union(k, m);
            }
        }
    }
    let pts: Vec<([f64; 2], f64, f64, bool)> = keys
        .iter()
        .map(|&(i, j)| {
            let (x, y) = (coord(i, hf, domain_center[0]), coord(j, hf, domain_center[1]));
            let v = fine[&(i, j)];
            let touches = dist([x, y], domain_center) > domain_radius - 2.0 * hf;
            ([x, y], v.norm(), 2.0 * potential_w(v) / (eps * eps) * hf * hf, touches)
        })
        .collect();
    let comps = collect_components(&mut dsu, &pts);
    let component_count = comps.len();
    let sampler = MapSampler(map);
    let inside = |c: [f64; 2], r: f64| dist(c, domain_center) + r <= domain_radius;
    let cub = PolarCubature::default();
    let mass_of = |c: [f64; 2], r: f64| -> Result<f64> {
        let (_, pot, _) = cub.integrate(map, Density::Planar, c, 0.0, r, &[])?;
        Ok(2.0 * pot)
    };
    let clusters = finish_clusters(&sampler, comps, hf, opts, inside, mass_of)?;
    Ok(ClusterReport {
        delta: opts.delta,
        clusters,
        component_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClearingReport {
    /// `E_ε(u; B_r(x))`.
    pub energy: f64,
    /// `η r^{n-2} log(r/ε)`.
    pub threshold: f64,
    pub modulus: f64,
    /// Energy below threshold.
    pub premise: bool,
    /// `|u(x)| > 1/2`.
    pub conclusion: bool,
    /// The implication premise ⇒ conclusion.
    pub holds: bool,
}

impl ClearingReport {
    fn new(energy: f64, threshold: f64, modulus: f64) -> Self {
        let premise = energy < threshold;
        let conclusion = modulus > 0.5;
        ClearingReport {
            energy,
            threshold,
            modulus,
            premise,
            conclusion,
            holds: !premise || conclusion,
        }
    }
}

fn check_clearing_args(eps: f64, r: f64, eta: f64) -> Result<()> {
    if !(r >= eps) {
        return Err(Error::InvalidParameter(format!("clearing radius {r} is below epsilon {eps}")));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }
    Ok(())
}

/// Clearing-out implication on `B_r(x)` of a sampled field (disk in 2D, ball
/// in 3D; `x[2]` is ignored in 2D).
pub fn clearing_out_audit(u: &ComplexField, x: [f64; 3], r: f64, eta: f64) -> Result<ClearingReport> {
    let eps = u.epsilon();
    check_clearing_args(eps, r, eta)?;
    let g = u.grid();
    let opts = EnergyOptions {
        allow_under_resolved: true,
    };
    let (region, scale, k) = if g.ndim() == 2 {
        (Region::Disk { center: [x[0], x[1]], radius: r }, 1.0, 0)
    } else {
        let period = g.period().unwrap_or(1.0);
        let k = ((x[2].rem_euclid(period)) / g.spacing()).round() as usize % g.nt();
        (Region::Ball { center: x, radius: r }, r, k)
    };
    let e = energy_breakdown(u, &region, &opts)?;
    let modulus = u
        .sample_bilinear(x[0], x[1], k)
        .ok_or(Error::RegionOutsideDomain(format!("point ({}, {}) is off the grid", x[0], x[1])))?
        .norm();
    Ok(ClearingReport::new(e.total, eta * scale * (r / eps).ln(), modulus))
}

/// Clearing-out implication on `D_r(x)` of an analytic planar map.
pub fn clearing_out_audit_map<M: AnalyticMap + ?Sized>(map: &M, x: [f64; 2], r: f64, eta: f64) -> Result<ClearingReport> {
    let eps = map.epsilon();
    check_clearing_args(eps, r, eta)?;
    let (d, p, _) = PolarCubature::default().integrate(map, Density::Planar, x, 0.0, r, &[eps, 10.0 * eps])?;
    Ok(ClearingReport::new(d + p, eta * (r / eps).ln(), map.value(x[0], x[1]).norm()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDegreeRow {
    pub center: [f64; 2],
    pub degree: i32,
    pub potential_mass: f64,
    /// `(π/2)|κ|(1 - 5δ)`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDegreeAudit {
    pub delta: f64,
    pub rows: Vec<PotentialDegreeRow>,
    pub all_pass: bool,
    /// Smallest cluster potential mass (reported, not enforced).
    pub min_mass: Option<f64>,
    pub sum_abs_degree: i64,
    /// `2|Σκ|²`.
    pub degree_bound: i64,
    pub degree_bound_holds: bool,
}

/// Lower bound of the potential by the degree on every interior cluster.
pub fn potential_degree_audit(report: &ClusterReport) -> PotentialDegreeAudit {
    let delta = report.delta;
    let rows: Vec<PotentialDegreeRow> = report
        .interior()
        .map(|c| {
            let threshold = 0.5 * std::f64::consts::PI * c.degree.unsigned_abs() as f64 * (1.0 - 5.0 * delta);
            PotentialDegreeRow {
                center: c.center,
                degree: c.degree,
                potential_mass: c.potential_mass,
                threshold,
                pass: c.potential_mass >= threshold,
            }
        })
        .collect();
    let sum_abs_degree: i64 = rows.iter().map(|r| r.degree.unsigned_abs() as i64).sum();
    let total: i64 = rows.iter().map(|r| r.degree as i64).sum();
    let degree_bound = 2 * total * total;
    PotentialDegreeAudit {
        delta,
        all_pass: rows.iter().all(|r| r.pass),
        min_mass: rows.iter().map(|r| r.potential_mass).reduce(f64::min),
        sum_abs_degree,
        degree_bound,
        degree_bound_holds: sum_abs_degree <= degree_bound,
        rows,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseCeilings {
    pub c1: f64,
    pub c2: f64,
}

impl Default for PointwiseCeilings {
    fn default() -> Self {
        PointwiseCeilings { c1: 10.0, c2: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseBounds {
    /// `max (|u| - 1)/ε²`.
    pub c1: f64,
    /// `ε max |du|`.
    pub c2: f64,
    /// `max (|du|² - (1 - |u|²)/ε²)`.
    pub c3: f64,
    pub ceilings: PointwiseCeilings,
    pub pass: bool,
}

/// Fitted constants of the pointwise bounds, gradients on interior nodes.
pub fn pointwise_bounds_audit(u: &ComplexField, ceilings: PointwiseCeilings) -> PointwiseBounds {
    let eps = u.epsilon();
    let g = u.grid();
    let interior = interior_mask(u);
    let (c1, c2, c3) = (0..g.len())
        .into_par_iter()
        .filter(|&i| u.active()[i])
        .map(|i| {
            let v = u.value(i);
            let m = (v.norm() - 1.0) / (eps * eps);
            if !interior[i] {
                return (m, 0.0, f64::NEG_INFINITY);
            }
            let du2: f64 = (0..g.ndim()).map(|a| partial(u, i, a).unwrap_or_default().norm_sqr()).sum();
            (m, eps * du2.sqrt(), du2 - (1.0 - v.norm_sqr()) / (eps * eps))
        })
        .reduce(
            || (f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)),
        );
    PointwiseBounds {
        c1,
        c2,
        c3,
        ceilings,
        pass: c1 <= ceilings.c1 && c2 <= ceilings.c2 && c3.is_finite(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub t: f64,
    /// Slice energy over the disk divided by `π|log ε|`.
    pub energy_theta: f64,
    /// `∫ |∂_t u|²` over the slice disk.
    pub par_energy: f64,
    /// `∫ 2W/ε²` over the slice disk.
    pub w_mass: f64,
    /// `∫ |β|` over the slice disk.
    pub xi_mass: f64,
    /// Suprema over dyadic scales of the three defining quantities.
    pub sup_energy_dev: f64,
    pub sup_defect: f64,
    pub sup_mass: f64,
    pub log_eps: f64,
}

impl SliceReport {
    pub fn conditions(&self, delta: f64, k: f64) -> [bool; 3] {
        [
            self.sup_energy_dev < delta * self.log_eps,
            self.sup_defect < delta * self.log_eps,
            self.sup_mass < k,
        ]
    }

    pub fn is_good(&self, delta: f64, k: f64) -> bool {
        self.conditions(delta, k).iter().all(|&c| c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceScanOptions {
    /// Radius of the slice disk (clipped to the box).
    pub disk_radius: f64,
    /// Density used in the energy condition; the slice mean when `None`.
    pub theta: Option<f64>,
}

impl Default for SliceScanOptions {
    fn default() -> Self {
        SliceScanOptions {
            disk_radius: 1.0,
            theta: None,
        }
    }
}

struct LayerMasses {
    energy: f64,
    par: f64,
    w: f64,
    xi: f64,
    defect: f64,
}

/// Per-slice masses of a 3D cylinder field and their dyadic-scale suprema.
pub fn good_slice_scan(u: &ComplexField, opts: &SliceScanOptions) -> Result<Vec<SliceReport>> {
    let g = u.grid();
    if g.ndim() != 3 {
        return Err(Error::InvalidGrid("good-slice scan needs a 3D cylinder field".into()));
    }
    let (nx, ny, nt) = (g.nx(), g.ny(), g.nt());
    let h = g.spacing();
    let eps = u.epsilon();
    let log_eps = eps.ln().abs();
    let (x0, x1) = g.x_range();
    let (y0, y1) = g.y_range();
    let center = [0.5 * (x0 + x1), 0.5 * (y0 + y1)];
    let rho = opts.disk_radius.min(0.5 * (x1 - x0).min(y1 - y0));
    let disk = Region::Disk { center, radius: rho };
    let inside = |x: f64, y: f64| dist([x, y], center) <= rho;

    let layers: Vec<LayerMasses> = (0..nt)
        .map(|k| -> Result<LayerMasses> {
            let slice = u.slice(k)?;
            let parts = hodge_decompose(&slice)?;
            let db = parts.rot_grad_beta().to_nodal(slice.grid());
            let mut m = LayerMasses {
                energy: 0.0,
                par: 0.0,
                w: 0.0,
                xi: 0.0,
                defect: 0.0,
            };
            for j in 0..ny {
                for i in 0..nx {
                    let w = planar_fraction(&disk, g.x(i), g.y(j), h) * h * h;
                    if w == 0.0 {
                        continue;
                    }
                    let idx = g.index(i, j, k);
                    let (d, p) = energy_density(u, idx);
                    let e = d + p;
                    let ut = partial(u, idx, 2).unwrap_or_default();
                    let n2 = slice.grid().index(i, j, 0);
                    let rot = db.component(0)[n2].powi(2) + db.component(1)[n2].powi(2);
                    m.energy += w * e;
                    m.par += w * ut.norm_sqr();
                    m.w += w * 2.0 * p;
                    m.defect += w * (ut.norm_sqr() + (e - 0.5 * rot).abs());
                }
            }
            let cg = parts.beta().grid();
            for (c, b) in parts.beta().data().iter().enumerate() {
                let [x, y, _] = cg.coords(c);
                if inside(x, y) {
                    m.xi += b.abs() * h * h;
                }
            }
            m.defect += parts.coexact_gap_sq(true, inside);
            Ok(m)
        })
        .collect::<Result<_>>()?;

    let theta = opts
        .theta
        .unwrap_or_else(|| layers.iter().map(|l| l.energy).sum::<f64>() / (nt as f64 * std::f64::consts::PI * log_eps));
    let mut scales = Vec::new();
    let mut r = 0.5;
    while r >= h {
        scales.push(r);
        r *= 0.5;
    }
    Ok((0..nt)
        .map(|k| {
            let (mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64);
            for &r in &scales {
                let half = (r / h).floor() as isize;
                let (mut e, mut dfc, mut ms) = (0.0, 0.0, 0.0);
                for o in -half..=half {
                    let l = &layers[(k as isize + o).rem_euclid(nt as isize) as usize];
                    e += l.energy * h;
                    dfc += l.defect * h;
                    ms += (0.5 * l.w + l.xi) * h;
                }
                s1 = s1.max((e / r - 2.0 * std::f64::consts::PI * theta * log_eps).abs());
                s2 = s2.max(dfc / r);
                s3 = s3.max(ms / r);
            }
            let l = &layers[k];
            SliceReport {
                t: g.t(k),
                energy_theta: l.energy / (std::f64::consts::PI * log_eps),
                par_energy: l.par,
                w_mass: l.w,
                xi_mass: l.xi,
                sup_energy_dev: s1,
                sup_defect: s2,
                sup_mass: s3,
                log_eps,
            }
        })
        .collect())
}

/// Fraction of slices meeting all three conditions.
pub fn good_fraction(reports: &[SliceReport], delta: f64, k: f64) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().filter(|r| r.is_good(delta, k)).count() as f64 / reports.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_vortex_product, VortexProduct, VortexSpec};
    use crate::grid::GridSpec;
    use crate::profile::shared_profile;

    fn power_field(kappa: i32, h: f64) -> ComplexField {
        let grid = GridSpec::centered_square(1.0, h).unwrap();
        ComplexField::from_fn(grid, 0.05, |x, y, _| {
            let z = Complex64::new(x, y);
            if z.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (z / z.norm()).powi(kappa)
            }
        })
        .unwrap()
    }

    #[test]
    fn degree_of_powers_and_conjugates() {
        for kappa in [-3, -1, 0, 1, 2, 5] {
            let u = power_field(kappa, 1.0 / 64.0);
            for r in [0.1, 0.37, 0.8] {
                assert_eq!(loop_degree(&u, [0.0, 0.0], r, 128).unwrap(), kappa);
                assert_eq!(loop_degree(&u.conj(), [0.0, 0.0], r, 128).unwrap(), -kappa);
            }
        }
        let u = power_field(1, 1.0 / 64.0);
        assert!(loop_degree(&u, [0.0, 0.0], 0.3, 32).is_err());
        assert!(loop_degree(&u, [0.0, 0.0], 1.5, 128).is_err());
    }

    #[test]
    fn degree_undefined_names_the_point() {
        let grid = GridSpec::centered_square(1.0, 1.0 / 16.0).unwrap();
        let u = ComplexField::from_fn(grid, 0.1, |x, _, _| Complex64::new(x, 0.0)).unwrap();
        match loop_degree(&u, [-0.5, 0.0], 0.5, 64) {
            Err(Error::DegreeUndefined { x, y, .. }) => assert!(x.abs() < 1e-12 && y.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mask_is_monotone_and_sized_by_the_profile() {
        let eps = 0.05;
        let spec = VortexSpec::new(vec![[0.0, 0.0]], vec![1]).unwrap();
        let grid = GridSpec::centered_square(1.0, 1.0 / 256.0).unwrap();
        let u = build_vortex_product(&spec, eps, &grid).unwrap();
        let a = vorticity_mask(&u, 0.3);
        let b = vorticity_mask(&u, 0.7);
        assert!(a.iter().zip(&b).all(|(x, y)| !x || *y));
        let m = vorticity_mask(&u, 0.5);
        let area = m.iter().filter(|&&v| v).count() as f64 * grid.spacing().powi(2);
        let radius = (area / std::f64::consts::PI).sqrt();
        let expect = eps * shared_profile(1).unwrap().radius_at_level(0.5);
        assert!((radius / expect - 1.0).abs() < 0.2, "{radius} vs {expect}");
        let c = ComplexField::constant(grid, eps, Complex64::new(0.0, 1.0)).unwrap();
        assert!(!vorticity_mask(&c, 0.99).iter().any(|&v| v));
    }

    #[test]
    fn three_separated_vortices() {
        let spec = VortexSpec::new(vec![[0.3, 0.0], [-0.2, 0.25], [-0.1, -0.3]], vec![1, -1, 2]).unwrap();
        let eps = 0.005;
        let grid = GridSpec::centered_square(1.0, 1.0 / 512.0).unwrap();
        let u = build_vortex_product(&spec, eps, &grid).unwrap();
        let rep = detect_clusters(&u, &ClusterOptions::default()).unwrap();
        assert_eq!(rep.clusters.len(), 3);
        for (c, k) in spec.centers.iter().zip(&spec.degrees) {
            let hit = rep.clusters.iter().find(|cl| dist(cl.center, *c) < 2.0 * eps).unwrap();
            assert_eq!(hit.degree, *k);
            assert!(!hit.touches_boundary);
        }
        assert_eq!(loop_degree(&u, [0.0, 0.0], 0.6, 256).unwrap(), rep.total_degree());
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (&rep.clusters[i], &rep.clusters[j]);
                assert!(dist(a.center, b.center) >= a.radius + b.radius);
            }
        }
        let audit = potential_degree_audit(&rep);
        assert!(audit.all_pass, "{audit:?}");

        let map = VortexProduct::new(spec.clone(), eps).unwrap();
        let rm = detect_clusters_map(&map, [0.0, 0.0], 1.0, &ClusterOptions::default()).unwrap();
        let mut got: Vec<i32> = rm.clusters.iter().map(|c| c.degree).collect();
        got.sort();
        assert_eq!(got, vec![-1, 1, 2]);
        assert!(potential_degree_audit(&rm).all_pass);
    }

    #[test]
    fn dipole_merging_depends_on_separation() {
        let eps = 1e-3;
        let far = VortexProduct::new(VortexSpec::new(vec![[-0.05, 0.0], [0.05, 0.0]], vec![1, -1]).unwrap(), eps).unwrap();
        let rep = detect_clusters_map(&far, [0.0, 0.0], 1.0, &ClusterOptions::default()).unwrap();
        assert_eq!(rep.clusters.len(), 2);
        let d = 1.5 * eps;
        let near = VortexProduct::new(VortexSpec::new(vec![[-d, 0.0], [d, 0.0]], vec![1, -1]).unwrap(), eps).unwrap();
        let rep = detect_clusters_map(&near, [0.0, 0.0], 1.0, &ClusterOptions::default()).unwrap();
        assert!(matches!(rep.clusters.len(), 1 | 2));
        assert_eq!(rep.total_degree(), 0);
    }

    #[test]
    fn constant_field_has_no_clusters() {
        let grid = GridSpec::centered_square(1.0, 1.0 / 32.0).unwrap();
        let u = ComplexField::constant(grid, 0.05, Complex64::new(1.0, 0.0)).unwrap();
        assert!(detect_clusters(&u, &ClusterOptions::default()).unwrap().clusters.is_empty());
        let r = clearing_out_audit(&u, [0.0, 0.0, 0.0], 0.5, 0.1).unwrap();
        assert!(r.premise && r.conclusion && r.holds);
        let b = pointwise_bounds_audit(&u, PointwiseCeilings::default());
        assert!(b.c1.abs() < 1e-12 && b.c2 == 0.0 && b.c3 <= 0.0 && b.pass);
    }

    #[test]
    fn clearing_out_for_a_single_vortex() {
        let eps = 1e-3;
        let map = VortexProduct::new(VortexSpec::new(vec![[0.0, 0.0]], vec![1]).unwrap(), eps).unwrap();
        let eta = std::f64::consts::FRAC_PI_2;
        let at_core = clearing_out_audit_map(&map, [0.0, 0.0], 0.5, eta).unwrap();
        assert!(!at_core.premise && at_core.holds && !at_core.conclusion);
        let away = clearing_out_audit_map(&map, [0.3, 0.0], 0.2, eta).unwrap();
        assert!(away.premise && away.conclusion && away.holds);
        assert!(clearing_out_audit_map(&map, [0.0, 0.0], 1e-4, eta).is_err());
    }

    #[test]
    fn degree_zero_cluster_threshold_is_zero() {
        let rep = ClusterReport {
            delta: 0.05,
            clusters: vec![
                VortexCluster {
                    center: [0.0, 0.0],
                    radius: 0.1,
                    degree: 0,
                    potential_mass: 0.0,
                    components: 2,
                    touches_boundary: false,
                },
                VortexCluster {
                    center: [0.5, 0.0],
                    radius: 0.1,
                    degree: 2,
                    potential_mass: 2.3,
                    components: 1,
                    touches_boundary: false,
                },
            ],
            component_count: 3,
        };
        let a = potential_degree_audit(&rep);
        assert!(a.rows[0].pass && a.rows[0].threshold == 0.0);
        assert!((a.rows[1].threshold - 0.75 * std::f64::consts::PI).abs() < 1e-12);
        assert!(!a.rows[1].pass);
        assert!(a.degree_bound_holds);
    }

    #[test]
    fn straight_vortex_line_slices_agree() {
        let eps = 0.1;
        let grid = GridSpec::cylinder(49, 49, 16, 1.0 / 24.0, [-1.0, -1.0]).unwrap();
        let p = shared_profile(1).unwrap();
        let u = ComplexField::from_fn(grid, eps, |x, y, _| {
            let r = x.hypot(y);
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(x / r, y / r) * p.value(r / eps)
        })
        .unwrap();
        let rep = good_slice_scan(&u, &SliceScanOptions::default()).unwrap();
        assert_eq!(rep.len(), 16);
        for r in &rep {
            assert!((r.w_mass - rep[0].w_mass).abs() < 1e-9);
            assert!(r.par_energy.abs() < 1e-20);
            assert!((r.sup_mass - rep[0].sup_mass).abs() < 1e-9);
        }
        let k = 2.0 * rep[0].sup_mass;
        let frac = good_fraction(&rep, 1.0, k);
        assert!(frac == 0.0 || frac == 1.0);

        let c = ComplexField::constant(u.grid().clone(), eps, Complex64::new(1.0, 0.0)).unwrap();
        let rc = good_slice_scan(&c, &SliceScanOptions { theta: Some(0.0), ..Default::default() }).unwrap();
        assert!(rc.iter().all(|r| r.w_mass == 0.0 && r.xi_mass == 0.0 && r.is_good(0.1, 1e-12)));
    }
}
