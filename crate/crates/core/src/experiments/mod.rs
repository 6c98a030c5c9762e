//! Named experiments that turn energy identities, bounds and constructions
//! into predicted-vs-measured reports.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticMap;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::vortex::{ClusterReport, MapSampler, Sampler};

mod critical;
mod helical;
mod planar;

pub use critical::*;
pub use helical::*;
pub use planar::*;

/// How `measured` is judged against `predicted` and `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Comparison {
    /// `|measured - predicted| <= tolerance`.
    #[default]
    Within,
    /// `measured <= predicted + tolerance`.
    AtMost,
    /// `measured >= predicted - tolerance`.
    AtLeast,
}

impl Comparison {
    pub fn holds(self, predicted: f64, measured: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Within => (measured - predicted).abs() <= tolerance,
            Comparison::AtMost => measured <= predicted + tolerance,
            Comparison::AtLeast => measured >= predicted - tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

/// Plot-ready numeric table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    /// Echo of the configuration that produced the report.
    pub inputs: serde_json::Value,
    pub seed: Option<u64>,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    /// The comparison together with every entry of `checks`.
    pub pass: bool,
    pub checks: Vec<Check>,
    pub details: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub artifacts: Vec<PathBuf>,
    /// Wall time; kept out of serialized data so reruns are byte-identical.
    #[serde(skip)]
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new<I: Serialize>(name: &str, inputs: &I, comparison: Comparison, predicted: f64, measured: f64, tolerance: f64) -> Self {
        ExperimentReport {
            name: name.into(),
            inputs: serde_json::to_value(inputs).unwrap_or(serde_json::Value::Null),
            seed: None,
            predicted,
            measured,
            tolerance,
            comparison,
            pass: comparison.holds(predicted, measured, tolerance),
            checks: Vec::new(),
            details: BTreeMap::new(),
            tables: Vec::new(),
            artifacts: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub fn check(mut self, name: &str, pass: bool) -> Self {
        self.pass &= pass;
        self.checks.push(Check { name: name.into(), pass });
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }

    pub fn timed(mut self, runtime: Duration) -> Self {
        self.runtime = runtime;
        self
    }

    /// Recomputes `pass` from the comparison and the checks.
    pub fn recompute_pass(&self) -> bool {
        self.comparison.holds(self.predicted, self.measured, self.tolerance) && self.checks.iter().all(|c| c.pass)
    }
}

/// A field to analyze: sampled on a grid or known in closed form.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Field(&'a ComplexField),
    Map(&'a dyn AnalyticMap),
}

impl Source<'_> {
    pub fn epsilon(&self) -> f64 {
        match self {
            Source::Field(u) => u.epsilon(),
            Source::Map(m) => m.epsilon(),
        }
    }

    fn sample(&self, x: f64, y: f64) -> Option<Complex64> {
        match self {
            Source::Field(u) => u.sample(x, y),
            Source::Map(m) => MapSampler(*m).sample(x, y),
        }
    }

    fn degree(&self, center: [f64; 2], radius: f64) -> Result<i32> {
        match self {
            Source::Field(u) => crate::vortex::loop_degree(*u, center, radius, 512),
            Source::Map(m) => crate::vortex::loop_degree(&MapSampler(*m), center, radius, 512),
        }
    }

    fn require_planar(&self) -> Result<()> {
        match self {
            Source::Field(u) if u.grid().ndim() != 2 => Err(Error::InvalidParameter("this experiment needs a planar field".into())),
            _ => Ok(()),
        }
    }
}

/// Smallest `|u|` over rings filling `inner <= |x - c| <= outer`, sampled at
/// roughly the core scale; returns `(radius, modulus)` of the minimum.
fn min_modulus_on_annulus(src: Source, c: [f64; 2], inner: f64, outer: f64) -> Result<(f64, f64)> {
    let step = src.epsilon().min((outer - inner) / 4.0).max((outer - inner) / 4096.0);
    let rings = ((outer - inner) / step).ceil() as usize + 1;
    let rows: Vec<Result<(f64, f64)>> = (0..rings)
        .into_par_iter()
        .map(|k| {
            let r = inner + (outer - inner) * k as f64 / (rings - 1) as f64;
            let n = ((std::f64::consts::TAU * r / step).ceil() as usize).clamp(64, 16384);
            let mut best = f64::INFINITY;
            for a in 0..n {
                let t = std::f64::consts::TAU * a as f64 / n as f64;
                let (x, y) = (c[0] + r * t.cos(), c[1] + r * t.sin());
                let v = src
                    .sample(x, y)
                    .ok_or_else(|| Error::RegionOutsideDomain(format!("annulus point ({x}, {y}) is off the field")))?;
                best = best.min(v.norm());
            }
            Ok((r, best))
        })
        .collect();
    let mut best = (inner, f64::INFINITY);
    for row in rows {
        let (r, m) = row?;
        if m < best.1 {
            best = (r, m);
        }
    }
    Ok(best)
}

/// Report of the degree lower bound on cluster potential masses.
pub fn potential_degree_report(label: &str, clusters: &ClusterReport) -> ExperimentReport {
    let audit = crate::vortex::potential_degree_audit(clusters);
    let mut table = Table::new("clusters", &["x", "y", "degree", "potential_mass", "threshold"]);
    let mut margin = f64::INFINITY;
    for r in &audit.rows {
        table.push(vec![r.center[0], r.center[1], r.degree as f64, r.potential_mass, r.threshold]);
        margin = margin.min(r.potential_mass - r.threshold);
    }
    #[derive(Serialize)]
    struct Inputs<'a> {
        label: &'a str,
        delta: f64,
    }
    ExperimentReport::new(
        "potential_degree",
        &Inputs { label, delta: audit.delta },
        Comparison::AtLeast,
        0.0,
        if margin.is_finite() { margin } else { 0.0 },
        0.0,
    )
    .check("all_clusters_pass", audit.all_pass)
    .detail("clusters", audit.rows.len() as f64)
    .detail("sum_abs_degree", audit.sum_abs_degree as f64)
    .table(table)
}

/// Dyadic radii `lo·2^j` below `hi`, then `hi` itself.
pub fn dyadic_radii(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = lo;
    while r < hi * (1.0 - 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out.push(hi);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Comparison::Within.holds(1.0, 1.2, 0.25));
        assert!(!Comparison::Within.holds(1.0, 0.7, 0.25));
        assert!(Comparison::AtMost.holds(1.0, -5.0, 0.0));
        assert!(!Comparison::AtLeast.holds(0.0, -0.1, 0.05));
        assert!(!Comparison::Within.holds(0.0, f64::NAN, 1.0));
    }

    #[test]
    fn checks_gate_pass() {
        let r = ExperimentReport::new("x", &(), Comparison::Within, 0.0, 0.0, 0.0);
        assert!(r.pass);
        let r = r.check("trend", false);
        assert!(!r.pass);
        assert_eq!(r.pass, r.recompute_pass());
    }

    #[test]
    fn dyadic_ladder() {
        let r = dyadic_radii(0.1, 1.0);
        assert_eq!(r, vec![0.1, 0.2, 0.4, 0.8, 1.0]);
        assert_eq!(dyadic_radii(0.5, 0.5), vec![0.5]);
    }
}
