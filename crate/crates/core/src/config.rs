//! Run configurations: TOML with one section per experiment, validation and
//! dispatch to the registered experiments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::*;
use crate::io::load_field;

/// Names accepted in `experiments`, in dispatch-table order.
pub const EXPERIMENTS: &[&str] = &[
    "identity",
    "density_sweep",
    "beta_potential",
    "potential_degree",
    "annulus",
    "w_drop",
    "unit_density",
    "clearing",
    "critical",
    "monotonicity",
    "pohozaev",
    "helical_reduced",
    "helical_energy",
];

/// How keys that match no field are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyMode {
    Strict,
    Lenient,
}

/// Vortex configuration and ε for experiments that run on an analytic ansatz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnsatzSection {
    pub degrees: Vec<i32>,
    pub separation_exponent: Option<f64>,
    pub centers: Option<Vec<[f64; 2]>>,
    pub epsilon: f64,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        AnsatzSection {
            degrees: vec![1],
            separation_exponent: None,
            centers: None,
            epsilon: 1e-3,
        }
    }
}

impl AnsatzSection {
    pub fn spec(&self) -> ConfigSpec {
        ConfigSpec {
            degrees: self.degrees.clone(),
            separation_exponent: self.separation_exponent,
            centers: self.centers.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Single experiment name; appended to `experiments`.
    pub experiment: Option<String>,
    pub experiments: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Repeats `identity` and `beta_potential` once per value, in order.
    pub epsilons: Option<Vec<f64>>,
    /// Field snapshot for `monotonicity` and `pohozaev`.
    pub input_field: Option<PathBuf>,
    pub identity: IdentityConfig,
    pub density_sweep: SweepConfig,
    pub beta_potential: BetaConfig,
    pub ansatz: AnsatzSection,
    pub annulus: AnnulusConfig,
    pub w_drop: WDropConfig,
    pub unit_density: UnitDensityConfig,
    pub clearing: ClearingConfig,
    pub critical: CriticalConfig,
    pub monotonicity: MonotonicityConfig,
    pub pohozaev: PohozaevConfig,
    pub helical_reduced: HelicalSolveConfig,
    pub helical_energy: HelicalAuditConfig,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let head = &text[..offset.min(text.len())];
    let line = head.matches('\n').count() + 1;
    let column = head.rfind('\n').map_or(head.chars().count(), |p| head[p + 1..].chars().count()) + 1;
    (line, column)
}

/// Parses a run configuration. Unknown keys are errors in strict mode and
/// are returned as warnings otherwise.
pub fn parse_run_config(text: &str, mode: KeyMode) -> Result<(RunConfig, Vec<String>)> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::new(text);
    let cfg: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string())).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    if mode == KeyMode::Strict && !unknown.is_empty() {
        return Err(Error::Config(format!("unknown key(s): {}", unknown.join(", "))));
    }
    cfg.validate()?;
    let warnings = unknown.into_iter().map(|k| format!("ignoring unknown key `{k}`")).collect();
    Ok((cfg, warnings))
}

pub fn load_run_config(path: &Path, mode: KeyMode) -> Result<(RunConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_config(&text, mode)
}

fn check_eps(key: &str, eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::Config(format!("{key}: epsilon {eps} out of (0, 1/2)")))
    }
}

fn check_sigma(key: &str, sigma: Option<f64>) -> Result<()> {
    match sigma {
        Some(s) if !(0.0..1.0).contains(&s) => Err(Error::Config(format!("{key}: separation_exponent out of [0,1)"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Experiment names in dispatch order.
    pub fn names(&self) -> Vec<String> {
        self.experiment.iter().chain(&self.experiments).cloned().collect()
    }

    pub fn validate(&self) -> Result<()> {
        for n in self.names() {
            if !EXPERIMENTS.contains(&n.as_str()) {
                return Err(Error::Config(format!("unknown experiment `{n}` (known: {})", EXPERIMENTS.join(", "))));
            }
        }
        check_eps("identity", self.identity.epsilon)?;
        check_eps("density_sweep", self.density_sweep.epsilon)?;
        check_eps("beta_potential", self.beta_potential.epsilon)?;
        check_eps("ansatz", self.ansatz.epsilon)?;
        check_eps("critical", self.critical.epsilon)?;
        check_eps("helical_reduced", self.helical_reduced.epsilon)?;
        for &e in self.epsilons.iter().flatten() {
            check_eps("epsilons", e)?;
        }
        for &e in &self.clearing.epsilons {
            check_eps("clearing", e)?;
        }
        for &e in &self.helical_energy.epsilons {
            check_eps("helical_energy", e)?;
        }
        check_sigma("identity", self.identity.separation_exponent)?;
        check_sigma("beta_potential", self.beta_potential.separation_exponent)?;
        check_sigma("ansatz", self.ansatz.separation_exponent)?;
        if self.density_sweep.taus.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::Config("density_sweep: taus out of [0,1)".into()));
        }
        Ok(())
    }

    fn epsilon_list(&self, default: f64) -> Vec<f64> {
        self.epsilons.clone().unwrap_or_else(|| vec![default])
    }

    fn run_one(&self, name: &str, out: &mut Vec<ExperimentReport>) -> Result<()> {
        match name {
            "identity" => {
                for eps in self.epsilon_list(self.identity.epsilon) {
                    out.push(identity_experiment(&IdentityConfig {
                        epsilon: eps,
                        ..self.identity.clone()
                    })?);
                }
            }
            "density_sweep" => out.extend(density_sweep(&self.density_sweep)?),
            "beta_potential" => {
                for eps in self.epsilon_list(self.beta_potential.epsilon) {
                    let b = beta_potential_check(&BetaConfig {
                        epsilon: eps,
                        ..self.beta_potential.clone()
                    })?;
                    out.push(b.beta);
                    out.push(b.theta);
                    out.push(potential_degree_report("beta_potential", &b.clusters));
                }
            }
            "potential_degree" => {
                let clusters = identity_clusters(&IdentityConfig {
                    degrees: self.ansatz.degrees.clone(),
                    separation_exponent: self.ansatz.separation_exponent,
                    centers: self.ansatz.centers.clone(),
                    epsilon: self.ansatz.epsilon,
                    ..IdentityConfig::default()
                })?;
                out.push(potential_degree_report("ansatz", &clusters));
            }
            "annulus" | "w_drop" | "unit_density" => {
                let map = ansatz_map(&self.ansatz.spec(), self.ansatz.epsilon)?;
                let src = Source::Map(&map);
                out.push(match name {
                    "annulus" => annulus_energy_check(src, &self.annulus)?,
                    "w_drop" => w_drop_scan(src, &self.w_drop)?,
                    _ => unit_density_audit(src, &self.unit_density)?,
                });
            }
            "clearing" => out.push(clearing_threshold_sweep(&self.clearing)?),
            "critical" => {
                let sol = relax_degree_disk(&self.critical)?;
                out.extend(critical_point_reports(&self.critical, &sol)?);
            }
            "monotonicity" | "pohozaev" => {
                let path = self
                    .input_field
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{name} needs input_field")))?;
                let u = load_field(path)?;
                out.push(if name == "monotonicity" {
                    monotonicity_audit(&u, &self.monotonicity)?
                } else {
                    pohozaev_check(&u, &self.pohozaev)?
                });
            }
            "helical_reduced" => out.push(helical_reduced_check(&self.helical_reduced)?.0),
            "helical_energy" => out.push(helical_energy_audit(&self.helical_energy)?),
            other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
        Ok(())
    }

    /// Runs every named experiment in order and stamps the seed on each report.
    pub fn run(&self) -> Result<Vec<ExperimentReport>> {
        self.validate()?;
        let mut reports = Vec::new();
        for name in self.names() {
            log::info!("running {name}");
            self.run_one(&name, &mut reports)?;
        }
        for r in &mut reports {
            r.seed = Some(self.seed);
        }
        Ok(reports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let (cfg, warn) = parse_run_config("experiment = \"identity\"\n[identity]\nepsilon = 0.01\n", KeyMode::Strict).unwrap();
        assert_eq!(cfg.names(), vec!["identity"]);
        assert_eq!(cfg.identity.epsilon, 0.01);
        assert_eq!(cfg.identity.spacing, 1.0 / 4096.0);
        assert!(warn.is_empty());
    }

    #[test]
    fn unknown_keys_by_mode() {
        let text = "experiments = []\nbogus = 1\n[identity]\nepsilonn = 0.1\n";
        let e = parse_run_config(text, KeyMode::Strict).unwrap_err();
        assert!(e.to_string().contains("bogus") && e.to_string().contains("identity.epsilonn"), "{e}");
        let (_, warn) = parse_run_config(text, KeyMode::Lenient).unwrap();
        assert_eq!(warn.len(), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_run_config("experiments = []\n[identity]\nepsilon = \"x\"\n", KeyMode::Strict) {
            Err(Error::ConfigParse { line, column, .. }) => assert_eq!((line, column), (3, 11)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_run_config("experiments = [\n", KeyMode::Strict),
            Err(Error::ConfigParse { line: 2, .. })
        ));
    }

    #[test]
    fn range_checks() {
        let e = parse_run_config("[identity]\nseparation_exponent = 1.2\n", KeyMode::Strict).unwrap_err();
        assert!(e.to_string().contains("separation_exponent out of [0,1)"), "{e}");
        let e = parse_run_config("epsilons = [0.1, 0.6]\n", KeyMode::Strict).unwrap_err();
        assert!(e.to_string().contains("out of (0, 1/2)"), "{e}");
        let e = parse_run_config("experiment = \"nope\"\n", KeyMode::Strict).unwrap_err();
        assert!(e.to_string().contains("unknown experiment `nope`"), "{e}");
    }

    #[test]
    fn epsilon_list_gives_one_report_each_in_order() {
        let text = "experiment = \"identity\"\nseed = 9\nepsilons = [1e-2, 3e-3, 1e-3]\n[identity]\nspacing = 0.0009765625\n";
        let (cfg, _) = parse_run_config(text, KeyMode::Strict).unwrap();
        let r = cfg.run().unwrap();
        assert_eq!(r.len(), 3);
        let eps: Vec<f64> = r.iter().map(|r| r.inputs["epsilon"].as_f64().unwrap()).collect();
        assert_eq!(eps, vec![1e-2, 3e-3, 1e-3]);
        assert!(r.iter().all(|r| r.seed == Some(9)));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }
}
