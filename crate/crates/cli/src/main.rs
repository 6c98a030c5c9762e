//! `glvortex`: profiles, ansatz fields, relaxation, analysis and experiment
//! runs from TOML configs. Exit status is 0 iff every report passes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use glvortex::ansatz::build_vortex_product;
use glvortex::config::{load_run_config, KeyMode, RunConfig};
use glvortex::experiments::{
    critical_point_reports, monotonicity_audit, potential_degree_report, relax_degree_disk, ConfigSpec,
    ExperimentReport,
};
use glvortex::io::{dump_field, load_field, write_atomic};
use glvortex::ops::{energy_breakdown, EnergyOptions};
use glvortex::profile::solve_radial_profile;
use glvortex::report::emit_report;
use glvortex::vortex::{detect_clusters, ClusterOptions};
use glvortex::{GridSpec, Region};

#[derive(Parser)]
#[command(name = "glvortex", version, about = "Ginzburg-Landau vortex laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reject unknown config keys instead of warning.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed echoed into every report; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the radial profile and write it as CSV.
    Profile {
        #[arg(long, default_value_t = 1)]
        kappa: i32,
        #[arg(long, default_value_t = 40.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Sample the product ansatz of the `[ansatz]` section and dump it.
    Ansatz {
        /// Lattice spacing of the centered square [-1, 1]².
        #[arg(long, default_value_t = 1.0 / 256.0)]
        spacing: f64,
    },
    /// Relax a degree-κ disk (`[critical]`), dump the field and audit it.
    Solve,
    /// Energy, clusters and the potential/degree bound of a dumped field.
    Analyze { field: PathBuf },
    /// Energy identity (`[identity]`, repeated over `epsilons`).
    Identity,
    /// Density sweep over τ (`[density_sweep]`).
    Sweep,
    /// Monotonicity audit of a dumped field, or of a fresh `[critical]` solve.
    Monotonicity { field: Option<PathBuf> },
    /// Clearing-out threshold sweep (`[clearing]`).
    Clearing,
    /// Helical reduced solve and helical energy audit.
    Helix,
    /// Summarize a dumped field; optionally export its nodes as CSV.
    Dump {
        field: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every experiment named in the config.
    Report,
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mode = if g.strict { KeyMode::Strict } else { KeyMode::Lenient };
    let mut cfg = match &g.config {
        Some(p) => {
            let (cfg, warnings) = load_run_config(p, mode).with_context(|| format!("loading {}", p.display()))?;
            for w in warnings {
                log::warn!("{}: {w}", p.display());
            }
            cfg
        }
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("glvortex-out"))
}

fn with_experiments(cfg: &RunConfig, names: &[&str]) -> RunConfig {
    RunConfig {
        experiment: None,
        experiments: names.iter().map(|s| s.to_string()).collect(),
        ..cfg.clone()
    }
}

fn finish(mut reports: Vec<ExperimentReport>, cfg: &RunConfig) -> Result<ExitCode> {
    for r in &mut reports {
        r.seed = Some(cfg.seed);
    }
    let dir = out_dir(cfg);
    let e = emit_report(&reports, &dir)?;
    for r in &reports {
        println!(
            "{:<24} {:<4} measured={:.6} predicted={:.6} tol={:.3e}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.measured,
            r.predicted,
            r.tolerance
        );
    }
    println!("{} report(s) in {}", reports.len(), dir.display());
    Ok(if e.all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dump_csv(field: &Path, out: &Path) -> Result<()> {
    let u = load_field(field)?;
    let g = u.grid();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "t", "re", "im", "modulus"])?;
    for i in (0..g.len()).filter(|&i| u.active()[i]) {
        let p = g.coords(i);
        let v = u.value(i);
        w.write_record([p[0], p[1], p[2], v.re, v.im, v.norm()].map(|x| x.to_string()))?;
    }
    write_atomic(out, &w.into_inner()?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load_config(&cli.global)?;
    let dir = out_dir(&cfg);
    match cli.cmd {
        Cmd::Profile { kappa, r_max, tol } => {
            let p = solve_radial_profile(kappa, r_max, tol)?;
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("profile_k{kappa}.csv"));
            p.write_csv(&path)?;
            println!("kappa={kappa} residual={:.3e} slope={:.6} -> {}", p.residual(), p.slope(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Ansatz { spacing } => {
            let a = &cfg.ansatz;
            let spec = ConfigSpec {
                degrees: a.degrees.clone(),
                separation_exponent: a.separation_exponent,
                centers: a.centers.clone(),
            }
            .build(a.epsilon)?;
            let u = build_vortex_product(&spec, a.epsilon, &GridSpec::centered_square(1.0, spacing)?)?;
            let path = dir.join("ansatz.glf");
            dump_field(&u, &path)?;
            println!("{} vortices, predicted theta {:.4} -> {}", spec.centers.len(), spec.predicted_theta(a.epsilon), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Solve => {
            let sol = relax_degree_disk(&cfg.critical)?;
            let path = dir.join("critical.glf");
            dump_field(&sol.field, &path)?;
            let mut reports = critical_point_reports(&cfg.critical, &sol)?;
            for r in &mut reports {
                r.artifacts.push(path.clone());
            }
            finish(reports, &cfg)
        }
        Cmd::Analyze { field } => {
            let u = load_field(&field)?;
            let clusters = detect_clusters(&u, &ClusterOptions::default())?;
            let e = energy_breakdown(&u, &Region::All, &EnergyOptions { allow_under_resolved: true })?;
            let mut r = potential_degree_report("analyze", &clusters)
                .detail("dirichlet", e.dirichlet)
                .detail("potential", e.potential)
                .detail("normalized_theta", e.normalized_theta)
                .detail("total_degree", clusters.total_degree() as f64);
            r.artifacts.push(field);
            finish(vec![r], &cfg)
        }
        Cmd::Identity => finish(with_experiments(&cfg, &["identity"]).run()?, &cfg),
        Cmd::Sweep => finish(with_experiments(&cfg, &["density_sweep"]).run()?, &cfg),
        Cmd::Clearing => finish(with_experiments(&cfg, &["clearing"]).run()?, &cfg),
        Cmd::Helix => finish(with_experiments(&cfg, &["helical_reduced", "helical_energy"]).run()?, &cfg),
        Cmd::Monotonicity { field } => {
            let u = match field.or_else(|| cfg.input_field.clone()) {
                Some(p) => load_field(&p)?,
                None => relax_degree_disk(&cfg.critical)?.field,
            };
            finish(vec![monotonicity_audit(&u, &cfg.monotonicity)?], &cfg)
        }
        Cmd::Dump { field, csv } => {
            let u = load_field(&field)?;
            let g = u.grid();
            println!(
                "{}: dim={} dims={:?} spacing={} epsilon={} topology={:?} active={}",
                field.display(),
                g.ndim(),
                &g.dims()[..g.ndim()],
                g.spacing(),
                u.epsilon(),
                g.topology(),
                u.active().iter().filter(|a| **a).count()
            );
            if let Some(out) = csv {
                dump_csv(&field, &out)?;
                println!("nodes -> {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report => {
            if cfg.names().is_empty() {
                log::warn!("no experiments named; writing an empty index");
            }
            finish(cfg.run()?, &cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            // Library errors already embed their source in the message.
            let mut msg = String::new();
            for part in e.chain().map(|c| c.to_string()) {
                if !msg.ends_with(&part) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&part);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
