use std::path::Path;
use std::process::{Command, Output};

fn glvortex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glvortex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn glvortex")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn passing_run_exits_zero_and_writes_index() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.toml", "experiments = [\"clearing\"]\nseed = 7\nout = \"res\"\n");
    let o = glvortex(d.path(), &["--config", "run.toml", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let index = std::fs::read_to_string(d.path().join("res/index.csv")).unwrap();
    assert!(index.starts_with("index,name,"), "{index}");
    let report = std::fs::read_to_string(d.path().join("res/00_clearing_threshold.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().contains(",7,"), "{report}");
}

#[test]
fn failing_tolerance_exits_one() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.toml", "experiments = [\"helical_reduced\"]\n[helical_reduced]\nprofile_tol = 1e-9\n");
    let o = glvortex(d.path(), &["--config", "run.toml", "--out", "res", "report"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let index = std::fs::read_to_string(d.path().join("res/index.csv")).unwrap();
    assert!(index.contains(",false,"), "{index}");
}

#[test]
fn bad_separation_exponent_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "run.toml",
        "experiments = [\"identity\"]\n[identity]\ndegrees = [1, 1]\nseparation_exponent = 1.2\n",
    );
    let o = glvortex(d.path(), &["--config", "run.toml", "--out", "res", "report"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("separation_exponent out of [0,1)"), "{}", stderr(&o));
    assert!(!d.path().join("res").exists());
}

#[test]
fn unknown_keys_warn_or_fail_by_mode() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.toml", "experiments = []\nsede = 3\n");
    let o = glvortex(d.path(), &["--config", "run.toml", "--out", "res", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
    let o = glvortex(d.path(), &["--config", "run.toml", "--out", "res2", "--strict", "report"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key(s): sede"), "{}", stderr(&o));
}

#[test]
fn empty_experiment_list_writes_empty_index() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.toml", "experiments = []\n");
    let o = glvortex(d.path(), &["--config", "run.toml", "--out", "res", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(d.path().join("res/index.csv")).unwrap().len(), 0);
}

#[test]
fn malformed_toml_reports_position() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "run.toml", "seed = 1\nexperiments = [\n");
    let o = glvortex(d.path(), &["--config", "run.toml", "report"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 1"), "{}", stderr(&o));
}

#[test]
fn profile_and_dump_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let o = glvortex(d.path(), &["--out", "res", "profile", "--kappa", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("res/profile_k2.csv")).unwrap();
    assert!(csv.lines().count() > 100);

    write(d.path(), "a.toml", "[ansatz]\ndegrees = [1, -1]\ncenters = [[-0.3, 0.0], [0.3, 0.0]]\nepsilon = 0.01\n");
    let o = glvortex(d.path(), &["--config", "a.toml", "--out", "res", "ansatz", "--spacing", "0.03125"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = glvortex(d.path(), &["dump", "res/ansatz.glf", "--csv", "nodes.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let nodes = std::fs::read_to_string(d.path().join("nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count(), 1 + 65 * 65);

    let o = glvortex(d.path(), &["--out", "an", "analyze", "res/ansatz.glf"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = std::fs::read_to_string(d.path().join("an/00_potential_degree.csv")).unwrap();
    assert!(rep.contains("total_degree"), "{rep}");
}

#[test]
fn truncated_field_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "a.toml", "[ansatz]\ndegrees = [1]\nepsilon = 0.05\n");
    let o = glvortex(d.path(), &["--config", "a.toml", "--out", "res", "ansatz", "--spacing", "0.0625"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let p = d.path().join("res/ansatz.glf");
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
    let o = glvortex(d.path(), &["dump", "res/ansatz.glf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
}
