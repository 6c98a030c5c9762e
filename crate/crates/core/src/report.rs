//! Report emission: per-report CSV, plot tables, an index, a JSON-lines
//! stream and a sidecar log. Only the sidecar log carries wall-clock data, so
//! identical runs produce byte-identical data files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::experiments::{Comparison, ExperimentReport, Table};
use crate::io::write_atomic;

pub const INDEX: &str = "index.csv";
pub const STREAM: &str = "reports.jsonl";
pub const SIDECAR: &str = "run.log";

fn comparison_name(c: Comparison) -> &'static str {
    match c {
        Comparison::Within => "within",
        Comparison::AtMost => "at_most",
        Comparison::AtLeast => "at_least",
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn csv_bytes(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::csv(path, e))?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer for {}: {e}", path.display())))
}

fn table_bytes(path: &Path, t: &Table) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    csv_bytes(path, &t.columns, &rows)
}

/// Files written by [`emit_report`].
#[derive(Debug, Default)]
pub struct Emitted {
    pub index: PathBuf,
    pub files: Vec<PathBuf>,
    pub all_pass: bool,
}

/// Writes every report under `dir`. An empty list yields an empty index.
pub fn emit_report(reports: &[ExperimentReport], dir: &Path) -> Result<Emitted> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut index_rows = Vec::new();
    let mut stream = String::new();
    let mut log = String::new();
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let _ = writeln!(log, "run at unix time {now:.3}");

    for (k, r) in reports.iter().enumerate() {
        let stem = format!("{k:02}_{}", sanitize(&r.name));
        let path = dir.join(format!("{stem}.csv"));
        let mut header: Vec<String> = ["name", "predicted", "measured", "tolerance", "comparison", "pass", "seed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut row = vec![
            r.name.clone(),
            r.predicted.to_string(),
            r.measured.to_string(),
            r.tolerance.to_string(),
            comparison_name(r.comparison).to_string(),
            r.pass.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        for c in &r.checks {
            header.push(format!("check_{}", c.name));
            row.push(c.pass.to_string());
        }
        for (key, v) in &r.details {
            header.push(key.clone());
            row.push(v.to_string());
        }
        write_atomic(&path, &csv_bytes(&path, &header, &[row])?)?;
        files.push(path.clone());
        for t in &r.tables {
            let tp = dir.join(format!("{stem}_{}.csv", sanitize(&t.name)));
            write_atomic(&tp, &table_bytes(&tp, t)?)?;
            files.push(tp);
        }
        index_rows.push(vec![
            k.to_string(),
            r.name.clone(),
            comparison_name(r.comparison).to_string(),
            r.predicted.to_string(),
            r.measured.to_string(),
            r.tolerance.to_string(),
            r.pass.to_string(),
            format!("{stem}.csv"),
        ]);
        let line = serde_json::to_string(r).map_err(|e| Error::Config(format!("serializing report {}: {e}", r.name)))?;
        stream.push_str(&line);
        stream.push('\n');
        let _ = writeln!(log, "{stem}: pass={} runtime={:.3}s", r.pass, r.runtime.as_secs_f64());
    }

    let index = dir.join(INDEX);
    let bytes = if reports.is_empty() {
        Vec::new()
    } else {
        let header: Vec<String> = ["index", "name", "comparison", "predicted", "measured", "tolerance", "pass", "file"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        csv_bytes(&index, &header, &index_rows)?
    };
    write_atomic(&index, &bytes)?;
    let sp = dir.join(STREAM);
    write_atomic(&sp, stream.as_bytes())?;
    files.push(sp);
    let lp = dir.join(SIDECAR);
    write_atomic(&lp, log.as_bytes())?;
    files.push(lp);
    Ok(Emitted {
        index,
        files,
        all_pass: reports.iter().all(|r| r.pass),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_gives_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_report(&[], dir.path()).unwrap();
        assert!(e.all_pass);
        assert_eq!(std::fs::read(&e.index).unwrap().len(), 0);
    }

    #[test]
    fn report_files_and_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("radius_profile", &["radius", "energy"]);
        t.push(vec![0.1, 2.0]);
        let r = ExperimentReport::new("monotonicity", &(), Comparison::AtLeast, 0.0, 0.5, 0.05)
            .check("certified", true)
            .detail("residual", 1e-9)
            .table(t);
        let e = emit_report(&[r], dir.path()).unwrap();
        let main = std::fs::read_to_string(dir.path().join("00_monotonicity.csv")).unwrap();
        assert!(main.starts_with("name,predicted,measured,tolerance,comparison,pass,seed,check_certified,residual\n"), "{main}");
        let prof = std::fs::read_to_string(dir.path().join("00_monotonicity_radius_profile.csv")).unwrap();
        assert_eq!(prof, "radius,energy\n0.1,2\n");
        let idx = std::fs::read_to_string(&e.index).unwrap();
        assert_eq!(idx.lines().count(), 2);
        assert!(std::fs::read_to_string(dir.path().join(SIDECAR)).unwrap().contains("runtime="));
    }
}
