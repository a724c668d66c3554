use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentResult, StatTestReport};
use crate::{Error, Result};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TABLE: &str = "report.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub result: ExperimentResult,
    pub stats: StatTestReport,
}

/// Writes `report.json` and `report.txt` into `dir`, creating it if needed.
/// Returns both paths.
pub fn emit_report(result: &ExperimentResult, stats: &StatTestReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = Report {
        result: result.clone(),
        stats: stats.clone(),
    };
    let json_path = dir.join(REPORT_JSON);
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
    let table_path = dir.join(REPORT_TABLE);
    fs::write(&table_path, render_table(result, stats)).map_err(|e| Error::io(&table_path, e))?;
    Ok((json_path, table_path))
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Human-readable summary: one row per roster algorithm, then the
/// preparation costs and the pairwise tests.
pub fn render_table(result: &ExperimentResult, stats: &StatTestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>12} {:>12} {:>12} {:>10}",
        "algorithm", "wall (s)", "cpu (s)", "f calls", "win rate"
    );
    for spec in &result.config.roster {
        match result.aggregates.iter().find(|a| a.algo == spec.name()) {
            Some(a) => {
                let _ = writeln!(
                    s,
                    "{:<20} {:>12.4} {:>12.4} {:>12.1} {:>10.4}",
                    a.algo, a.mean_wall_s, a.mean_cpu_s, a.mean_f_calls, a.mean_win_rate
                );
            }
            None => {
                let _ = writeln!(s, "{:<20} {:>12} {:>12} {:>12} {:>10}", spec.name(), "-", "-", "-", "failed");
            }
        }
    }
    if !result.preparation.is_empty() {
        let _ = writeln!(s, "\npreparation");
        for p in &result.preparation {
            let _ = writeln!(
                s,
                "  {:<18} {:>10.2} s wall {:>10.2} s cpu {:>8} f calls  {}",
                p.algo, p.wall_s, p.cpu_s, p.f_calls, p.description
            );
        }
    }
    if !stats.pairs.is_empty() {
        let _ = writeln!(s, "\n{} (alpha {})", stats.method, stats.alpha);
        for p in &stats.pairs {
            let t = p.test.t.map_or("-".to_string(), |t| format!("{t:.4}"));
            let df = p.test.df.map_or("-".to_string(), |d| format!("{d:.2}"));
            let _ = writeln!(
                s,
                "  {} vs {}: t {t}, df {df}, p {:.4}{}",
                p.algo_a,
                p.algo_b,
                p.test.p,
                if p.test.significant { " *" } else { "" }
            );
        }
    }
    if result.partial {
        let _ = writeln!(s, "\nPARTIAL RESULT");
        for f in &result.failures {
            let _ = writeln!(s, "  {f}");
        }
    }
    s
}

const TIMING_SUFFIXES: [&str; 2] = ["wall_s", "cpu_s"];

/// Replaces every timing field with 0 so two reports can be compared
/// byte for byte.
pub fn mask_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map.iter_mut() {
                if TIMING_SUFFIXES.iter().any(|t| k.ends_with(t)) {
                    *v = serde_json::Value::from(0.0);
                } else {
                    mask_timing(v);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(mask_timing),
        _ => {}
    }
}

/// The report file's bytes with timing fields masked.
pub fn masked_report_bytes(path: &Path) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v: serde_json::Value = serde_json::from_str(&text)?;
    mask_timing(&mut v);
    Ok(serde_json::to_vec_pretty(&v)?)
}
