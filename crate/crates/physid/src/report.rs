//! CSV output and plain-text summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::experiments::{BenchRow, CurveRow, GoalPushRow, IdentifyRow, Method, PredictRow};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Linear-interpolation quantile of unsorted data; NaN for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Ges => "ges",
        Method::Random => "random",
        Method::Oracle => "oracle",
        Method::Power => "power",
    }
}

fn stats_line(out: &mut String, label: &str, values: &[f64]) {
    let _ = writeln!(
        out,
        "{label:<28} median {:>10.5}  iqr {:>10.5}  n {}",
        median(values),
        iqr(values),
        values.len()
    );
}

pub fn identify_summary(rows: &[IdentifyRow], curve: &[CurveRow]) -> String {
    let mut out = String::from("held-out prediction error (m)\n");
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n_train).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for m in [Method::Ges, Method::Random] {
        for &n in &sizes {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == m && r.n_train == n)
                .map(|r| r.test_error_m)
                .collect();
            let tag = if n == 0 { " (prior)" } else { "" };
            stats_line(&mut out, &format!("{} n_train={n}{tag}", method_name(m)), &v);
        }
    }
    out.push_str("\nbest simulation error after k evaluations\n");
    let mut ks: Vec<usize> = curve.iter().map(|r| r.evaluations).collect();
    ks.sort_unstable();
    ks.dedup();
    for m in [Method::Ges, Method::Random] {
        for &k in &ks {
            let v: Vec<f64> = curve
                .iter()
                .filter(|r| r.method == m && r.evaluations == k)
                .map(|r| r.best_error)
                .collect();
            stats_line(&mut out, &format!("{} k={k}", method_name(m)), &v);
        }
    }
    out
}

pub fn predict_summary(rows: &[PredictRow]) -> String {
    let mut out = String::from("cross-validated prediction error (m)\n");
    for m in [Method::Ges, Method::Random] {
        let v: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.error_m).collect();
        stats_line(&mut out, method_name(m), &v);
    }
    out
}

pub fn goal_push_summary(rows: &[GoalPushRow]) -> String {
    let mut out = String::from("goal pushing\n");
    for m in [Method::Oracle, Method::Ges, Method::Random] {
        let sel: Vec<&GoalPushRow> = rows.iter().filter(|r| r.method == m).collect();
        let ok = sel.iter().filter(|r| r.success).count();
        let drops = sel.iter().filter(|r| r.dropped).count();
        let err: Vec<f64> = sel.iter().map(|r| r.final_error_m).collect();
        let _ = writeln!(
            out,
            "{:<8} success {ok}/{}  drops {drops}  median error {:.5} m",
            method_name(m),
            sel.len(),
            median(&err)
        );
    }
    out
}

pub fn bench_summary(rows: &[BenchRow]) -> String {
    let mut out = String::from("high-speed benchmark\n");
    for m in [Method::Ges, Method::Power] {
        let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m).collect();
        let err: Vec<f64> = sel.iter().map(|r| r.final_error_m).collect();
        let drops: usize = sel.iter().map(|r| r.drops).sum();
        let rollouts: usize = sel.iter().map(|r| r.rollouts).sum();
        let _ = writeln!(
            out,
            "{:<8} median final cost {:.5}  iqr {:.5}  drops {drops}/{rollouts} rollouts",
            method_name(m),
            median(&err),
            iqr(&err)
        );
    }
    out
}

/// Summary text followed by the fully resolved configuration.
pub fn with_config(summary: &str, cfg: &RunConfig) -> String {
    format!("{summary}\n# resolved configuration\n{}", cfg.to_toml())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
        assert!(median(&[]).is_nan());
    }
}
