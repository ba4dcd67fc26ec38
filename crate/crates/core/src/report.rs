//! Output files. Every CSV opens with the resolved configuration as
//! `# key = value` comment lines; JSON reports carry it in a `config` field.
//! Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ConfigMap;
use crate::error::{Error, Result};
use crate::grid::{fmt_full, fmt_sig, SamplePath};
use crate::l1_estimator::EstimateResult;
use crate::mc_harness::{BoundsReport, ConsistencyReport, ExperimentReport, LimitDistReport};

#[derive(Serialize)]
struct Envelope<'a, T> {
    experiment: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, experiment: &'static str, body: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope { experiment, body })?;
    text.push('\n');
    write_text(path, &text)
}

fn column_csv(header: &ConfigMap, column: &str, values: &[f64]) -> String {
    let mut out = header.comment_header();
    let _ = writeln!(out, "replicate,{column}");
    for (k, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{k},{}", fmt_full(*v));
    }
    out
}

/// A path as `t,<column>` rows below the configuration header.
pub fn path_csv(header: &ConfigMap, path: &SamplePath, column: &str) -> String {
    let mut out = header.comment_header();
    out.push_str(&path.to_csv(column));
    out
}

pub fn write_path_csv(file: &Path, header: &ConfigMap, path: &SamplePath, column: &str) -> Result<()> {
    write_text(file, &path_csv(header, path, column))
}

/// Single-path estimate with its configuration.
pub fn write_estimate_json(file: &Path, config: &ConfigMap, est: &EstimateResult) -> Result<()> {
    #[derive(Serialize)]
    struct Body<'a> {
        config: &'a ConfigMap,
        #[serde(flatten)]
        estimate: &'a EstimateResult,
    }
    write_json(file, "estimate", &Body { config, estimate: est })
}

pub fn consistency_csv(r: &ConsistencyReport) -> String {
    let mut out = r.config.comment_header();
    out.push_str("replicate,eps,theta_hat,exceeded\n");
    for rec in &r.records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            rec.replicate,
            fmt_full(rec.eps),
            fmt_full(rec.theta_hat),
            rec.exceeded as u8
        );
    }
    out
}

impl ExperimentReport {
    /// Writes the JSON report and the per-replicate CSVs into `dir`,
    /// returning the files in the order written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        let mut put = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            write_text(&path, &text)?;
            files.push(path);
            Ok(())
        };
        match self {
            ExperimentReport::Consistency(r) => {
                put("consistency_replicates.csv", consistency_csv(r))?;
                let path = dir.join("consistency_report.json");
                write_json(&path, "consistency", r)?;
                files.push(path);
            }
            ExperimentReport::LimitDist(r) => {
                put("limit_dist_u_eps.csv", column_csv(&r.config, "u_eps", &r.u_eps))?;
                put("limit_dist_zeta.csv", column_csv(&r.config, "zeta", &r.zeta))?;
                put(
                    "limit_dist_zeta_coupled.csv",
                    column_csv(&r.config, "zeta", &r.zeta_coupled),
                )?;
                let path = dir.join("limit_dist_report.json");
                write_json(&path, "limit-dist", r)?;
                files.push(path);
            }
            ExperimentReport::Bounds(r) => {
                let mut out = r.config.comment_header();
                out.push_str("replicate,sup,sup_abs\n");
                for (k, (s, a)) in r.sup.iter().zip(&r.sup_abs).enumerate() {
                    let _ = writeln!(out, "{k},{},{}", fmt_full(*s), fmt_full(*a));
                }
                put("bounds_sup.csv", out)?;
                let path = dir.join("bounds_report.json");
                write_json(&path, "bounds", r)?;
                files.push(path);
            }
        }
        Ok(files)
    }

    /// Short human-readable summary with 7 significant digits.
    pub fn summary(&self) -> String {
        match self {
            ExperimentReport::Consistency(r) => consistency_summary(r),
            ExperimentReport::LimitDist(r) => limit_summary(r),
            ExperimentReport::Bounds(r) => bounds_summary(r),
        }
    }
}

fn s7(x: f64) -> String {
    fmt_sig(x, 7)
}

fn consistency_summary(r: &ConsistencyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "m_hat = {} (se {})  sigma2 = {}",
        s7(r.m_hat),
        s7(r.m_hat_se),
        s7(r.sigma2)
    );
    let _ = writeln!(out, "eps,frequency,se,bound,bound_ok");
    for row in &r.rows {
        let bound = if row.bound_vacuous {
            "vacuous".to_string()
        } else {
            s7(row.bound)
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s7(row.eps),
            s7(row.frequency),
            s7(row.se),
            bound,
            row.bound_ok
        );
    }
    let _ = writeln!(out, "trend_ok = {}", r.trend_ok);
    if let Some(s) = r.log_frequency_slope {
        let _ = writeln!(out, "slope(ln freq vs eps^-2) = {}", s7(s));
    }
    out
}

fn limit_summary(r: &LimitDistReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "KS = {} (5% critical {})", s7(r.ks), s7(r.ks_critical_5pct));
    let _ = writeln!(out, "coupled median |u - zeta| = {}", s7(r.coupled_median_gap));
    let _ = writeln!(out, "u: mean {} sd {}", s7(r.u_mean), s7(r.u_sd));
    let _ = writeln!(out, "zeta: mean {} sd {}", s7(r.zeta_mean), s7(r.zeta_sd));
    let _ = writeln!(out, "boundary fraction = {}", s7(r.boundary_fraction));
    if r.boundary_warning {
        out.push_str("warning: more than 1% of estimates sit on the search boundary\n");
    }
    out
}

fn bounds_summary(r: &BoundsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "m_hat = {} (se {})  sigma2 = {}",
        s7(r.m_hat),
        s7(r.se),
        s7(r.sigma2)
    );
    if let (Some(lo), Some(hi), Some(pass)) = (r.sandwich_lo, r.sandwich_hi, r.sandwich_pass) {
        let _ = writeln!(out, "sandwich [{}, {}] pass = {pass}", s7(lo), s7(hi));
    }
    for c in &r.tail_checks {
        let _ = writeln!(
            out,
            "tail x = {}: empirical {} bound {} pass = {}",
            s7(c.x),
            s7(c.empirical),
            s7(c.bound),
            c.pass
        );
    }
    if let Some(e) = &r.entropy {
        let _ = writeln!(
            out,
            "entropy integral = {}  E[sup|G|]/entropy = {}",
            s7(e.value),
            s7(e.sup_abs_ratio)
        );
    }
    let _ = writeln!(out, "gronwall holds on {}/{} paths", r.gronwall.holds, r.gronwall.paths);
    if let Some(b) = &r.bm_reflection {
        let _ = writeln!(
            out,
            "reflection: expected {} z = {} pass = {}",
            s7(b.expected),
            s7(b.z),
            b.pass
        );
    }
    out
}
