//! Output files: results.csv with a fixed schema, sweep CSVs, and a
//! machine-readable summary.json. Floating-point values are written with 17
//! significant digits so reruns are byte-comparable.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::runner::{BaseScaleRow, CellResult, CellRun, EigengapRow};

pub const RESULTS_HEADER: &str =
    "manifold,chart,method,n,N,b,r_s,seed,draw,mcc,tc,frac_out_of_radius,warnings";

/// 17 significant digits; NaN spelled `nan` for failed cells.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{:.16e}", v)
    }
}

fn write_atomic(path: &Path, content: &str) -> anyhow::Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// Writes results.csv in the fixed table schema.
pub fn write_results_csv(dir: &Path, runs: &[CellRun]) -> anyhow::Result<PathBuf> {
    let mut out = String::with_capacity(runs.len() * 128 + 64);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.manifold,
            r.chart,
            r.method.name(),
            r.n,
            r.n_samples,
            fmt_f64(r.b),
            fmt_f64(r.r_s),
            r.seed,
            r.draw,
            fmt_f64(r.mcc),
            fmt_f64(r.tc),
            fmt_f64(r.frac_out_of_radius),
            r.warnings.join(";"),
        ));
    }
    let path = dir.join("results.csv");
    write_atomic(&path, &out)?;
    Ok(path)
}

pub fn write_eigengap_csv(dir: &Path, rows: &[EigengapRow]) -> anyhow::Result<PathBuf> {
    let mut out = String::from("manifold,chart,r_s,min_gap,method,mcc_mean,mcc_std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.manifold,
            r.chart,
            fmt_f64(r.r_s),
            fmt_f64(r.min_gap),
            r.method.name(),
            fmt_f64(r.mcc_mean),
            fmt_f64(r.mcc_std),
        ));
    }
    let path = dir.join("sweep_eigengap.csv");
    write_atomic(&path, &out)?;
    Ok(path)
}

pub fn write_base_scale_csv(dir: &Path, rows: &[BaseScaleRow]) -> anyhow::Result<PathBuf> {
    let mut out = String::from("manifold,chart,b,frac_out_of_radius,mcc_mean,mcc_std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.manifold,
            r.chart,
            fmt_f64(r.b),
            fmt_f64(r.frac_out_of_radius),
            fmt_f64(r.mcc_mean),
            fmt_f64(r.mcc_std),
        ));
    }
    let path = dir.join("sweep_base_scale.csv");
    write_atomic(&path, &out)?;
    Ok(path)
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    library_version: &'a str,
    master_seed: u64,
    config: &'a ExperimentConfig,
    cells: &'a [CellResult],
}

/// Writes summary.json: config echo, library version, seeds, and per-cell
/// aggregates.
pub fn write_summary_json(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    cells: &[CellResult],
) -> anyhow::Result<PathBuf> {
    let summary = Summary {
        command,
        library_version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        config: cfg,
        cells,
    };
    let text = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    let path = dir.join("summary.json");
    write_atomic(&path, &text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let third = fmt_f64(1.0 / 3.0);
        assert!(third.starts_with("3.333333333333333"), "{}", third);
        // round-trips exactly
        let v = 0.1 + 0.2;
        let parsed: f64 = fmt_f64(v).parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
    }

    #[test]
    fn results_header_is_pinned() {
        assert_eq!(
            RESULTS_HEADER,
            "manifold,chart,method,n,N,b,r_s,seed,draw,mcc,tc,frac_out_of_radius,warnings"
        );
    }
}
