//! CSV output. Numbers are written with six decimals and missing values as
//! `nan`, so a given config and seed always produce the same bytes.

use std::io::Write;

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::run::RunResult;

pub const PER_SYMBOL_HEADER: [&str; 4] = ["symbol_index", "algorithm_id", "sinr_over_snr_db", "cumulative_ber"];
pub const SWEEP_HEADER: [&str; 4] = ["sweep_value", "algorithm_id", "sinr_over_snr_db", "ber"];

pub fn fmt_value(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "nan".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_value)
}

/// One row of the per-symbol schema.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub symbol_index: usize,
    pub algorithm_id: String,
    pub sinr_over_snr_db: f64,
    pub cumulative_ber: Option<f64>,
}

/// Packet-averaged curves of every algorithm in `run`. The BER column is
/// cumulative from `config.ber_start()` and `nan` before it.
pub fn curve_points(config: &ExperimentConfig, run: &RunResult) -> Vec<CurvePoint> {
    let start = config.ber_start();
    let mut rows = Vec::new();
    for a in &run.algorithms {
        for i in 0..a.series.len() {
            rows.push(CurvePoint {
                symbol_index: i,
                algorithm_id: a.id.to_string(),
                sinr_over_snr_db: a.series.mean_sinr_over_snr(i),
                cumulative_ber: if i < start { None } else { a.series.ber_between(start..i + 1) },
            });
        }
    }
    rows
}

pub fn write_curves<W: Write>(out: W, rows: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = std::io::Error::from;
    w.write_record(PER_SYMBOL_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.symbol_index.to_string(),
            r.algorithm_id.clone(),
            fmt_value(r.sinr_over_snr_db),
            fmt_opt(r.cumulative_ber),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_symbol<W: Write>(out: W, config: &ExperimentConfig, run: &RunResult) -> Result<()> {
    write_curves(out, &curve_points(config, run))
}

/// One row per sweep point and algorithm: the steady-state window mean of
/// SINR/SNR_i and the BER pooled from `config.ber_start()` to the packet end.
pub fn write_sweep<W: Write>(out: W, config: &ExperimentConfig, points: &[(f64, RunResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = std::io::Error::from;
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    let start = config.ber_start();
    for (value, run) in points {
        for a in &run.algorithms {
            let n = a.series.len();
            let ber = if start < n { a.series.ber_between(start..n) } else { None };
            w.write_record([
                format!("{value}"),
                a.id.to_string(),
                fmt_value(a.series.window_mean(config.steady_start..n)),
                fmt_opt(ber),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
