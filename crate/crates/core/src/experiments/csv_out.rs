//! Plot-ready CSV output. Floats use 17 significant digits so every value
//! parses back to the same `f64`; missing values are empty fields.

use std::io::Write;

use super::ExperimentRow;
use crate::error::Result;
use crate::verify::StepDiagnostics;

pub const DIAGNOSTICS_HEADER: [&str; 11] = [
    "t",
    "energy_total",
    "energy_active",
    "lambda_t",
    "diameter",
    "decrement",
    "slack_rmf",
    "slack_spectral",
    "slack_gap",
    "slack_path",
    "merged",
];

pub const SWEEP_HEADER: [&str; 17] = [
    "n",
    "trial",
    "seed",
    "freezing_time",
    "capped",
    "transitions",
    "merge_count",
    "energy_initial",
    "energy_final",
    "min_slack_rmf",
    "min_slack_spectral",
    "min_slack_gap",
    "min_slack_path",
    "min_slack_composed",
    "small_decrement_steps",
    "verified",
    "failure",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_diagnostics_csv<W: Write>(out: W, diagnostics: &[StepDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for d in diagnostics {
        w.write_record([
            d.t.to_string(),
            fmt_f64(d.energy_total),
            fmt_f64(d.energy_active),
            fmt_opt(d.lambda_t),
            d.diameter.to_string(),
            fmt_f64(d.decrement),
            fmt_f64(d.slack_rmf),
            fmt_opt(d.slack_spectral),
            fmt_opt(d.slack_gap),
            fmt_f64(d.slack_path),
            d.merged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[ExperimentRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.freezing_time.map(|t| t.to_string()).unwrap_or_default(),
            r.capped.to_string(),
            r.transitions.to_string(),
            r.merge_count.to_string(),
            fmt_f64(r.energy_initial),
            fmt_f64(r.energy_final),
            fmt_opt(r.min_slack_rmf),
            fmt_opt(r.min_slack_spectral),
            fmt_opt(r.min_slack_gap),
            fmt_opt(r.min_slack_path),
            fmt_opt(r.min_slack_composed),
            r.small_decrement_steps.to_string(),
            r.verified.to_string(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
