//! Batch sweeps: build configurations from a family, simulate, verify, and
//! report freezing times with their scaling fit.
//!
//! Trials run on a rayon pool whose size comes from `HK_WORKERS` when set.
//! Rows are assembled in `(n, trial)` order, so output is independent of
//! scheduling; only `wall_clock_ms` (JSON report only) varies between runs.

mod csv_out;
mod fit;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csv_out::{
    fmt_f64, write_diagnostics_csv, write_sweep_csv, DIAGNOSTICS_HEADER, SWEEP_HEADER,
};
pub use fit::{fit_power_law, fit_scaling, median_freezing_times, ScalingFit};

use crate::dynamics::{simulate, SimulateOptions, Trajectory};
use crate::error::{HkError, Result};
use crate::generators;
use crate::scalar::{ArithmeticMode, Scalar};
use crate::state::{OpinionState, Opinions};
use crate::verify::{verify_trajectory, Check, StepDiagnostics, VerificationSummary};

pub const WORKERS_ENV: &str = "HK_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    /// Planar `n`-gon; give either the adjacent chord or the radius.
    Circle {
        #[serde(default)]
        chord: Option<f64>,
        #[serde(default)]
        radius: Option<f64>,
    },
    /// `n / 4` agents in each cluster, the remaining `n - 2 (n / 4)` on the chain.
    Dumbbell {
        spacing: f64,
    },
    Line {
        spacing: f64,
    },
    Random {
        d: usize,
        box_side: f64,
    },
}

impl Family {
    pub fn build(&self, n: usize, seed: u64) -> Result<OpinionState> {
        match *self {
            Family::Circle {
                chord: Some(c),
                radius: None,
            } => generators::circle_config_with_chord(n, c),
            Family::Circle {
                chord: None,
                radius: Some(r),
            } => generators::circle_config(n, r),
            Family::Circle { .. } => Err(HkError::InvalidParameter(
                "circle family needs exactly one of `chord` and `radius`".into(),
            )),
            Family::Dumbbell { spacing } => {
                let m = n / 4;
                generators::dumbbell_config(m, n.saturating_sub(2 * m), spacing)
            }
            Family::Line { spacing } => generators::line_config(n, spacing),
            Family::Random { d, box_side } => generators::random_config(n, d, box_side, seed),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Also write one diagnostics CSV per trial.
    #[serde(default)]
    pub step_csv: bool,
}

fn default_trials() -> usize {
    1
}

fn default_cap_multiplier() -> f64 {
    10.0
}

fn default_true() -> bool {
    true
}

fn default_mode() -> ArithmeticMode {
    ArithmeticMode::Float
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials_per_n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: ArithmeticMode,
    /// The step cap is `ceil(cap_multiplier n^4)`.
    #[serde(default = "default_cap_multiplier")]
    pub cap_multiplier: f64,
    /// Eigenvalue diagnostics on every step; the dominant cost of a sweep.
    #[serde(default = "default_true")]
    pub spectral: bool,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(HkError::InvalidParameter("n_values is empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HkError::InvalidParameter(
                "n_values must be strictly increasing".into(),
            ));
        }
        if self.n_values[0] == 0 {
            return Err(HkError::InvalidParameter(
                "n_values must be positive".into(),
            ));
        }
        if self.trials_per_n == 0 {
            return Err(HkError::InvalidParameter(
                "trials_per_n must be at least 1".into(),
            ));
        }
        if !(self.cap_multiplier > 0.0 && self.cap_multiplier.is_finite()) {
            return Err(HkError::InvalidParameter(
                "cap_multiplier must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn cap_for(&self, n: usize) -> u64 {
        ((n as f64).powi(4) * self.cap_multiplier).ceil().max(1.0) as u64
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Seed of one trial, mixed from the sweep seed with splitmix64.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut z = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the run hit the cap or failed.
    pub freezing_time: Option<u64>,
    pub capped: bool,
    pub transitions: usize,
    pub merge_count: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub min_slack_rmf: Option<f64>,
    pub min_slack_spectral: Option<f64>,
    pub min_slack_gap: Option<f64>,
    pub min_slack_path: Option<f64>,
    pub min_slack_composed: Option<f64>,
    pub small_decrement_steps: usize,
    pub verified: bool,
    pub failure: Option<String>,
    pub wall_clock_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<ExperimentRow>,
    pub fit: Option<ScalingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub failed_runs: usize,
}

impl ExperimentReport {
    pub fn all_verified(&self) -> bool {
        self.failed_runs == 0
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

struct TrialOutcome {
    row: ExperimentRow,
    diagnostics: Vec<StepDiagnostics>,
}

fn run_typed<S: Scalar>(
    x0: &Opinions<S>,
    opts: &SimulateOptions,
) -> Result<(Trajectory<S>, VerificationSummary)> {
    let tr = simulate(x0, opts)?;
    let summary = verify_trajectory(&tr)?;
    Ok((tr, summary))
}

fn run_trial(spec: &ExperimentSpec, n: usize, trial: usize) -> TrialOutcome {
    let seed = trial_seed(spec.seed, n, trial);
    let mut row = ExperimentRow {
        n,
        trial,
        seed,
        ..ExperimentRow::default()
    };
    let started = Instant::now();
    let opts = SimulateOptions {
        cap: Some(spec.cap_for(n)),
        spectral: spec.spectral,
        keep_states: false,
        ..SimulateOptions::default()
    };

    let outcome = spec.family.build(n, seed).and_then(|x0| match spec.mode {
        ArithmeticMode::Float => run_typed(&x0, &opts).map(|(tr, s)| (tr.diagnostics, s)),
        ArithmeticMode::Exact => {
            run_typed::<BigRational>(&x0.to_exact(), &opts).map(|(tr, s)| (tr.diagnostics, s))
        }
    });

    let diagnostics = match outcome {
        Ok((diagnostics, summary)) => {
            row.freezing_time = summary.freezing_time.time();
            row.capped = row.freezing_time.is_none();
            row.transitions = summary.transitions;
            row.merge_count = summary.merge_count;
            row.energy_initial = summary.energy_initial;
            row.energy_final = summary.energy_final;
            row.min_slack_rmf = summary.min_slack(Check::RmfDecrement);
            row.min_slack_spectral = summary.min_slack(Check::SpectralDecrement);
            row.min_slack_gap = summary.min_slack(Check::GapBound);
            row.min_slack_path = summary.min_slack(Check::PathBound);
            row.min_slack_composed = summary.min_slack(Check::ComposedDecrement);
            row.small_decrement_steps = summary.small_decrement_steps;
            row.verified = true;
            diagnostics
        }
        Err(err) => {
            row.failure = Some(match &err {
                HkError::Violation(bundle) => {
                    serde_json::to_string(bundle).unwrap_or_else(|_| err.to_string())
                }
                _ => err.to_string(),
            });
            Vec::new()
        }
    };
    row.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
    TrialOutcome { row, diagnostics }
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let threads: usize = v.trim().parse().map_err(|_| {
                HkError::InvalidParameter(format!(
                    "{WORKERS_ENV} must be a positive integer, got `{v}`"
                ))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| HkError::InvalidParameter(e.to_string()))?;
            Ok(Some(pool))
        }
        Err(_) => Ok(None),
    }
}

/// Runs every `(n, trial)` of the spec, verifies each trajectory, fits the
/// scaling law, and writes `report.json` + `sweep.csv` (plus per-trial step
/// CSVs when asked) to the output directory if one is given. Failed runs are
/// recorded in their row; the sweep continues.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .n_values
        .iter()
        .flat_map(|&n| (0..spec.trials_per_n).map(move |t| (n, t)))
        .collect();
    let run = || -> Vec<TrialOutcome> {
        jobs.par_iter()
            .map(|&(n, t)| run_trial(spec, n, t))
            .collect()
    };
    let outcomes = match worker_pool()? {
        Some(pool) => pool.install(run),
        None => run(),
    };

    let rows: Vec<ExperimentRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let failed_runs = rows.iter().filter(|r| !r.verified).count();
    let fit_rows: Vec<ExperimentRow> = rows.iter().filter(|r| r.verified).cloned().collect();
    let (fit, fit_error) = match fit_scaling(&fit_rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = ExperimentReport {
        spec: spec.clone(),
        rows,
        fit,
        fit_error,
        failed_runs,
    };

    if let Some(out) = &spec.output {
        write_outputs(&out.dir, &report, out.step_csv.then_some(&outcomes[..]))?;
    }
    Ok(report)
}

fn write_outputs(
    dir: &Path,
    report: &ExperimentReport,
    steps: Option<&[TrialOutcome]>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_sweep_csv(
        BufWriter::new(File::create(dir.join("sweep.csv"))?),
        &report.rows,
    )?;
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(dir.join("report.json"))?),
        report,
    )?;
    if let Some(outcomes) = steps {
        for o in outcomes {
            let name = format!("steps_n{}_trial{}.csv", o.row.n, o.row.trial);
            write_diagnostics_csv(
                BufWriter::new(File::create(dir.join(name))?),
                &o.diagnostics,
            )?;
        }
    }
    Ok(())
}
