use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hk_lab::dynamics::{default_cap, simulate, SimulateOptions, Trajectory, TrajectoryRecord};
use hk_lab::experiments::{self, write_diagnostics_csv, ExperimentReport, ExperimentSpec};
use hk_lab::spectral::spectrum;
use hk_lab::{
    build_graph, generators, verify_trajectory, ArithmeticMode, BigRational, HkError, OpinionState,
    Scalar, VerificationSummary,
};

/// Hegselmann-Krause dynamics: simulate to freezing and certify every step
#[derive(Parser, Debug)]
#[command(name = "hklab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory with full diagnostics
    Simulate(SimulateArgs),
    /// Replay and check a serialized state or trajectory
    Verify(VerifyArgs),
    /// Run an experiment spec file
    Sweep(SweepArgs),
    /// Fit the freezing-time scaling law of a sweep report
    Fit {
        /// report.json written by `sweep`
        report: PathBuf,
    },
    /// Write a generated configuration as JSON
    Generate {
        #[command(flatten)]
        source: SourceArgs,
        /// output file (stdout when omitted)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Circle,
    Dumbbell,
    Line,
    Random,
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// configuration JSON ({"n", "d", "coords"})
    #[arg(long, conflicts_with = "family")]
    input: Option<PathBuf>,
    /// generate the configuration instead of reading it
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// agent count (circle, line, random)
    #[arg(long)]
    n: Option<usize>,
    /// adjacent chord of the circle, in (0, 1]
    #[arg(long)]
    chord: Option<f64>,
    /// circle radius (instead of --chord)
    #[arg(long)]
    radius: Option<f64>,
    /// dumbbell cluster size
    #[arg(long)]
    m: Option<usize>,
    /// dumbbell chain length
    #[arg(long)]
    k: Option<usize>,
    /// chain or line spacing, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// opinion dimension (random)
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// side of the sampling box (random)
    #[arg(long, default_value_t = 5.0)]
    box_side: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    fn load(&self) -> anyhow::Result<OpinionState> {
        if let Some(path) = &self.input {
            return read_state(path);
        }
        let need_n = || self.n.context("--n is required for this family");
        let x = match self.family.context("give --input or --family")? {
            FamilyArg::Circle => match (self.chord, self.radius) {
                (Some(c), None) => generators::circle_config_with_chord(need_n()?, c)?,
                (None, Some(r)) => generators::circle_config(need_n()?, r)?,
                _ => bail!("circle needs exactly one of --chord and --radius"),
            },
            FamilyArg::Dumbbell => generators::dumbbell_config(
                self.m.context("--m is required for a dumbbell")?,
                self.k.context("--k is required for a dumbbell")?,
                self.spacing,
            )?,
            FamilyArg::Line => generators::line_config(need_n()?, self.spacing)?,
            FamilyArg::Random => {
                generators::random_config(need_n()?, self.d, self.box_side, self.seed)?
            }
        };
        Ok(x)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// step cap (default 10 n^4)
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long, default_value = "float")]
    mode: ArithmeticMode,
    /// skip eigenvalue diagnostics
    #[arg(long)]
    no_spectral: bool,
    /// bit bound for exact runs
    #[arg(long, default_value_t = hk_lab::dynamics::DEFAULT_MAX_BITS)]
    max_bits: u64,
}

impl RunArgs {
    fn options(&self, keep_states: bool) -> SimulateOptions {
        SimulateOptions {
            cap: self.cap,
            spectral: !self.no_spectral,
            keep_states,
            max_bits: self.max_bits,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    /// per-step diagnostics CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// trajectory JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// include the full state history in the trajectory JSON
    #[arg(long)]
    history: bool,
    /// dump the spectrum of every communication graph to this JSON file
    #[arg(long)]
    spectra: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// state JSON or trajectory JSON
    file: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// experiment spec JSON
    spec: PathBuf,
    /// output directory (overrides the spec)
    #[arg(long)]
    out: Option<PathBuf>,
    /// skip eigenvalue diagnostics (overrides the spec)
    #[arg(long)]
    no_spectral: bool,
}

fn read_state(path: &Path) -> anyhow::Result<OpinionState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(OpinionState::from_json(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// A check failed: exit 1. Anything else propagates as an error (exit 2).
enum Outcome {
    Clean,
    Violation,
}

fn classify(err: HkError) -> anyhow::Result<Outcome> {
    match err {
        HkError::Violation(bundle) => {
            eprintln!(
                "verification failed: {} at step {}",
                bundle.check, bundle.step
            );
            print_json(&*bundle)?;
            Ok(Outcome::Violation)
        }
        HkError::Trajectory(msg) => {
            eprintln!("trajectory invariant broken: {msg}");
            Ok(Outcome::Violation)
        }
        other => Err(other.into()),
    }
}

struct Run {
    record: TrajectoryRecord,
    summary: hk_lab::Result<VerificationSummary>,
    spectra: Option<Vec<(u64, Vec<f64>)>>,
}

fn run_typed<S: Scalar>(
    x0: hk_lab::Opinions<S>,
    opts: &SimulateOptions,
    history: bool,
    spectra: bool,
) -> hk_lab::Result<Run> {
    let tr: Trajectory<S> = simulate(&x0, opts)?;
    let spectra = spectra.then(|| {
        tr.states
            .iter()
            .flatten()
            .enumerate()
            .map(|(t, x)| (t as u64, spectrum(&build_graph(x))))
            .collect()
    });
    Ok(Run {
        record: tr.to_record(history),
        summary: verify_trajectory(&tr),
        spectra,
    })
}

fn run_mode(x0: &OpinionState, run: &RunArgs, history: bool, spectra: bool) -> hk_lab::Result<Run> {
    let opts = run.options(history || spectra || run.mode == ArithmeticMode::Exact);
    match run.mode {
        ArithmeticMode::Float => run_typed(x0.clone(), &opts, history, spectra),
        ArithmeticMode::Exact => run_typed::<BigRational>(x0.to_exact(), &opts, history, spectra),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<Outcome> {
    let x0 = args.source.load()?;
    let Run {
        record,
        summary,
        spectra,
    } = run_mode(&x0, &args.run, args.history, args.spectra.is_some())?;
    if let Some(path) = &args.csv {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_diagnostics_csv(BufWriter::new(f), &record.diagnostics)?;
    }
    if let Some(path) = &args.json {
        write_json(path, &record)?;
    }
    if let (Some(path), Some(spectra)) = (&args.spectra, spectra) {
        let doc: Vec<_> = spectra
            .into_iter()
            .map(|(t, eig)| serde_json::json!({"t": t, "eigenvalues": eig}))
            .collect();
        write_json(path, &doc)?;
    }
    match summary {
        Ok(s) => {
            print_json(&s)?;
            Ok(Outcome::Clean)
        }
        Err(e) => classify(e),
    }
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("initial").is_none() {
        let x0: OpinionState = serde_json::from_value(value)?;
        let run = run_mode(&x0, &args.run, false, false)?;
        return match run.summary {
            Ok(s) => print_json(&s).map(|_| Outcome::Clean),
            Err(e) => classify(e),
        };
    }

    let recorded: TrajectoryRecord = serde_json::from_value(value)?;
    let replay_args = RunArgs {
        cap: Some(recorded.cap),
        mode: recorded.mode,
        no_spectral: args.run.no_spectral || !recorded.spectral,
        max_bits: args.run.max_bits,
    };
    let run = run_mode(&recorded.initial, &replay_args, false, false)?;
    let summary = match run.summary {
        Ok(s) => s,
        Err(e) => return classify(e),
    };
    if run.record.freezing_time != recorded.freezing_time
        || run.record.merge_times != recorded.merge_times
    {
        eprintln!(
            "replay disagrees with the recording: freezing {:?} vs {:?}, merges {:?} vs {:?}",
            run.record.freezing_time,
            recorded.freezing_time,
            run.record.merge_times,
            recorded.merge_times
        );
        return Ok(Outcome::Violation);
    }
    let drift = run.record.final_state.max_abs_diff(&recorded.final_state);
    if drift > 1e-9 {
        eprintln!("replayed final state differs from the recording by {drift:e}");
        return Ok(Outcome::Violation);
    }
    print_json(&summary)?;
    Ok(Outcome::Clean)
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if let Some(dir) = &args.out {
        let step_csv = spec.output.as_ref().is_some_and(|o| o.step_csv);
        spec.output = Some(experiments::OutputSpec {
            dir: dir.clone(),
            step_csv,
        });
    }
    if args.no_spectral {
        spec.spectral = false;
    }
    let report = experiments::run_experiment(&spec)?;
    let capped = report.rows.iter().filter(|r| r.capped).count();
    eprintln!(
        "{} runs, {} failed verification, {} hit the cap",
        report.rows.len(),
        report.failed_runs,
        capped
    );
    match (&report.fit, &report.fit_error) {
        (Some(fit), _) => eprintln!("slope {:.4} +/- {:.4}", fit.slope, fit.ci),
        (None, Some(why)) => eprintln!("no scaling fit: {why}"),
        _ => {}
    }
    if spec.output.is_none() {
        print_json(&report)?;
    }
    Ok(if report.all_verified() {
        Outcome::Clean
    } else {
        Outcome::Violation
    })
}

fn cmd_fit(path: &Path) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = ExperimentReport::from_json(&text)?;
    let rows: Vec<_> = report.rows.into_iter().filter(|r| r.verified).collect();
    let fit = experiments::fit_scaling(&rows)?;
    print_json(&fit)?;
    Ok(Outcome::Clean)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fit { report } => cmd_fit(report),
        Command::Generate { source, out } => source.load().and_then(|x| {
            match out {
                Some(path) => write_json(path, &x)?,
                None => print_json(&x)?,
            }
            eprintln!("n = {}, default cap {}", x.n(), default_cap(x.n()));
            Ok(Outcome::Clean)
        }),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
