//! Per-step certificates and trajectory-level verification.
//!
//! Each transition `x -> x_next` is checked against:
//!
//! | check                | inequality                                              |
//! |----------------------|---------------------------------------------------------|
//! | `EnergyMonotone`     | `E(x) - E(x_next) >= 0`                                 |
//! | `RmfDecrement`       | `E(x) - E(x_next) >= 4 |x_next - x|^2`                  |
//! | `SpectralDecrement`  | `E(x) - E(x_next) >= (1 - lambda^2) E_active(x)`        |
//! | `GapBound`           | `lambda <= 1 - 1/(n^2 diam)`                            |
//! | `PathBound`          | `E_active(x) >= floor(diam / 2) / 2`                    |
//! | `ComposedDecrement`  | `E(x) - E(x_next) >= E_active(x) / (n^2 diam)`, only on |
//! |                      | non-merging steps with `diam >= 2`                      |
//!
//! All energy checks use the tolerance `1e-9 max(1, E(x))` in float mode and
//! are exact in rational mode, except the two that involve `lambda`, which is
//! always a float. The gap check uses an absolute `1e-9`.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_graph, detect_merges, hk_step, simulate, FreezingTime, SimulateOptions, Trajectory,
};
use crate::energy::{displacement_sq, energy, rmf_record, EnergyReport};
use crate::error::{HkError, Result};
use crate::graph::CommGraph;
use crate::scalar::{ArithmeticMode, Scalar};
use crate::spectral::{self, spectral_record, GAP_TOL};
use crate::state::{OpinionState, Opinions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    EnergyMonotone,
    RmfDecrement,
    SpectralDecrement,
    GapBound,
    PathBound,
    ComposedDecrement,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::EnergyMonotone,
        Check::RmfDecrement,
        Check::SpectralDecrement,
        Check::GapBound,
        Check::PathBound,
        Check::ComposedDecrement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::EnergyMonotone => "energy-monotone",
            Check::RmfDecrement => "rmf-decrement",
            Check::SpectralDecrement => "spectral-decrement",
            Check::GapBound => "gap-bound",
            Check::PathBound => "path-bound",
            Check::ComposedDecrement => "composed-decrement",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything measured on one transition `t -> t + 1`.
///
/// Spectral fields are `None` when eigenvalue diagnostics are disabled; the
/// gap fields are also `None` when the graph has no edges besides self-loops;
/// the composed fields only exist on non-merging steps with diameter >= 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: u64,
    pub energy_total: f64,
    pub energy_active: f64,
    pub inactive_pairs: u64,
    pub lambda_t: Option<f64>,
    pub diameter: usize,
    pub components: usize,
    pub decrement: f64,
    pub displacement_sq: f64,
    pub rmf_bound: f64,
    pub spectral_bound: Option<f64>,
    pub gap_rhs: Option<f64>,
    pub path_bound: f64,
    pub composed_bound: Option<f64>,
    pub slack_rmf: f64,
    pub slack_spectral: Option<f64>,
    pub slack_gap: Option<f64>,
    pub slack_path: f64,
    pub slack_composed: Option<f64>,
    pub tol: f64,
    pub merged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Check>,
}

impl StepDiagnostics {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn slack(&self, check: Check) -> Option<f64> {
        match check {
            Check::EnergyMonotone => Some(self.decrement),
            Check::RmfDecrement => Some(self.slack_rmf),
            Check::SpectralDecrement => self.slack_spectral,
            Check::GapBound => self.slack_gap,
            Check::PathBound => Some(self.slack_path),
            Check::ComposedDecrement => self.slack_composed,
        }
    }

    pub fn tolerance(&self, check: Check) -> f64 {
        match check {
            Check::GapBound => GAP_TOL,
            _ => self.tol,
        }
    }
}

/// Computes all checks for one transition. Violations are recorded in the
/// result, not returned as errors; only an eigensolver failure is an error.
#[allow(clippy::too_many_arguments)]
pub(crate) fn diagnose<S: Scalar>(
    t: u64,
    x: &Opinions<S>,
    g: &CommGraph,
    e: &EnergyReport<S>,
    x_next: &Opinions<S>,
    e_next: &EnergyReport<S>,
    merged: bool,
    with_spectral: bool,
) -> Result<StepDiagnostics> {
    let n = x.n();
    let tol = S::check_tolerance(&e.total);
    let floor = S::zero() - tol.clone();
    let mut violations = Vec::new();

    let decrement = e.total.clone() - e_next.total.clone();
    if decrement < floor {
        violations.push(Check::EnergyMonotone);
    }

    let rmf = rmf_record(x, x_next, e, e_next);
    if rmf.violated {
        violations.push(Check::RmfDecrement);
    }

    let diameter = spectral::diameter(g);
    let path_bound = S::from_count(diameter / 2) / S::from_count(2);
    let slack_path = e.active.clone() - path_bound.clone();
    if slack_path < floor {
        violations.push(Check::PathBound);
    }

    let (composed_bound, slack_composed) = if !merged && diameter >= 2 {
        let bound = e.active.clone() / S::from_count(n * n * diameter);
        let slack = decrement.clone() - bound.clone();
        if slack < floor {
            violations.push(Check::ComposedDecrement);
        }
        (Some(bound.to_f64()), Some(slack.to_f64()))
    } else {
        (None, None)
    };

    let (mut lambda_t, mut spectral_bound, mut slack_spectral) = (None, None, None);
    let (mut gap_rhs, mut slack_gap) = (None, None);
    if with_spectral {
        let report = spectral::spectral_report(g)?;
        let rec = spectral_record(g, e, e_next, report.lambda_t);
        if rec.violated {
            violations.push(Check::SpectralDecrement);
        }
        let certified = S::certified_lambda(g, report.lambda_t);
        lambda_t = Some(certified.map_or(report.lambda_t, |l| l.to_f64()));
        spectral_bound = Some(rec.rhs);
        slack_spectral = Some(rec.slack);
        if let Some(gap) = spectral::check_gap_bound(g, &report) {
            if gap.violated {
                violations.push(Check::GapBound);
            }
            gap_rhs = Some(gap.lhs);
            slack_gap = Some(gap.slack);
        }
    }

    Ok(StepDiagnostics {
        t,
        energy_total: e.total.to_f64(),
        energy_active: e.active.to_f64(),
        inactive_pairs: e.inactive_pair_count,
        lambda_t,
        diameter,
        components: g.component_count(),
        decrement: decrement.to_f64(),
        displacement_sq: displacement_sq(x, x_next).to_f64(),
        rmf_bound: rmf.rhs,
        spectral_bound,
        gap_rhs,
        path_bound: path_bound.to_f64(),
        composed_bound,
        slack_rmf: rmf.slack,
        slack_spectral,
        slack_gap,
        slack_path: slack_path.to_f64(),
        slack_composed,
        tol: tol.to_f64(),
        merged,
        violations,
    })
}

/// Self-contained reproduction data for a failed check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationBundle {
    pub check: Check,
    pub step: u64,
    pub slack: f64,
    pub tol: f64,
    pub mode: ArithmeticMode,
    /// `x_t`, rounded to `f64` in exact mode.
    pub state: OpinionState,
    pub next_state: OpinionState,
    /// Neighbour lists of `G_t` without self-loops.
    pub graph: Vec<Vec<usize>>,
    pub diagnostics: StepDiagnostics,
}

impl ViolationBundle {
    fn new<S: Scalar>(diag: &StepDiagnostics, x: &Opinions<S>, x_next: &Opinions<S>) -> Self {
        let check = diag.violations[0];
        Self {
            check,
            step: diag.t,
            slack: diag.slack(check).unwrap_or(f64::NAN),
            tol: diag.tolerance(check),
            mode: S::MODE,
            state: x.to_f64(),
            next_state: x_next.to_f64(),
            graph: build_graph(x).edge_lists(),
            diagnostics: diag.clone(),
        }
    }
}

/// Checks one HK transition; any failed inequality becomes
/// [`HkError::Violation`]. The diagnostics report it as step 0.
pub fn verify_step<S: Scalar>(
    x: &Opinions<S>,
    x_next: &Opinions<S>,
    with_spectral: bool,
) -> Result<StepDiagnostics> {
    let g = build_graph(x);
    let merged = detect_merges(x, x_next);
    let diag = diagnose(
        0,
        x,
        &g,
        &energy(x),
        x_next,
        &energy(x_next),
        merged,
        with_spectral,
    )?;
    if diag.passed() {
        Ok(diag)
    } else {
        Err(HkError::Violation(Box::new(ViolationBundle::new(
            &diag, x, x_next,
        ))))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackStats {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
}

impl SlackStats {
    fn collect(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (count, min, sum) = values.fold((0usize, f64::INFINITY, 0.0), |(c, m, s), v| {
            (c + 1, m.min(v), s + v)
        });
        (count > 0).then(|| SlackStats {
            count,
            min,
            mean: sum / count as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub n: usize,
    pub d: usize,
    pub mode: ArithmeticMode,
    pub transitions: usize,
    pub freezing_time: FreezingTime,
    pub merge_count: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub rmf: Option<SlackStats>,
    pub spectral: Option<SlackStats>,
    pub gap: Option<SlackStats>,
    pub path: Option<SlackStats>,
    pub composed: Option<SlackStats>,
    /// Moving steps (the freeze-confirming step excluded) with decrement `< 1/n^2`.
    pub small_decrement_steps: usize,
    /// Length of the initial run of such steps.
    pub small_decrement_prefix: usize,
}

impl VerificationSummary {
    pub fn min_slack(&self, check: Check) -> Option<f64> {
        let stats = match check {
            Check::EnergyMonotone => return None,
            Check::RmfDecrement => self.rmf,
            Check::SpectralDecrement => self.spectral,
            Check::GapBound => self.gap,
            Check::PathBound => self.path,
            Check::ComposedDecrement => self.composed,
        };
        stats.map(|s| s.min)
    }
}

/// Verifies a whole trajectory: the merge-count bound, energy monotonicity,
/// merge irreversibility, the replayed state sequence, and every per-step
/// check. Missing state histories are regenerated from `initial`.
pub fn verify_trajectory<S: Scalar>(tr: &Trajectory<S>) -> Result<VerificationSummary> {
    let n = tr.n;
    if tr.merge_times.len() > n.saturating_sub(1) {
        return Err(HkError::Trajectory(format!(
            "{} merge times for {n} agents",
            tr.merge_times.len()
        )));
    }
    if tr.merge_times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HkError::Trajectory(
            "merge times not strictly increasing".into(),
        ));
    }
    if tr.diagnostics.len() != tr.len() {
        return Err(HkError::Trajectory(format!(
            "{} diagnostics for {} states",
            tr.diagnostics.len(),
            tr.len()
        )));
    }
    if let FreezingTime::Frozen(t) = tr.freezing_time {
        if tr.len() as u64 != t + 1 {
            return Err(HkError::Trajectory(format!(
                "freezing time {t} but {} states recorded",
                tr.len()
            )));
        }
    }

    for (t, w) in tr.energy_trace.windows(2).enumerate() {
        let tol = S::check_tolerance(&w[0]);
        if w[0].clone() - w[1].clone() < S::zero() - tol {
            return Err(HkError::Trajectory(format!(
                "energy increased at step {t}: {:?} -> {:?}",
                w[0], w[1]
            )));
        }
    }

    let replayed;
    let states: &[Opinions<S>] = match &tr.states {
        Some(s) => s,
        None => {
            replayed = replay_states(&tr.initial, tr.len());
            &replayed
        }
    };
    if states.len() != tr.len()
        || states[0] != tr.initial
        || states[states.len() - 1] != tr.final_state
    {
        return Err(HkError::Trajectory(
            "state history does not match the recorded run".into(),
        ));
    }

    for (t, w) in states.windows(2).enumerate() {
        if hk_step(&w[0]) != w[1] {
            return Err(HkError::Trajectory(format!(
                "state {} is not the HK update of state {t}",
                t + 1
            )));
        }
        if let Some((i, j)) = first_unmerge(&w[0], &w[1]) {
            return Err(HkError::Trajectory(format!(
                "agents {i} and {j} separated after merging (step {t})"
            )));
        }
    }

    for (t, diag) in tr.diagnostics.iter().enumerate() {
        if !diag.passed() {
            let x = &states[t];
            let next = hk_step(x);
            return Err(HkError::Violation(Box::new(ViolationBundle::new(
                diag, x, &next,
            ))));
        }
    }

    let moving = match tr.freezing_time {
        FreezingTime::Frozen(_) => &tr.diagnostics[..tr.diagnostics.len() - 1],
        FreezingTime::CapExceeded => &tr.diagnostics[..],
    };
    let small = 1.0 / (n * n) as f64;
    let diags = tr.diagnostics.iter();
    Ok(VerificationSummary {
        n,
        d: tr.d,
        mode: S::MODE,
        transitions: tr.diagnostics.len(),
        freezing_time: tr.freezing_time,
        merge_count: tr.merge_times.len(),
        energy_initial: tr.energy_trace[0].to_f64(),
        energy_final: tr.energy_trace[tr.len() - 1].to_f64(),
        rmf: SlackStats::collect(diags.clone().map(|d| d.slack_rmf)),
        spectral: SlackStats::collect(diags.clone().filter_map(|d| d.slack_spectral)),
        gap: SlackStats::collect(diags.clone().filter_map(|d| d.slack_gap)),
        path: SlackStats::collect(diags.clone().map(|d| d.slack_path)),
        composed: SlackStats::collect(diags.filter_map(|d| d.slack_composed)),
        small_decrement_steps: moving.iter().filter(|d| d.decrement < small).count(),
        small_decrement_prefix: moving.iter().take_while(|d| d.decrement < small).count(),
    })
}

fn replay_states<S: Scalar>(x0: &Opinions<S>, len: usize) -> Vec<Opinions<S>> {
    let mut out = Vec::with_capacity(len);
    out.push(x0.clone());
    while out.len() < len {
        let next = hk_step(&out[out.len() - 1]);
        out.push(next);
    }
    out
}

fn first_unmerge<S: Scalar>(x: &Opinions<S>, x_next: &Opinions<S>) -> Option<(usize, usize)> {
    let n = x.n();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| {
            S::same_opinion(x.row(i), x.row(j)) && !S::same_opinion(x_next.row(i), x_next.row(j))
        })
}

/// Largest agent count accepted by [`rational_replay`].
pub const REPLAY_MAX_AGENTS: usize = 25;
/// Largest step count accepted by [`rational_replay`].
pub const REPLAY_MAX_STEPS: u64 = 100;

/// Replays up to `steps` HK steps from `x0` in exact rational arithmetic.
/// Every finite double is a rational, so `x0` converts without loss.
pub fn rational_replay(
    x0: &OpinionState,
    steps: u64,
    max_bits: Option<u64>,
) -> Result<Trajectory<BigRational>> {
    if x0.n() > REPLAY_MAX_AGENTS {
        return Err(HkError::InvalidParameter(format!(
            "rational replay supports at most {REPLAY_MAX_AGENTS} agents, got {}",
            x0.n()
        )));
    }
    if steps == 0 || steps > REPLAY_MAX_STEPS {
        return Err(HkError::InvalidParameter(format!(
            "rational replay needs 1..={REPLAY_MAX_STEPS} steps, got {steps}"
        )));
    }
    let mut opts = SimulateOptions {
        cap: Some(steps),
        ..SimulateOptions::default()
    };
    if let Some(bits) = max_bits {
        opts.max_bits = bits;
    }
    simulate(&x0.to_exact(), &opts)
}

/// Largest per-coordinate gap between the float run and the exact replay
/// over the first `steps` states, holding each run at its final state after
/// it ends.
pub fn float_exact_divergence(
    float: &Trajectory<f64>,
    exact: &Trajectory<BigRational>,
    steps: usize,
) -> Option<f64> {
    let fs = float.states.as_ref()?;
    let es = exact.states.as_ref()?;
    let mut worst: f64 = 0.0;
    for t in 0..=steps {
        let a = &fs[t.min(fs.len() - 1)];
        let b = es[t.min(es.len() - 1)].to_f64();
        worst = worst.max(a.max_abs_diff(&b));
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::line_config;

    fn line(p: &[f64]) -> OpinionState {
        OpinionState::from_positions(p.to_vec()).unwrap()
    }

    #[test]
    fn three_point_step() {
        let d = verify_step(&line(&[0.0, 1.0, 2.0]), &line(&[0.5, 1.0, 1.5]), true).unwrap();
        assert_eq!(d.slack_rmf, 1.0);
        assert!(d.slack_spectral.unwrap().abs() < 1e-12);
        assert!((d.slack_gap.unwrap() - (17.0 / 18.0 - 0.5)).abs() < 1e-10);
        assert_eq!(d.slack_path, 3.5);
        assert_eq!(d.diameter, 2);
        // composed: 3 >= 4 / (9 * 2)
        assert!((d.slack_composed.unwrap() - (3.0 - 4.0 / 18.0)).abs() < 1e-15);
        assert!(!d.merged);
    }

    #[test]
    fn frozen_step() {
        let x = line(&[0.0, 0.0, 5.0]);
        let d = verify_step(&x, &x, true).unwrap();
        assert_eq!(d.decrement, 0.0);
        assert!(d.slack_rmf >= 0.0 && d.slack_path >= 0.0);
        assert!(d.slack_spectral.unwrap() >= -1e-12);
        assert!(d.slack_gap.unwrap() >= 0.0);
        assert!(d.slack_composed.is_none());
    }

    #[test]
    fn no_spectral_skips_eigen_fields() {
        let d = verify_step(&line(&[0.0, 1.0, 2.0]), &line(&[0.5, 1.0, 1.5]), false).unwrap();
        assert!(d.lambda_t.is_none() && d.slack_spectral.is_none() && d.slack_gap.is_none());
        assert_eq!(d.slack_rmf, 1.0);
    }

    #[test]
    fn violation_carries_reproduction_data() {
        let err = verify_step(&line(&[0.0, 0.5]), &line(&[0.0, 0.9]), true).unwrap_err();
        let HkError::Violation(bundle) = err else {
            panic!("expected a violation")
        };
        assert_eq!(bundle.check, Check::EnergyMonotone);
        assert!(bundle.diagnostics.violations.contains(&Check::RmfDecrement));
        assert_eq!(bundle.state.coords(), &[0.0, 0.5]);
        assert_eq!(bundle.graph, vec![vec![1], vec![0]]);
        let json = serde_json::to_value(&*bundle).unwrap();
        assert_eq!(json["check"], "energy-monotone");
    }

    #[test]
    fn trajectory_summary_for_three_points() {
        let tr = simulate(&line_config(3, 1.0).unwrap(), &SimulateOptions::default()).unwrap();
        let s = verify_trajectory(&tr).unwrap();
        assert_eq!(s.merge_count, 1);
        assert_eq!((s.energy_initial, s.energy_final), (6.0, 0.0));
        assert_eq!(s.freezing_time, FreezingTime::Frozen(2));
        assert_eq!(s.rmf.unwrap().count, 3);
    }

    #[test]
    fn singleton_summary_is_vacuous() {
        let tr = simulate(&line(&[1.0]), &SimulateOptions::default()).unwrap();
        let s = verify_trajectory(&tr).unwrap();
        assert_eq!(s.merge_count, 0);
        assert!(s.gap.is_none() && s.composed.is_none());
        assert_eq!(s.small_decrement_steps, 0);
    }

    #[test]
    fn replays_missing_history() {
        let x = crate::generators::random_config(15, 2, 3.0, 11).unwrap();
        let opts = SimulateOptions {
            keep_states: false,
            ..Default::default()
        };
        let tr = simulate(&x, &opts).unwrap();
        assert!(tr.states.is_none());
        verify_trajectory(&tr).unwrap();
    }

    #[test]
    fn detects_tampered_trajectories() {
        let mut tr = simulate(&line_config(3, 1.0).unwrap(), &SimulateOptions::default()).unwrap();
        tr.energy_trace[1] = 7.0;
        assert!(matches!(
            verify_trajectory(&tr),
            Err(HkError::Trajectory(_))
        ));

        let mut tr = simulate(&line_config(3, 1.0).unwrap(), &SimulateOptions::default()).unwrap();
        tr.merge_times = vec![0, 1, 2];
        assert!(verify_trajectory(&tr).is_err());

        let mut tr = simulate(&line_config(3, 1.0).unwrap(), &SimulateOptions::default()).unwrap();
        tr.states.as_mut().unwrap()[1] = line(&[0.5, 1.0, 1.6]);
        assert!(verify_trajectory(&tr).is_err());
    }

    #[test]
    fn rational_replay_three_points() {
        let tr = rational_replay(&line(&[0.0, 1.0, 2.0]), 5, None).unwrap();
        assert_eq!(tr.freezing_time, FreezingTime::Frozen(2));
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        let states = tr.states.as_ref().unwrap();
        assert_eq!(states[1].coords(), &[r(1, 2), r(1, 1), r(3, 2)]);
        assert_eq!(states[2].coords(), &[r(1, 1), r(1, 1), r(1, 1)]);
        assert_eq!(tr.energy_trace, vec![r(6, 1), r(3, 1), r(0, 1)]);
        verify_trajectory(&tr).unwrap();
    }

    #[test]
    fn rational_replay_limits() {
        let big = crate::generators::random_config(26, 1, 5.0, 0).unwrap();
        assert!(rational_replay(&big, 10, None).is_err());
        assert!(rational_replay(&line(&[0.0]), 0, None).is_err());
        assert!(rational_replay(&line(&[0.0]), 101, None).is_err());
        let err = rational_replay(&line_config(12, 0.5).unwrap(), 50, Some(8)).unwrap_err();
        assert!(matches!(err, HkError::DenominatorExplosion { .. }));
    }
}
