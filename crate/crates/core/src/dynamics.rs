//! The HK update `x_{t+1}(i) = mean { x_t(j) : |x_t(i) - x_t(j)| <= 1 }`,
//! merge and freeze detection, and trajectories.
//!
//! Freeze criterion: in float mode step `T` is frozen when no coordinate moves
//! by more than [`DELTA_FREEZE`](crate::scalar::DELTA_FREEZE) and the
//! communication graph is unchanged; in exact mode it is literal equality
//! `x_{T+1} = x_T`. Neighbourhoods use `<=` with no tolerance band, so a float
//! configuration with pairs at distance exactly 1 after some arithmetic may
//! resolve ties differently from the exact dynamics. Run those in exact mode.

use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{HkError, Result};
use crate::graph::CommGraph;
use crate::scalar::{ArithmeticMode, Scalar};
use crate::state::{OpinionState, Opinions};
use crate::verify::{diagnose, StepDiagnostics};

/// Default bit bound for exact replays before aborting.
pub const DEFAULT_MAX_BITS: u64 = 1_000_000;

pub fn build_graph<S: Scalar>(x: &Opinions<S>) -> CommGraph {
    CommGraph::build(x)
}

/// HK update on a precomputed graph of `x`: `x_next = P x`.
pub fn step_on_graph<S: Scalar>(x: &Opinions<S>, g: &CommGraph) -> Opinions<S> {
    let d = x.d();
    let mut coords = Vec::with_capacity(x.n() * d);
    let mut acc = vec![S::zero(); d];
    for i in 0..x.n() {
        acc.iter_mut().for_each(|a| *a = S::zero());
        for &j in g.neighbors(i) {
            for (a, v) in acc.iter_mut().zip(x.row(j)) {
                *a = a.clone() + v.clone();
            }
        }
        let deg = S::from_count(g.degree(i));
        coords.extend(acc.iter().map(|a| a.clone() / deg.clone()));
    }
    Opinions::from_parts_unchecked(x.n(), d, coords)
}

pub fn hk_step<S: Scalar>(x: &Opinions<S>) -> Opinions<S> {
    step_on_graph(x, &build_graph(x))
}

/// Whether two agents with different opinions in `x` share one in `x_next`.
pub fn detect_merges<S: Scalar>(x: &Opinions<S>, x_next: &Opinions<S>) -> bool {
    let n = x.n();
    (0..n).any(|i| {
        (i + 1..n).any(|j| {
            S::same_opinion(x_next.row(i), x_next.row(j)) && !S::same_opinion(x.row(i), x.row(j))
        })
    })
}

pub fn default_cap(n: usize) -> u64 {
    (n as u64).saturating_pow(4).saturating_mul(10)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreezingTime {
    Frozen(u64),
    CapExceeded,
}

impl FreezingTime {
    pub fn time(self) -> Option<u64> {
        match self {
            FreezingTime::Frozen(t) => Some(t),
            FreezingTime::CapExceeded => None,
        }
    }
}

const CAP_MARKER: &str = "cap-exceeded";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FreezingRepr {
    Time(u64),
    Marker(String),
}

impl Serialize for FreezingTime {
    fn serialize<Ser: serde::Serializer>(
        &self,
        s: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            FreezingTime::Frozen(t) => FreezingRepr::Time(*t),
            FreezingTime::CapExceeded => FreezingRepr::Marker(CAP_MARKER.to_owned()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FreezingTime {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        match FreezingRepr::deserialize(d)? {
            FreezingRepr::Time(t) => Ok(FreezingTime::Frozen(t)),
            FreezingRepr::Marker(m) if m == CAP_MARKER => Ok(FreezingTime::CapExceeded),
            FreezingRepr::Marker(m) => Err(serde::de::Error::custom(format!(
                "freezing_time must be an integer or \"{CAP_MARKER}\", got \"{m}\""
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimulateOptions {
    /// Maximum number of steps; `None` means `10 n^4`.
    pub cap: Option<u64>,
    /// Compute eigenvalue diagnostics on every step.
    pub spectral: bool,
    /// Keep the full state history.
    pub keep_states: bool,
    /// Abort an exact run once a coordinate needs more bits than this.
    pub max_bits: u64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            cap: None,
            spectral: true,
            keep_states: true,
            max_bits: DEFAULT_MAX_BITS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub n: usize,
    pub d: usize,
    pub cap: u64,
    pub spectral: bool,
    pub initial: Opinions<S>,
    /// `x_0 ..= x_T` (or `x_0 ..= x_cap`), when kept.
    pub states: Option<Vec<Opinions<S>>>,
    pub final_state: Opinions<S>,
    /// `E(x_t)` for every state of the run.
    pub energy_trace: Vec<S>,
    /// One entry per computed transition `t -> t + 1`, including the one that
    /// confirmed the freeze.
    pub diagnostics: Vec<StepDiagnostics>,
    pub freezing_time: FreezingTime,
    pub merge_times: Vec<u64>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn mode(&self) -> ArithmeticMode {
        S::MODE
    }

    /// Number of states `x_0 ..` in the run.
    pub fn len(&self) -> usize {
        self.energy_trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy_trace.is_empty()
    }

    pub fn to_record(&self, include_states: bool) -> TrajectoryRecord {
        let exact: Option<Vec<String>> = self.energy_trace.iter().map(Scalar::exact_repr).collect();
        TrajectoryRecord {
            n: self.n,
            d: self.d,
            mode: S::MODE,
            cap: self.cap,
            spectral: self.spectral,
            freezing_time: self.freezing_time,
            merge_times: self.merge_times.clone(),
            initial: self.initial.to_f64(),
            final_state: self.final_state.to_f64(),
            states: include_states
                .then(|| {
                    self.states
                        .as_ref()
                        .map(|s| s.iter().map(Opinions::to_f64).collect())
                })
                .flatten(),
            energy_trace: self.energy_trace.iter().map(Scalar::to_f64).collect(),
            exact_energy_trace: exact,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Serialized trajectory. Exact runs store coordinates rounded to `f64` and
/// the energy trace additionally as exact fractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub d: usize,
    pub mode: ArithmeticMode,
    pub cap: u64,
    pub spectral: bool,
    pub freezing_time: FreezingTime,
    pub merge_times: Vec<u64>,
    pub initial: OpinionState,
    pub final_state: OpinionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<OpinionState>>,
    pub energy_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_energy_trace: Option<Vec<String>>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Runs the HK dynamics from `x0` until frozen or `cap` steps have passed.
/// Running into the cap is reported through [`FreezingTime::CapExceeded`],
/// not as an error.
pub fn simulate<S: Scalar>(x0: &Opinions<S>, opts: &SimulateOptions) -> Result<Trajectory<S>> {
    let cap = opts.cap.unwrap_or_else(|| default_cap(x0.n()));
    if cap == 0 {
        return Err(HkError::InvalidParameter("cap must be at least 1".into()));
    }
    if !x0.all_finite() {
        return Err(HkError::NonFinite { step: 0 });
    }
    check_bits(x0, 0, opts.max_bits)?;

    let mut x = x0.clone();
    let mut g = build_graph(&x);
    let mut e = energy(&x);
    let mut states = opts.keep_states.then(|| vec![x.clone()]);
    let mut energy_trace = vec![e.total.clone()];
    let mut diagnostics = Vec::new();
    let mut merge_times = Vec::new();
    let mut freezing_time = FreezingTime::CapExceeded;

    for t in 0..=cap {
        let next = step_on_graph(&x, &g);
        if !next.all_finite() {
            return Err(HkError::NonFinite { step: t + 1 });
        }
        check_bits(&next, t + 1, opts.max_bits)?;
        let g_next = build_graph(&next);
        let e_next = energy(&next);
        let merged = detect_merges(&x, &next);
        diagnostics.push(diagnose(
            t,
            &x,
            &g,
            &e,
            &next,
            &e_next,
            merged,
            opts.spectral,
        )?);
        if merged {
            merge_times.push(t);
        }
        if g_next == g && S::unchanged(x.coords(), next.coords()) {
            freezing_time = FreezingTime::Frozen(t);
            break;
        }
        if t == cap {
            break;
        }
        x = next;
        g = g_next;
        e = e_next;
        energy_trace.push(e.total.clone());
        if let Some(s) = states.as_mut() {
            s.push(x.clone());
        }
    }

    Ok(Trajectory {
        n: x0.n(),
        d: x0.d(),
        cap,
        spectral: opts.spectral,
        initial: x0.clone(),
        states,
        final_state: x,
        energy_trace,
        diagnostics,
        freezing_time,
        merge_times,
    })
}

fn check_bits<S: Scalar>(x: &Opinions<S>, step: u64, bound: u64) -> Result<()> {
    let bits = x.max_bits();
    if bits > bound {
        Err(HkError::DenominatorExplosion { step, bits, bound })
    } else {
        Ok(())
    }
}

/// Mode-dispatching wrapper for float input, as used by the CLI.
pub fn simulate_in_mode(
    x0: &OpinionState,
    mode: ArithmeticMode,
    opts: &SimulateOptions,
    include_states: bool,
) -> Result<TrajectoryRecord> {
    Ok(match mode {
        ArithmeticMode::Float => simulate(x0, opts)?.to_record(include_states),
        ArithmeticMode::Exact => simulate(&x0.to_exact(), opts)?.to_record(include_states),
    })
}
