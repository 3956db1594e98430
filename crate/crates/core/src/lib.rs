//! Hegselmann-Krause bounded-confidence opinion dynamics.
//!
//! Trajectories are run to freezing with confidence radius fixed to 1, and
//! each transition is checked against the energy and spectral inequalities
//! that bound the freezing time by `O(n^4)`:
//!
//! - the displacement bound `E(x_t) - E(x_{t+1}) >= 4 |x_{t+1} - x_t|^2`,
//! - the spectral bound `E(x_t) - E(x_{t+1}) >= (1 - lambda_t^2) E_active(x_t)`,
//! - the gap bound `lambda_t <= 1 - 1 / (n^2 diam(G_t))`,
//! - the path bound `E_active(x_t) >= floor(diam(G_t) / 2) / 2`.
//!
//! Two arithmetic back ends share one code path through [`Scalar`]: `f64`
//! for sweeps and [`BigRational`] for exact replays where freezing and
//! merging are literal equalities.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod graph;
pub mod scalar;
pub mod spectral;
pub mod state;
pub mod verify;

pub use dynamics::{
    build_graph, detect_merges, hk_step, simulate, FreezingTime, SimulateOptions, Trajectory,
    TrajectoryRecord,
};
pub use energy::{check_rmf_decrement, energy, EnergyReport, SlackRecord};
pub use error::{HkError, Result};
pub use graph::CommGraph;
pub use num_rational::BigRational;
pub use scalar::{ArithmeticMode, Scalar};
pub use spectral::{
    check_gap_bound, check_spectral_decrement, diameter, lambda_t, spectral_report,
    symmetrized_matrix, transition_matrix, SpectralReport,
};
pub use state::{ExactState, OpinionState, Opinions};
pub use verify::{
    rational_replay, verify_step, verify_trajectory, Check, StepDiagnostics, VerificationSummary,
    ViolationBundle,
};
