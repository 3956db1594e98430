//! Truncated quadratic energy `E(x) = sum_{i,j} min(|x(i) - x(j)|^2, 1)` over
//! all ordered pairs, its active part (pairs within distance 1), and the
//! displacement bound on the per-step decrement.
//!
//! A pair at distance exactly 1 is active. It contributes 1 either way, so the
//! total does not depend on that tie.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::state::{sq_dist, Opinions};

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport<S> {
    pub total: S,
    pub active: S,
    /// Ordered pairs at distance greater than 1.
    pub inactive_pair_count: u64,
}

impl<S: Scalar> EnergyReport<S> {
    pub fn to_f64(&self) -> EnergyReport<f64> {
        EnergyReport {
            total: self.total.to_f64(),
            active: self.active.to_f64(),
            inactive_pair_count: self.inactive_pair_count,
        }
    }
}

/// Energy and active energy, computed from scratch in `O(n^2 d)`.
pub fn energy<S: Scalar>(x: &Opinions<S>) -> EnergyReport<S> {
    let one = S::one();
    let mut total = S::zero();
    let mut active = S::zero();
    let mut inactive = 0u64;
    for i in 0..x.n() {
        for j in i + 1..x.n() {
            let sq = x.sq_dist(i, j);
            if sq <= one {
                total = total + sq.clone();
                active = active + sq;
            } else {
                total = total + one.clone();
                inactive += 1;
            }
        }
    }
    let two = S::from_count(2);
    EnergyReport {
        total: total * two.clone(),
        active: active * two,
        inactive_pair_count: 2 * inactive,
    }
}

/// `|x_next - x|^2`, summed over agents and coordinates.
pub fn displacement_sq<S: Scalar>(x: &Opinions<S>, x_next: &Opinions<S>) -> S {
    assert_eq!((x.n(), x.d()), (x_next.n(), x_next.d()), "shape mismatch");
    x.rows()
        .zip(x_next.rows())
        .fold(S::zero(), |acc, (a, b)| acc + sq_dist(a, b))
}

/// One inequality `lhs >= rhs` evaluated once, with `slack = lhs - rhs`.
/// For the decrement checks `lhs` is the energy decrement and `rhs` the bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub violated: bool,
}

impl SlackRecord {
    pub fn holds(&self) -> bool {
        !self.violated
    }

    /// Float comparison; used where one side is inherently a float quantity.
    pub(crate) fn from_f64(lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = lhs - rhs;
        Self {
            lhs,
            rhs,
            slack,
            tol,
            violated: slack < -tol,
        }
    }
}

pub(crate) fn rmf_record<S: Scalar>(
    x: &Opinions<S>,
    x_next: &Opinions<S>,
    e: &EnergyReport<S>,
    e_next: &EnergyReport<S>,
) -> SlackRecord {
    let decrement = e.total.clone() - e_next.total.clone();
    let bound = S::from_count(4) * displacement_sq(x, x_next);
    let slack = decrement.clone() - bound.clone();
    let tol = S::check_tolerance(&e.total);
    let violated = slack < S::zero() - tol.clone();
    SlackRecord {
        lhs: decrement.to_f64(),
        rhs: bound.to_f64(),
        slack: slack.to_f64(),
        tol: tol.to_f64(),
        violated,
    }
}

/// Checks `E(x) - E(x_next) >= 4 |x_next - x|^2` for one HK transition.
pub fn check_rmf_decrement<S: Scalar>(x: &Opinions<S>, x_next: &Opinions<S>) -> SlackRecord {
    rmf_record(x, x_next, &energy(x), &energy(x_next))
}
