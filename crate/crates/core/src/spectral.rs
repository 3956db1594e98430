//! Random-walk matrix `P = D^-1 A` of the communication graph, its symmetric
//! similar matrix `B = D^-1/2 A D^-1/2`, the contraction factor `lambda_t`,
//! and graph diameters.
//!
//! `lambda_t` is the largest `|mu|` over eigenvalues `mu` of `P` other than the
//! unit eigenvalues. A graph with `c` components has `c` unit eigenvalues (one
//! per component) and all of them are removed. Eigenvalues always come from
//! `B`, which is symmetric, so its spectrum is real and a dense symmetric
//! solver applies.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dynamics::build_graph;
use crate::energy::{energy, EnergyReport, SlackRecord};
use crate::error::{HkError, Result};
use crate::graph::CommGraph;
use crate::scalar::{float_tolerance, Scalar};
use crate::state::Opinions;

/// How far the `c` largest eigenvalues may sit from 1.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

/// Absolute tolerance of the gap check (`lambda_t` is scale-free).
pub const GAP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda_t: f64,
    /// Largest diameter over connected components.
    pub diameter: usize,
    pub components: usize,
    /// `1 - 1/(n^2 diameter)`; `None` when every component is a single vertex.
    pub gap_bound: Option<f64>,
    /// Spectrum of `B`, ascending.
    pub eigenvalues: Vec<f64>,
}

/// `P[i][j] = A[i][j] / deg(i)`; rows sum to exactly 1 in rational mode.
pub fn transition_matrix<S: Scalar>(g: &CommGraph) -> DMatrix<S> {
    let n = g.n();
    DMatrix::from_fn(n, n, |i, j| {
        if g.adjacent(i, j) {
            S::one() / S::from_count(g.degree(i))
        } else {
            S::zero()
        }
    })
}

/// `B[i][j] = A[i][j] / sqrt(deg(i) deg(j))`, symmetric entry for entry.
pub fn symmetrized_matrix(g: &CommGraph) -> DMatrix<f64> {
    let n = g.n();
    let deg: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if g.adjacent(i, j) {
            1.0 / (deg[i] * deg[j]).sqrt()
        } else {
            0.0
        }
    })
}

/// Spectrum of `B` (equivalently of `P`), ascending.
pub fn spectrum(g: &CommGraph) -> Vec<f64> {
    let mut eig: Vec<f64> = SymmetricEigen::new(symmetrized_matrix(g))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Drops the `components` largest eigenvalues, which must all be unit
/// eigenvalues, and returns the largest magnitude of what is left.
pub fn lambda_from_spectrum(ascending: &[f64], components: usize) -> Result<f64> {
    if let Some(bad) = ascending
        .iter()
        .find(|mu| mu.abs() > 1.0 + UNIT_EIGENVALUE_TOL)
    {
        return Err(HkError::Solver(format!(
            "eigenvalue {bad} lies outside [-1, 1]"
        )));
    }
    if components == 0 || components > ascending.len() {
        return Err(HkError::Solver(format!(
            "{components} components for a spectrum of size {}",
            ascending.len()
        )));
    }
    let (rest, units) = ascending.split_at(ascending.len() - components);
    if let Some(bad) = units
        .iter()
        .find(|mu| (*mu - 1.0).abs() > UNIT_EIGENVALUE_TOL)
    {
        return Err(HkError::Solver(format!(
            "expected {components} unit eigenvalues, found {bad} among the largest"
        )));
    }
    if let Some(next) = rest.last() {
        if (next - 1.0).abs() <= UNIT_EIGENVALUE_TOL {
            return Err(HkError::Solver(format!(
                "more than {components} eigenvalues within {UNIT_EIGENVALUE_TOL:e} of 1"
            )));
        }
    }
    Ok(rest.iter().map(|mu| mu.abs()).fold(0.0, f64::max))
}

pub fn lambda_t(g: &CommGraph) -> Result<f64> {
    lambda_from_spectrum(&spectrum(g), g.component_count())
}

/// Largest eccentricity over all vertices, so the largest component diameter.
pub fn diameter(g: &CommGraph) -> usize {
    (0..g.n()).map(|v| g.eccentricity(v)).max().unwrap_or(0)
}

/// `1 - 1/(n^2 diameter)`, or `None` for diameter 0.
pub fn gap_rhs(n: usize, diameter: usize) -> Option<f64> {
    (diameter > 0).then(|| 1.0 - 1.0 / ((n * n) as f64 * diameter as f64))
}

pub fn spectral_report(g: &CommGraph) -> Result<SpectralReport> {
    let eigenvalues = spectrum(g);
    let lambda_t = lambda_from_spectrum(&eigenvalues, g.component_count())?;
    let diameter = diameter(g);
    Ok(SpectralReport {
        lambda_t,
        diameter,
        components: g.component_count(),
        gap_bound: gap_rhs(g.n(), diameter),
        eigenvalues,
    })
}

/// Largest denominator tried when snapping `lambda_t` to a rational.
pub const CERTIFY_MAX_DENOMINATOR: i64 = 1_000_000;

/// Largest graph on which rational eigenvalues are certified.
pub const CERTIFY_MAX_VERTICES: usize = 25;

/// Snaps a float `lambda_t` to a nearby rational `p/q` (`q` up to
/// [`CERTIFY_MAX_DENOMINATOR`], within `1e-12`) and returns it if `p/q` or
/// `-p/q` is exactly an eigenvalue of `P`, i.e. `det(q A - p D) = 0` or
/// `det(q A + p D) = 0`. `None` when no such rational exists.
pub fn certify_rational_lambda(g: &CommGraph, lambda: f64) -> Option<BigRational> {
    if g.n() > CERTIFY_MAX_VERTICES || !(0.0..1.0).contains(&lambda) {
        return None;
    }
    let (p, q) = best_rational(lambda, CERTIFY_MAX_DENOMINATOR, 1e-12)?;
    let root_of = |sign: i64| {
        let n = g.n();
        let m: Vec<BigInt> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let a = i64::from(g.adjacent(i, j));
                let d = if i == j { g.degree(i) as i64 } else { 0 };
                BigInt::from(q * a - sign * p * d)
            })
            .collect();
        bareiss_det(n, m).is_zero()
    };
    (root_of(1) || root_of(-1)).then(|| BigRational::new(p.into(), q.into()))
}

/// Continued-fraction convergent of `x >= 0` within `tol`, denominator `<= max_q`.
fn best_rational(x: f64, max_q: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_q {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Fraction-free Gaussian elimination; exact determinant of an integer matrix.
fn bareiss_det(n: usize, mut m: Vec<BigInt>) -> BigInt {
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        if m[k * n + k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !m[r * n + k].is_zero()) else {
                return BigInt::zero();
            };
            for c in 0..n {
                m.swap(k * n + c, r * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                m[i * n + j] = v / &prev;
            }
        }
        prev = m[k * n + k].clone();
    }
    let det = m[n * n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

pub(crate) fn spectral_record<S: Scalar>(
    g: &CommGraph,
    e: &EnergyReport<S>,
    e_next: &EnergyReport<S>,
    lambda: f64,
) -> SlackRecord {
    if let Some(exact) = S::certified_lambda(g, lambda) {
        let decrement = e.total.clone() - e_next.total.clone();
        let bound = (S::one() - exact.clone() * exact) * e.active.clone();
        let slack = decrement.clone() - bound.clone();
        let tol = S::check_tolerance(&e.total);
        let violated = slack < S::zero() - tol.clone();
        return SlackRecord {
            lhs: decrement.to_f64(),
            rhs: bound.to_f64(),
            slack: slack.to_f64(),
            tol: tol.to_f64(),
            violated,
        };
    }
    let decrement = (e.total.clone() - e_next.total.clone()).to_f64();
    let bound = (1.0 - lambda * lambda) * e.active.to_f64();
    SlackRecord::from_f64(decrement, bound, float_tolerance(e.total.to_f64()))
}

/// Checks `E(x) - E(x_next) >= (1 - lambda_t^2) E_active(x)` for one transition,
/// with `report` computed on the graph of `x`. In exact mode a rational
/// `lambda_t` is certified first and the check is then exact.
pub fn check_spectral_decrement<S: Scalar>(
    x: &Opinions<S>,
    x_next: &Opinions<S>,
    report: &SpectralReport,
) -> SlackRecord {
    spectral_record(
        &build_graph(x),
        &energy(x),
        &energy(x_next),
        report.lambda_t,
    )
}

/// Checks `lambda_t <= 1 - 1/(n^2 diam)`. Skipped (`None`) when the graph has
/// no edges besides self-loops.
pub fn check_gap_bound(g: &CommGraph, report: &SpectralReport) -> Option<SlackRecord> {
    gap_rhs(g.n(), report.diameter).map(|rhs| SlackRecord::from_f64(rhs, report.lambda_t, GAP_TOL))
}
