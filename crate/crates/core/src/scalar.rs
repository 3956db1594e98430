//! Arithmetic back ends.
//!
//! Everything that touches coordinates is generic over [`Scalar`]. The float
//! implementation judges "same opinion" and "unchanged" with small absolute
//! tolerances; the rational implementation uses literal equality.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::graph::CommGraph;
use crate::spectral::certify_rational_lambda;

/// Per-coordinate displacement below which a float step counts as frozen.
pub const DELTA_FREEZE: f64 = 1e-12;

/// Per-coordinate distance below which two float opinions count as merged.
pub const DELTA_MERGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Float,
    Exact,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithmeticMode::Float => f.write_str("float"),
            ArithmeticMode::Exact => f.write_str("exact"),
        }
    }
}

impl std::str::FromStr for ArithmeticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" => Ok(ArithmeticMode::Float),
            "exact" | "rational" => Ok(ArithmeticMode::Exact),
            other => Err(format!(
                "unknown arithmetic mode `{other}` (expected float or exact)"
            )),
        }
    }
}

pub trait Scalar: Num + Clone + PartialOrd + fmt::Debug + Send + Sync + 'static {
    const MODE: ArithmeticMode;

    fn from_count(n: usize) -> Self;

    fn to_f64(&self) -> f64;

    fn is_finite(&self) -> bool;

    /// Two opinions are the same point (merge equality).
    fn same_opinion(a: &[Self], b: &[Self]) -> bool;

    /// A coordinate block did not move (freeze criterion, displacement part).
    fn unchanged(a: &[Self], b: &[Self]) -> bool;

    /// Slack below `-tolerance` is a violation. `scale` is the energy of the
    /// state the check is about.
    fn check_tolerance(scale: &Self) -> Self;

    /// Size of the representation in bits; zero for fixed-width types.
    fn bit_size(&self) -> u64;

    /// Lossless text form, for types that are not already `f64`.
    fn exact_repr(&self) -> Option<String>;

    /// Exact value of the eigenvalue estimate `lambda` of `g`'s walk matrix,
    /// when this back end can certify one.
    fn certified_lambda(g: &CommGraph, lambda: f64) -> Option<Self>;
}

/// Relative tolerance for energy inequalities in float mode.
pub fn float_tolerance(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn from_count(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn same_opinion(a: &[Self], b: &[Self]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DELTA_MERGE)
    }

    fn unchanged(a: &[Self], b: &[Self]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DELTA_FREEZE)
    }

    fn check_tolerance(scale: &Self) -> Self {
        float_tolerance(*scale)
    }

    fn bit_size(&self) -> u64 {
        0
    }

    fn exact_repr(&self) -> Option<String> {
        None
    }

    fn certified_lambda(_g: &CommGraph, _lambda: f64) -> Option<Self> {
        None
    }
}

impl Scalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn from_count(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn same_opinion(a: &[Self], b: &[Self]) -> bool {
        a == b
    }

    fn unchanged(a: &[Self], b: &[Self]) -> bool {
        a == b
    }

    fn check_tolerance(_scale: &Self) -> Self {
        BigRational::zero()
    }

    fn bit_size(&self) -> u64 {
        self.numer().bits().max(self.denom().bits())
    }

    fn exact_repr(&self) -> Option<String> {
        Some(self.to_string())
    }

    fn certified_lambda(g: &CommGraph, lambda: f64) -> Option<Self> {
        certify_rational_lambda(g, lambda)
    }
}

/// Exact conversion of a finite float (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}
