//! Opinion configurations: `n` agents, each with a `d`-dimensional opinion.
//!
//! Coordinates are in units of the confidence radius, which is always 1.

use num_rational::BigRational;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HkError, Result};
use crate::scalar::{rational_from_f64, Scalar};

/// Row-major `n x d` opinion matrix; agent `i` is row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Opinions<S> {
    n: usize,
    d: usize,
    coords: Vec<S>,
}

pub type OpinionState = Opinions<f64>;
pub type ExactState = Opinions<BigRational>;

impl<S: Scalar> Opinions<S> {
    pub fn new(n: usize, d: usize, coords: Vec<S>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(HkError::InvalidState(format!(
                "need at least one agent and one dimension, got n={n}, d={d}"
            )));
        }
        if coords.len() != n * d {
            return Err(HkError::InvalidState(format!(
                "expected {} coordinates for n={n}, d={d}, got {}",
                n * d,
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(HkError::InvalidState(format!(
                "agent {} has a non-finite coordinate",
                pos / d
            )));
        }
        Ok(Self { n, d, coords })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(HkError::InvalidState(format!(
                "agent {i} has {} coordinates, agent 0 has {d}",
                rows[i].len()
            )));
        }
        Self::new(n, d, rows.into_iter().flatten().collect())
    }

    /// One-dimensional configuration from a list of positions.
    pub fn from_positions(positions: Vec<S>) -> Result<Self> {
        Self::new(positions.len(), 1, positions)
    }

    pub(crate) fn from_parts_unchecked(n: usize, d: usize, coords: Vec<S>) -> Self {
        debug_assert_eq!(coords.len(), n * d);
        Self { n, d, coords }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> S {
        sq_dist(self.row(i), self.row(j))
    }

    pub fn all_finite(&self) -> bool {
        self.coords.iter().all(Scalar::is_finite)
    }

    /// Largest bit size over all coordinates (0 in float mode).
    pub fn max_bits(&self) -> u64 {
        self.coords.iter().map(Scalar::bit_size).max().unwrap_or(0)
    }

    pub fn to_f64(&self) -> OpinionState {
        Opinions {
            n: self.n,
            d: self.d,
            coords: self.coords.iter().map(Scalar::to_f64).collect(),
        }
    }
}

pub(crate) fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| {
        let diff = x.clone() - y.clone();
        acc + diff.clone() * diff
    })
}

impl OpinionState {
    /// Exact rational copy; every finite double is representable.
    pub fn to_exact(&self) -> ExactState {
        Opinions {
            n: self.n,
            d: self.d,
            coords: self
                .coords
                .iter()
                .map(|&c| rational_from_f64(c).expect("coordinates are finite by construction"))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Max per-coordinate absolute difference to another state of the same shape.
    pub fn max_abs_diff(&self, other: &OpinionState) -> f64 {
        assert_eq!((self.n, self.d), (other.n, other.d), "shape mismatch");
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    n: usize,
    d: usize,
    coords: Vec<Vec<f64>>,
}

impl Serialize for Opinions<f64> {
    fn serialize<Ser: Serializer>(
        &self,
        serializer: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        StateDoc {
            n: self.n,
            d: self.d,
            coords: self.rows().map(<[f64]>::to_vec).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Opinions<f64> {
    fn deserialize<De: Deserializer<'de>>(
        deserializer: De,
    ) -> std::result::Result<Self, De::Error> {
        let doc = StateDoc::deserialize(deserializer)?;
        if doc.coords.len() != doc.n {
            return Err(De::Error::custom(format!(
                "n = {} but {} coordinate rows given",
                doc.n,
                doc.coords.len()
            )));
        }
        if let Some(row) = doc.coords.iter().find(|r| r.len() != doc.d) {
            return Err(De::Error::custom(format!(
                "d = {} but a row has {} coordinates",
                doc.d,
                row.len()
            )));
        }
        Opinions::new(doc.n, doc.d, doc.coords.into_iter().flatten().collect())
            .map_err(De::Error::custom)
    }
}
