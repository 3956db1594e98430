//! Initial configurations.
//!
//! `circle_config` and `dumbbell_config` are the two families known to need
//! order `n^2` steps to freeze; `line_config` and `random_config` are test
//! families.
//!
//! The dumbbell is two co-located clusters of `m` agents joined by a chain of
//! `k` single agents. Its exact shape in the lower-bound construction it is
//! named after is not pinned down here; all three block sizes and the chain
//! spacing are free parameters.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HkError, Result};
use crate::state::OpinionState;

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing > 0.0 && spacing <= 1.0 {
        Ok(())
    } else {
        Err(HkError::InvalidParameter(format!(
            "spacing must lie in (0, 1], got {spacing}"
        )))
    }
}

/// `n` agents equally spaced on a circle of the given radius in the plane.
pub fn circle_config(n: usize, radius: f64) -> Result<OpinionState> {
    if n < 3 {
        return Err(HkError::InvalidParameter(format!(
            "circle needs n >= 3, got {n}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(HkError::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let coords = (0..n)
        .flat_map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64;
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect();
    OpinionState::new(n, 2, coords)
}

/// Radius at which adjacent agents of an `n`-gon sit `chord` apart.
pub fn radius_for_chord(n: usize, chord: f64) -> f64 {
    chord / (2.0 * (PI / n as f64).sin())
}

/// Circle whose adjacent chord is `chord` in `(0, 1]`; freezing behaviour
/// depends only on this ratio to the confidence radius.
pub fn circle_config_with_chord(n: usize, chord: f64) -> Result<OpinionState> {
    if !(chord > 0.0 && chord <= 1.0) {
        return Err(HkError::InvalidParameter(format!(
            "chord must lie in (0, 1], got {chord}"
        )));
    }
    circle_config(n, radius_for_chord(n, chord))
}

/// One-dimensional dumbbell: `m` agents at 0, `k` agents at
/// `spacing, 2 spacing, .., k spacing`, and `m` agents at `(k + 1) spacing`.
pub fn dumbbell_config(m: usize, k: usize, spacing: f64) -> Result<OpinionState> {
    if m == 0 || k == 0 {
        return Err(HkError::InvalidParameter(format!(
            "dumbbell needs m >= 1 and k >= 1, got m={m}, k={k}"
        )));
    }
    check_spacing(spacing)?;
    let right = (k + 1) as f64 * spacing;
    let positions = std::iter::repeat_n(0.0, m)
        .chain((1..=k).map(|i| i as f64 * spacing))
        .chain(std::iter::repeat_n(right, m))
        .collect();
    OpinionState::from_positions(positions)
}

/// Positions `0, spacing, .., (n - 1) spacing` on the line.
pub fn line_config(n: usize, spacing: f64) -> Result<OpinionState> {
    if n == 0 {
        return Err(HkError::InvalidParameter("line needs n >= 1".into()));
    }
    check_spacing(spacing)?;
    OpinionState::from_positions((0..n).map(|i| i as f64 * spacing).collect())
}

/// `n` i.i.d. uniform points in `[0, box_side]^d`, reproducible from `seed`.
pub fn random_config(n: usize, d: usize, box_side: f64, seed: u64) -> Result<OpinionState> {
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(HkError::InvalidParameter(format!(
            "box side must be positive, got {box_side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>() * box_side).collect();
    OpinionState::new(n, d, coords)
}

/// Like [`random_config`] but every coordinate is a multiple of `1/denominator`,
/// so the exact replay starts from small rationals.
pub fn random_grid_config(
    n: usize,
    d: usize,
    box_side: f64,
    denominator: u32,
    seed: u64,
) -> Result<OpinionState> {
    if denominator == 0 {
        return Err(HkError::InvalidParameter(
            "denominator must be positive".into(),
        ));
    }
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(HkError::InvalidParameter(format!(
            "box side must be positive, got {box_side}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (box_side * denominator as f64).floor() as u64;
    let coords = (0..n * d)
        .map(|_| rng.random_range(0..=steps) as f64 / denominator as f64)
        .collect();
    OpinionState::new(n, d, coords)
}
