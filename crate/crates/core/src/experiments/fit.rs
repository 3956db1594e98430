//! Least-squares power-law fits on log-log data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExperimentRow;
use crate::error::{HkError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two standard errors of the slope.
    pub ci: f64,
    pub points: usize,
}

/// Ordinary least squares of `log y` on `log x`. Needs three or more distinct
/// positive `x` values and positive `y` values.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(HkError::Fit(
            "log-log fit needs finite positive values".into(),
        ));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(HkError::Fit(format!(
            "need at least 3 distinct n values, got {}",
            xs.len()
        )));
    }

    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        slope,
        intercept,
        ci: 2.0 * se,
        points: points.len(),
    })
}

/// Median freezing time per `n`, `None` where the median is cap-exceeded.
pub fn median_freezing_times(rows: &[ExperimentRow]) -> BTreeMap<usize, Option<f64>> {
    let mut by_n: BTreeMap<usize, Vec<Option<u64>>> = BTreeMap::new();
    for row in rows {
        by_n.entry(row.n).or_default().push(row.freezing_time);
    }
    by_n.into_iter()
        .map(|(n, mut times)| {
            // capped runs sort last
            times.sort_by_key(|t| t.map_or((1, 0), |v| (0, v)));
            let m = times.len();
            let median = if m % 2 == 1 {
                times[m / 2].map(|v| v as f64)
            } else {
                match (times[m / 2 - 1], times[m / 2]) {
                    (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
                    _ => None,
                }
            };
            (n, median)
        })
        .collect()
}

/// Fits `log median(T)` against `log n` over report rows.
pub fn fit_scaling(rows: &[ExperimentRow]) -> Result<ScalingFit> {
    let medians = median_freezing_times(rows);
    let mut points = Vec::with_capacity(medians.len());
    for (n, median) in medians {
        match median {
            Some(t) => points.push((n as f64, t)),
            None => {
                return Err(HkError::Fit(format!(
                    "median freezing time at n = {n} hit the cap"
                )))
            }
        }
    }
    fit_power_law(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, t: Option<u64>) -> ExperimentRow {
        ExperimentRow {
            n,
            freezing_time: t,
            capped: t.is_none(),
            ..ExperimentRow::default()
        }
    }

    #[test]
    fn exact_square_law() {
        let rows: Vec<_> = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| row(n, Some((n * n) as u64)))
            .collect();
        let fit = fit_scaling(&rows).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.ci < 1e-9);
    }

    #[test]
    fn exact_cubic_law_with_constant() {
        let rows: Vec<_> = [3usize, 5, 9, 17]
            .iter()
            .map(|&n| row(n, Some(7 * (n as u64).pow(3))))
            .collect();
        let fit = fit_scaling(&rows).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn medians_ignore_a_minority_of_capped_runs() {
        let rows = vec![row(10, Some(5)), row(10, None), row(10, Some(7))];
        assert_eq!(median_freezing_times(&rows)[&10], Some(7.0));
        let rows = vec![row(10, Some(5)), row(10, None)];
        assert_eq!(median_freezing_times(&rows)[&10], None);
        let rows = vec![row(10, Some(4)), row(10, Some(6))];
        assert_eq!(median_freezing_times(&rows)[&10], Some(5.0));
    }

    #[test]
    fn rejects_capped_medians_and_short_inputs() {
        let rows = vec![row(4, Some(16)), row(8, None), row(16, Some(256))];
        assert!(fit_scaling(&rows).is_err());
        let rows = vec![row(4, Some(16)), row(8, Some(64))];
        assert!(fit_scaling(&rows).is_err());
        assert!(fit_power_law(&[(1.0, 0.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn noisy_fit_has_nonzero_ci() {
        let pts = [(10.0, 95.0), (20.0, 420.0), (40.0, 1500.0), (80.0, 6600.0)];
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.2);
        assert!(fit.ci > 0.0);
    }
}
