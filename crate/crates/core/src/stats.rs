//! Order statistics used by the strategy-comparison reports.

use crate::error::{Error, Result};

/// Sample median; the mean of the two central order statistics for even
/// lengths. Returns `None` for an empty slice.
pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Median absolute deviation about the median (no consistency scaling).
/// Returns `None` for an empty slice.
pub fn median_absolute_deviation(samples: &[f64]) -> Option<f64> {
    let m = median(samples)?;
    let deviations: Vec<f64> = samples.iter().map(|x| (x - m).abs()).collect();
    median(&deviations)
}

/// Right-continuous empirical distribution function evaluated at `x`:
/// the fraction of samples less than or equal to `x`.
pub fn edf(samples: &[f64], x: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let count = samples.iter().filter(|&&u| u <= x).count();
    count as f64 / samples.len() as f64
}

/// Empirical distribution function as a step curve: the distinct sample
/// values in increasing order, each paired with the fraction of samples
/// less than or equal to it. The last cumulative fraction is exactly one.
pub fn ecdf_points(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput {
            context: "empirical distribution function",
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut points = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        // Keep only the last occurrence of each value so the curve is a
        // function of the value.
        if i + 1 == n || sorted[i + 1] != v {
            points.push((v, (i + 1) as f64 / n as f64));
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn mad_of_symmetric_sample() {
        // Median 3, absolute deviations {2, 1, 0, 1, 2} -> median 1.
        assert_eq!(
            median_absolute_deviation(&[1.0, 2.0, 3.0, 4.0, 5.0]),
            Some(1.0)
        );
        // Constant sample has zero dispersion.
        assert_eq!(median_absolute_deviation(&[7.0, 7.0, 7.0]), Some(0.0));
    }

    #[test]
    fn edf_is_right_continuous_fraction() {
        let s = [1.0, 2.0, 2.0, 4.0];
        assert_eq!(edf(&s, 0.5), 0.0);
        assert_eq!(edf(&s, 2.0), 0.75);
        assert_eq!(edf(&s, 4.0), 1.0);
    }

    #[test]
    fn ecdf_curve_dedupes_and_reaches_one() {
        let s = [2.0, 1.0, 2.0, 4.0];
        let points = ecdf_points(&s).unwrap();
        assert_eq!(points, vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]);
        // Curve agrees with the pointwise evaluation at every knot.
        for &(v, p) in &points {
            assert_eq!(edf(&s, v), p);
        }
        assert!(ecdf_points(&[]).is_err());
    }
}
