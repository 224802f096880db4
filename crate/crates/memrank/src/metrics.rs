//! Tie-aware Spearman rank correlation and Pearson correlation.
//!
//! Spearman is computed as the Pearson correlation of fractional (average)
//! ranks, which handles ties correctly. The classic `1 - 6*sum(d^2)/(n(n^2-1))`
//! shortcut is only valid for tie-free data and lives in the test suite as an
//! independent oracle.

use crate::error::{Error, Result};

/// 1-based fractional ranks. Tied values all receive the arithmetic mean of
/// the rank positions they occupy.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot rank an empty vector"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("cannot rank non-finite value {v}")));
    }

    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // finiteness checked above, so total order exists
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // mean of 1-based positions i+1 ..= j+1
        let rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Sample Pearson correlation of two equal-length vectors.
///
/// A constant vector has no defined correlation and is rejected rather than
/// mapped to zero, so a degenerate run cannot silently enter a report table.
pub fn pearson(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let n = predicted.len() as f64;
    let mean_p = predicted.iter().sum::<f64>() / n;
    let mean_a = actual.iter().sum::<f64>() / n;

    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_a = 0.0;
    for (p, a) in predicted.iter().zip(actual) {
        let dp = p - mean_p;
        let da = a - mean_a;
        cov += dp * da;
        var_p += dp * dp;
        var_a += da * da;
    }
    if var_p == 0.0 || var_a == 0.0 {
        return Err(Error::invalid(
            "undefined correlation: input vector is constant",
        ));
    }
    Ok(cov / (var_p * var_a).sqrt())
}

/// Tie-aware Spearman rank correlation: Pearson over fractional ranks.
pub fn spearman(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair(predicted, actual)?;
    let ranks_p = average_ranks(predicted)?;
    let ranks_a = average_ranks(actual)?;
    pearson(&ranks_p, &ranks_a).map_err(|_| {
        Error::invalid("undefined correlation: rank vector is constant")
    })
}

fn check_pair(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predicted vs {} actual",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.len() < 2 {
        return Err(Error::invalid("correlation requires at least 2 points"));
    }
    if let Some(v) = predicted
        .iter()
        .chain(actual.iter())
        .find(|v| !v.is_finite())
    {
        return Err(Error::invalid(format!("non-finite value {v} in input")));
    }
    Ok(())
}
