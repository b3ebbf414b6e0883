//! Paired permutation test over per-fold metric values.

use rand::Rng;

use crate::error::{Error, Result};
use crate::thinning::RngStream;

/// Two-sided paired permutation test on the mean difference between
/// two matched samples (e.g. per-fold metric values with and without a
/// technique). Signs of the paired differences are flipped uniformly
/// at random; the p-value is the fraction of permutations whose
/// absolute mean difference reaches the observed one.
pub fn paired_permutation_test(
    a: &[f64],
    b: &[f64],
    num_permutations: usize,
    stream: RngStream,
) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Precondition(
            "paired test needs two equal-length non-empty samples".into(),
        ));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let observed = diffs.iter().sum::<f64>().abs() / diffs.len() as f64;
    let mut rng = stream.rng();
    let mut at_least = 0usize;
    for _ in 0..num_permutations {
        let mut sum = 0.0;
        for &d in &diffs {
            sum += if rng.gen::<bool>() { d } else { -d };
        }
        if (sum.abs() / diffs.len() as f64) >= observed - 1e-15 {
            at_least += 1;
        }
    }
    // Add-one smoothing keeps the p-value away from an exact zero.
    Ok((at_least + 1) as f64 / (num_permutations + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_difference_is_significant() {
        let a = vec![1.0, 1.1, 0.9, 1.05, 1.0, 0.95, 1.02, 0.98, 1.01, 1.03];
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        let p = paired_permutation_test(&a, &b, 2000, RngStream::new(1)).unwrap();
        assert!(p < 0.01, "p = {p}");
    }

    #[test]
    fn identical_samples_are_not_significant() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let p = paired_permutation_test(&a, &a, 2000, RngStream::new(2)).unwrap();
        assert!(p > 0.9, "p = {p}");
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(paired_permutation_test(&[1.0], &[1.0, 2.0], 10, RngStream::new(3)).is_err());
    }
}
