//! Cascading-error diagnostics: do early prediction mistakes propagate
//! into the rest of the predicted sequence?

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::seq::EventSequence;

/// Sequences grouped by the position of their first type error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeGroup {
    /// 0-based token index of the first type-prediction error.
    pub first_error_index: usize,
    pub num_sequences: usize,
    /// Type error rate on tokens after the first error.
    pub subsequent_error_rate: f64,
}

/// Least-squares fit of subsequent time error against first-token
/// time error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided t-test p-value on the slope.
    pub p_value: f64,
    pub num_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeReport {
    pub groups: Vec<CascadeGroup>,
    pub regression: Option<RegressionFit>,
    /// Set when no type errors occurred or the regression had no
    /// usable variation.
    pub degenerate: bool,
}

/// Position-aligned cascading-error analysis over `(truth, pred)`
/// pairs. Tokens are compared index-by-index after truncating to the
/// shorter sequence.
///
/// Fails with an insufficient-data error when fewer than 3 pairs are
/// available for the regression.
pub fn cascading_analysis(pairs: &[(EventSequence, EventSequence)]) -> Result<CascadeReport> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "cascading analysis needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }

    // Group by index of the first type error.
    let mut by_first_error: std::collections::BTreeMap<usize, (usize, usize, usize)> =
        std::collections::BTreeMap::new();
    for (truth, pred) in pairs {
        let n = truth.len().min(pred.len());
        let mut first_err = None;
        for i in 0..n {
            if truth.events()[i].type_id != pred.events()[i].type_id {
                first_err = Some(i);
                break;
            }
        }
        if let Some(fe) = first_err {
            let entry = by_first_error.entry(fe).or_insert((0, 0, 0));
            entry.0 += 1;
            for i in fe + 1..n {
                entry.2 += 1;
                if truth.events()[i].type_id != pred.events()[i].type_id {
                    entry.1 += 1;
                }
            }
        }
    }
    let groups = by_first_error
        .into_iter()
        .map(|(idx, (count, errs, total))| CascadeGroup {
            first_error_index: idx,
            num_sequences: count,
            subsequent_error_rate: if total > 0 {
                errs as f64 / total as f64
            } else {
                0.0
            },
        })
        .collect::<Vec<_>>();

    // Regression: x = |Δt| on the first token, y = mean |Δt| afterwards.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (truth, pred) in pairs {
        let n = truth.len().min(pred.len());
        if n < 2 {
            continue;
        }
        let x = (truth.events()[0].time - pred.events()[0].time).abs();
        let mut acc = 0.0;
        for i in 1..n {
            acc += (truth.events()[i].time - pred.events()[i].time).abs();
        }
        xs.push(x);
        ys.push(acc / (n - 1) as f64);
    }

    let regression = fit_line(&xs, &ys);
    let degenerate = groups.is_empty() || regression.is_none();
    Ok(CascadeReport {
        groups,
        regression,
        degenerate,
    })
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Option<RegressionFit> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-15 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let df = nf - 2.0;
    let sigma2 = rss / df;
    let se = (sigma2 / sxx).sqrt();
    let p_value = if se == 0.0 {
        0.0
    } else {
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, df).ok()?;
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Some(RegressionFit {
        slope,
        intercept,
        p_value,
        num_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::Event;
    use rand::Rng;

    fn seq(times_types: &[(f64, usize)], t_hi: f64) -> EventSequence {
        EventSequence::new(
            times_types.iter().map(|&(t, k)| Event::new(t, k)).collect(),
            0.0,
            t_hi,
        )
        .unwrap()
    }

    #[test]
    fn too_few_pairs_is_an_error() {
        let a = seq(&[(0.1, 0)], 1.0);
        let pairs = vec![(a.clone(), a)];
        assert!(matches!(
            cascading_analysis(&pairs),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn perfect_predictions_are_degenerate() {
        let a = seq(&[(0.1, 0), (0.5, 1)], 1.0);
        let pairs = vec![(a.clone(), a.clone()), (a.clone(), a.clone()), (a.clone(), a)];
        let report = cascading_analysis(&pairs).unwrap();
        assert!(report.groups.is_empty());
        assert!(report.degenerate);
    }

    #[test]
    fn groups_count_subsequent_errors() {
        // First error at index 0; one of two subsequent tokens is wrong.
        let truth = seq(&[(0.1, 0), (0.2, 1), (0.3, 0)], 1.0);
        let pred = seq(&[(0.1, 1), (0.2, 1), (0.3, 1)], 1.0);
        let ok = seq(&[(0.1, 0), (0.2, 1), (0.3, 0)], 1.0);
        let pairs = vec![
            (truth, pred),
            (ok.clone(), ok.clone()),
            (ok.clone(), ok),
        ];
        let report = cascading_analysis(&pairs).unwrap();
        assert_eq!(report.groups.len(), 1);
        assert_eq!(report.groups[0].first_error_index, 0);
        assert_eq!(report.groups[0].num_sequences, 1);
        assert!((report.groups[0].subsequent_error_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn planted_regression_is_recovered() {
        // y = 0.8x + 0.3 + noise(sigma = 0.01)
        let mut rng = crate::thinning::RngStream::new(77).rng();
        let mut pairs = Vec::new();
        for _ in 0..200 {
            let x: f64 = rng.gen_range(0.05..1.0);
            let noise: f64 = rng.gen_range(-0.017..0.017); // ~U with sd ≈ 0.01
            let y = 0.8 * x + 0.3 + noise;
            // Two-token sequences realizing |Δt| errors x (first) and y (rest).
            let truth = seq(&[(1.0, 0), (3.0, 0)], 10.0);
            let pred = seq(&[(1.0 + x, 0), (3.0 + y, 0)], 10.0);
            pairs.push((truth, pred));
        }
        let report = cascading_analysis(&pairs).unwrap();
        let fit = report.regression.expect("regression should fit");
        assert!((fit.slope - 0.8).abs() < 0.02, "slope {}", fit.slope);
        assert!(fit.p_value < 0.01);
    }
}
