use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::Dataset;

use super::{
    log_likelihood, sigmoid, softplus, softplus_inv, Adam, AnyModel, HawkesExpModel,
    IntensityModel, ModelFamily, OptimizerConfig, PoissonModel,
};

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEpoch {
    pub epoch: usize,
    /// Mean per-sequence train log-likelihood.
    pub train_ll: f64,
    /// Mean per-sequence held-out log-likelihood.
    pub dev_ll: f64,
}

pub struct FitResult {
    pub model: AnyModel,
    pub log: Vec<FitEpoch>,
}

/// Maximum-likelihood fit of the chosen family.
///
/// Poisson admits a closed form; Hawkes is trained with Adam on
/// softplus-reparameterized parameters, with early stopping on the
/// held-out log-likelihood (every 10th sequence is held out).
pub fn fit_mle(family: ModelFamily, data: &Dataset, opt: &OptimizerConfig) -> Result<FitResult> {
    if data.sequences.is_empty() {
        return Err(Error::Precondition("fit_mle needs a non-empty dataset".into()));
    }
    match family {
        ModelFamily::Poisson => fit_poisson(data),
        ModelFamily::HawkesExp => fit_hawkes(data, opt),
    }
}

fn fit_poisson(data: &Dataset) -> Result<FitResult> {
    let total_time = data.total_time();
    if total_time <= 0.0 {
        return Err(Error::Precondition("dataset has zero total observation time".into()));
    }
    let mut counts = vec![0usize; data.num_types];
    for seq in &data.sequences {
        for (k, &n) in seq.type_counts(data.num_types).iter().enumerate() {
            counts[k] += n;
        }
    }
    let rates: Vec<f64> = counts.iter().map(|&n| n as f64 / total_time).collect();
    let model = PoissonModel::new(rates)?;
    let mean_ll = data
        .sequences
        .iter()
        .map(|s| log_likelihood(&model, s))
        .sum::<f64>()
        / data.sequences.len() as f64;
    Ok(FitResult {
        model: AnyModel::Poisson(model),
        log: vec![FitEpoch {
            epoch: 0,
            train_ll: mean_ll,
            dev_ll: mean_ll,
        }],
    })
}

fn fit_hawkes(data: &Dataset, opt: &OptimizerConfig) -> Result<FitResult> {
    let k = data.num_types;
    let (train_idx, dev_idx) = holdout_split(data.sequences.len());

    // Start from half the empirical Poisson rate plus mild excitation.
    let total_time = data.total_time().max(1e-9);
    let mut counts = vec![0usize; k];
    for seq in &data.sequences {
        for (t, &n) in seq.type_counts(k).iter().enumerate() {
            counts[t] += n;
        }
    }
    let mut raw: Vec<f64> = Vec::with_capacity(HawkesExpModel::param_count(k));
    for &n in &counts {
        raw.push(softplus_inv((0.5 * n as f64 / total_time).max(1e-3)));
    }
    raw.extend(std::iter::repeat(softplus_inv(0.1)).take(k * k));
    raw.extend(std::iter::repeat(softplus_inv(1.0)).take(k * k));

    let mut adam = Adam::new(raw.len(), opt);
    let mut best_raw = raw.clone();
    let mut best_dev = f64::NEG_INFINITY;
    let mut since_best = 0usize;
    let mut log = Vec::new();

    for epoch in 0..opt.max_epochs {
        let mut train_ll_sum = 0.0;
        for batch in train_idx.chunks(opt.batch_size.max(1)) {
            let model = hawkes_from_raw(k, &raw)?;
            let results: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| model.log_likelihood_grad(&data.sequences[i]))
                .collect();
            let dim = raw.len();
            let mut grad = vec![0.0; dim];
            for (bi, (ll, g)) in results.iter().enumerate() {
                if !ll.is_finite() || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical(format!(
                        "non-finite gradient at epoch {epoch}, sequence {}, params {:?}",
                        batch[bi],
                        model.parameters()
                    )));
                }
                train_ll_sum += ll;
                for (gi, &v) in g.iter().enumerate() {
                    grad[gi] += v;
                }
            }
            // Minimize mean negative LL; chain rule through softplus.
            let scale = -1.0 / batch.len() as f64;
            for i in 0..dim {
                grad[i] *= scale * sigmoid(raw[i]);
            }
            adam.step(&mut raw, &grad);
        }

        let model = hawkes_from_raw(k, &raw)?;
        let dev_ll = mean_ll(&model, data, &dev_idx);
        log.push(FitEpoch {
            epoch,
            train_ll: train_ll_sum / train_idx.len() as f64,
            dev_ll,
        });
        if dev_ll > best_dev {
            best_dev = dev_ll;
            best_raw = raw.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opt.patience {
                break;
            }
        }
    }

    Ok(FitResult {
        model: AnyModel::HawkesExp(hawkes_from_raw(k, &best_raw)?),
        log,
    })
}

fn hawkes_from_raw(num_types: usize, raw: &[f64]) -> Result<HawkesExpModel> {
    let constrained: Vec<f64> = raw.iter().map(|&x| softplus(x)).collect();
    HawkesExpModel::from_parameters(num_types, &constrained)
}

fn mean_ll(model: &dyn IntensityModel, data: &Dataset, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NEG_INFINITY;
    }
    idx.iter()
        .map(|&i| log_likelihood(model, &data.sequences[i]))
        .sum::<f64>()
        / idx.len() as f64
}

/// Deterministic 90/10 split; every 10th sequence goes to dev.
fn holdout_split(n: usize) -> (Vec<usize>, Vec<usize>) {
    if n < 2 {
        return ((0..n).collect(), (0..n).collect());
    }
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for i in 0..n {
        if i % 10 == 9 {
            dev.push(i);
        } else {
            train.push(i);
        }
    }
    if dev.is_empty() {
        dev.push(n - 1);
    }
    (train, dev)
}
