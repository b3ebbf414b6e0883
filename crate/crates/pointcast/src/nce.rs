//! Noise-contrastive training of the energy function against a frozen
//! autoregressive base model: Binary-NCE, Multi-NCE, and the optional
//! distance-margin regularizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{featurize, EnergyFunction};
use crate::error::{Error, Result};
use crate::metrics::otd;
use crate::model::{sigmoid, softplus, Adam, IntensityModel, OptimizerConfig};
use crate::seq::HorizonSplit;
use crate::thinning::{draw_noise, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NceObjective {
    Binary,
    Multi,
}

/// Energy-training settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub objective: NceObjective,
    /// Noise samples per positive.
    pub n_noise: usize,
    /// Margin scale in the distance regularizer.
    pub beta: f64,
    pub regularize: bool,
    /// Multiplier on the regularizer when enabled.
    pub reg_weight: f64,
    /// Deletion cost for the training-time distance.
    pub train_c_del: f64,
    /// Redraw noise every epoch; freeze the epoch-0 noise otherwise.
    pub resample_noise: bool,
    pub optimizer: OptimizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: NceObjective::Multi,
            n_noise: 5,
            beta: 1.0,
            regularize: false,
            reg_weight: 1.0,
            train_c_del: 1.0,
            resample_noise: true,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_noise == 0 {
            return Err(Error::Config("n_noise must be >= 1".into()));
        }
        if self.regularize && self.beta <= 0.0 {
            return Err(Error::Config("beta must be > 0 when regularizing".into()));
        }
        Ok(())
    }
}

/// One positive continuation with its contrastive noise set; all
/// sequences share the same observed prefix.
#[derive(Debug, Clone)]
pub struct ContrastiveBatch {
    pub split: HorizonSplit,
    pub noises: Vec<crate::seq::EventSequence>,
}

/// One line of the energy-training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NceEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub omega: f64,
    pub wall_ms: u64,
}

/// Binary-NCE loss (minimized form) and its partials w.r.t. each
/// energy. `energies[0]` is the positive.
///
/// `loss = softplus(E0) + Σ_{n≥1} softplus(-E_n)`
pub fn binary_nce_loss(energies: &[f64]) -> (f64, Vec<f64>) {
    debug_assert!(energies.len() >= 2);
    let mut loss = softplus(energies[0]);
    let mut grad = vec![0.0; energies.len()];
    grad[0] = sigmoid(energies[0]);
    for (n, &e) in energies.iter().enumerate().skip(1) {
        loss += softplus(-e);
        grad[n] = sigmoid(e) - 1.0;
    }
    (loss, grad)
}

/// Multi-NCE loss (minimized form) and its partials.
///
/// `loss = E0 + log Σ_n exp(-E_n)`, computed with a max shift.
pub fn multi_nce_loss(energies: &[f64]) -> (f64, Vec<f64>) {
    debug_assert!(energies.len() >= 2);
    let neg_max = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = energies.iter().map(|&e| (-(e - neg_max)).exp()).sum();
    let loss = energies[0] - neg_max + sum.ln();
    let mut grad = vec![0.0; energies.len()];
    for (n, &e) in energies.iter().enumerate() {
        let softmax = (-(e - neg_max)).exp() / sum;
        grad[n] = if n == 0 { 1.0 - softmax } else { -softmax };
    }
    (loss, grad)
}

/// Distance-margin regularizer `Ω = Σ_n max(0, β·d(n) + E0 - E_n)`
/// with subgradient 0 at an exactly-active hinge.
pub fn distance_margin_reg(
    energies: &[f64],
    distances: &[f64],
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    debug_assert_eq!(energies.len(), distances.len() + 1);
    if distances.iter().any(|&d| d < 0.0) {
        return Err(Error::Precondition("distances must be nonnegative".into()));
    }
    let mut omega = 0.0;
    let mut grad = vec![0.0; energies.len()];
    for (n, &d) in distances.iter().enumerate() {
        let margin = beta * d + energies[0] - energies[n + 1];
        if margin > 0.0 {
            omega += margin;
            grad[0] += 1.0;
            grad[n + 1] -= 1.0;
        }
    }
    Ok((omega, grad))
}

struct BatchEval {
    loss: f64,
    omega: f64,
    /// Gradient of (loss + reg_weight·Ω) w.r.t. energy parameters.
    grad: Vec<f64>,
}

fn eval_batch(
    energy: &EnergyFunction,
    batch: &ContrastiveBatch,
    cfg: &TrainConfig,
    with_grad: bool,
) -> Result<BatchEval> {
    let prefix = &batch.split.prefix;
    let mut energies = Vec::with_capacity(1 + batch.noises.len());
    let mut grads: Vec<Vec<f64>> = Vec::new();
    let sequences: Vec<&crate::seq::EventSequence> = std::iter::once(&batch.split.truth)
        .chain(batch.noises.iter())
        .collect();
    for seq in &sequences {
        if with_grad {
            let (e, g) = energy.energy_grad(prefix, seq);
            energies.push(e);
            grads.push(g);
        } else {
            energies.push(energy.energy(prefix, seq));
        }
    }

    let (mut loss, mut dl_de) = match cfg.objective {
        NceObjective::Binary => binary_nce_loss(&energies),
        NceObjective::Multi => multi_nce_loss(&energies),
    };
    let mut omega = 0.0;
    if cfg.regularize {
        let distances: Vec<f64> = batch
            .noises
            .iter()
            .map(|n| otd(&batch.split.truth, n, cfg.train_c_del))
            .collect::<Result<_>>()?;
        let (o, og) = distance_margin_reg(&energies, &distances, cfg.beta)?;
        omega = o;
        loss += cfg.reg_weight * o;
        for (d, &g) in dl_de.iter_mut().zip(&og) {
            *d += cfg.reg_weight * g;
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite contrastive loss; energies {energies:?}"
        )));
    }

    let mut grad = Vec::new();
    if with_grad {
        grad = vec![0.0; energy.parameters().len()];
        for (coef, g) in dl_de.iter().zip(&grads) {
            for (gi, &v) in g.iter().enumerate() {
                grad[gi] += coef * v;
            }
        }
    }
    Ok(BatchEval { loss, omega, grad })
}

fn noise_stream(base: RngStream, epoch: usize, split_idx: usize) -> RngStream {
    base.substream(epoch as u64).substream(split_idx as u64)
}

fn make_batches(
    model: &dyn IntensityModel,
    splits: &[HorizonSplit],
    n_noise: usize,
    stream: RngStream,
    epoch: usize,
) -> Result<Vec<ContrastiveBatch>> {
    splits
        .par_iter()
        .enumerate()
        .map(|(i, split)| {
            let noises = draw_noise(
                model,
                &split.prefix,
                split.horizon_end,
                n_noise,
                noise_stream(stream, epoch, i),
            )?;
            Ok(ContrastiveBatch {
                split: split.clone(),
                noises,
            })
        })
        .collect()
}

/// Train the energy function against the frozen base model.
///
/// Per split and epoch: draw N noise continuations, compute the chosen
/// loss (plus Ω when enabled), backprop, and take an Adam step. Early
/// stopping tracks the dev loss on a frozen dev noise set; the best
/// dev parameters are returned.
pub fn train_energy(
    base: &dyn IntensityModel,
    mut energy: EnergyFunction,
    train: &[HorizonSplit],
    dev: &[HorizonSplit],
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<(EnergyFunction, Vec<NceEpoch>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Precondition("train_energy needs training splits".into()));
    }
    let noise_base = stream.named("train-noise");
    let dev_batches = make_batches(base, dev, cfg.n_noise, stream.named("dev-noise"), 0)?;

    // Epoch-0 noise doubles as the standardization sample.
    let mut batches = make_batches(base, train, cfg.n_noise, noise_base, 0)?;
    {
        let feat_cfg = *energy.feature_config();
        let mut samples = Vec::new();
        for b in &batches {
            samples.push(featurize(&b.split.prefix, &b.split.truth, &feat_cfg));
            for n in &b.noises {
                samples.push(featurize(&b.split.prefix, n, &feat_cfg));
            }
        }
        energy.fit_standardization(&samples);
    }

    let opt = &cfg.optimizer;
    let mut adam = Adam::new(energy.parameters().len(), opt);
    let mut best_params = energy.parameters().to_vec();
    let mut best_dev = f64::INFINITY;
    let mut since_best = 0usize;
    let mut log = Vec::new();
    let start = std::time::Instant::now();

    for epoch in 0..opt.max_epochs {
        if epoch > 0 && cfg.resample_noise {
            batches = make_batches(base, train, cfg.n_noise, noise_base, epoch)?;
        }
        let mut train_loss = 0.0;
        let mut omega_sum = 0.0;
        for chunk in batches.chunks(opt.batch_size.max(1)) {
            let evals: Vec<Result<BatchEval>> = chunk
                .par_iter()
                .map(|b| eval_batch(&energy, b, cfg, true))
                .collect();
            let dim = energy.parameters().len();
            let mut grad = vec![0.0; dim];
            for ev in evals {
                let ev = ev?;
                train_loss += ev.loss;
                omega_sum += ev.omega;
                for (gi, &v) in ev.grad.iter().enumerate() {
                    grad[gi] += v;
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            adam.step(energy.parameters_mut(), &grad);
        }
        train_loss /= batches.len() as f64;
        omega_sum /= batches.len() as f64;

        let dev_loss = if dev_batches.is_empty() {
            train_loss
        } else {
            let losses: Vec<Result<BatchEval>> = dev_batches
                .par_iter()
                .map(|b| eval_batch(&energy, b, cfg, false))
                .collect();
            let mut sum = 0.0;
            for l in losses {
                sum += l?.loss;
            }
            sum / dev_batches.len() as f64
        };

        log.push(NceEpoch {
            epoch,
            train_loss,
            dev_loss,
            omega: omega_sum,
            wall_ms: start.elapsed().as_millis() as u64,
        });

        if dev_loss < best_dev {
            best_dev = dev_loss;
            best_params = energy.parameters().to_vec();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opt.patience {
                break;
            }
        }
    }

    energy.parameters_mut().copy_from_slice(&best_params);
    Ok((energy, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn binary_loss_at_zero_energies() {
        let e = vec![0.0; 6];
        let (loss, grad) = binary_nce_loss(&e);
        assert_relative_eq!(loss, 6.0 * 2.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(grad[0], 0.5);
        assert_relative_eq!(grad[1], -0.5);
    }

    #[test]
    fn binary_loss_perfect_separation_limit() {
        let (loss, _) = binary_nce_loss(&[-200.0, 200.0, 200.0]);
        assert!(loss < 1e-12);
    }

    #[test]
    fn multi_loss_uniform_case() {
        let e = vec![1.3; 6];
        let (loss, grad) = multi_nce_loss(&e);
        assert_relative_eq!(loss, 6.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(grad[0], 1.0 - 1.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(grad[3], -1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn multi_loss_shift_invariance() {
        let e = vec![0.3, -1.2, 2.0, 0.7];
        let (l0, _) = multi_nce_loss(&e);
        let shifted: Vec<f64> = e.iter().map(|v| v + 1000.0).collect();
        let (l1, _) = multi_nce_loss(&shifted);
        assert_relative_eq!(l0, l1, epsilon = 1e-9);
    }

    #[test]
    fn multi_loss_near_separation() {
        let e = vec![0.0, 10.0, 10.0, 10.0, 10.0, 10.0];
        let (loss, _) = multi_nce_loss(&e);
        assert_relative_eq!(loss, (1.0 + 5.0 * (-10.0_f64).exp()).ln(), epsilon = 1e-12);
    }

    #[test]
    fn regularizer_hinge_arithmetic() {
        let (o, _) = distance_margin_reg(&[0.0, 2.0], &[1.0], 1.0).unwrap();
        assert_eq!(o, 0.0);
        let (o, g) = distance_margin_reg(&[0.0, 0.5], &[1.0], 1.0).unwrap();
        assert_relative_eq!(o, 0.5);
        assert_eq!(g, vec![1.0, -1.0]);
        let (o, _) = distance_margin_reg(&[1.0, 2.0, 6.0], &[2.0, 4.0], 0.5).unwrap();
        assert_eq!(o, 0.0);
        assert!(distance_margin_reg(&[0.0, 0.0], &[-1.0], 1.0).is_err());
    }

    #[test]
    fn loss_partials_match_finite_differences() {
        let e = vec![0.4, -0.9, 1.7, 0.2];
        let d = vec![0.5, 1.5, 0.1];
        let h = 1e-6;
        let losses: [fn(&[f64]) -> (f64, Vec<f64>); 2] = [binary_nce_loss, multi_nce_loss];
        for f in losses {
            let (_, grad) = f(&e);
            for i in 0..e.len() {
                let mut up = e.clone();
                let mut dn = e.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (f(&up).0 - f(&dn).0) / (2.0 * h);
                assert_relative_eq!(grad[i], fd, max_relative = 1e-4, epsilon = 1e-9);
            }
        }
        let (_, grad) = distance_margin_reg(&e, &d, 0.8).unwrap();
        for i in 0..e.len() {
            let mut up = e.clone();
            let mut dn = e.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (distance_margin_reg(&up, &d, 0.8).unwrap().0
                - distance_margin_reg(&dn, &d, 0.8).unwrap().0)
                / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-4, epsilon = 1e-9);
        }
    }

    #[test]
    fn binary_loss_lacks_shift_invariance() {
        let e = vec![0.3, -1.2, 2.0, 0.7];
        let (l0, _) = binary_nce_loss(&e);
        let shifted: Vec<f64> = e.iter().map(|v| v + 5.0).collect();
        let (l1, _) = binary_nce_loss(&shifted);
        assert!((l0 - l1).abs() > 1e-6);
    }
}
