//! Scalar energy over completed sequences: a global-statistics
//! featurizer feeding a small MLP, with analytic gradients for
//! contrastive training.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::EventSequence;
use crate::thinning::RngStream;

/// Featurizer shape: event vocabulary size, sinusoidal time basis
/// count, and number of horizon sub-windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub num_types: usize,
    pub time_basis_count: usize,
    pub window_count: usize,
}

impl FeatureConfig {
    pub fn new(num_types: usize, time_basis_count: usize, window_count: usize) -> Result<Self> {
        if num_types == 0 || time_basis_count == 0 || window_count == 0 {
            return Err(Error::Config(
                "FeatureConfig requires K >= 1, B >= 1, W >= 1".into(),
            ));
        }
        Ok(FeatureConfig {
            num_types,
            time_basis_count,
            window_count,
        })
    }

    /// Defaults used by experiment configs: W=4, B=8.
    pub fn default_for(num_types: usize) -> Self {
        FeatureConfig {
            num_types,
            time_basis_count: 8,
            window_count: 4,
        }
    }

    /// `K·(W+1) + 2 + 4·B + 1`
    pub fn feature_dim(&self) -> usize {
        self.num_types * (self.window_count + 1) + 2 + 4 * self.time_basis_count + 1
    }
}

/// Fixed-dimension summary of a completed sequence.
///
/// Layout: per-type counts in each of W sub-windows of the horizon,
/// per-type counts of the prefix tail (last horizon-length window of
/// the prefix), mean and variance of continuation inter-arrival gaps,
/// sinusoidal encodings of the first and last continuation event
/// times, and the continuation length. Continuation-derived slots are
/// zero for an empty continuation.
pub fn featurize(
    prefix: &EventSequence,
    continuation: &EventSequence,
    cfg: &FeatureConfig,
) -> Vec<f64> {
    let k = cfg.num_types;
    let w = cfg.window_count;
    let b = cfg.time_basis_count;
    let t_lo = continuation.t_start();
    let t_hi = continuation.t_end();
    let span = (t_hi - t_lo).max(f64::MIN_POSITIVE);

    let mut feats = vec![0.0; cfg.feature_dim()];

    // Per-type counts in W equal sub-windows of (T, T'].
    for ev in continuation.events() {
        let frac = ((ev.time - t_lo) / span).clamp(0.0, 1.0);
        let win = ((frac * w as f64) as usize).min(w - 1);
        feats[win * k + ev.type_id] += 1.0;
    }

    // Per-type counts of the prefix tail.
    let tail_lo = prefix.t_end() - span;
    for ev in prefix.events() {
        if ev.time > tail_lo {
            feats[w * k + ev.type_id] += 1.0;
        }
    }

    let base = k * (w + 1);

    // Mean and variance of inter-arrival gaps within the continuation.
    let times: Vec<f64> = continuation.events().iter().map(|e| e.time).collect();
    if times.len() >= 2 {
        let gaps: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64;
        feats[base] = mean;
        feats[base + 1] = var;
    }

    // Sinusoidal encodings of the first and last continuation events.
    if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
        for (slot, t) in [(0, first), (1, last)] {
            let tau = ((t - t_lo) / span).clamp(0.0, 1.0);
            for f in 0..b {
                let angle = 2.0 * std::f64::consts::PI * (f + 1) as f64 * tau;
                feats[base + 2 + slot * 2 * b + 2 * f] = angle.sin();
                feats[base + 2 + slot * 2 * b + 2 * f + 1] = angle.cos();
            }
        }
    }

    feats[base + 2 + 4 * b] = continuation.len() as f64;
    feats
}

/// MLP energy function over featurized sequences.
///
/// Hidden layers use tanh; the output layer is linear to one unit.
/// Parameters are stored flat (per layer: row-major weights then
/// biases) so the optimizer sees a single vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyFunction {
    feature_config: FeatureConfig,
    /// Layer widths, input first, final entry 1.
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    feat_mean: Vec<f64>,
    feat_std: Vec<f64>,
}

impl EnergyFunction {
    /// Fresh network: hidden weights uniform in ±1/√fan_in, output
    /// layer zeroed so the initial energy is identically zero.
    pub fn new(feature_config: FeatureConfig, hidden: &[usize], stream: RngStream) -> Self {
        let mut sizes = vec![feature_config.feature_dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut rng = stream.rng();
        let mut params = Vec::with_capacity(Self::count_params(&sizes));
        for l in 0..sizes.len() - 1 {
            let fan_in = sizes[l];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let is_output = l == sizes.len() - 2;
            for _ in 0..sizes[l + 1] * fan_in {
                params.push(if is_output {
                    0.0
                } else {
                    rng.gen_range(-bound..bound)
                });
            }
            for _ in 0..sizes[l + 1] {
                params.push(0.0);
            }
        }
        let dim = feature_config.feature_dim();
        EnergyFunction {
            feature_config,
            layer_sizes: sizes,
            params,
            feat_mean: vec![0.0; dim],
            feat_std: vec![1.0; dim],
        }
    }

    /// Default architecture: hidden layers [64, 32] (3 layers total).
    pub fn default_for(feature_config: FeatureConfig, stream: RngStream) -> Self {
        Self::new(feature_config, &[64, 32], stream)
    }

    pub fn from_parts(
        feature_config: FeatureConfig,
        layer_sizes: Vec<usize>,
        params: Vec<f64>,
        feat_mean: Vec<f64>,
        feat_std: Vec<f64>,
    ) -> Result<Self> {
        if layer_sizes.first() != Some(&feature_config.feature_dim())
            || layer_sizes.last() != Some(&1)
        {
            return Err(Error::Format("layer sizes inconsistent with feature dim".into()));
        }
        if params.len() != Self::count_params(&layer_sizes) {
            return Err(Error::Format(format!(
                "parameter count {} does not match layer sizes {layer_sizes:?}",
                params.len()
            )));
        }
        let dim = feature_config.feature_dim();
        if feat_mean.len() != dim || feat_std.len() != dim {
            return Err(Error::Format("standardization vectors have wrong length".into()));
        }
        Ok(EnergyFunction {
            feature_config,
            layer_sizes,
            params,
            feat_mean,
            feat_std,
        })
    }

    fn count_params(sizes: &[usize]) -> usize {
        sizes
            .windows(2)
            .map(|p| p[1] * p[0] + p[1])
            .sum()
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.feature_config
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn standardization(&self) -> (&[f64], &[f64]) {
        (&self.feat_mean, &self.feat_std)
    }

    /// Freeze per-dimension standardization from a sample of feature
    /// vectors (zero-variance dimensions keep std 1).
    pub fn fit_standardization(&mut self, samples: &[Vec<f64>]) {
        if samples.is_empty() {
            return;
        }
        let dim = self.feature_config.feature_dim();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            for (i, &v) in s.iter().enumerate() {
                mean[i] += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        for s in samples {
            for (i, &v) in s.iter().enumerate() {
                std[i] += (v - mean[i]) * (v - mean[i]);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        self.feat_mean = mean;
        self.feat_std = std;
    }

    fn standardized(&self, feats: &[f64]) -> Vec<f64> {
        feats
            .iter()
            .zip(self.feat_mean.iter().zip(&self.feat_std))
            .map(|(&f, (&m, &s))| (f - m) / s)
            .collect()
    }

    /// Energy of a feature vector (standardization applied internally).
    pub fn energy_of_features(&self, feats: &[f64]) -> f64 {
        let mut x = self.standardized(feats);
        let mut offset = 0;
        for l in 0..self.layer_sizes.len() - 1 {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.params[offset..offset + n_out * n_in];
            let bias = &self.params[offset + n_out * n_in..offset + n_out * n_in + n_out];
            let mut y = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = bias[o];
                for (i, &xi) in x.iter().enumerate() {
                    acc += w[o * n_in + i] * xi;
                }
                y[o] = if l + 2 == self.layer_sizes.len() {
                    acc
                } else {
                    acc.tanh()
                };
            }
            x = y;
            offset += n_out * n_in + n_out;
        }
        x[0]
    }

    pub fn energy(&self, prefix: &EventSequence, continuation: &EventSequence) -> f64 {
        self.energy_of_features(&featurize(prefix, continuation, &self.feature_config))
    }

    /// Energy plus its gradient with respect to every parameter.
    pub fn energy_grad_of_features(&self, feats: &[f64]) -> (f64, Vec<f64>) {
        let x0 = self.standardized(feats);
        let n_layers = self.layer_sizes.len() - 1;

        // Forward pass, keeping activations per layer.
        let mut acts: Vec<Vec<f64>> = vec![x0];
        let mut offset = 0;
        let mut offsets = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            offsets.push(offset);
            let w = &self.params[offset..offset + n_out * n_in];
            let bias = &self.params[offset + n_out * n_in..offset + n_out * n_in + n_out];
            let x = &acts[l];
            let mut y = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = bias[o];
                for (i, &xi) in x.iter().enumerate() {
                    acc += w[o * n_in + i] * xi;
                }
                y[o] = if l == n_layers - 1 { acc } else { acc.tanh() };
            }
            acts.push(y);
            offset += n_out * n_in + n_out;
        }
        let value = acts[n_layers][0];

        // Backward pass.
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = vec![1.0]; // d(output)/d(pre-activation of output)
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = offsets[l];
            let x = &acts[l];
            for o in 0..n_out {
                for (i, &xi) in x.iter().enumerate() {
                    grad[off + o * n_in + i] = delta[o] * xi;
                }
                grad[off + n_out * n_in + o] = delta[o];
            }
            if l > 0 {
                let w = &self.params[off..off + n_out * n_in];
                let mut prev = vec![0.0; n_in];
                for (i, p) in prev.iter_mut().enumerate() {
                    for (o, &d) in delta.iter().enumerate() {
                        *p += d * w[o * n_in + i];
                    }
                    // tanh' = 1 - tanh², and acts[l] holds tanh outputs.
                    *p *= 1.0 - x[i] * x[i];
                }
                delta = prev;
            }
        }
        (value, grad)
    }

    pub fn energy_grad(
        &self,
        prefix: &EventSequence,
        continuation: &EventSequence,
    ) -> (f64, Vec<f64>) {
        self.energy_grad_of_features(&featurize(prefix, continuation, &self.feature_config))
    }
}
