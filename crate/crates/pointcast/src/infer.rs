//! Normalized importance sampling: draw proposals from the base
//! model, reweight by `exp(-energy)`, and return the highest-weighted
//! continuation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyFunction;
use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::seq::EventSequence;
use crate::thinning::{draw_noise, RngStream};

/// A sampled continuation with its normalized weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedProposal {
    pub continuation: EventSequence,
    pub weight: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InferConfig {
    /// Number of proposals per prefix.
    pub m_proposals: usize,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig { m_proposals: 20 }
    }
}

/// Softmax of negated energies, computed with a max shift; the output
/// sums to 1.
pub fn normalized_weights(energies: &[f64]) -> Vec<f64> {
    let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let unnorm: Vec<f64> = energies.iter().map(|&e| (-(e - min)).exp()).collect();
    let sum: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / sum).collect()
}

/// Predict the continuation over `(prefix.t_end, t_prime]`.
///
/// Draws M proposals from the base model, weights them by the energy
/// of each completed sequence, and returns the argmax-weight proposal
/// (ties broken to the lowest proposal index) together with the full
/// weighted set.
pub fn predict(
    base: &dyn IntensityModel,
    energy: &EnergyFunction,
    prefix: &EventSequence,
    t_prime: f64,
    cfg: &InferConfig,
    stream: RngStream,
) -> Result<(EventSequence, Vec<WeightedProposal>)> {
    if cfg.m_proposals == 0 {
        return Err(Error::Config("m_proposals must be >= 1".into()));
    }
    let continuations = draw_noise(base, prefix, t_prime, cfg.m_proposals, stream)?;
    let energies: Vec<f64> = continuations
        .par_iter()
        .map(|c| energy.energy(prefix, c))
        .collect();
    let weights = normalized_weights(&energies);

    let mut best = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = i;
        }
    }
    let proposals: Vec<WeightedProposal> = continuations
        .into_iter()
        .zip(weights)
        .zip(energies)
        .map(|((continuation, weight), energy)| WeightedProposal {
            continuation,
            weight,
            energy,
        })
        .collect();
    Ok((proposals[best].continuation.clone(), proposals))
}

/// Minimum-Bayes-risk consensus decoding over weighted proposals.
///
/// Interface reserved for a future decoder; the argmax-weight proposal
/// from [`predict`] is the supported prediction path.
pub fn consensus_decode(_proposals: &[WeightedProposal]) -> Result<EventSequence> {
    Err(Error::Config(
        "consensus decoding is not implemented; use the argmax-weight prediction".into(),
    ))
}
