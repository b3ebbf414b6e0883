//! Predict a multi-event continuation by normalized importance
//! sampling: draw proposals from the base model, weight them by
//! softmax of negated energies, and keep the argmax-weight draw.
//!
//! Run with: cargo run --release --example rerank_predict

use pointcast::energy::{EnergyFunction, FeatureConfig};
use pointcast::infer::{normalized_weights, predict, InferConfig};
use pointcast::model::HawkesExpModel;
use pointcast::seq::{Event, EventSequence};
use pointcast::thinning::RngStream;

fn main() -> pointcast::Result<()> {
    let base = HawkesExpModel::new(
        vec![0.4, 0.3],
        vec![0.8, 0.1, 0.2, 0.2],
        vec![1.5; 4],
    )?;

    // A freshly initialized energy is exactly zero (its output layer
    // starts at zero), so reranking degenerates to the base model:
    // uniform weights, first proposal chosen. Training (see the
    // train_reranker example) is what sharpens it; here a small random
    // perturbation stands in for training so the weights differ.
    let stream = RngStream::new(5);
    let feat = FeatureConfig::new(2, 1, 1)?;
    let mut energy = EnergyFunction::new(feat, &[8], stream.named("energy-init"));
    {
        use rand::Rng;
        let mut rng = stream.named("perturb").rng();
        for p in energy.parameters_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
    }

    let prefix = EventSequence::new(
        vec![Event::new(0.7, 0), Event::new(1.9, 1), Event::new(3.2, 0)],
        0.0,
        4.0,
    )?;
    let cfg = InferConfig { m_proposals: 8 };
    let (chosen, proposals) = predict(&base, &energy, &prefix, 10.0, &cfg, stream.named("predict"))?;

    println!("prefix ends at t=4.0 with {} events; horizon t=10.0", prefix.len());
    for (i, p) in proposals.iter().enumerate() {
        println!(
            "proposal {i}: weight {:.3}  energy {:+.3}  {} events",
            p.weight,
            p.energy,
            p.continuation.len()
        );
    }
    let total: f64 = proposals.iter().map(|p| p.weight).sum();
    println!("weights sum to {total:.12}");
    println!("chosen continuation has {} events (argmax weight)", chosen.len());

    // Weights are a softmax over negated energies and therefore
    // invariant to any constant shift of the energy function.
    let energies: Vec<f64> = proposals.iter().map(|p| p.energy).collect();
    let shifted: Vec<f64> = energies.iter().map(|e| e + 100.0).collect();
    let (w0, w1) = (normalized_weights(&energies), normalized_weights(&shifted));
    let max_diff = w0
        .iter()
        .zip(&w1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max weight change under +100 energy shift: {max_diff:.2e}");
    Ok(())
}
