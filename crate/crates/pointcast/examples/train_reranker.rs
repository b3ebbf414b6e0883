//! Train an energy-based reranker by noise-contrastive estimation
//! against a frozen base model, then check that it assigns lower
//! energy to observed continuations than to base-model noise.
//!
//! Run with: cargo run --release --example train_reranker

use pointcast::energy::{EnergyFunction, FeatureConfig};
use pointcast::model::{fit_mle, ModelFamily, OptimizerConfig};
use pointcast::nce::{train_energy, NceObjective, TrainConfig};
use pointcast::seq::{split_at_horizon, Dataset, HorizonSplit};
use pointcast::synth::{generate, SynthGenerator, SynthSpec};
use pointcast::thinning::{draw_noise, RngStream};

fn main() -> pointcast::Result<()> {
    // Ground truth keeps its type-0 count inside a global corridor
    // [12, 20] per sequence. A locally-normalized intensity model
    // cannot represent that constraint, which is exactly the gap the
    // energy function learns to score.
    let spec = SynthSpec {
        generator: SynthGenerator::HawkesBudgeted {
            mu: vec![0.4, 0.3, 0.3],
            alpha: vec![0.8, 0.1, 0.1, 0.3, 0.2, 0.0, 0.0, 0.0, 0.2],
            decay: vec![1.5; 9],
            budget_type: 0,
            budget: 20,
            floor: 12,
        },
        num_seqs: 480,
        horizon: 20.0,
        seed: 21,
        time_unit: "unit".into(),
    };
    let data = generate(&spec)?;

    let train_data = Dataset::new(
        data.sequences[..400].to_vec(),
        data.num_types,
        data.time_unit.clone(),
    )?;
    let fit = fit_mle(ModelFamily::HawkesExp, &train_data, &OptimizerConfig::default())?;
    let base = fit.model.as_intensity();
    println!("base model fitted ({} epochs)", fit.log.len());

    let carve = |range: std::ops::Range<usize>| -> pointcast::Result<Vec<HorizonSplit>> {
        range
            .map(|i| split_at_horizon(&data.sequences[i], 10.0, 20.0))
            .collect()
    };
    let train_splits = carve(0..400)?;
    let dev_splits = carve(400..480)?;

    let stream = RngStream::new(spec.seed);
    let feat = FeatureConfig::new(data.num_types, 1, 1)?;
    let init = EnergyFunction::new(feat, &[8], stream.named("energy-init"));

    let cfg = TrainConfig {
        objective: NceObjective::Multi,
        optimizer: OptimizerConfig {
            learning_rate: 3e-3,
            batch_size: 128,
            max_epochs: 200,
            patience: 40,
            ..OptimizerConfig::default()
        },
        ..TrainConfig::default()
    };
    let (energy, log) = train_energy(base, init, &train_splits, &dev_splits, &cfg, stream.named("nce"))?;

    for e in log.iter().step_by(25) {
        println!(
            "epoch {:3}  train loss {:.4}  dev loss {:.4}",
            e.epoch, e.train_loss, e.dev_loss
        );
    }
    let best = log
        .iter()
        .map(|e| e.dev_loss)
        .fold(f64::INFINITY, f64::min);
    println!(
        "best dev loss {best:.4} over {} epochs (chance level for 5 noise draws: ln 6 = {:.4})",
        log.len(),
        6.0_f64.ln()
    );

    // Mean energy over the dev split: observed continuations should
    // score lower than fresh base-model noise.
    let mut obs = 0.0;
    let mut noise_mean = 0.0;
    for (i, split) in dev_splits.iter().enumerate() {
        obs += energy.energy(&split.prefix, &split.truth);
        let noise = draw_noise(base, &split.prefix, split.horizon_end, 3, stream.named("demo").substream(i as u64))?;
        noise_mean += noise
            .iter()
            .map(|n| energy.energy(&split.prefix, n))
            .sum::<f64>()
            / noise.len() as f64;
    }
    let n = dev_splits.len() as f64;
    println!(
        "mean dev energy: observed {:+.3}, base-model noise {:+.3}",
        obs / n,
        noise_mean / n
    );
    Ok(())
}
