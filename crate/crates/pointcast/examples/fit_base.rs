//! Fit an autoregressive intensity model by maximum likelihood and
//! compare the recovered parameters against the generator.
//!
//! Run with: cargo run --release --example fit_base

use pointcast::model::{fit_mle, AnyModel, ModelFamily, OptimizerConfig};
use pointcast::synth::{generate, SynthGenerator, SynthSpec};

fn main() -> pointcast::Result<()> {
    let true_mu = 0.2;
    let true_alpha = 0.8;
    let true_decay = 1.0;

    let spec = SynthSpec {
        generator: SynthGenerator::Hawkes {
            mu: vec![true_mu],
            alpha: vec![true_alpha],
            decay: vec![true_decay],
        },
        num_seqs: 400,
        horizon: 20.0,
        seed: 17,
        time_unit: "unit".into(),
    };
    let data = generate(&spec)?;
    println!(
        "generated {} sequences, {} events total",
        data.sequences.len(),
        data.total_events()
    );

    let fit = fit_mle(ModelFamily::HawkesExp, &data, &OptimizerConfig::default())?;
    if let Some(last) = fit.log.last() {
        println!(
            "stopped after epoch {} (train ll {:.4}, dev ll {:.4})",
            last.epoch, last.train_ll, last.dev_ll
        );
    }

    let AnyModel::HawkesExp(model) = &fit.model else {
        unreachable!("requested a Hawkes fit");
    };
    let report = [
        ("mu", true_mu, model.mu()[0]),
        ("alpha", true_alpha, model.alpha()[0]),
        ("decay", true_decay, model.decay()[0]),
    ];
    for (name, truth, est) in report {
        println!(
            "{name:5}  true {truth:.3}  fitted {est:.3}  rel err {:.1}%",
            100.0 * (est - truth).abs() / truth
        );
    }
    Ok(())
}
