//! Generate a synthetic dataset whose ground truth obeys a global
//! count corridor no locally-normalized intensity model can encode,
//! then write it to a JSON-lines file.
//!
//! Run with: cargo run --release --example synthesize

use pointcast::io::save_dataset;
use pointcast::synth::{generate, SynthGenerator, SynthSpec};

fn main() -> pointcast::Result<()> {
    let spec = SynthSpec {
        generator: SynthGenerator::HawkesBudgeted {
            mu: vec![0.4, 0.3],
            alpha: vec![0.8, 0.1, 0.2, 0.2],
            decay: vec![1.5; 4],
            budget_type: 0,
            budget: 15,
            floor: 5,
        },
        num_seqs: 200,
        horizon: 15.0,
        seed: 3,
        time_unit: "unit".into(),
    };
    let data = generate(&spec)?;

    // Every sequence respects the corridor 5 <= count(type 0) <= 15.
    let counts: Vec<usize> = data
        .sequences
        .iter()
        .map(|s| s.type_counts(2)[0])
        .collect();
    let (lo, hi) = (
        *counts.iter().min().unwrap(),
        *counts.iter().max().unwrap(),
    );
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    println!(
        "{} sequences; type-0 counts in [{lo}, {hi}], mean {mean:.2}",
        data.sequences.len()
    );

    let dir = std::env::temp_dir().join("pointcast-synth-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("corridor.jsonl");
    save_dataset(&path, &data)?;
    println!("dataset written to {}", path.display());
    Ok(())
}
