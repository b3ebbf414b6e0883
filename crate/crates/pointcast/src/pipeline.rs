//! End-to-end orchestration: data preparation, base-model fitting,
//! energy training, prediction, and evaluation, with all artifacts
//! written to an output directory.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyFunction, FeatureConfig};
use crate::error::{Error, Result};
use crate::infer::{predict, WeightedProposal};
use crate::io::{self, ExperimentConfig, HorizonPolicy};
use crate::metrics::{
    cascading_analysis, energy_histogram_export, evaluate_pairs, CascadeReport, EvalReport,
};
use crate::model::{fit_mle, FitResult, IntensityModel};
use crate::nce::train_energy;
use crate::seq::{split_at_horizon, split_by_token_budget, Dataset, EventSequence, HorizonSplit};
use crate::synth::generate;
use crate::thinning::RngStream;

/// Wire form of one event in JSON dumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventJson {
    pub t: f64,
    pub k: usize,
}

impl EventJson {
    fn from_seq(seq: &EventSequence) -> Vec<EventJson> {
        seq.events()
            .iter()
            .map(|e| EventJson {
                t: e.time,
                k: e.type_id,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProposalJson {
    pub weight: f64,
    pub energy: f64,
    pub events: Vec<EventJson>,
}

/// One line of the prediction dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub prefix_id: String,
    pub horizon_start: f64,
    pub horizon_end: f64,
    pub chosen: Vec<EventJson>,
    pub proposals: Vec<ProposalJson>,
}

/// Train/dev/test index ranges into the dataset's sequence list.
#[derive(Debug, Clone)]
pub struct Partition {
    pub train: std::ops::Range<usize>,
    pub dev: std::ops::Range<usize>,
    pub test: std::ops::Range<usize>,
}

/// Load (or synthesize) the dataset and carve the head-of-file
/// partition described by the config.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Dataset, Partition)> {
    let data = match (&cfg.dataset, &cfg.synth) {
        (Some(path), None) => io::load_dataset(Path::new(path))?,
        (None, Some(spec)) => generate(spec)?,
        _ => return Err(Error::Config("set exactly one of dataset or synth".into())),
    };
    let need = cfg.splits.train + cfg.splits.dev + cfg.splits.test;
    if data.sequences.len() < need {
        return Err(Error::Schema(format!(
            "dataset has {} sequences, config needs {need}",
            data.sequences.len()
        )));
    }
    let partition = Partition {
        train: 0..cfg.splits.train,
        dev: cfg.splits.train..cfg.splits.train + cfg.splits.dev,
        test: cfg.splits.train + cfg.splits.dev..need,
    };
    Ok((data, partition))
}

/// Apply the horizon policy to each sequence in `range`; sequences the
/// policy cannot split (too short, or window out of range) are skipped
/// with a warning.
pub fn make_splits(
    data: &Dataset,
    range: std::ops::Range<usize>,
    policy: &HorizonPolicy,
) -> Vec<(usize, HorizonSplit)> {
    let mut out = Vec::new();
    for i in range {
        let seq = &data.sequences[i];
        let split = match policy {
            HorizonPolicy::Fixed { t_split, t_end } => split_at_horizon(seq, *t_split, *t_end),
            HorizonPolicy::TokenBudget { budget } => split_by_token_budget(seq, *budget),
        };
        match split {
            Ok(s) => out.push((i, s)),
            Err(e) => log::warn!("skipping sequence {i}: {e}"),
        }
    }
    out
}

fn train_subset(data: &Dataset, range: std::ops::Range<usize>) -> Result<Dataset> {
    Dataset::new(
        data.sequences[range].to_vec(),
        data.num_types,
        data.time_unit.clone(),
    )
}

/// Fit the base model on the training partition's full sequences.
pub fn fit_base_stage(cfg: &ExperimentConfig, data: &Dataset, part: &Partition) -> Result<FitResult> {
    let train = train_subset(data, part.train.clone())?;
    fit_mle(cfg.base_family, &train, &cfg.base_optimizer)
}

/// Train the energy function against the frozen base model.
pub fn energy_stage(
    cfg: &ExperimentConfig,
    base: &dyn IntensityModel,
    data: &Dataset,
    part: &Partition,
) -> Result<(EnergyFunction, Vec<crate::nce::NceEpoch>)> {
    let train_splits: Vec<HorizonSplit> = make_splits(data, part.train.clone(), &cfg.horizon)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let dev_splits: Vec<HorizonSplit> = make_splits(data, part.dev.clone(), &cfg.horizon)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let feat = FeatureConfig::new(
        data.num_types,
        cfg.energy.time_basis_count,
        cfg.energy.window_count,
    )?;
    let stream = RngStream::new(cfg.seed);
    let energy = EnergyFunction::new(feat, &cfg.energy.hidden, stream.named("energy-init"));
    train_energy(
        base,
        energy,
        &train_splits,
        &dev_splits,
        &cfg.train,
        stream.named("nce"),
    )
}

/// Prediction outputs for the test partition: the dump records plus
/// aligned (truth, chosen, first-proposal) triples for evaluation.
pub struct PredictOutput {
    pub records: Vec<PredictionRecord>,
    pub truths: Vec<EventSequence>,
    pub chosen: Vec<EventSequence>,
    /// First-drawn proposal per prefix: the base model's own
    /// prediction (what the pipeline degenerates to at zero energy).
    pub base_first: Vec<EventSequence>,
    pub proposals: Vec<Vec<WeightedProposal>>,
}

pub fn predict_stage(
    cfg: &ExperimentConfig,
    base: &dyn IntensityModel,
    energy: &EnergyFunction,
    data: &Dataset,
    part: &Partition,
) -> Result<PredictOutput> {
    let stream = RngStream::new(cfg.seed).named("proposals");
    let mut out = PredictOutput {
        records: Vec::new(),
        truths: Vec::new(),
        chosen: Vec::new(),
        base_first: Vec::new(),
        proposals: Vec::new(),
    };
    for (i, split) in make_splits(data, part.test.clone(), &cfg.horizon) {
        let (chosen, proposals) = predict(
            base,
            energy,
            &split.prefix,
            split.horizon_end,
            &cfg.infer,
            stream.substream(i as u64),
        )?;
        out.records.push(PredictionRecord {
            prefix_id: format!("seq-{i}"),
            horizon_start: split.horizon_start,
            horizon_end: split.horizon_end,
            chosen: EventJson::from_seq(&chosen),
            proposals: proposals
                .iter()
                .map(|p| ProposalJson {
                    weight: p.weight,
                    energy: p.energy,
                    events: EventJson::from_seq(&p.continuation),
                })
                .collect(),
        });
        out.base_first.push(proposals[0].continuation.clone());
        out.proposals.push(proposals);
        out.truths.push(split.truth);
        out.chosen.push(chosen);
    }
    Ok(out)
}

/// Final metric report; deterministic given config + seed (no
/// wall-clock fields).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub num_test_prefixes: usize,
    pub reranked: EvalReport,
    pub base_alone: EvalReport,
    pub cascade_reranked: CascadeReport,
    pub cascade_base: CascadeReport,
}

pub fn evaluate_stage(
    cfg: &ExperimentConfig,
    num_types: usize,
    out: &PredictOutput,
) -> Result<PipelineReport> {
    let reranked_pairs: Vec<(EventSequence, EventSequence)> = out
        .truths
        .iter()
        .cloned()
        .zip(out.chosen.iter().cloned())
        .collect();
    let base_pairs: Vec<(EventSequence, EventSequence)> = out
        .truths
        .iter()
        .cloned()
        .zip(out.base_first.iter().cloned())
        .collect();
    Ok(PipelineReport {
        seed: cfg.seed,
        num_test_prefixes: out.truths.len(),
        reranked: evaluate_pairs(&reranked_pairs, num_types, &cfg.otd)?,
        base_alone: evaluate_pairs(&base_pairs, num_types, &cfg.otd)?,
        cascade_reranked: cascading_analysis(&reranked_pairs)?,
        cascade_base: cascading_analysis(&base_pairs)?,
    })
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        writeln!(w, "{}", serde_json::to_string(item)?)?;
    }
    Ok(())
}

/// Run every stage in order and write all artifacts under `out_dir`:
/// fitted models, training logs, the prediction dump, energy
/// histograms, and `report.json`.
pub fn run_pipeline(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PipelineReport> {
    std::fs::create_dir_all(out_dir)?;
    let (data, part) = prepare_data(cfg)?;

    let fit = fit_base_stage(cfg, &data, &part)?;
    let base = fit.model.as_intensity();
    io::save_model(&out_dir.join("base_model.bin"), base)?;
    write_jsonl(&out_dir.join("base_training_log.jsonl"), &fit.log)?;

    let (energy, nce_log) = energy_stage(cfg, base, &data, &part)?;
    io::save_energy(&out_dir.join("energy_model.bin"), &energy)?;
    write_jsonl(&out_dir.join("energy_training_log.jsonl"), &nce_log)?;

    let predictions = predict_stage(cfg, base, &energy, &data, &part)?;
    write_jsonl(&out_dir.join("predictions.jsonl"), &predictions.records)?;

    // Energy histograms over the test split: observed continuations,
    // reranked picks, and raw noise proposals.
    let mut obs_energies = Vec::new();
    let mut chosen_energies = Vec::new();
    let mut noise_energies = Vec::new();
    for (i, (_, split)) in make_splits(&data, part.test.clone(), &cfg.horizon)
        .into_iter()
        .enumerate()
    {
        obs_energies.push(energy.energy(&split.prefix, &split.truth));
        for p in &predictions.proposals[i] {
            noise_energies.push(p.energy);
        }
        chosen_energies.push(energy.energy(&split.prefix, &predictions.chosen[i]));
    }
    for (label, values) in [
        ("observed", &obs_energies),
        ("reranked", &chosen_energies),
        ("noise", &noise_energies),
    ] {
        if !values.is_empty() {
            let hist = energy_histogram_export(label, values, 30)?;
            std::fs::write(out_dir.join(format!("energy_hist_{label}.csv")), hist.to_csv())?;
        }
    }

    let report = evaluate_stage(cfg, data.num_types, &predictions)?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("report.json"), json)?;
    Ok(report)
}
