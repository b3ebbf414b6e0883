//! Command-line surface over the pipeline stages.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pointcast::error::Error;
use pointcast::infer::InferConfig;
use pointcast::io::{self, ExperimentConfig};
use pointcast::metrics::{energy_histogram_export, evaluate_pairs, cascading_analysis, OtdConfig};
use pointcast::nce::NceObjective;
use pointcast::pipeline::{self, PredictionRecord};
use pointcast::seq::{split_at_horizon, Event, EventSequence};
use pointcast::synth::{generate, SynthSpec};

#[derive(Parser)]
#[command(name = "pointcast", about = "Long-horizon event-sequence forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the autoregressive base model by maximum likelihood.
    FitBase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the energy function by noise-contrastive estimation.
    FitEnergy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_objective)]
        objective: Option<NceObjective>,
        #[arg(long)]
        regularize: bool,
        #[arg(long)]
        n_noise: Option<usize>,
    },
    /// Predict test-split continuations by normalized importance sampling.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        energy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        m_proposals: Option<usize>,
    },
    /// Evaluate a prediction dump against the true continuations.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run fit-base, fit-energy, predict, and evaluate in order.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_objective(s: &str) -> Result<NceObjective, String> {
    match s {
        "binary" => Ok(NceObjective::Binary),
        "multi" => Ok(NceObjective::Multi),
        other => Err(format!("unknown objective {other:?} (use binary|multi)")),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Version { .. } | Error::Format(_) => 2,
        Error::Numerical(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> pointcast::Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        writeln!(w, "{}", serde_json::to_string(item)?)?;
    }
    Ok(())
}

fn run(cmd: Command) -> pointcast::Result<()> {
    match cmd {
        Command::FitBase { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            std::fs::create_dir_all(&out)?;
            let (data, part) = pipeline::prepare_data(&cfg)?;
            let fit = pipeline::fit_base_stage(&cfg, &data, &part)?;
            io::save_model(&out.join("base_model.bin"), fit.model.as_intensity())?;
            write_jsonl(&out.join("base_training_log.jsonl"), &fit.log)?;
            println!("wrote {}", out.join("base_model.bin").display());
            Ok(())
        }
        Command::FitEnergy {
            config,
            base,
            out,
            objective,
            regularize,
            n_noise,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(obj) = objective {
                cfg.train.objective = obj;
            }
            if regularize {
                cfg.train.regularize = true;
            }
            if let Some(n) = n_noise {
                cfg.train.n_noise = n;
            }
            cfg.train.validate()?;
            std::fs::create_dir_all(&out)?;
            let base = io::load_model(&base)?;
            let (data, part) = pipeline::prepare_data(&cfg)?;
            let (energy, log) =
                pipeline::energy_stage(&cfg, base.as_intensity(), &data, &part)?;
            io::save_energy(&out.join("energy_model.bin"), &energy)?;
            write_jsonl(&out.join("energy_training_log.jsonl"), &log)?;
            println!("wrote {}", out.join("energy_model.bin").display());
            Ok(())
        }
        Command::Predict {
            config,
            base,
            energy,
            out,
            m_proposals,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(m) = m_proposals {
                cfg.infer = InferConfig { m_proposals: m };
            }
            std::fs::create_dir_all(&out)?;
            let base = io::load_model(&base)?;
            let energy = io::load_energy(&energy)?;
            let (data, part) = pipeline::prepare_data(&cfg)?;
            let preds =
                pipeline::predict_stage(&cfg, base.as_intensity(), &energy, &data, &part)?;
            write_jsonl(&out.join("predictions.jsonl"), &preds.records)?;
            println!("wrote {}", out.join("predictions.jsonl").display());
            Ok(())
        }
        Command::Evaluate { pred, truth, out } => {
            evaluate_cmd(&pred, &truth, &out)
        }
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec: SynthSpec =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let data = generate(&spec)?;
            io::save_dataset(&out, &data)?;
            println!(
                "wrote {} ({} sequences, {} events)",
                out.display(),
                data.sequences.len(),
                data.total_events()
            );
            Ok(())
        }
        Command::Pipeline { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = pipeline::run_pipeline(&cfg, &out)?;
            println!(
                "reranked rmse {:.4} (base {:.4}); reranked mean OTD {:.4} (base {:.4})",
                report.reranked.rmse,
                report.base_alone.rmse,
                report.reranked.otd_mean,
                report.base_alone.otd_mean
            );
            println!("report at {}", out.join("report.json").display());
            Ok(())
        }
    }
}

fn evaluate_cmd(pred: &Path, truth: &Path, out: &Path) -> pointcast::Result<()> {
    use std::io::BufRead;
    std::fs::create_dir_all(out)?;
    let data = io::load_dataset(truth)?;

    let file = std::fs::File::open(pred)?;
    let mut records: Vec<PredictionRecord> = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    if records.is_empty() {
        return Err(Error::Schema("prediction dump is empty".into()));
    }

    let mut pairs = Vec::new();
    let mut chosen_energies = Vec::new();
    let mut noise_energies = Vec::new();
    for rec in &records {
        let idx: usize = rec
            .prefix_id
            .strip_prefix("seq-")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Schema(format!("bad prefix_id {:?}", rec.prefix_id)))?;
        let seq = data
            .sequences
            .get(idx)
            .ok_or_else(|| Error::Schema(format!("prefix_id {:?} out of range", rec.prefix_id)))?;
        let split = split_at_horizon(seq, rec.horizon_start, rec.horizon_end)?;
        let chosen = EventSequence::new(
            rec.chosen.iter().map(|e| Event::new(e.t, e.k)).collect(),
            rec.horizon_start,
            rec.horizon_end,
        )?;
        pairs.push((split.truth, chosen));
        for p in &rec.proposals {
            noise_energies.push(p.energy);
        }
        if let Some(best) = rec
            .proposals
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
        {
            chosen_energies.push(best.energy);
        }
    }

    let otd_cfg = OtdConfig::default();
    let report = evaluate_pairs(&pairs, data.num_types, &otd_cfg)?;
    let cascade = cascading_analysis(&pairs)?;
    let doc = serde_json::json!({
        "eval": report,
        "cascade": cascade,
    });
    std::fs::write(out.join("eval_report.json"), serde_json::to_string_pretty(&doc)?)?;

    for (label, values) in [("chosen", &chosen_energies), ("noise", &noise_energies)] {
        if !values.is_empty() {
            let hist = energy_histogram_export(label, values, 30)?;
            std::fs::write(out.join(format!("energy_hist_{label}.csv")), hist.to_csv())?;
        }
    }
    println!(
        "rmse {:.4}, mean OTD {:.4}; report at {}",
        report.rmse,
        report.otd_mean,
        out.join("eval_report.json").display()
    );
    Ok(())
}
