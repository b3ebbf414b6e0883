//! Dataset ingestion (JSON lines), binary model persistence, and
//! experiment configuration.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyFunction, FeatureConfig};
use crate::error::{Error, Result};
use crate::model::{
    AnyModel, HawkesExpModel, IntensityModel, ModelFamily, OptimizerConfig, PoissonModel,
};
use crate::nce::TrainConfig;
use crate::infer::InferConfig;
use crate::metrics::OtdConfig;
use crate::seq::{Dataset, Event, EventSequence};
use crate::synth::SynthSpec;

const MODEL_MAGIC: &[u8; 4] = b"PCMF";
const MODEL_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Dataset files: one header line, then one JSON object per sequence.

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    num_types: usize,
    #[serde(default = "default_time_unit")]
    time_unit: String,
    /// Base of the `k` field in this file; 1-based files are shifted
    /// down on load.
    #[serde(default)]
    k_base: usize,
}

fn default_time_unit() -> String {
    "unit".into()
}

#[derive(Debug, Serialize, Deserialize)]
struct SeqRecord {
    seq_id: String,
    #[serde(default)]
    t_start: f64,
    t_end: f64,
    events: Vec<EventRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    t: f64,
    k: usize,
}

/// Parse a JSON-lines dataset file. The first line is a header object
/// carrying `num_types`, `time_unit`, and optionally `k_base`;
/// duplicate timestamps are perturbed per the ingestion rule.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty dataset file".into(),
        })?;
    let header: DatasetHeader =
        serde_json::from_str(&header_line?).map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad header: {e}"),
        })?;
    if header.k_base > 1 {
        return Err(Error::Schema(format!("unsupported k_base {}", header.k_base)));
    }

    let mut sequences = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeqRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let mut events = Vec::with_capacity(rec.events.len());
        for ev in &rec.events {
            if ev.k < header.k_base {
                return Err(Error::Schema(format!(
                    "sequence {:?}: k={} below k_base={}",
                    rec.seq_id, ev.k, header.k_base
                )));
            }
            let k = ev.k - header.k_base;
            if k >= header.num_types {
                return Err(Error::Schema(format!(
                    "sequence {:?}: k={} >= num_types {}",
                    rec.seq_id, ev.k, header.num_types
                )));
            }
            events.push(Event::new(ev.t, k));
        }
        sequences.push(EventSequence::sanitized(events, rec.t_start, rec.t_end)?);
    }
    Dataset::new(sequences, header.num_types, header.time_unit)
}

/// Write a dataset in the same JSON-lines format (always 0-based `k`).
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let header = DatasetHeader {
        num_types: data.num_types,
        time_unit: data.time_unit.clone(),
        k_base: 0,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for (i, seq) in data.sequences.iter().enumerate() {
        let rec = SeqRecord {
            seq_id: format!("seq-{i}"),
            t_start: seq.t_start(),
            t_end: seq.t_end(),
            events: seq
                .events()
                .iter()
                .map(|e| EventRecord {
                    t: e.time,
                    k: e.type_id,
                })
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Binary model files: magic, version, family tag, shape, LE f64 payload.

struct ModelWriter<W: Write> {
    w: W,
}

impl<W: Write> ModelWriter<W> {
    fn new(mut w: W, family: &str) -> Result<Self> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(family.len() as u32).to_le_bytes())?;
        w.write_all(family.as_bytes())?;
        Ok(ModelWriter { w })
    }

    fn write_usize(&mut self, v: usize) -> Result<()> {
        self.w.write_all(&(v as u64).to_le_bytes())?;
        Ok(())
    }

    fn write_f64s(&mut self, vs: &[f64]) -> Result<()> {
        self.write_usize(vs.len())?;
        for v in vs {
            self.w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

struct ModelReader<R: Read> {
    r: R,
}

impl<R: Read> ModelReader<R> {
    fn new(mut r: R) -> Result<(Self, String)> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Corrupt("file too short for magic".into()))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {magic:?}, expected {MODEL_MAGIC:?}"
            )));
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)
            .map_err(|_| Error::Corrupt("truncated version field".into()))?;
        let version = u32::from_le_bytes(buf4);
        if version != MODEL_VERSION {
            return Err(Error::Version {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        r.read_exact(&mut buf4)
            .map_err(|_| Error::Corrupt("truncated family tag length".into()))?;
        let tag_len = u32::from_le_bytes(buf4) as usize;
        if tag_len > 64 {
            return Err(Error::Corrupt(format!("implausible family tag length {tag_len}")));
        }
        let mut tag = vec![0u8; tag_len];
        r.read_exact(&mut tag)
            .map_err(|_| Error::Corrupt("truncated family tag".into()))?;
        let tag = String::from_utf8(tag).map_err(|_| Error::Corrupt("non-UTF8 family tag".into()))?;
        Ok((ModelReader { r }, tag))
    }

    fn read_usize(&mut self) -> Result<usize> {
        let mut buf = [0u8; 8];
        self.r
            .read_exact(&mut buf)
            .map_err(|_| Error::Corrupt("truncated integer field".into()))?;
        Ok(u64::from_le_bytes(buf) as usize)
    }

    fn read_f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.read_usize()?;
        if n > 100_000_000 {
            return Err(Error::Corrupt(format!("implausible vector length {n}")));
        }
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            self.r
                .read_exact(&mut buf)
                .map_err(|_| Error::Corrupt("truncated parameter payload".into()))?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    }
}

/// Persist an intensity model; the round trip is bit-exact.
pub fn save_model(path: &Path, model: &dyn IntensityModel) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = ModelWriter::new(BufWriter::new(file), model.family().tag())?;
    w.write_usize(model.num_types())?;
    w.write_f64s(&model.parameters())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<AnyModel> {
    let file = std::fs::File::open(path)?;
    let (mut r, tag) = ModelReader::new(BufReader::new(file))?;
    let family = ModelFamily::from_tag(&tag)?;
    let num_types = r.read_usize()?;
    let params = r.read_f64s()?;
    Ok(match family {
        ModelFamily::Poisson => AnyModel::Poisson(PoissonModel::from_parameters(num_types, &params)?),
        ModelFamily::HawkesExp => {
            AnyModel::HawkesExp(HawkesExpModel::from_parameters(num_types, &params)?)
        }
    })
}

/// Persist the energy function: feature config, layer shapes,
/// standardization vectors, parameters.
pub fn save_energy(path: &Path, energy: &EnergyFunction) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = ModelWriter::new(BufWriter::new(file), "energy_mlp")?;
    let cfg = energy.feature_config();
    w.write_usize(cfg.num_types)?;
    w.write_usize(cfg.time_basis_count)?;
    w.write_usize(cfg.window_count)?;
    w.write_usize(energy.layer_sizes().len())?;
    for &s in energy.layer_sizes() {
        w.write_usize(s)?;
    }
    let (mean, std) = energy.standardization();
    w.write_f64s(mean)?;
    w.write_f64s(std)?;
    w.write_f64s(energy.parameters())?;
    Ok(())
}

pub fn load_energy(path: &Path) -> Result<EnergyFunction> {
    let file = std::fs::File::open(path)?;
    let (mut r, tag) = ModelReader::new(BufReader::new(file))?;
    if tag != "energy_mlp" {
        return Err(Error::Format(format!("expected energy_mlp file, found {tag:?}")));
    }
    let num_types = r.read_usize()?;
    let time_basis_count = r.read_usize()?;
    let window_count = r.read_usize()?;
    let cfg = FeatureConfig::new(num_types, time_basis_count, window_count)?;
    let n_layers = r.read_usize()?;
    if n_layers > 64 {
        return Err(Error::Corrupt(format!("implausible layer count {n_layers}")));
    }
    let mut layer_sizes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        layer_sizes.push(r.read_usize()?);
    }
    let mean = r.read_f64s()?;
    let std = r.read_f64s()?;
    let params = r.read_f64s()?;
    EnergyFunction::from_parts(cfg, layer_sizes, params, mean, std)
}

// ---------------------------------------------------------------------------
// Experiment configuration.

/// How prefixes and horizons are carved from each sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum HorizonPolicy {
    /// One global `(T, T')` for every sequence.
    Fixed { t_split: f64, t_end: f64 },
    /// Per-sequence split leaving `budget` trailing events.
    TokenBudget { budget: usize },
}

/// Energy architecture knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyArch {
    pub time_basis_count: usize,
    pub window_count: usize,
    pub hidden: Vec<usize>,
}

impl Default for EnergyArch {
    fn default() -> Self {
        EnergyArch {
            time_basis_count: 8,
            window_count: 4,
            hidden: vec![64, 32],
        }
    }
}

/// Train/dev/test partition sizes (head of the dataset, in order).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Full experiment description; all randomness flows from `seed`
/// through named substreams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Path to a dataset file; mutually exclusive with `synth`.
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
    pub horizon: HorizonPolicy,
    pub splits: SplitCounts,
    #[serde(default = "default_family")]
    pub base_family: ModelFamily,
    #[serde(default)]
    pub base_optimizer: OptimizerConfig,
    #[serde(default)]
    pub energy: EnergyArch,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub infer: InferConfig,
    #[serde(default)]
    pub otd: OtdConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_family() -> ModelFamily {
    ModelFamily::HawkesExp
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either dataset or synth, not both".into()))
            }
            (None, None) => return Err(Error::Config("set one of dataset or synth".into())),
            (Some(p), None) => {
                if !Path::new(p).exists() {
                    return Err(Error::Config(format!("dataset path {p:?} does not exist")));
                }
            }
            _ => {}
        }
        self.train.validate()?;
        self.otd.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_likelihood;
    use crate::thinning::RngStream;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let seqs = vec![
            EventSequence::new(vec![Event::new(0.3, 0), Event::new(0.8, 1)], 0.0, 1.0).unwrap(),
            EventSequence::empty(0.0, 1.0),
        ];
        let data = Dataset::new(seqs, 2, "3 hours".into()).unwrap();
        save_dataset(&path, &data).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded, data);
    }

    #[test]
    fn one_based_files_are_shifted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(
            &path,
            "{\"num_types\":2,\"time_unit\":\"h\",\"k_base\":1}\n\
             {\"seq_id\":\"a\",\"t_end\":1.0,\"events\":[{\"t\":0.3,\"k\":1}]}\n",
        )
        .unwrap();
        let data = load_dataset(&path).unwrap();
        assert_eq!(data.sequences[0].events()[0].type_id, 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        std::fs::write(
            &path,
            "{\"num_types\":2}\n{\"seq_id\":\"a\",\"t_end\":1.0,\"events\":[{\"t\":0.3,\"k\":5}]}\nnot json\n",
        )
        .unwrap();
        match load_dataset(&path) {
            Err(Error::Schema(msg)) => assert!(msg.contains("k=5")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn model_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let m = HawkesExpModel::new(
            vec![0.31, 0.62],
            vec![0.11, 0.22, 0.33, 0.44],
            vec![1.5, 2.5, 0.5, 1.0],
        )
        .unwrap();
        save_model(&path, &m).unwrap();
        let loaded = load_model(&path).unwrap();
        let probe = EventSequence::new(vec![Event::new(0.4, 0), Event::new(0.9, 1)], 0.0, 2.0).unwrap();
        let a = log_likelihood(&m, &probe);
        let b = log_likelihood(loaded.as_intensity(), &probe);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn energy_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.bin");
        let cfg = FeatureConfig::new(3, 4, 2).unwrap();
        let mut e = EnergyFunction::default_for(cfg, RngStream::new(11));
        e.fit_standardization(&[vec![1.0; cfg.feature_dim()], vec![3.0; cfg.feature_dim()]]);
        save_energy(&path, &e).unwrap();
        let loaded = load_energy(&path).unwrap();
        assert_eq!(e, loaded);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let m = PoissonModel::new(vec![1.0, 2.0]).unwrap();
        save_model(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Corrupt(_))));
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        std::fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));
    }

    #[test]
    fn config_requires_exactly_one_source() {
        let cfg = ExperimentConfig {
            dataset: None,
            synth: None,
            horizon: HorizonPolicy::TokenBudget { budget: 20 },
            splits: SplitCounts {
                train: 10,
                dev: 2,
                test: 2,
            },
            base_family: ModelFamily::HawkesExp,
            base_optimizer: OptimizerConfig::default(),
            energy: EnergyArch::default(),
            train: TrainConfig::default(),
            infer: InferConfig::default(),
            otd: OtdConfig::default(),
            seed: 0,
        };
        assert!(cfg.validate().is_err());
    }
}
