//! Evaluation metrics: per-type count RMSE, optimal transport distance
//! between event sequences, the C_del sweep, and diagnostics.

mod cascade;
mod permutation;

pub use cascade::{cascading_analysis, CascadeGroup, CascadeReport, RegressionFit};
pub use permutation::paired_permutation_test;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::EventSequence;

/// Deletion/insertion cost settings for the OTD sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OtdConfig {
    pub c_del: f64,
    pub c_del_grid: Vec<f64>,
}

impl Default for OtdConfig {
    fn default() -> Self {
        OtdConfig {
            c_del: 1.0,
            c_del_grid: vec![0.05, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
        }
    }
}

impl OtdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_del <= 0.0 || self.c_del_grid.iter().any(|&c| c <= 0.0) {
            return Err(Error::Config("all C_del values must be > 0".into()));
        }
        Ok(())
    }
}

/// Corpus-level evaluation summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    /// `(c_del, mean OTD)` per grid point, grid order.
    pub otd_by_cdel: Vec<(f64, f64)>,
    /// Arithmetic mean over the grid.
    pub otd_mean: f64,
    /// Per-sequence per-type counts of the truth.
    pub truth_counts: Vec<Vec<usize>>,
    /// Per-sequence per-type counts of the prediction.
    pub pred_counts: Vec<Vec<usize>>,
}

/// `√((1/K) Σ_k (C_k - Ĉ_k)²)` over per-type token counts.
pub fn count_rmse(truth: &EventSequence, pred: &EventSequence, num_types: usize) -> f64 {
    let ct = truth.type_counts(num_types);
    let cp = pred.type_counts(num_types);
    let sq: f64 = ct
        .iter()
        .zip(&cp)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    (sq / num_types as f64).sqrt()
}

/// Optimal transport distance between two event sequences.
///
/// Minimum total cost over monotone alignments: a same-type match
/// costs `|Δt|`; every unmatched event costs `c_del` (so a type change
/// is delete + insert at `2·c_del`). Dynamic program over the O(n·m)
/// table.
pub fn otd(a: &EventSequence, b: &EventSequence, c_del: f64) -> Result<f64> {
    if c_del <= 0.0 {
        return Err(Error::Precondition(format!("c_del must be > 0, got {c_del}")));
    }
    let ea = a.events();
    let eb = b.events();
    let n = ea.len();
    let m = eb.len();
    // Border cells accumulate one deletion at a time so that every
    // cell is a plain left-to-right sum over its alignment path.
    let mut prev: Vec<f64> = Vec::with_capacity(m + 1);
    prev.push(0.0);
    for j in 1..=m {
        prev.push(prev[j - 1] + c_del);
    }
    let mut cur = vec![0.0; m + 1];
    for i in 1..=n {
        cur[0] = prev[0] + c_del;
        for j in 1..=m {
            let mut best = (prev[j] + c_del).min(cur[j - 1] + c_del);
            if ea[i - 1].type_id == eb[j - 1].type_id {
                best = best.min(prev[j - 1] + (ea[i - 1].time - eb[j - 1].time).abs());
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// OTD at every grid point plus the arithmetic mean over the grid.
pub fn otd_sweep(
    truth: &EventSequence,
    pred: &EventSequence,
    cfg: &OtdConfig,
) -> Result<(Vec<(f64, f64)>, f64)> {
    cfg.validate()?;
    let mut by_cdel = Vec::with_capacity(cfg.c_del_grid.len());
    for &c in &cfg.c_del_grid {
        by_cdel.push((c, otd(truth, pred, c)?));
    }
    let mean = by_cdel.iter().map(|&(_, v)| v).sum::<f64>() / by_cdel.len() as f64;
    Ok((by_cdel, mean))
}

/// Corpus evaluation over `(truth, pred)` pairs.
pub fn evaluate_pairs(
    pairs: &[(EventSequence, EventSequence)],
    num_types: usize,
    cfg: &OtdConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Precondition("evaluate_pairs needs at least one pair".into()));
    }
    let n = pairs.len() as f64;
    let rmse = pairs
        .iter()
        .map(|(t, p)| count_rmse(t, p, num_types))
        .sum::<f64>()
        / n;
    let mut by_cdel: Vec<(f64, f64)> = cfg.c_del_grid.iter().map(|&c| (c, 0.0)).collect();
    for (t, p) in pairs {
        for (slot, &c) in cfg.c_del_grid.iter().enumerate() {
            by_cdel[slot].1 += otd(t, p, c)?;
        }
    }
    for entry in &mut by_cdel {
        entry.1 /= n;
    }
    let otd_mean = by_cdel.iter().map(|&(_, v)| v).sum::<f64>() / by_cdel.len() as f64;
    Ok(EvalReport {
        rmse,
        otd_by_cdel: by_cdel,
        otd_mean,
        truth_counts: pairs.iter().map(|(t, _)| t.type_counts(num_types)).collect(),
        pred_counts: pairs.iter().map(|(_, p)| p.type_counts(num_types)).collect(),
    })
}

/// One histogram row: `[bin_lo, bin_hi)` and its count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Histogram of an energy population, exportable as CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyHistogram {
    pub label: String,
    pub rows: Vec<HistogramRow>,
}

impl EnergyHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.bin_lo, r.bin_hi, r.count));
        }
        out
    }
}

/// Equal-width histogram of energy scores for one population label.
pub fn energy_histogram_export(
    label: &str,
    energies: &[f64],
    bins: usize,
) -> Result<EnergyHistogram> {
    if energies.is_empty() {
        return Err(Error::Precondition("cannot histogram an empty energy list".into()));
    }
    if bins == 0 {
        return Err(Error::Precondition("bins must be >= 1".into()));
    }
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &e in energies {
        let idx = (((e - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let rows = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            bin_lo: lo + i as f64 * width,
            bin_hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect();
    Ok(EnergyHistogram {
        label: label.to_string(),
        rows,
    })
}
