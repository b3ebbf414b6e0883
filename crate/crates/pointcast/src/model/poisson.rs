use crate::error::{Error, Result};
use crate::seq::{Event, EventSequence};

use super::{IntensityModel, ModelFamily};

/// Homogeneous Poisson process: history-independent per-type rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel {
    rates: Vec<f64>,
}

impl PoissonModel {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Config("PoissonModel needs at least one rate".into()));
        }
        if rates.iter().any(|&r| !r.is_finite() || r < 0.0) {
            return Err(Error::Config("Poisson rates must be finite and >= 0".into()));
        }
        Ok(PoissonModel { rates })
    }

    pub fn from_parameters(num_types: usize, params: &[f64]) -> Result<Self> {
        if params.len() != num_types {
            return Err(Error::Format(format!(
                "Poisson parameter count {} != num_types {num_types}",
                params.len()
            )));
        }
        Self::new(params.to_vec())
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

impl IntensityModel for PoissonModel {
    fn num_types(&self) -> usize {
        self.rates.len()
    }

    fn intensity(&self, k: usize, _t: f64, _hist: &[Event]) -> f64 {
        self.rates[k]
    }

    fn compensator(&self, _events: &[Event], t_a: f64, t_b: f64) -> f64 {
        self.total_rate() * (t_b - t_a)
    }

    fn upper_bound(&self, _t0: f64, _hist: &[Event]) -> f64 {
        self.total_rate()
    }

    fn parameters(&self) -> Vec<f64> {
        self.rates.clone()
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::Poisson
    }

    fn log_likelihood_grad(&self, seq: &EventSequence) -> (f64, Vec<f64>) {
        let window = seq.t_end() - seq.t_start();
        let counts = seq.type_counts(self.rates.len());
        let mut ll = -self.total_rate() * window;
        let mut grad = vec![-window; self.rates.len()];
        for (k, &n) in counts.iter().enumerate() {
            if n > 0 {
                if self.rates[k] <= 0.0 {
                    return (f64::NEG_INFINITY, vec![f64::NAN; self.rates.len()]);
                }
                ll += n as f64 * self.rates[k].ln();
                grad[k] += n as f64 / self.rates[k];
            }
        }
        (ll, grad)
    }
}
