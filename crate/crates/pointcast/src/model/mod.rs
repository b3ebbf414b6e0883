//! Autoregressive temporal point-process base models: conditional
//! intensities, log-likelihood, and maximum-likelihood training.

mod adam;
mod fit;
mod hawkes;
mod poisson;

pub use adam::{Adam, OptimizerConfig};
pub use fit::{fit_mle, FitEpoch, FitResult};
pub use hawkes::HawkesExpModel;
pub use poisson::PoissonModel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::{Event, EventSequence};

/// Model family tag, used for dispatch and persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Poisson,
    HawkesExp,
}

impl ModelFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelFamily::Poisson => "poisson",
            ModelFamily::HawkesExp => "hawkes_exp",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "poisson" => Ok(ModelFamily::Poisson),
            "hawkes_exp" => Ok(ModelFamily::HawkesExp),
            other => Err(Error::Format(format!("unknown model family tag {other:?}"))),
        }
    }
}

/// A conditional-intensity model over typed events.
///
/// `hist` always means the events strictly before the query time.
pub trait IntensityModel: Send + Sync {
    fn num_types(&self) -> usize;

    /// Conditional intensity of type `k` at time `t` given `hist`.
    fn intensity(&self, k: usize, t: f64, hist: &[Event]) -> f64;

    /// Sum of all per-type intensities at time `t`.
    fn total_intensity(&self, t: f64, hist: &[Event]) -> f64 {
        (0..self.num_types())
            .map(|k| self.intensity(k, t, hist))
            .sum()
    }

    /// Integral of the total intensity over `[t_a, t_b]`, with the
    /// conditioning history growing as events in `events` occur.
    fn compensator(&self, events: &[Event], t_a: f64, t_b: f64) -> f64;

    /// Finite bound dominating the total intensity on the interval
    /// from `t0` until the next accepted event (or the horizon).
    fn upper_bound(&self, t0: f64, hist: &[Event]) -> f64;

    /// Constrained parameters as a flat vector.
    fn parameters(&self) -> Vec<f64>;

    fn family(&self) -> ModelFamily;

    /// Log-likelihood of `seq` plus its gradient w.r.t. the
    /// constrained parameter vector, in `parameters()` order.
    fn log_likelihood_grad(&self, seq: &EventSequence) -> (f64, Vec<f64>);
}

/// A type-erased model loaded from disk or chosen by family.
pub enum AnyModel {
    Poisson(PoissonModel),
    HawkesExp(HawkesExpModel),
}

impl AnyModel {
    pub fn as_intensity(&self) -> &dyn IntensityModel {
        match self {
            AnyModel::Poisson(m) => m,
            AnyModel::HawkesExp(m) => m,
        }
    }
}

/// Log-likelihood of `seq` under `model` (Poisson/Hawkes compensators
/// are closed-form, no quadrature).
///
/// A zero intensity at an observed event makes the sequence impossible
/// under the model; `-inf` is returned for that degenerate case.
pub fn log_likelihood(model: &dyn IntensityModel, seq: &EventSequence) -> f64 {
    let events = seq.events();
    let mut ll = 0.0;
    for (i, ev) in events.iter().enumerate() {
        let lambda = model.intensity(ev.type_id, ev.time, &events[..i]);
        if lambda <= 0.0 {
            log::warn!(
                "degenerate log-likelihood: zero intensity at event {i} (t={}, k={})",
                ev.time,
                ev.type_id
            );
            return f64::NEG_INFINITY;
        }
        ll += lambda.ln();
    }
    ll - model.compensator(events, seq.t_start(), seq.t_end())
}

/// Intensity of type `k` at time `t`, requiring `t` after the history.
pub fn intensity_at(
    model: &dyn IntensityModel,
    k: usize,
    t: f64,
    hist: &EventSequence,
) -> Result<f64> {
    if let Some(last) = hist.last_time() {
        if t <= last {
            return Err(Error::Ordering(format!(
                "query time {t} not after last history event at {last}"
            )));
        }
    }
    Ok(model.intensity(k, t, hist.events()))
}

/// Thinning bound λ* at `t0` given `hist` (must not precede the history).
pub fn thinning_upper_bound(
    model: &dyn IntensityModel,
    t0: f64,
    hist: &EventSequence,
) -> Result<f64> {
    if let Some(last) = hist.last_time() {
        if t0 < last {
            return Err(Error::Ordering(format!(
                "bound time {t0} precedes last history event at {last}"
            )));
        }
    }
    Ok(model.upper_bound(t0, hist.events()))
}

/// Numerically stable softplus, `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of softplus on positive inputs.
pub(crate) fn softplus_inv(y: f64) -> f64 {
    // ln(e^y - 1); for large y this is ~y, for small y ~ln(y).
    if y > 30.0 {
        y
    } else {
        y.exp_m1().max(f64::MIN_POSITIVE).ln()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn softplus_round_trip() {
        for &y in &[1e-6, 0.1, 1.0, 5.0, 40.0] {
            assert_relative_eq!(softplus(softplus_inv(y)), y, max_relative = 1e-9);
        }
    }
}
