use crate::error::{Error, Result};
use crate::seq::{Event, EventSequence};

use super::{IntensityModel, ModelFamily};

/// Multivariate Hawkes process with exponential excitation kernels.
///
/// `λ_k(t | hist) = mu[k] + Σ_{(t_j, k_j): t_j < t} alpha[k_j][k] · exp(-decay[k_j][k] · (t - t_j))`
///
/// With nonnegative `alpha` and positive `decay`, the total intensity is
/// non-increasing between events, so the intensity just after the last
/// event is a valid thinning bound.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesExpModel {
    num_types: usize,
    /// Base rates, length K.
    mu: Vec<f64>,
    /// Excitation weights, K×K row-major indexed `[source * K + target]`.
    alpha: Vec<f64>,
    /// Decay rates, same layout as `alpha`.
    decay: Vec<f64>,
}

impl HawkesExpModel {
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, decay: Vec<f64>) -> Result<Self> {
        let k = mu.len();
        if k == 0 {
            return Err(Error::Config("HawkesExpModel needs at least one type".into()));
        }
        if alpha.len() != k * k || decay.len() != k * k {
            return Err(Error::Config(format!(
                "alpha/decay must be {k}x{k} matrices"
            )));
        }
        if mu.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Config("mu entries must be finite and >= 0".into()));
        }
        if alpha.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Config("alpha entries must be finite and >= 0".into()));
        }
        if decay.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::Config("decay entries must be finite and > 0".into()));
        }
        Ok(HawkesExpModel {
            num_types: k,
            mu,
            alpha,
            decay,
        })
    }

    /// Scalar convenience constructor for K=1.
    pub fn scalar(mu: f64, alpha: f64, decay: f64) -> Result<Self> {
        Self::new(vec![mu], vec![alpha], vec![decay])
    }

    /// Parameter layout: mu (K) ++ alpha (K²) ++ decay (K²).
    pub fn from_parameters(num_types: usize, params: &[f64]) -> Result<Self> {
        let k = num_types;
        let expected = k + 2 * k * k;
        if params.len() != expected {
            return Err(Error::Format(format!(
                "Hawkes parameter count {} != expected {expected}",
                params.len()
            )));
        }
        Self::new(
            params[..k].to_vec(),
            params[k..k + k * k].to_vec(),
            params[k + k * k..].to_vec(),
        )
    }

    pub fn param_count(num_types: usize) -> usize {
        num_types + 2 * num_types * num_types
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    #[inline]
    fn idx(&self, source: usize, target: usize) -> usize {
        source * self.num_types + target
    }
}

impl IntensityModel for HawkesExpModel {
    fn num_types(&self) -> usize {
        self.num_types
    }

    fn intensity(&self, k: usize, t: f64, hist: &[Event]) -> f64 {
        let mut lambda = self.mu[k];
        for ev in hist {
            if ev.time >= t {
                break;
            }
            let ij = self.idx(ev.type_id, k);
            lambda += self.alpha[ij] * (-self.decay[ij] * (t - ev.time)).exp();
        }
        lambda
    }

    fn compensator(&self, events: &[Event], t_a: f64, t_b: f64) -> f64 {
        let mut total = self.mu.iter().sum::<f64>() * (t_b - t_a);
        for ev in events {
            if ev.time >= t_b {
                break;
            }
            // Each event contributes a decaying tail over [max(t_a, t_j), t_b].
            let lo = ev.time.max(t_a);
            for target in 0..self.num_types {
                let ij = self.idx(ev.type_id, target);
                let d = self.decay[ij];
                total += self.alpha[ij] / d
                    * ((-d * (lo - ev.time)).exp() - (-d * (t_b - ev.time)).exp());
            }
        }
        total
    }

    fn upper_bound(&self, t0: f64, hist: &[Event]) -> f64 {
        // Total intensity just after t0 (events at exactly t0 count);
        // valid until the next event because the total decays between events.
        let mut total = self.mu.iter().sum::<f64>();
        for ev in hist {
            if ev.time > t0 {
                break;
            }
            for target in 0..self.num_types {
                let ij = self.idx(ev.type_id, target);
                total += self.alpha[ij] * (-self.decay[ij] * (t0 - ev.time)).exp();
            }
        }
        total
    }

    fn parameters(&self) -> Vec<f64> {
        let mut p = self.mu.clone();
        p.extend_from_slice(&self.alpha);
        p.extend_from_slice(&self.decay);
        p
    }

    fn family(&self) -> ModelFamily {
        ModelFamily::HawkesExp
    }

    fn log_likelihood_grad(&self, seq: &EventSequence) -> (f64, Vec<f64>) {
        let k = self.num_types;
        let events = seq.events();
        let window = seq.t_end() - seq.t_start();
        let mut ll = -self.mu.iter().sum::<f64>() * window;
        let mut g_mu = vec![-window; k];
        let mut g_alpha = vec![0.0; k * k];
        let mut g_decay = vec![0.0; k * k];

        // Event terms: log λ_{k_i}(t_i) and its partials.
        for (i, ev) in events.iter().enumerate() {
            let b = ev.type_id;
            let mut lambda = self.mu[b];
            for prev in &events[..i] {
                let ij = self.idx(prev.type_id, b);
                lambda += self.alpha[ij] * (-self.decay[ij] * (ev.time - prev.time)).exp();
            }
            if lambda <= 0.0 {
                return (f64::NEG_INFINITY, vec![f64::NAN; k + 2 * k * k]);
            }
            ll += lambda.ln();
            g_mu[b] += 1.0 / lambda;
            for prev in &events[..i] {
                let ij = self.idx(prev.type_id, b);
                let u = ev.time - prev.time;
                let e = (-self.decay[ij] * u).exp();
                g_alpha[ij] += e / lambda;
                g_decay[ij] -= self.alpha[ij] * u * e / lambda;
            }
        }

        // Compensator terms: each event's decaying tail up to t_end.
        for ev in events {
            let v = seq.t_end() - ev.time;
            for target in 0..k {
                let ij = self.idx(ev.type_id, target);
                let d = self.decay[ij];
                let e = (-d * v).exp();
                let tail = (1.0 - e) / d;
                ll -= self.alpha[ij] * tail;
                g_alpha[ij] -= tail;
                g_decay[ij] -= self.alpha[ij] * (v * e / d - tail / d);
            }
        }

        let mut grad = g_mu;
        grad.extend(g_alpha);
        grad.extend(g_decay);
        (ll, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{intensity_at, log_likelihood, thinning_upper_bound};
    use approx::assert_relative_eq;

    fn seq(times_types: &[(f64, usize)], t_start: f64, t_end: f64) -> EventSequence {
        let events = times_types
            .iter()
            .map(|&(t, k)| Event::new(t, k))
            .collect();
        EventSequence::new(events, t_start, t_end).unwrap()
    }

    /// Adaptive Simpson quadrature, used as an independent oracle for
    /// the closed-form compensator.
    fn quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn intensity_kernel_formula() {
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let hist = seq(&[(0.0, 0)], 0.0, 1.0);
        let v = intensity_at(&m, 0, 0.5, &hist).unwrap();
        assert_relative_eq!(v, 0.5 + (-1.0_f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn intensity_with_empty_history_is_base_rate() {
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let hist = EventSequence::empty(0.0, 1.0);
        assert_relative_eq!(intensity_at(&m, 0, 0.7, &hist).unwrap(), 0.5);
    }

    #[test]
    fn intensity_at_rejects_query_before_history() {
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let hist = seq(&[(0.5, 0)], 0.0, 1.0);
        assert!(intensity_at(&m, 0, 0.4, &hist).is_err());
    }

    #[test]
    fn log_likelihood_matches_quadrature() {
        // Events must be strictly inside the window for the simple-process
        // convention; use t=0 as the first event with t_start=0.
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let s = seq(&[(0.0, 0), (0.5, 0)], 0.0, 1.0);
        let events = s.events().to_vec();
        let integral_oracle = quad(
            &|t: f64| {
                let hist: Vec<Event> = events.iter().copied().filter(|e| e.time < t).collect();
                m.intensity(0, t, &hist)
            },
            0.0,
            1.0,
            1e-10,
        );
        let lam1 = m.intensity(0, 0.0, &[]);
        let lam2 = m.intensity(0, 0.5, &events[..1]);
        let expected = lam1.ln() + lam2.ln() - integral_oracle;
        assert_relative_eq!(log_likelihood(&m, &s), expected, epsilon = 1e-6);
    }

    #[test]
    fn closed_form_compensator_matches_quadrature_multitype() {
        let m = HawkesExpModel::new(
            vec![0.3, 0.7],
            vec![0.5, 0.2, 0.1, 0.8],
            vec![1.5, 2.0, 0.7, 1.1],
        )
        .unwrap();
        let s = seq(
            &[(0.1, 0), (0.4, 1), (0.9, 0), (1.3, 1), (1.7, 0)],
            0.0,
            2.0,
        );
        let events = s.events().to_vec();
        let oracle = quad(
            &|t: f64| {
                let hist: Vec<Event> = events.iter().copied().filter(|e| e.time < t).collect();
                m.total_intensity(t, &hist)
            },
            0.0,
            2.0,
            1e-12,
        );
        assert_relative_eq!(m.compensator(&events, 0.0, 2.0), oracle, epsilon = 1e-8);
    }

    #[test]
    fn upper_bound_base_rate_when_history_empty() {
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let hist = EventSequence::empty(0.0, 5.0);
        assert_relative_eq!(thinning_upper_bound(&m, 0.0, &hist).unwrap(), 0.5);
    }

    #[test]
    fn upper_bound_dominates_on_grid() {
        let m = HawkesExpModel::scalar(0.5, 1.0, 2.0).unwrap();
        let hist = seq(&[(0.0, 0)], 0.0, 5.0);
        let bound = thinning_upper_bound(&m, 0.0, &hist).unwrap();
        assert_relative_eq!(bound, 1.5, epsilon = 1e-9);
        for i in 1..=1000 {
            let t = 5.0 * i as f64 / 1000.0;
            assert!(m.total_intensity(t, hist.events()) <= bound + 1e-12);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let m = HawkesExpModel::new(
            vec![0.4, 0.6],
            vec![0.5, 0.3, 0.2, 0.7],
            vec![1.2, 2.1, 0.9, 1.6],
        )
        .unwrap();
        let s = seq(&[(0.2, 0), (0.5, 1), (0.8, 0), (1.4, 1)], 0.0, 2.0);
        let (_, grad) = m.log_likelihood_grad(&s);
        let params = m.parameters();
        let h = 1e-5;
        for i in 0..params.len() {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[i] += h;
            dn[i] -= h;
            let m_up = HawkesExpModel::from_parameters(2, &up).unwrap();
            let m_dn = HawkesExpModel::from_parameters(2, &dn).unwrap();
            let fd = (log_likelihood(&m_up, &s) - log_likelihood(&m_dn, &s)) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-4, epsilon = 1e-8);
        }
    }
}
