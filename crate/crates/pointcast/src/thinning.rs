//! Thinning (rejection) sampler for drawing continuations from any
//! intensity model, plus the reproducible RNG streams it consumes.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::seq::{Event, EventSequence};

/// Proposal budget per sampled continuation; exceeding it indicates a
/// broken intensity bound rather than bad luck.
const MAX_PROPOSALS: u64 = 10_000_000;

/// A splittable, reproducible random stream.
///
/// Identical seed and call sequence give bit-identical draws; derived
/// substreams are independent and order-insensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive the `index`-th child stream.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9E3779B97F4A7C15))),
        }
    }

    /// Derive a child stream keyed by a component name.
    pub fn named(&self, name: &str) -> RngStream {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in name.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        RngStream {
            seed: splitmix64(self.seed ^ h),
        }
    }

    /// Materialize the stream as a concrete generator.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Draw one continuation over `(prefix.t_end, t_prime]` by thinning.
///
/// The bound is recomputed after every proposal, accepted or rejected,
/// which is valid for intensities that are non-increasing between
/// events (all models in scope).
pub fn thinning_sample(
    model: &dyn IntensityModel,
    prefix: &EventSequence,
    t_prime: f64,
    stream: RngStream,
) -> Result<EventSequence> {
    if prefix.t_end() > t_prime {
        return Err(Error::Precondition(format!(
            "horizon end {t_prime} precedes prefix end {}",
            prefix.t_end()
        )));
    }
    let mut rng = stream.rng();
    let mut hist: Vec<Event> = prefix.events().to_vec();
    let mut out: Vec<Event> = Vec::new();
    let mut t0 = prefix.t_end();
    let mut proposals: u64 = 0;

    while t0 < t_prime {
        let lam_star = model.upper_bound(t0, &hist);
        if lam_star <= 0.0 {
            break;
        }
        proposals += 1;
        if proposals > MAX_PROPOSALS {
            return Err(Error::Numerical(format!(
                "thinning exceeded {MAX_PROPOSALS} proposals (t0={t0}, bound={lam_star}); \
                 the intensity bound is likely broken"
            )));
        }
        let u: f64 = rng.gen::<f64>();
        t0 += -(1.0 - u).ln() / lam_star;
        if t0 > t_prime {
            break;
        }
        let accept: f64 = rng.gen();
        let total = model.total_intensity(t0, &hist);
        if accept * lam_star <= total {
            // Draw the type with probability proportional to its intensity.
            let mut r = rng.gen::<f64>() * total;
            let mut k = model.num_types() - 1;
            for cand in 0..model.num_types() {
                r -= model.intensity(cand, t0, &hist);
                if r <= 0.0 {
                    k = cand;
                    break;
                }
            }
            let ev = Event::new(t0, k);
            hist.push(ev);
            out.push(ev);
        }
    }
    EventSequence::new(out, prefix.t_end(), t_prime)
}

/// Draw `n` independent continuations sharing the same prefix, one per
/// derived substream. Results are identical whether the draws run
/// sequentially or in parallel.
pub fn draw_noise(
    model: &dyn IntensityModel,
    prefix: &EventSequence,
    t_prime: f64,
    n: usize,
    stream: RngStream,
) -> Result<Vec<EventSequence>> {
    if n == 0 {
        return Err(Error::Precondition("draw_noise needs N >= 1".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| thinning_sample(model, prefix, t_prime, stream.substream(i as u64)))
        .collect()
}
