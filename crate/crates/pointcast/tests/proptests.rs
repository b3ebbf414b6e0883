//! Property-based invariants across the metric and loss surfaces.

use pointcast::infer::normalized_weights;
use pointcast::metrics::otd;
use pointcast::nce::{binary_nce_loss, multi_nce_loss};
use pointcast::seq::{split_at_horizon, Event, EventSequence};
use proptest::prelude::*;

/// Independent oracle: exhaustive enumeration over all monotone
/// same-type alignments.
fn brute_force_otd(a: &[Event], b: &[Event], c_del: f64) -> f64 {
    if a.is_empty() {
        return b.len() as f64 * c_del;
    }
    if b.is_empty() {
        return a.len() as f64 * c_del;
    }
    let mut best = (c_del + brute_force_otd(&a[1..], b, c_del))
        .min(c_del + brute_force_otd(a, &b[1..], c_del));
    if a[0].type_id == b[0].type_id {
        best = best.min((a[0].time - b[0].time).abs() + brute_force_otd(&a[1..], &b[1..], c_del));
    }
    best
}

fn small_sequence(max_len: usize) -> impl Strategy<Value = EventSequence> {
    proptest::collection::vec((0.0f64..10.0, 0usize..3), 0..=max_len).prop_map(|mut raw| {
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        raw.dedup_by(|x, y| x.0 == y.0);
        let events = raw.into_iter().map(|(t, k)| Event::new(t, k)).collect();
        EventSequence::new(events, 0.0, 10.0).unwrap()
    })
}

proptest! {
    #[test]
    fn otd_matches_brute_force(
        a in small_sequence(4),
        b in small_sequence(4),
        c_del in 0.05f64..4.0,
    ) {
        let dp = otd(&a, &b, c_del).unwrap();
        let oracle = brute_force_otd(a.events(), b.events(), c_del);
        prop_assert!((dp - oracle).abs() < 1e-12, "dp {dp} vs oracle {oracle}");
    }

    #[test]
    fn otd_symmetric_nonnegative_and_bounded(
        a in small_sequence(6),
        b in small_sequence(6),
        c_del in 0.05f64..4.0,
    ) {
        let ab = otd(&a, &b, c_del).unwrap();
        let ba = otd(&b, &a, c_del).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab >= 0.0);
        prop_assert!(otd(&a, &a, c_del).unwrap() == 0.0);
        prop_assert!(ab <= c_del * (a.len() + b.len()) as f64 + 1e-12);
    }

    #[test]
    fn weights_always_sum_to_one(
        energies in proptest::collection::vec(-500.0f64..500.0, 1..200),
    ) {
        let w = normalized_weights(&energies);
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn multi_nce_is_shift_invariant_binary_is_not(
        energies in proptest::collection::vec(-5.0f64..5.0, 2..8),
        shift in 1.0f64..100.0,
    ) {
        let shifted: Vec<f64> = energies.iter().map(|e| e + shift).collect();
        let (m0, _) = multi_nce_loss(&energies);
        let (m1, _) = multi_nce_loss(&shifted);
        prop_assert!((m0 - m1).abs() < 1e-9);
        let (b0, _) = binary_nce_loss(&energies);
        let (b1, _) = binary_nce_loss(&shifted);
        prop_assert!((b0 - b1).abs() > 1e-9);
    }

    #[test]
    fn split_round_trip_preserves_events(
        seq in small_sequence(8),
        t_frac in 0.1f64..0.9,
    ) {
        let t_split = 10.0 * t_frac;
        let split = split_at_horizon(&seq, t_split, 10.0).unwrap();
        let recombined = split.completed().unwrap();
        prop_assert_eq!(recombined.events(), seq.events());
    }
}
