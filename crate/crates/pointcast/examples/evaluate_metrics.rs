//! Score predictions against ground truth: per-type count RMSE,
//! optimal transport distance over a deletion-cost sweep, and the
//! cascading-error diagnostic.
//!
//! Run with: cargo run --example evaluate_metrics

use pointcast::metrics::{cascading_analysis, evaluate_pairs, otd, otd_sweep, OtdConfig};
use pointcast::seq::{Event, EventSequence};

fn seq(events: &[(f64, usize)], t_end: f64) -> EventSequence {
    EventSequence::new(
        events.iter().map(|&(t, k)| Event::new(t, k)).collect(),
        0.0,
        t_end,
    )
    .unwrap()
}

fn main() -> pointcast::Result<()> {
    let truth = seq(&[(1.0, 0), (2.5, 1), (4.0, 0)], 6.0);
    let close = seq(&[(1.2, 0), (2.4, 1), (4.5, 0)], 6.0);
    let sparse = seq(&[(1.1, 0)], 6.0);

    // At small deletion cost the metric prefers dropping unmatched
    // events; at large cost it pays for time shifts instead.
    for c_del in [0.1, 1.0, 4.0] {
        println!(
            "c_del {c_del:>3}: otd(truth, close) = {:.3}   otd(truth, sparse) = {:.3}",
            otd(&truth, &close, c_del)?,
            otd(&truth, &sparse, c_del)?
        );
    }

    let cfg = OtdConfig::default();
    let (by_cdel, mean) = otd_sweep(&truth, &close, &cfg)?;
    let line: Vec<String> = by_cdel
        .iter()
        .map(|(c, d)| format!("{c}:{d:.2}"))
        .collect();
    println!("sweep over default grid: {}  (mean {mean:.2})", line.join("  "));

    // Aggregate report over aligned (truth, prediction) pairs.
    // `shifted` also mislabels its second event (type 0 instead of 1),
    // which gives the cascade diagnostic a first-error group.
    let shifted = seq(&[(1.6, 0), (3.4, 0), (5.1, 0)], 6.0);
    let pairs = vec![
        (truth.clone(), close.clone()),
        (truth.clone(), sparse.clone()),
        (truth.clone(), shifted.clone()),
    ];
    let report = evaluate_pairs(&pairs, 2, &cfg)?;
    println!(
        "count rmse {:.3}, mean otd {:.3} over {} pairs",
        report.rmse,
        report.otd_mean,
        pairs.len()
    );

    // Cascade diagnostic: does an early timing error predict larger
    // errors later in the same sequence?
    let cascade = cascading_analysis(&pairs)?;
    match &cascade.regression {
        Some(fit) => println!(
            "cascade regression: slope {:.3}, p = {:.3} ({} points)",
            fit.slope, fit.p_value, fit.num_points
        ),
        None => println!(
            "cascade regression degenerate (too few groups: {})",
            cascade.groups.len()
        ),
    }
    Ok(())
}
