//! Core domain types: events, sequences, horizon splits, datasets.
//!
//! All types here are immutable after construction and safe to share
//! across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perturbation step applied to duplicate timestamps at ingestion.
pub const DEDUP_EPSILON: f64 = 1e-9;

/// A single time-stamped, typed event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Occurrence time, in the dataset's declared time unit.
    pub time: f64,
    /// Event type, 0-based, in `[0, K)`.
    pub type_id: usize,
}

impl Event {
    pub fn new(time: f64, type_id: usize) -> Self {
        Event { time, type_id }
    }
}

/// An ordered event sequence observed on `[t_start, t_end]`.
///
/// Events are strictly increasing in time; simultaneous events are
/// forbidden (the process is simple).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    events: Vec<Event>,
    t_start: f64,
    t_end: f64,
}

impl EventSequence {
    /// Build a sequence, validating ordering and window bounds.
    pub fn new(events: Vec<Event>, t_start: f64, t_end: f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_start > t_end {
            return Err(Error::Range(format!(
                "invalid window [{t_start}, {t_end}]"
            )));
        }
        for (i, ev) in events.iter().enumerate() {
            if !ev.time.is_finite() || ev.time < 0.0 {
                return Err(Error::Range(format!(
                    "event {i} has non-finite or negative time {}",
                    ev.time
                )));
            }
            if ev.time < t_start || ev.time > t_end {
                return Err(Error::Range(format!(
                    "event {i} at t={} outside window [{t_start}, {t_end}]",
                    ev.time
                )));
            }
            if i > 0 && events[i - 1].time >= ev.time {
                return Err(Error::Ordering(format!(
                    "event {i} at t={} not after previous event at t={}",
                    ev.time,
                    events[i - 1].time
                )));
            }
        }
        Ok(EventSequence {
            events,
            t_start,
            t_end,
        })
    }

    /// Build a sequence after sorting by time and perturbing duplicate
    /// timestamps by `+DEDUP_EPSILON * index` within each tie group.
    /// Logs a warning when any perturbation was applied.
    pub fn sanitized(mut events: Vec<Event>, t_start: f64, t_end: f64) -> Result<Self> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut perturbed = 0usize;
        let mut i = 1;
        while i < events.len() {
            if events[i].time <= events[i - 1].time {
                events[i].time = events[i - 1].time + DEDUP_EPSILON;
                perturbed += 1;
            }
            i += 1;
        }
        if perturbed > 0 {
            log::warn!("perturbed {perturbed} duplicate timestamp(s) by {DEDUP_EPSILON}");
        }
        Self::new(events, t_start, t_end)
    }

    pub fn empty(t_start: f64, t_end: f64) -> Self {
        EventSequence {
            events: Vec::new(),
            t_start,
            t_end,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// Count of events per type, for `num_types` types.
    pub fn type_counts(&self, num_types: usize) -> Vec<usize> {
        let mut counts = vec![0usize; num_types];
        for ev in &self.events {
            if ev.type_id < num_types {
                counts[ev.type_id] += 1;
            }
        }
        counts
    }

    /// Concatenate `continuation` after this sequence, extending the
    /// window to the continuation's end.
    pub fn concat(&self, continuation: &EventSequence) -> Result<EventSequence> {
        let mut events = self.events.clone();
        events.extend_from_slice(continuation.events());
        EventSequence::new(events, self.t_start, continuation.t_end())
    }
}

/// A prefix/continuation split at a prediction horizon.
///
/// `prefix` covers `[t_start, T]`; `truth` covers `(T, T']`. Events
/// exactly at `T` belong to the prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSplit {
    pub prefix: EventSequence,
    pub truth: EventSequence,
    pub horizon_start: f64,
    pub horizon_end: f64,
}

impl HorizonSplit {
    pub fn horizon_len(&self) -> f64 {
        self.horizon_end - self.horizon_start
    }

    /// The completed sequence: prefix followed by the true continuation.
    pub fn completed(&self) -> Result<EventSequence> {
        self.prefix.concat(&self.truth)
    }
}

/// Split `seq` at horizon boundary `t_split`, keeping the continuation
/// window `(t_split, t_horizon_end]`.
pub fn split_at_horizon(
    seq: &EventSequence,
    t_split: f64,
    t_horizon_end: f64,
) -> Result<HorizonSplit> {
    if t_split < seq.t_start() {
        return Err(Error::Range(format!(
            "split time T={t_split} precedes sequence start {}",
            seq.t_start()
        )));
    }
    if t_split >= t_horizon_end {
        return Err(Error::Range(format!(
            "horizon end T'={t_horizon_end} must exceed split time T={t_split}"
        )));
    }
    if t_horizon_end > seq.t_end() {
        return Err(Error::Range(format!(
            "horizon end T'={t_horizon_end} exceeds sequence end {}",
            seq.t_end()
        )));
    }
    let prefix_events: Vec<Event> = seq
        .events()
        .iter()
        .copied()
        .filter(|e| e.time <= t_split)
        .collect();
    let truth_events: Vec<Event> = seq
        .events()
        .iter()
        .copied()
        .filter(|e| e.time > t_split && e.time <= t_horizon_end)
        .collect();
    Ok(HorizonSplit {
        prefix: EventSequence::new(prefix_events, seq.t_start(), t_split)?,
        truth: EventSequence::new(truth_events, t_split, t_horizon_end)?,
        horizon_start: t_split,
        horizon_end: t_horizon_end,
    })
}

/// Split so that the continuation holds exactly `budget` trailing
/// events; `T` is set to the time of the last prefix event and `T'`
/// to the sequence end.
pub fn split_by_token_budget(seq: &EventSequence, budget: usize) -> Result<HorizonSplit> {
    if seq.len() <= budget {
        return Err(Error::Length(format!(
            "sequence has {} events, need more than the budget {budget}",
            seq.len()
        )));
    }
    let t_split = seq.events()[seq.len() - budget - 1].time;
    split_at_horizon(seq, t_split, seq.t_end())
}

/// A collection of sequences sharing an event-type vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub sequences: Vec<EventSequence>,
    pub num_types: usize,
    pub time_unit: String,
}

impl Dataset {
    pub fn new(sequences: Vec<EventSequence>, num_types: usize, time_unit: String) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::Schema("num_types must be >= 1".into()));
        }
        for (i, seq) in sequences.iter().enumerate() {
            for ev in seq.events() {
                if ev.type_id >= num_types {
                    return Err(Error::Schema(format!(
                        "sequence {i} has type_id {} >= num_types {num_types}",
                        ev.type_id
                    )));
                }
            }
        }
        Ok(Dataset {
            sequences,
            num_types,
            time_unit,
        })
    }

    pub fn total_events(&self) -> usize {
        self.sequences.iter().map(|s| s.len()).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.sequences.iter().map(|s| s.t_end() - s.t_start()).sum()
    }
}
