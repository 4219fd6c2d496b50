//! Threshold-crossing event detection and rhythm statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Event threshold for HH voltages (mV).
pub const HH_EVENT_THRESHOLD: f64 = -40.0;
/// Event threshold for RS voltages (model units).
pub const RS_EVENT_THRESHOLD: f64 = 0.0;
/// Events of one neuron closer than this to the start of its burst are merged.
pub const DEFAULT_BURST_WINDOW: f64 = 5.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTrain {
    pub channel: String,
    pub times: Vec<f64>,
}

impl EventTrain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One event per upward crossing: sample `k` fires iff
/// `v[k-1] < threshold <= v[k]`. The event time is linearly interpolated.
pub fn detect_events(channel: &str, times: &[f64], values: &[f64], threshold: f64) -> EventTrain {
    let mut out = Vec::new();
    for k in 1..values.len().min(times.len()) {
        let (v0, v1) = (values[k - 1], values[k]);
        if v0 < threshold && threshold <= v1 {
            let frac = (threshold - v0) / (v1 - v0);
            out.push(times[k - 1] + frac * (times[k] - times[k - 1]));
        }
    }
    EventTrain {
        channel: channel.to_string(),
        times: out,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Win {
    pub time: f64,
    /// 0-based neuron index.
    pub neuron: usize,
}

/// Merge all trains into time order, collapsing repeated events of the
/// same neuron that fall within `burst_window` of its burst's first event.
pub fn winner_sequence(trains: &[EventTrain], burst_window: f64) -> Vec<Win> {
    let mut all: Vec<Win> = trains
        .iter()
        .enumerate()
        .flat_map(|(neuron, tr)| tr.times.iter().map(move |&time| Win { time, neuron }))
        .collect();
    all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
    let mut seq: Vec<Win> = Vec::with_capacity(all.len());
    for w in all {
        if let Some(last) = seq.last() {
            if last.neuron == w.neuron && w.time - last.time < burst_window {
                continue;
            }
        }
        seq.push(w);
    }
    seq
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub mean: f64,
    /// Sample standard deviation of the intervals.
    pub std: f64,
    pub intervals: usize,
}

impl PeriodEstimate {
    pub fn frequency(&self) -> f64 {
        1.0 / self.mean
    }
}

/// Mean and spread of inter-event intervals after dropping `discard` leading events.
pub fn estimate_period(train: &EventTrain, discard: usize) -> Result<PeriodEstimate> {
    interval_stats(&train.times, discard)
}

pub fn interval_stats(times: &[f64], discard: usize) -> Result<PeriodEstimate> {
    let needed = discard + 3;
    if times.len() < needed {
        return Err(Error::InsufficientEvents {
            needed,
            got: times.len(),
        });
    }
    let intervals: Vec<f64> = times[discard..].windows(2).map(|w| w[1] - w[0]).collect();
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(PeriodEstimate {
        mean,
        std: var.sqrt(),
        intervals: intervals.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseOffset {
    /// Reference event time.
    pub time: f64,
    /// Offset of the nearest observed event, in reference cycles, in `[-0.5, 0.5)`.
    pub offset: f64,
}

/// Wraps a cycle fraction into `[-0.5, 0.5)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// For each reference event inside the observed span, the offset to the
/// nearest observed event divided by the local reference period.
pub fn phase_difference(reference: &EventTrain, observed: &EventTrain) -> Result<Vec<PhaseOffset>> {
    if reference.len() < 2 || observed.len() < 2 {
        return Err(Error::InsufficientEvents {
            needed: 2,
            got: reference.len().min(observed.len()),
        });
    }
    let r = &reference.times;
    let o = &observed.times;
    let (first, last) = (o[0], o[o.len() - 1]);
    let mut out = Vec::new();
    for k in 0..r.len() {
        let period = if k + 1 < r.len() {
            r[k + 1] - r[k]
        } else {
            r[k] - r[k - 1]
        };
        let t = r[k];
        if t < first - 0.5 * period || t > last + 0.5 * period {
            continue;
        }
        let idx = o.partition_point(|&x| x < t);
        let nearest = [idx.checked_sub(1), (idx < o.len()).then_some(idx)]
            .into_iter()
            .flatten()
            .map(|j| o[j])
            .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
            .expect("observed train is non-empty");
        out.push(PhaseOffset {
            time: t,
            offset: wrap_phase((nearest - t) / period),
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(out)
}

/// Removes ±1 cycle discontinuities from a wrapped phase series.
pub fn unwrap_phase(offsets: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(offsets.len());
    let mut shift = 0.0;
    for (k, &x) in offsets.iter().enumerate() {
        if k > 0 {
            let d = x - offsets[k - 1];
            if d > 0.5 {
                shift -= 1.0;
            } else if d < -0.5 {
                shift += 1.0;
            }
        }
        out.push(x + shift);
    }
    out
}

/// Positions in `seq` where the successor of a neuron differs from the
/// successor established by the cyclic order `order`.
pub fn sequence_breaks(seq: &[usize], order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let next_of = |id: usize| {
        order
            .iter()
            .position(|&x| x == id)
            .map(|p| order[(p + 1) % n])
    };
    (1..seq.len())
        .filter(|&k| next_of(seq[k - 1]) != Some(seq[k]))
        .collect()
}

/// The cyclic order of `count` neurons observed in `seq`, if `seq` contains
/// every neuron exactly once in its first `count` entries.
pub fn cyclic_order(seq: &[usize], count: usize) -> Option<Vec<usize>> {
    if seq.len() < count {
        return None;
    }
    let head = &seq[..count];
    let mut seen = vec![false; count];
    for &id in head {
        if id >= count || seen[id] {
            return None;
        }
        seen[id] = true;
    }
    Some(head.to_vec())
}

/// Number of consecutive repeats of the same neuron.
pub fn immediate_repeats(seq: &[usize]) -> usize {
    seq.windows(2).filter(|w| w[0] == w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(times: &[f64]) -> EventTrain {
        EventTrain {
            channel: "x".into(),
            times: times.to_vec(),
        }
    }

    #[test]
    fn constant_subthreshold_is_silent() {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert!(detect_events("v1", &t, &vec![-65.0; 100], -40.0).is_empty());
    }

    #[test]
    fn single_spike_single_event() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let v = [-65.0, -50.0, 0.0, 30.0, -60.0, -70.0];
        let ev = detect_events("v1", &t, &v, -40.0);
        assert_eq!(ev.len(), 1);
        assert!((ev.times[0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn sample_exactly_at_threshold_counts_once() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [-50.0, -40.0, -30.0, -45.0];
        let ev = detect_events("v1", &t, &v, -40.0);
        assert_eq!(ev.times, vec![1.0]);
    }

    #[test]
    fn periodic_train_period() {
        let ev = train(&(0..10).map(|k| 3.0 + 20.0 * k as f64).collect::<Vec<_>>());
        let p = estimate_period(&ev, 2).unwrap();
        assert!((p.mean - 20.0).abs() < 1e-12);
        assert!(p.std < 1e-12);
    }

    #[test]
    fn mixed_intervals_mean() {
        let p = estimate_period(&train(&[0.0, 10.0, 30.0]), 0).unwrap();
        assert_eq!(p.mean, 15.0);
    }

    #[test]
    fn too_few_events() {
        assert!(matches!(
            estimate_period(&train(&[0.0, 1.0, 2.0]), 1),
            Err(Error::InsufficientEvents { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn winner_sequence_collapses_bursts() {
        let a = train(&[0.0, 1.0, 20.0]);
        let b = train(&[10.0, 30.0, 32.0]);
        let seq: Vec<usize> = winner_sequence(&[a, b], 5.0)
            .iter()
            .map(|w| w.neuron)
            .collect();
        assert_eq!(seq, vec![0, 1, 0, 1]);
    }

    #[test]
    fn single_neuron_sequence() {
        let seq = winner_sequence(&[train(&[0.0, 50.0, 100.0])], 5.0);
        assert!(seq.iter().all(|w| w.neuron == 0));
        assert_eq!(seq.len(), 3);
    }

    #[test]
    fn identical_trains_zero_phase() {
        let r = train(&[0.0, 10.0, 20.0, 30.0]);
        let ph = phase_difference(&r, &r).unwrap();
        assert_eq!(ph.len(), 4);
        assert!(ph.iter().all(|p| p.offset == 0.0));
    }

    #[test]
    fn quarter_shift() {
        let r = train(&[0.0, 10.0, 20.0, 30.0, 40.0]);
        let o = train(&[2.5, 12.5, 22.5, 32.5, 42.5]);
        let ph = phase_difference(&r, &o).unwrap();
        assert!(ph.iter().all(|p| (p.offset - 0.25).abs() < 1e-12));
    }

    #[test]
    fn disjoint_trains_have_no_overlap() {
        let r = train(&[0.0, 10.0, 20.0]);
        let o = train(&[1000.0, 1010.0]);
        assert!(matches!(phase_difference(&r, &o), Err(Error::EmptyOverlap)));
    }

    #[test]
    fn unwrap_removes_wraps() {
        let u = unwrap_phase(&[0.3, 0.45, -0.4, -0.25]);
        assert!((u[2] - 0.6).abs() < 1e-12 && (u[3] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_phase(0.5), -0.5);
        assert_eq!(wrap_phase(-0.5), -0.5);
        assert_eq!(wrap_phase(0.25), 0.25);
        assert!((wrap_phase(1.75) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn cyclic_helpers() {
        let seq = [0, 1, 2, 0, 1, 2, 0, 2, 0];
        let order = cyclic_order(&seq, 3).unwrap();
        assert_eq!(sequence_breaks(&seq, &order), vec![7]);
        assert_eq!(immediate_repeats(&[0, 1, 1, 2]), 1);
        assert!(cyclic_order(&[0, 0, 1], 2).is_none());
    }
}
