//! Jaccard-based event and phase metrics and precision/recall sweeps.
//!
//! A detection is successful when its best Jaccard overlap with a true event
//! reaches the success threshold; a true event is recovered when its best
//! overlap with a detection does. False picks belong to no true event, so a
//! detection made only of false picks scores zero.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::aggregate::Catalog;

pub const SUCCESS_THRESHOLD: f64 = 0.5;

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

fn jaccard_sorted(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Best overlap of one set against a collection.
fn best_overlap(a: &[usize], others: &[Vec<usize>]) -> f64 {
    let a = sorted(a);
    if a.is_empty() {
        return 0.0;
    }
    others.iter().map(|b| jaccard_sorted(&a, &sorted(b))).fold(0.0, f64::max)
}

/// Jaccard precision of a detected cluster.
pub fn jaccard_p(detected: &[usize], truth: &[Vec<usize>]) -> f64 {
    best_overlap(detected, truth)
}

/// Jaccard recall of a true event.
pub fn jaccard_r(truth_event: &[usize], detections: &[Vec<usize>]) -> f64 {
    best_overlap(truth_event, detections)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub event_precision: f64,
    pub event_recall: f64,
    /// Mean Jaccard precision over detections.
    pub phase_precision: f64,
    /// Mean Jaccard recall over true events.
    pub phase_recall: f64,
    pub detected: usize,
    pub truth: usize,
    /// No detections: precisions are reported as 1.
    pub precision_undefined: bool,
    /// No true events: recalls are reported as 1.
    pub recall_undefined: bool,
}

/// Best Jaccard of each set in `a` against `b`, using an index of `b` so only
/// overlapping pairs are compared.
fn best_each(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<f64> {
    let b: Vec<Vec<usize>> = b.iter().map(|s| sorted(s)).collect();
    let mut owner: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, s) in b.iter().enumerate() {
        for &p in s {
            owner.entry(p).or_default().push(k);
        }
    }
    a.iter()
        .map(|s| {
            let s = sorted(s);
            let mut cands: Vec<usize> = s.iter().flat_map(|p| owner.get(p).into_iter().flatten().copied()).collect();
            cands.sort_unstable();
            cands.dedup();
            cands.iter().map(|&k| jaccard_sorted(&s, &b[k])).fold(0.0, f64::max)
        })
        .collect()
}

pub fn score(detected: &[Vec<usize>], truth: &[Vec<usize>], success_threshold: f64) -> MetricsReport {
    let jp = best_each(detected, truth);
    let jr = best_each(truth, detected);
    let frac = |v: &[f64]| v.iter().filter(|&&j| j >= success_threshold).count() as f64 / v.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (pu, ru) = (jp.is_empty(), jr.is_empty());
    MetricsReport {
        event_precision: if pu { 1.0 } else { frac(&jp) },
        event_recall: if ru { 1.0 } else { frac(&jr) },
        phase_precision: if pu { 1.0 } else { mean(&jp) },
        phase_recall: if ru { 1.0 } else { mean(&jr) },
        detected: jp.len(),
        truth: jr.len(),
        precision_undefined: pu,
        recall_undefined: ru,
    }
}

pub fn score_catalog(catalog: &Catalog, truth: &[Vec<usize>]) -> MetricsReport {
    score(&catalog.clusters(), truth, SUCCESS_THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_min: usize,
    pub metrics: MetricsReport,
}

/// Scores `catalog` filtered at each `n_min`. The catalog should have been
/// built with the smallest `n_min` of the range (or lower).
pub fn pr_sweep(
    catalog: &Catalog,
    truth: &[Vec<usize>],
    n_min_range: std::ops::RangeInclusive<usize>,
) -> Vec<SweepRow> {
    n_min_range.map(|n_min| SweepRow { n_min, metrics: score_catalog(&catalog.filtered(n_min), truth) }).collect()
}

fn metric_pairs(m: &MetricsReport) -> [(&'static str, f64); 6] {
    [
        ("event_precision", m.event_precision),
        ("event_recall", m.event_recall),
        ("phase_precision", m.phase_precision),
        ("phase_recall", m.phase_recall),
        ("detected", m.detected as f64),
        ("truth", m.truth as f64),
    ]
}

/// Long-format CSV: `n_min,metric,value`.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n_min", "metric", "value"])?;
    for r in rows {
        for (name, v) in metric_pairs(&r.metrics) {
            out.write_record([r.n_min.to_string(), name.to_string(), v.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRow {
    pub associator: String,
    pub max_gap_s: f64,
    pub mean_gap_s: f64,
    pub metrics: MetricsReport,
}

/// Long-format CSV: `associator,max_gap_s,mean_gap_s,metric,value`.
pub fn write_stress_csv<W: Write>(w: W, rows: &[StressRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["associator", "max_gap_s", "mean_gap_s", "metric", "value"])?;
    for r in rows {
        for (name, v) in metric_pairs(&r.metrics) {
            out.write_record([
                r.associator.clone(),
                r.max_gap_s.to_string(),
                r.mean_gap_s.to_string(),
                name.to_string(),
                v.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        let a: Vec<usize> = (0..8).collect();
        assert_eq!(jaccard_p(&a, &[a.clone()]), 1.0);
        assert_eq!(jaccard_p(&a, &[(100..110).collect()]), 0.0);
        let b: Vec<usize> = (2..10).collect();
        assert!((jaccard_p(&a, &[b]) - 0.6).abs() < 1e-15);
        assert_eq!(jaccard_r(&a, &[]), 0.0);
        assert_eq!(jaccard_p(&[], &[a]), 0.0);
        let t: Vec<usize> = (0..7).collect();
        let dets = vec![vec![0, 1, 2, 3, 4, 20, 21], vec![5, 6], vec![30]];
        assert!((jaccard_r(&t, &dets) - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_scores_are_flagged() {
        let truth = vec![vec![0, 1, 2]];
        let m = score(&[], &truth, SUCCESS_THRESHOLD);
        assert!(m.precision_undefined && m.event_precision == 1.0);
        assert_eq!(m.event_recall, 0.0);
        let m = score(&truth, &[], SUCCESS_THRESHOLD);
        assert!(m.recall_undefined && m.event_precision == 0.0);
    }

    #[test]
    fn sweep_past_largest_cluster() {
        use crate::aggregate::Cluster;
        let cat = Catalog::from_clusters(vec![Cluster { picks: (0..9).collect(), roots: vec![0] }]);
        let truth = vec![(0..9).collect::<Vec<_>>()];
        let rows = pr_sweep(&cat, &truth, 8..=10);
        assert_eq!(rows[0].metrics.event_recall, 1.0);
        assert_eq!(rows[2].metrics.event_recall, 0.0);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 6);
    }
}
