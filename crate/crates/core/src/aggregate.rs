//! Turns per-root link predictions into event clusters.
//!
//! Each window whose root links to at least `n_nuc` picks nucleates a
//! candidate. The candidate merges into the existing cluster it shares the
//! most picks with when that overlap exceeds `n_merge`, and otherwise starts
//! a new cluster. Clusters smaller than `n_min` are dropped at the end.
//!
//! Batch association scans windows from the last root to the first. The
//! streaming [`Aggregator`] also accepts forward order, which is what a
//! real-time feed produces; both orders only differ when a candidate ties
//! between clusters or bridges two clusters. Finished clusters are retired
//! as soon as no later window can reach them, so memory stays bounded by the
//! number of live clusters.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Station;
use crate::linker::Prediction;
use crate::picks::Pick;
use crate::velmod::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggParams {
    pub n_nuc: usize,
    pub n_merge: usize,
    pub n_min: usize,
}

impl Default for AggParams {
    fn default() -> Self {
        Self { n_nuc: 8, n_merge: 7, n_min: 8 }
    }
}

impl AggParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("n_nuc", self.n_nuc), ("n_merge", self.n_merge), ("n_min", self.n_min)] {
            if v == 0 {
                out.push(format!("{name} must be at least 1"));
            }
        }
        if self.n_merge + 1 > self.n_nuc {
            out.push(format!(
                "n_merge ({}) must be at most n_nuc - 1 ({})",
                self.n_merge,
                self.n_nuc.saturating_sub(1)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Global pick indices, ascending.
    pub picks: BTreeSet<usize>,
    /// Root indices of the windows that contributed.
    pub roots: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.picks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }

    fn first(&self) -> usize {
        *self.picks.first().expect("clusters are never empty")
    }

    fn last(&self) -> usize {
        *self.picks.last().expect("clusters are never empty")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    /// Sorted by first pick.
    pub events: Vec<Cluster>,
    /// Picks that ended up in more than one event.
    pub duplicate_picks: usize,
}

impl Catalog {
    /// Sorts the clusters and counts picks shared between them.
    pub fn from_clusters(mut events: Vec<Cluster>) -> Self {
        events.sort_by(|a, b| a.picks.iter().cmp(b.picks.iter()));
        let mut seen = HashMap::new();
        for e in &events {
            for &p in &e.picks {
                *seen.entry(p).or_insert(0usize) += 1;
            }
        }
        let duplicate_picks = seen.values().filter(|&&n| n > 1).count();
        Self { events, duplicate_picks }
    }

    /// Pick index sets, one per event.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        self.events.iter().map(|e| e.picks.iter().copied().collect()).collect()
    }

    /// Keeps events with at least `n_min` picks.
    pub fn filtered(&self, n_min: usize) -> Catalog {
        Catalog::from_clusters(self.events.iter().filter(|e| e.len() >= n_min).cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    #[default]
    /// Roots arrive in decreasing index order.
    Reverse,
    /// Roots arrive in increasing index order.
    Forward,
}

/// Incremental cluster builder.
#[derive(Debug)]
pub struct Aggregator {
    params: AggParams,
    order: ScanOrder,
    clusters: BTreeMap<u64, Cluster>,
    owners: HashMap<usize, Vec<u64>>,
    /// Retirement key per live cluster: last pick (forward) or first pick
    /// (reverse).
    frontier: BTreeSet<(usize, u64)>,
    next_id: u64,
    last_root: Option<usize>,
}

impl Aggregator {
    pub fn new(params: AggParams, order: ScanOrder) -> Self {
        Self {
            params,
            order,
            clusters: BTreeMap::new(),
            owners: HashMap::new(),
            frontier: BTreeSet::new(),
            next_id: 0,
            last_root: None,
        }
    }

    pub fn live_clusters(&self) -> usize {
        self.clusters.len()
    }

    fn key(&self, c: &Cluster) -> usize {
        match self.order {
            ScanOrder::Forward => c.last(),
            ScanOrder::Reverse => c.first(),
        }
    }

    /// Adds one window's prediction and returns the clusters that can no
    /// longer change, already filtered by `n_min`.
    ///
    /// # Panics
    /// If roots do not arrive in the configured order.
    pub fn push(&mut self, pred: &Prediction) -> Vec<Cluster> {
        if let Some(prev) = self.last_root {
            let ok = match self.order {
                ScanOrder::Forward => pred.root_index > prev,
                ScanOrder::Reverse => pred.root_index < prev,
            };
            assert!(ok, "root {} out of order after {prev}", pred.root_index);
        }
        self.last_root = Some(pred.root_index);

        let retired = match self.order {
            // Later windows only hold picks after this root.
            ScanOrder::Forward => self.retire(|key| key < pred.root_index),
            // Earlier windows end no later than this one.
            ScanOrder::Reverse => {
                let end = pred.members.last().copied().unwrap_or(pred.root_index);
                self.retire(|key| key > end)
            }
        };

        let candidate: Vec<usize> = pred.linked().collect();
        if candidate.len() >= self.params.n_nuc {
            self.absorb(pred.root_index, candidate);
        }
        retired
    }

    fn retire(&mut self, done: impl Fn(usize) -> bool) -> Vec<Cluster> {
        let ids: Vec<(usize, u64)> = match self.order {
            ScanOrder::Forward => self.frontier.iter().take_while(|(k, _)| done(*k)).copied().collect(),
            ScanOrder::Reverse => self.frontier.iter().rev().take_while(|(k, _)| done(*k)).copied().collect(),
        };
        let mut out = Vec::new();
        for entry in ids {
            self.frontier.remove(&entry);
            let c = self.clusters.remove(&entry.1).expect("frontier tracks live clusters");
            for p in &c.picks {
                if let Some(v) = self.owners.get_mut(p) {
                    v.retain(|&id| id != entry.1);
                    if v.is_empty() {
                        self.owners.remove(p);
                    }
                }
            }
            if c.len() >= self.params.n_min {
                out.push(c);
            }
        }
        out
    }

    fn absorb(&mut self, root: usize, candidate: Vec<usize>) {
        let mut overlap: BTreeMap<u64, usize> = BTreeMap::new();
        for p in &candidate {
            for &id in self.owners.get(p).map(Vec::as_slice).unwrap_or(&[]) {
                *overlap.entry(id).or_insert(0) += 1;
            }
        }
        // Largest overlap; ties go to the cluster with the earliest pick.
        let best = overlap
            .iter()
            .map(|(&id, &n)| (n, std::cmp::Reverse(self.clusters[&id].first()), std::cmp::Reverse(id)))
            .max()
            .map(|(n, _, std::cmp::Reverse(id))| (id, n));

        let id = match best {
            Some((id, n)) if n > self.params.n_merge => id,
            _ => {
                let id = self.next_id;
                self.next_id += 1;
                self.clusters.insert(id, Cluster { picks: BTreeSet::new(), roots: Vec::new() });
                id
            }
        };
        let c = self.clusters.get_mut(&id).expect("cluster exists");
        if !c.picks.is_empty() {
            let key = match self.order {
                ScanOrder::Forward => c.last(),
                ScanOrder::Reverse => c.first(),
            };
            self.frontier.remove(&(key, id));
        }
        c.roots.push(root);
        for p in candidate {
            if c.picks.insert(p) {
                self.owners.entry(p).or_default().push(id);
            }
        }
        let key = self.key(&self.clusters[&id]);
        self.frontier.insert((key, id));
    }

    /// Retires everything left.
    pub fn finish(mut self) -> Vec<Cluster> {
        self.retire(|_| true)
    }
}

/// Batch association: windows are processed from the last root to the first.
pub fn associate(predictions: impl IntoIterator<Item = Prediction>, params: AggParams) -> Catalog {
    let mut preds: Vec<Prediction> = predictions.into_iter().collect();
    preds.sort_by(|a, b| b.root_index.cmp(&a.root_index));
    associate_ordered(preds.iter(), params, ScanOrder::Reverse)
}

/// Association over predictions already in `order`.
pub fn associate_ordered<'a>(
    predictions: impl IntoIterator<Item = &'a Prediction>,
    params: AggParams,
    order: ScanOrder,
) -> Catalog {
    let mut agg = Aggregator::new(params, order);
    let mut out = Vec::new();
    for p in predictions {
        out.extend(agg.push(p));
    }
    out.extend(agg.finish());
    Catalog::from_clusters(out)
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("catalog line {line}: pick {index} is outside the {n} input picks")]
    PickIndex { line: usize, index: usize, n: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct PickRecord {
    index: usize,
    station: String,
    time: f64,
    phase: Phase,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRecord {
    event: usize,
    n_picks: usize,
    n_roots: usize,
    picks: Vec<PickRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderRecord {
    header: serde_json::Value,
}

/// Writes one JSON header line (the run configuration) and then one event per
/// line. Event ids follow catalog order.
pub fn write_catalog<W: Write>(
    mut w: W,
    catalog: &Catalog,
    picks: &[Pick],
    stations: &[Station],
    header: serde_json::Value,
) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &HeaderRecord { header })?;
    writeln!(w)?;
    for (i, e) in catalog.events.iter().enumerate() {
        write_event(&mut w, i, e, picks, stations)?;
    }
    w.flush()
}

/// Writes one event line, as used by streaming association.
pub fn write_event<W: Write>(
    mut w: W,
    id: usize,
    e: &Cluster,
    picks: &[Pick],
    stations: &[Station],
) -> std::io::Result<()> {
    let rec = EventRecord {
        event: id,
        n_picks: e.len(),
        n_roots: e.roots.len(),
        picks: e
            .picks
            .iter()
            .map(|&i| PickRecord {
                index: i,
                station: stations[picks[i].station].id.clone(),
                time: picks[i].time,
                phase: picks[i].phase,
            })
            .collect(),
    };
    serde_json::to_writer(&mut w, &rec)?;
    writeln!(w)
}

/// Reads a catalog back as pick-index sets plus the header value.
pub fn read_catalog<R: BufRead>(r: R, n_picks: usize) -> Result<(Catalog, serde_json::Value), CatalogError> {
    let mut header = serde_json::Value::Null;
    let mut events = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|source| CatalogError::Json { line: i + 1, source })?;
        if let Some(h) = value.get("header") {
            header = h.clone();
            continue;
        }
        let rec: EventRecord =
            serde_json::from_value(value).map_err(|source| CatalogError::Json { line: i + 1, source })?;
        let mut picks = BTreeSet::new();
        for p in rec.picks {
            if p.index >= n_picks {
                return Err(CatalogError::PickIndex { line: i + 1, index: p.index, n: n_picks });
            }
            picks.insert(p.index);
        }
        events.push(Cluster { picks, roots: Vec::new() });
    }
    Ok((Catalog::from_clusters(events), header))
}
