//! End-to-end association: windows, link predictions, clustering, and the
//! stress sweep comparing the learned associator with the grid baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{associate_ordered, AggParams, Aggregator, Catalog, Cluster, ScanOrder};
use crate::eval::{score_catalog, StressRow};
use crate::geo::Region;
use crate::gridassoc::{grid_associate, to_catalog, GridParams, TravelTimeGrid};
use crate::linker::{oracle_link, predict, LinkerModel, Prediction};
use crate::picks::Pick;
use crate::synth::Generator;
use crate::window::{Featurizer, SubSequence, WindowError};

/// Where link labels come from.
#[derive(Debug, Clone, Copy)]
pub enum Linker<'a> {
    Model {
        model: &'a LinkerModel,
        threshold: f64,
    },
    /// Ground-truth event ids carried by the picks.
    Oracle,
}

impl Linker<'_> {
    pub fn link(&self, sub: &SubSequence) -> Prediction {
        match self {
            Linker::Model { model, threshold } => predict(model, sub, *threshold),
            Linker::Oracle => oracle_link(sub),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Linker::Model { .. } => "model",
            Linker::Oracle => "oracle",
        }
    }
}

/// Windows predicted per parallel batch in streaming mode.
const STREAM_BATCH: usize = 2048;

/// Predictions for every window of an in-memory stream, in root order.
pub fn predictions(picks: &[Pick], feat: &Featurizer, linker: Linker<'_>) -> Result<Vec<Prediction>, WindowError> {
    let subs: Vec<SubSequence> = feat.subsequences(picks).collect::<Result<_, _>>()?;
    Ok(subs.par_iter().map(|s| linker.link(s)).collect())
}

/// Batch association of an in-memory stream (reverse scan).
pub fn associate_picks(
    picks: &[Pick],
    feat: &Featurizer,
    linker: Linker<'_>,
    params: AggParams,
) -> Result<Catalog, WindowError> {
    associate_picks_ordered(picks, feat, linker, params, ScanOrder::Reverse)
}

pub fn associate_picks_ordered(
    picks: &[Pick],
    feat: &Featurizer,
    linker: Linker<'_>,
    params: AggParams,
    order: ScanOrder,
) -> Result<Catalog, WindowError> {
    let preds = predictions(picks, feat, linker)?;
    Ok(match order {
        ScanOrder::Reverse => associate_ordered(preds.iter().rev(), params, order),
        ScanOrder::Forward => associate_ordered(preds.iter(), params, order),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamStats {
    pub picks: usize,
    pub windows: usize,
    pub events: usize,
    pub max_live_clusters: usize,
}

/// Forward streaming association. Events are handed to `emit` as soon as no
/// later window can change them; memory holds one prediction batch plus the
/// live clusters.
pub fn stream_associate<I: Iterator<Item = Pick>>(
    input: I,
    feat: &Featurizer,
    linker: Linker<'_>,
    params: AggParams,
    mut emit: impl FnMut(Cluster),
) -> Result<StreamStats, WindowError> {
    let mut stats = StreamStats::default();
    let mut agg = Aggregator::new(params, ScanOrder::Forward);
    let mut windows = crate::window::SubsequenceStream::new(feat, input);
    let mut batch = Vec::with_capacity(STREAM_BATCH);
    loop {
        batch.clear();
        for w in windows.by_ref().take(STREAM_BATCH) {
            batch.push(w?);
        }
        if batch.is_empty() {
            break;
        }
        let preds: Vec<Prediction> = batch.par_iter().map(|s| linker.link(s)).collect();
        for p in &preds {
            for c in agg.push(p) {
                stats.events += 1;
                emit(c);
            }
            stats.max_live_clusters = stats.max_live_clusters.max(agg.live_clusters());
        }
        stats.windows += batch.len();
        stats.picks = batch.last().map_or(stats.picks, |s| s.root_index + 1);
    }
    for c in agg.finish() {
        stats.events += 1;
        emit(c);
    }
    Ok(stats)
}

/// Maximum inter-event gaps swept by default, in seconds.
pub const STRESS_GAPS: [f64; 8] = [10.0, 12.0, 16.0, 20.0, 24.0, 32.0, 64.0, 128.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub gaps: Vec<f64>,
    pub n_events: usize,
    pub seed: u64,
    pub agg: AggParams,
    /// Root order used when clustering link predictions.
    pub scan: ScanOrder,
    pub grid: GridParams,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            gaps: STRESS_GAPS.to_vec(),
            n_events: 500,
            seed: 0,
            agg: AggParams::default(),
            scan: ScanOrder::Reverse,
            grid: GridParams::default(),
        }
    }
}

/// Runs every associator on the same sequence for each gap. `linkers` are
/// scored under their own names; the grid baseline is added when given.
pub fn stress_test(
    gen: &Generator,
    event_region: &Region,
    linkers: &[Linker<'_>],
    grid: Option<&TravelTimeGrid>,
    cfg: &StressConfig,
) -> Result<Vec<StressRow>, WindowError> {
    let mut rows = Vec::new();
    for (k, &max_gap) in cfg.gaps.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let seq = gen.stress_sequence(event_region, cfg.n_events, max_gap, &mut rng);
        let truth = seq.truth.clusters();
        let mean_gap = seq.mean_gap().unwrap_or(0.0);
        for linker in linkers {
            let cat = associate_picks_ordered(&seq.picks, gen.featurizer(), *linker, cfg.agg, cfg.scan)?;
            rows.push(StressRow {
                associator: linker.name().to_string(),
                max_gap_s: max_gap,
                mean_gap_s: mean_gap,
                metrics: score_catalog(&cat, &truth),
            });
        }
        if let Some(g) = grid {
            let events = grid_associate(&seq.picks, g, &cfg.grid);
            rows.push(StressRow {
                associator: "grid".to_string(),
                max_gap_s: max_gap,
                mean_gap_s: mean_gap,
                metrics: score_catalog(&to_catalog(&events), &truth),
            });
        }
    }
    Ok(rows)
}
