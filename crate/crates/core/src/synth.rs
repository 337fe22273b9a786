//! Synthetic pick sequences with known ground truth.
//!
//! Two generators live here: short training sub-sequences (random event
//! swarms plus false picks inside a fixed time window, labeled relative to
//! the first pick) and long continuous stress-test streams with a controlled
//! spacing between origin times.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{epicentral_distance_km, GeoPoint, Region, Station};
use crate::picks::{sort_picks, Pick};
use crate::velmod::{LayeredModel, Phase, TravelTimeTable, VelModError};
use crate::window::{Featurizer, WindowError};

/// Lattice spacing of the interpolated travel-time table, km.
pub const TABLE_STEP_KM: f64 = 0.25;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic-data configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("station `{id}` lies outside the normalization region")]
    StationOutsideRegion { id: String },
    #[error("no stations")]
    NoStations,
    #[error(transparent)]
    VelMod(#[from] VelModError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// Parameters of the training-data generator. Defaults follow the reference
/// recipe; `n_p` and `seed` are normally overridden for desk-scale runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub max_events: u32,
    pub depth_range: (f64, f64),
    pub reassign_prob: f64,
    pub first_origin_range: (f64, f64),
    pub inter_event_range: (f64, f64),
    pub max_dist_range: (f64, f64),
    pub discard_prob: f64,
    pub pick_error_range: (f64, f64),
    pub false_pick_max: u32,
    pub window_s: f64,
    pub n_p: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            max_events: 20,
            depth_range: (0.0, 25.0),
            reassign_prob: 0.10,
            first_origin_range: (-60.0, 60.0),
            inter_event_range: (3.0, 20.0),
            max_dist_range: (20.0, 100.0),
            discard_prob: 0.5,
            pick_error_range: (-0.5, 0.5),
            false_pick_max: 500,
            window_s: 120.0,
            n_p: 500,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Collects every violated invariant.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut range = |name: &str, (lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                out.push(format!("{name} [{lo}, {hi}] is not an ordered range"));
            }
        };
        range("depth_range", self.depth_range);
        range("first_origin_range", self.first_origin_range);
        range("inter_event_range", self.inter_event_range);
        range("max_dist_range", self.max_dist_range);
        range("pick_error_range", self.pick_error_range);
        for (name, p) in [("reassign_prob", self.reassign_prob), ("discard_prob", self.discard_prob)] {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("{name} {p} is not a probability"));
            }
        }
        if self.depth_range.0 < 0.0 {
            out.push("depth_range must be non-negative".into());
        }
        if self.max_dist_range.0 < 0.0 {
            out.push("max_dist_range must be non-negative".into());
        }
        if !(self.window_s > 0.0) {
            out.push(format!("window_s {} must be positive", self.window_s));
        }
        if self.n_p == 0 {
            out.push("n_p must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Config(p))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypocenter {
    pub location: GeoPoint,
    pub depth_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub hypocenter: Hypocenter,
    pub origin_time: f64,
    pub max_distance_km: f64,
    /// Whether the hypocenter was re-drawn after the initial assignment.
    pub reassigned: bool,
    /// In-range arrivals before random discarding.
    pub arrivals: usize,
    pub discarded: usize,
    /// Timing errors applied to the surviving arrivals.
    pub timing_errors: Vec<f64>,
    /// Indices of this event's picks in the returned pick list.
    pub picks: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub events: Vec<TruthEvent>,
}

impl GroundTruth {
    /// Truth clusters as index sets, skipping events with no retained pick.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        self.events.iter().filter(|e| !e.picks.is_empty()).map(|e| e.picks.clone()).collect()
    }
}

/// One labeled training window.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    /// Retained picks, time-sorted, at most `n_p`.
    pub picks: Vec<Pick>,
    /// Length `n_p`; 1 marks picks linked to the first pick.
    pub labels: Vec<u8>,
    pub truth: GroundTruth,
    /// No pick survived; training skips these.
    pub empty: bool,
}

/// Labels relative to the first pick: every pick of the root's event, or the
/// root alone when it is a false pick.
pub fn root_labels(picks: &[Pick], n_p: usize) -> Vec<u8> {
    let mut labels = vec![0u8; n_p];
    let Some(root) = picks.first() else {
        return labels;
    };
    match root.event {
        Some(ev) => {
            for (l, p) in labels.iter_mut().zip(picks) {
                *l = u8::from(p.event == Some(ev));
            }
        }
        None => labels[0] = 1,
    }
    labels
}

/// Long continuous sequence for stress testing.
#[derive(Debug, Clone, PartialEq)]
pub struct StressSequence {
    pub picks: Vec<Pick>,
    pub truth: GroundTruth,
}

impl StressSequence {
    pub fn mean_gap(&self) -> Option<f64> {
        let n = self.truth.events.len();
        (n >= 2).then(|| (self.truth.events[n - 1].origin_time - self.truth.events[0].origin_time) / (n - 1) as f64)
    }
}

/// Holds the network, region and tabulated travel times shared by every draw.
#[derive(Debug, Clone)]
pub struct Generator {
    cfg: SynthConfig,
    stations: Vec<GeoPoint>,
    region: Region,
    table: TravelTimeTable,
    featurizer: Featurizer,
}

impl Generator {
    pub fn new(
        cfg: SynthConfig,
        stations: &[Station],
        region: Region,
        model: &LayeredModel,
    ) -> Result<Self, SynthError> {
        cfg.validate()?;
        region.validate().map_err(|e| SynthError::Config(vec![e.to_string()]))?;
        if stations.is_empty() {
            return Err(SynthError::NoStations);
        }
        if let Some(s) = stations.iter().find(|s| !region.contains(s.location)) {
            return Err(SynthError::StationOutsideRegion { id: s.id.clone() });
        }
        // Deep enough for the depth range, wide enough for any in-range station.
        let table = TravelTimeTable::new(
            model,
            cfg.depth_range.1.max(1.0),
            cfg.max_dist_range.1.max(1.0),
            TABLE_STEP_KM,
            TABLE_STEP_KM,
        )?;
        let featurizer = Featurizer::new(stations, &region, cfg.n_p, cfg.window_s)?;
        Ok(Self { cfg, stations: stations.iter().map(|s| s.location).collect(), region, table, featurizer })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Featurizer matching the generator's region and window shape.
    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    fn draw_hypocenter<R: Rng>(&self, region: &Region, rng: &mut R) -> Hypocenter {
        let x = rng.gen_range(0.0..=1.0);
        let y = rng.gen_range(0.0..=1.0);
        let (d0, d1) = self.cfg.depth_range;
        Hypocenter { location: region.denormalize(x, y), depth_km: rng.gen_range(d0..=d1) }
    }

    /// Arrivals at every station within `max_dist` of the hypocenter, P then S.
    fn arrivals(&self, hypo: &Hypocenter, origin: f64, max_dist: f64) -> Vec<(usize, Phase, f64)> {
        let mut out = Vec::new();
        for (s, loc) in self.stations.iter().enumerate() {
            let d = epicentral_distance_km(hypo.location, *loc);
            if d <= max_dist {
                for ph in [Phase::P, Phase::S] {
                    out.push((s, ph, origin + self.table.time(hypo.depth_km, d, ph)));
                }
            }
        }
        out
    }

    /// Draws one training window.
    pub fn subsequence<R: Rng>(&self, rng: &mut R) -> SynthSample {
        let c = &self.cfg;
        let n_events = rng.gen_range(0..=c.max_events) as usize;

        let mut hypos: Vec<Hypocenter> = (0..n_events).map(|_| self.draw_hypocenter(&self.region, rng)).collect();
        let mut reassigned = vec![false; n_events];
        for (h, flag) in hypos.iter_mut().zip(reassigned.iter_mut()) {
            if rng.gen_bool(c.reassign_prob) {
                *h = self.draw_hypocenter(&self.region, rng);
                *flag = true;
            }
        }

        let mut origins = Vec::with_capacity(n_events);
        if n_events > 0 {
            let mut t = uniform(rng, c.first_origin_range);
            origins.push(t);
            for _ in 1..n_events {
                t += uniform(rng, c.inter_event_range);
                origins.push(t);
            }
        }
        let max_dists: Vec<f64> = (0..n_events).map(|_| uniform(rng, c.max_dist_range)).collect();

        let mut events = Vec::with_capacity(n_events);
        let mut picks = Vec::new();
        for e in 0..n_events {
            let arrivals = self.arrivals(&hypos[e], origins[e], max_dists[e]);
            let mut ev = TruthEvent {
                hypocenter: hypos[e],
                origin_time: origins[e],
                max_distance_km: max_dists[e],
                reassigned: reassigned[e],
                arrivals: arrivals.len(),
                discarded: 0,
                timing_errors: Vec::new(),
                picks: Vec::new(),
            };
            for (station, phase, t) in arrivals {
                if rng.gen_bool(c.discard_prob) {
                    ev.discarded += 1;
                    continue;
                }
                let err = uniform(rng, c.pick_error_range);
                ev.timing_errors.push(err);
                picks.push(Pick { station, time: t + err, phase, event: Some(e as u32) });
            }
            events.push(ev);
        }

        let n_false = rng.gen_range(0..=c.false_pick_max);
        for _ in 0..n_false {
            let station = rng.gen_range(0..self.stations.len());
            let time = rng.gen_range(0.0..=c.window_s);
            let phase = if rng.gen_bool(0.5) { Phase::S } else { Phase::P };
            picks.push(Pick { station, time, phase, event: None });
        }

        picks.retain(|p| (0.0..=c.window_s).contains(&p.time));
        sort_picks(&mut picks);
        picks.truncate(c.n_p);

        for (i, p) in picks.iter().enumerate() {
            if let Some(e) = p.event {
                events[e as usize].picks.push(i);
            }
        }
        let labels = root_labels(&picks, c.n_p);
        SynthSample { empty: picks.is_empty(), picks, labels, truth: GroundTruth { events } }
    }

    /// Continuous stream of `n_events` earthquakes whose origin-time gaps are
    /// uniform on `[0, max_gap_s]`. Hypocenters are uniform in `event_region`;
    /// every in-range arrival is kept, with timing errors but no false picks.
    pub fn stress_sequence<R: Rng>(
        &self,
        event_region: &Region,
        n_events: usize,
        max_gap_s: f64,
        rng: &mut R,
    ) -> StressSequence {
        let c = &self.cfg;
        let mut events = Vec::with_capacity(n_events);
        let mut picks = Vec::new();
        let mut origin = 0.0;
        for e in 0..n_events {
            if e > 0 {
                origin += rng.gen_range(0.0..=max_gap_s);
            }
            let hypo = self.draw_hypocenter(event_region, rng);
            let max_dist = uniform(rng, c.max_dist_range);
            let arrivals = self.arrivals(&hypo, origin, max_dist);
            let mut ev = TruthEvent {
                hypocenter: hypo,
                origin_time: origin,
                max_distance_km: max_dist,
                reassigned: false,
                arrivals: arrivals.len(),
                discarded: 0,
                timing_errors: Vec::with_capacity(arrivals.len()),
                picks: Vec::new(),
            };
            for (station, phase, t) in arrivals {
                let err = uniform(rng, c.pick_error_range);
                ev.timing_errors.push(err);
                picks.push(Pick { station, time: t + err, phase, event: Some(e as u32) });
            }
            events.push(ev);
        }
        sort_picks(&mut picks);
        for (i, p) in picks.iter().enumerate() {
            if let Some(e) = p.event {
                events[e as usize].picks.push(i);
            }
        }
        StressSequence { picks, truth: GroundTruth { events } }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// A jittered rectangular station grid covering `region` at roughly
/// `spacing_km`. Deterministic in `seed`.
pub fn grid_network(region: &Region, spacing_km: f64, jitter_km: f64, seed: u64) -> Vec<Station> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let kpd = crate::geo::km_per_degree();
    let mid = 0.5 * (region.lat_min + region.lat_max);
    let width = (region.lon_max - region.lon_min) * kpd * mid.to_radians().cos();
    let height = (region.lat_max - region.lat_min) * kpd;
    let nx = (width / spacing_km).round().max(1.0) as usize;
    let ny = (height / spacing_km).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let fx = (ix as f64 + 0.5) / nx as f64;
            let fy = (iy as f64 + 0.5) / ny as f64;
            let jx = rng.gen_range(-jitter_km..=jitter_km) / width;
            let jy = rng.gen_range(-jitter_km..=jitter_km) / height;
            let location = region.denormalize((fx + jx).clamp(0.0, 1.0), (fy + jy).clamp(0.0, 1.0));
            out.push(Station { id: format!("S{:03}", out.len()), location });
        }
    }
    out
}
