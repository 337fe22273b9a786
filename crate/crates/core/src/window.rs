//! Sliding-window featurization of a pick stream.
//!
//! Every pick becomes the root of one fixed-length sub-sequence holding the
//! root and the picks that follow it within `window_s` seconds, capped at
//! `n_p` rows and zero-padded. Rows carry five features: normalized station
//! x and y, time since the root over `window_s`, the phase flag and a padding
//! flag.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geo::{GeoError, Region, Station};
use crate::picks::Pick;

pub const N_FEATURES: usize = 5;

/// Feature vector of one row: `[x, y, t_norm, phase, pad]`.
pub type FeatureRow = [f64; N_FEATURES];

pub const PAD_ROW: FeatureRow = [0.0, 0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("station `{id}`: {source}")]
    Station {
        id: String,
        #[source]
        source: GeoError,
    },
    #[error("pick {index} at t={time} precedes the previous pick at t={previous}; input must be time-sorted")]
    Unsorted { index: usize, time: f64, previous: f64 },
    #[error("pick {index} references unknown station {station}")]
    UnknownStation { index: usize, station: usize },
    #[error("n_p must be at least 1 and window_s positive")]
    BadShape,
}

/// Fixed-length window rooted at one pick.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSequence {
    pub root_index: usize,
    /// Exactly `n_p` rows; real rows first, pads after.
    pub rows: Vec<FeatureRow>,
    /// Global pick index of each real row.
    pub members: Vec<usize>,
    /// Known event of each real row, carried through from the input picks.
    pub events: Vec<Option<u32>>,
}

impl SubSequence {
    pub fn n_real(&self) -> usize {
        self.members.len()
    }
}

/// Station coordinates pre-normalized against the region, plus the window
/// shape.
#[derive(Debug, Clone)]
pub struct Featurizer {
    coords: Vec<(f64, f64)>,
    n_p: usize,
    window_s: f64,
}

impl Featurizer {
    pub fn new(stations: &[Station], region: &Region, n_p: usize, window_s: f64) -> Result<Self, WindowError> {
        if n_p == 0 || !(window_s > 0.0) {
            return Err(WindowError::BadShape);
        }
        let coords = stations
            .iter()
            .map(|s| region.normalize(s.location).map_err(|source| WindowError::Station { id: s.id.clone(), source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { coords, n_p, window_s })
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn n_stations(&self) -> usize {
        self.coords.len()
    }

    pub fn station_coords(&self, station: usize) -> (f64, f64) {
        self.coords[station]
    }

    /// Feature rows for a window whose first pick is the root. The caller
    /// guarantees the picks are time-sorted, within the window and at most
    /// `n_p` long.
    pub fn rows<'a>(&self, picks: impl IntoIterator<Item = &'a Pick>) -> Vec<FeatureRow> {
        let mut rows = Vec::with_capacity(self.n_p);
        let mut t_root = None;
        for p in picks.into_iter().take(self.n_p) {
            let t0 = *t_root.get_or_insert(p.time);
            let (x, y) = self.coords[p.station];
            rows.push([x, y, (p.time - t0) / self.window_s, p.phase.flag(), 0.0]);
        }
        rows.resize(self.n_p, PAD_ROW);
        rows
    }

    /// Builds sub-sequences over a whole in-memory stream.
    pub fn subsequences<'a>(
        &'a self,
        picks: &'a [Pick],
    ) -> SubsequenceStream<'a, std::iter::Copied<std::slice::Iter<'a, Pick>>> {
        SubsequenceStream::new(self, picks.iter().copied())
    }
}

/// Streaming window builder. Buffers at most `n_p` picks regardless of the
/// stream length.
pub struct SubsequenceStream<'a, I: Iterator<Item = Pick>> {
    feat: &'a Featurizer,
    input: I,
    buffer: VecDeque<(usize, Pick)>,
    next_index: usize,
    last_time: f64,
    exhausted: bool,
    failed: bool,
}

impl<'a, I: Iterator<Item = Pick>> SubsequenceStream<'a, I> {
    pub fn new(feat: &'a Featurizer, input: I) -> Self {
        Self {
            feat,
            input,
            buffer: VecDeque::with_capacity(feat.n_p + 1),
            next_index: 0,
            last_time: f64::NEG_INFINITY,
            exhausted: false,
            failed: false,
        }
    }

    fn pull(&mut self) -> Result<bool, WindowError> {
        let Some(p) = self.input.next() else {
            self.exhausted = true;
            return Ok(false);
        };
        let index = self.next_index;
        if !(p.time >= self.last_time) {
            return Err(WindowError::Unsorted { index, time: p.time, previous: self.last_time });
        }
        if p.station >= self.feat.n_stations() {
            return Err(WindowError::UnknownStation { index, station: p.station });
        }
        self.last_time = p.time;
        self.next_index += 1;
        self.buffer.push_back((index, p));
        Ok(true)
    }

    fn fill(&mut self) -> Result<(), WindowError> {
        loop {
            if self.exhausted {
                return Ok(());
            }
            if let (Some(first), Some(last)) = (self.buffer.front(), self.buffer.back()) {
                let full = self.buffer.len() >= self.feat.n_p;
                if full || last.1.time - first.1.time > self.feat.window_s {
                    return Ok(());
                }
            }
            self.pull()?;
        }
    }
}

impl<I: Iterator<Item = Pick>> Iterator for SubsequenceStream<'_, I> {
    type Item = Result<SubSequence, WindowError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if let Err(e) = self.fill() {
            self.failed = true;
            return Some(Err(e));
        }
        let &(root_index, root) = self.buffer.front()?;
        let limit = root.time + self.feat.window_s;
        let members: Vec<usize> =
            self.buffer.iter().take(self.feat.n_p).take_while(|(_, p)| p.time <= limit).map(|&(i, _)| i).collect();
        let rows = self.feat.rows(self.buffer.iter().take(members.len()).map(|(_, p)| p));
        let events = self.buffer.iter().take(members.len()).map(|(_, p)| p.event).collect();
        self.buffer.pop_front();
        Some(Ok(SubSequence { root_index, rows, members, events }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;
    use crate::velmod::Phase;
    use proptest::prelude::*;

    fn feat(n_p: usize) -> Featurizer {
        let region = Region::new(32.0, 37.0, -120.0, -114.0).unwrap();
        let stations: Vec<Station> = (0..4)
            .map(|i| Station {
                id: format!("S{i}"),
                location: GeoPoint { lat: 32.0 + i as f64, lon: -120.0 + i as f64 },
            })
            .collect();
        Featurizer::new(&stations, &region, n_p, 120.0).unwrap()
    }

    fn pick(station: usize, time: f64) -> Pick {
        Pick { station, time, phase: if station % 2 == 0 { Phase::P } else { Phase::S }, event: None }
    }

    #[test]
    fn pads_short_windows() {
        let f = feat(5);
        let picks = [pick(0, 0.0), pick(1, 6.0), pick(2, 12.0)];
        let subs: Vec<_> = f.subsequences(&picks).collect::<Result<_, _>>().unwrap();
        assert_eq!(subs.len(), 3);
        let s = &subs[0];
        assert_eq!(s.members, vec![0, 1, 2]);
        assert_eq!(s.rows[1], [1.0 / 6.0, 0.2, 0.05, 1.0, 0.0]);
        assert_eq!(&s.rows[3..], &[PAD_ROW, PAD_ROW]);
        assert_eq!(subs[2].members, vec![2]);
    }

    #[test]
    fn excludes_picks_beyond_window() {
        let f = feat(5);
        let picks = [pick(0, 0.0), pick(1, 120.0), pick(2, 121.0)];
        let subs: Vec<_> = f.subsequences(&picks).collect::<Result<_, _>>().unwrap();
        assert_eq!(subs[0].members, vec![0, 1]);
        assert_eq!(subs[0].rows[1][2], 1.0);
        assert_eq!(subs[1].members, vec![1, 2]);
    }

    #[test]
    fn caps_at_n_p_earliest() {
        let f = feat(3);
        let picks: Vec<Pick> = (0..6).map(|i| pick(i % 4, i as f64)).collect();
        let subs: Vec<_> = f.subsequences(&picks).collect::<Result<_, _>>().unwrap();
        assert_eq!(subs[0].members, vec![0, 1, 2]);
        assert_eq!(subs[4].members, vec![4, 5]);
    }

    #[test]
    fn unsorted_input_is_an_error() {
        let f = feat(3);
        let picks = [pick(0, 5.0), pick(1, 4.0)];
        let out: Vec<_> = f.subsequences(&picks).collect();
        assert!(matches!(out.last(), Some(Err(WindowError::Unsorted { index: 1, .. }))));
    }

    #[test]
    fn station_outside_region_is_rejected() {
        let region = Region::new(32.0, 33.0, -120.0, -119.0).unwrap();
        let st = vec![Station { id: "X".into(), location: GeoPoint { lat: 40.0, lon: -119.5 } }];
        assert!(matches!(Featurizer::new(&st, &region, 4, 120.0), Err(WindowError::Station { .. })));
    }

    proptest! {
        #[test]
        fn stream_invariants(mut times in prop::collection::vec(0.0f64..2000.0, 1..200), n_p in 1usize..40) {
            times.sort_by(f64::total_cmp);
            let f = feat(n_p);
            let picks: Vec<Pick> = times.iter().enumerate().map(|(i, &t)| pick(i % 4, t)).collect();
            let subs: Vec<_> = f.subsequences(&picks).collect::<Result<_, _>>().unwrap();
            prop_assert_eq!(subs.len(), picks.len());
            for (r, s) in subs.iter().enumerate() {
                prop_assert_eq!(s.root_index, r);
                prop_assert_eq!(s.members[0], r);
                prop_assert_eq!(s.rows.len(), n_p);
                prop_assert_eq!(s.rows[0][2], 0.0);
                let n = s.n_real();
                for w in s.rows[..n].windows(2) {
                    prop_assert!(w[0][2] <= w[1][2]);
                }
                for row in &s.rows[..n] {
                    prop_assert!(row[2] <= 1.0 && row[4] == 0.0);
                }
                prop_assert!(s.rows[n..].iter().all(|row| *row == PAD_ROW));
                for (k, &m) in s.members.iter().enumerate() {
                    let (x, y) = f.station_coords(picks[m].station);
                    prop_assert_eq!((s.rows[k][0], s.rows[k][1]), (x, y));
                }
                // Window is maximal: the next pick is either past the cap or the time limit.
                let next = r + n;
                if next < picks.len() && n < n_p {
                    prop_assert!(picks[next].time - picks[r].time > 120.0);
                }
            }
        }
    }
}
