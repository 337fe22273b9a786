//! Phase picks and the pick-stream CSV format.
//!
//! A pick stream file has the header `station_id,time_epoch_s,phase` and an
//! optional fourth column `event_id` carrying ground truth (empty or `-1` for
//! picks that belong to no event). Station ids are resolved against the
//! station list; picks receive their global index from their row order after
//! sorting by time.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Station;
use crate::velmod::Phase;

#[derive(Debug, Error)]
pub enum PickError {
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
}

/// A single phase detection on one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub station: usize,
    /// Seconds; relative to the window start for synthetic sub-sequences,
    /// absolute for streams.
    pub time: f64,
    pub phase: Phase,
    /// Ground-truth event, `None` for false picks or unknown.
    pub event: Option<u32>,
}

/// Total order used everywhere picks are sorted: time, then station, then
/// phase.
pub fn pick_order(a: &Pick, b: &Pick) -> std::cmp::Ordering {
    a.time.total_cmp(&b.time).then(a.station.cmp(&b.station)).then(a.phase.cmp(&b.phase))
}

pub fn sort_picks(picks: &mut [Pick]) {
    picks.sort_by(pick_order);
}

pub fn is_sorted(picks: &[Pick]) -> bool {
    picks.windows(2).all(|w| w[0].time <= w[1].time)
}

/// Reads a pick stream and returns it sorted by time.
pub fn read_picks(path: impl AsRef<Path>, stations: &[Station]) -> Result<Vec<Pick>, PickError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let index: HashMap<&str, usize> = stations.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|source| PickError::Csv { path: p.clone(), source })?;
    let headers = rdr.headers().map_err(|source| PickError::Csv { path: p.clone(), source })?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing = |name: &str| PickError::Parse { path: p.clone(), line: 1, msg: format!("missing column `{name}`") };
    let cs = find("station_id").ok_or_else(|| missing("station_id"))?;
    let ct = find("time_epoch_s").ok_or_else(|| missing("time_epoch_s"))?;
    let cp = find("phase").ok_or_else(|| missing("phase"))?;
    let ce = find("event_id");

    let mut picks = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| PickError::Csv { path: p.clone(), source })?;
        let line = rec.position().map_or(0, |pos| pos.line());
        let bad = |msg: String| PickError::Parse { path: p.clone(), line, msg };
        let sid = rec.get(cs).unwrap_or("");
        let station = *index.get(sid).ok_or_else(|| bad(format!("unknown station `{sid}`")))?;
        let raw_t = rec.get(ct).unwrap_or("");
        let time: f64 = raw_t.parse().map_err(|_| bad(format!("bad time `{raw_t}`")))?;
        if !time.is_finite() {
            return Err(bad(format!("non-finite time `{raw_t}`")));
        }
        let phase: Phase = rec.get(cp).unwrap_or("").parse().map_err(bad)?;
        let event = match ce.and_then(|c| rec.get(c)) {
            None | Some("") => None,
            Some(v) => {
                let id: i64 = v.parse().map_err(|_| bad(format!("bad event_id `{v}`")))?;
                u32::try_from(id).ok()
            }
        };
        picks.push(Pick { station, time, phase, event });
    }
    sort_picks(&mut picks);
    Ok(picks)
}

/// Writes a pick stream; `event_id` is included when `with_truth` is set.
pub fn write_picks(
    path: impl AsRef<Path>,
    picks: &[Pick],
    stations: &[Station],
    with_truth: bool,
) -> Result<(), PickError> {
    let path = path.as_ref();
    let io = |source| PickError::Io { path: path.display().to_string(), source };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut body = String::from("station_id,time_epoch_s,phase");
    if with_truth {
        body.push_str(",event_id");
    }
    writeln!(w, "{body}").map_err(io)?;
    for pk in picks {
        let sid = &stations[pk.station].id;
        if with_truth {
            let ev = pk.event.map_or(-1, i64::from);
            writeln!(w, "{sid},{:.4},{},{ev}", pk.time, pk.phase).map_err(io)?;
        } else {
            writeln!(w, "{sid},{:.4},{}", pk.time, pk.phase).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
