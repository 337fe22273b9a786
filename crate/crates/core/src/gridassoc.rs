//! Grid back-projection associator used as a baseline.
//!
//! Travel times from every node of a regular lattice to every station are
//! precomputed. For each node and trial origin time, the picks whose
//! residual is within tolerance are counted; the best-supported (node,
//! origin) is declared an event when it reaches `min_picks`, its picks are
//! consumed, and the search repeats. Origin times are processed in chunks so
//! memory does not grow with the stream length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{Catalog, Cluster};
use crate::geo::{epicentral_distance_km, km_per_degree, GeoPoint, Region, Station};
use crate::picks::Pick;
use crate::velmod::{LayeredModel, Phase, VelModError};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("at least one non-negative depth level is required")]
    Depths,
    #[error("travel-time grid needs {need} bytes, above the cap of {cap}")]
    TooLarge { need: usize, cap: usize },
    #[error(transparent)]
    VelMod(#[from] VelModError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub spacing_km: f64,
    pub depth_levels_km: Vec<f64>,
    pub max_bytes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { spacing_km: 5.0, depth_levels_km: vec![2.5, 7.5, 12.5, 17.5, 22.5], max_bytes: 1 << 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub residual_tol: f64,
    pub min_picks: usize,
    pub origin_time_step: f64,
    pub dedup_window: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { residual_tol: 1.5, min_picks: 8, origin_time_step: 1.0, dedup_window: 5.0 }
    }
}

impl GridParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("origin_time_step", self.origin_time_step),
            ("dedup_window", self.dedup_window),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.min_picks == 0 {
            out.push("min_picks must be at least 1".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub location: GeoPoint,
    pub depth_km: f64,
}

#[derive(Debug, Clone)]
pub struct TravelTimeGrid {
    nodes: Vec<GridNode>,
    n_stations: usize,
    // [node][station][phase]
    times: Vec<f64>,
    max_time: f64,
}

/// Byte size of the table for the given shape.
pub fn grid_bytes(n_nodes: usize, n_stations: usize) -> usize {
    n_nodes * n_stations * 2 * std::mem::size_of::<f64>()
}

/// Lattice over `region` with corners included, repeated at each depth.
pub fn grid_nodes(region: &Region, spec: &GridSpec) -> Result<Vec<GridNode>, GridError> {
    if !(spec.spacing_km > 0.0 && spec.spacing_km.is_finite()) {
        return Err(GridError::Spacing(spec.spacing_km));
    }
    if spec.depth_levels_km.is_empty() || spec.depth_levels_km.iter().any(|d| !(*d >= 0.0)) {
        return Err(GridError::Depths);
    }
    let kpd = km_per_degree();
    let mid = 0.5 * (region.lat_min + region.lat_max);
    let dlat = spec.spacing_km / kpd;
    let dlon = spec.spacing_km / (kpd * mid.to_radians().cos());
    let ny = ((region.lat_max - region.lat_min) / dlat).floor() as usize + 1;
    let nx = ((region.lon_max - region.lon_min) / dlon).floor() as usize + 1;
    let mut nodes = Vec::with_capacity(nx * ny * spec.depth_levels_km.len());
    for &depth_km in &spec.depth_levels_km {
        for iy in 0..ny {
            for ix in 0..nx {
                nodes.push(GridNode {
                    location: GeoPoint {
                        lat: region.lat_min + iy as f64 * dlat,
                        lon: region.lon_min + ix as f64 * dlon,
                    },
                    depth_km,
                });
            }
        }
    }
    Ok(nodes)
}

impl TravelTimeGrid {
    pub fn build(
        region: &Region,
        spec: &GridSpec,
        stations: &[Station],
        model: &LayeredModel,
    ) -> Result<Self, GridError> {
        let nodes = grid_nodes(region, spec)?;
        Self::from_nodes(nodes, stations, model, spec.max_bytes)
    }

    pub fn from_nodes(
        nodes: Vec<GridNode>,
        stations: &[Station],
        model: &LayeredModel,
        max_bytes: usize,
    ) -> Result<Self, GridError> {
        let need = grid_bytes(nodes.len(), stations.len());
        if need > max_bytes {
            return Err(GridError::TooLarge { need, cap: max_bytes });
        }
        let per_node: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|n| {
                let mut row = Vec::with_capacity(2 * stations.len());
                for s in stations {
                    let d = epicentral_distance_km(n.location, s.location);
                    row.push(model.travel_time(n.depth_km, d, Phase::P)?);
                    row.push(model.travel_time(n.depth_km, d, Phase::S)?);
                }
                Ok(row)
            })
            .collect::<Result<_, VelModError>>()?;
        let times: Vec<f64> = per_node.into_iter().flatten().collect();
        let max_time = times.iter().copied().fold(0.0, f64::max);
        Ok(Self { nodes, n_stations: stations.len(), times, max_time })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn time(&self, node: usize, station: usize, phase: Phase) -> f64 {
        self.times[(node * self.n_stations + station) * 2 + phase.index()]
    }

    pub fn max_time(&self) -> f64 {
        self.max_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEvent {
    pub node: usize,
    pub origin_time: f64,
    /// Global pick indices, ascending.
    pub picks: Vec<usize>,
}

pub fn to_catalog(events: &[GridEvent]) -> Catalog {
    let clusters =
        events.iter().map(|e| Cluster { picks: e.picks.iter().copied().collect(), roots: Vec::new() }).collect();
    Catalog::from_clusters(clusters)
}

/// Minimum origin-time chunk length in seconds.
const MIN_CHUNK_S: f64 = 60.0;

/// Greedy back-projection over a time-sorted pick stream.
///
/// Each chunk of origin times is scored together with a lookahead of one
/// maximum travel time, so a better-supported origin just past the chunk
/// can claim its picks first: when the best candidate lies in the
/// lookahead, everything that could share picks with it is deferred to the
/// next chunk.
pub fn grid_associate(picks: &[Pick], grid: &TravelTimeGrid, params: &GridParams) -> Vec<GridEvent> {
    let Some(first) = picks.first() else {
        return Vec::new();
    };
    let last = picks.last().map_or(first.time, |p| p.time);
    let step = params.origin_time_step;
    let tol = params.residual_tol;
    // Two origins can share a pick only if they are within this many steps.
    let reach = ((grid.max_time + 2.0 * tol) / step).ceil() as usize;
    let n_chunk = ((MIN_CHUNK_S / step).ceil() as usize).max(2 * reach);
    let n_steps = n_chunk + reach;

    let mut used = vec![false; picks.len()];
    let mut events: Vec<GridEvent> = Vec::new();
    let mut lo = 0usize;
    let mut t0 = first.time - grid.max_time - tol;
    while t0 <= last + tol {
        let ext_end = t0 + n_steps as f64 * step;
        // Picks that can support an origin in the extended chunk.
        while lo < picks.len() && picks[lo].time < t0 - tol {
            lo += 1;
        }
        let mut hi = lo;
        while hi < picks.len() && picks[hi].time <= ext_end + grid.max_time + tol {
            hi += 1;
        }
        let active: Vec<usize> = (lo..hi).filter(|&i| !used[i]).collect();
        // Origins before `limit` are settled in this chunk.
        let mut limit = n_chunk;
        if active.len() >= params.min_picks {
            let mut counts = count_support(picks, &active, grid, t0, step, n_steps, tol);
            let mut search_end = n_steps;
            loop {
                let best = counts
                    .par_iter()
                    .enumerate()
                    .map(|(n, row)| {
                        let (k, c) =
                            row[..search_end]
                                .iter()
                                .enumerate()
                                .fold((0, 0u32), |acc, (k, &c)| if c > acc.1 { (k, c) } else { acc });
                        (c, std::cmp::Reverse(k), std::cmp::Reverse(n))
                    })
                    .max();
                let Some((c, std::cmp::Reverse(k), std::cmp::Reverse(node))) = best else {
                    break;
                };
                if (c as usize) < params.min_picks {
                    break;
                }
                if k >= limit {
                    search_end = k.saturating_sub(reach);
                    limit = limit.min(search_end);
                    continue;
                }
                let origin = t0 + k as f64 * step;
                let members: Vec<usize> = active
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let p = &picks[i];
                        !used[i]
                            && support_range(p.time, grid.time(node, p.station, p.phase), t0, step, n_steps, tol)
                                .is_some_and(|(a, b)| a <= k && k <= b)
                    })
                    .collect();
                debug_assert_eq!(members.len(), c as usize);
                let duplicate = events.iter().any(|e| (e.origin_time - origin).abs() < params.dedup_window);
                for &i in &members {
                    used[i] = true;
                }
                remove_support(picks, &members, grid, t0, step, n_steps, tol, &mut counts);
                if duplicate {
                    continue;
                }
                events.push(GridEvent { node, origin_time: origin, picks: members });
            }
        }
        t0 += limit.max(1) as f64 * step;
    }
    events
}

/// Origin-step range a pick supports at one node, clipped to the chunk.
#[inline]
fn support_range(t: f64, tt: f64, t0: f64, step: f64, n_steps: usize, tol: f64) -> Option<(usize, usize)> {
    let a = ((t - tt - tol - t0) / step).ceil();
    let b = ((t - tt + tol - t0) / step).floor();
    if b < 0.0 || a >= n_steps as f64 || a > b {
        return None;
    }
    Some((a.max(0.0) as usize, (b as usize).min(n_steps - 1)))
}

fn count_support(
    picks: &[Pick],
    active: &[usize],
    grid: &TravelTimeGrid,
    t0: f64,
    step: f64,
    n_steps: usize,
    tol: f64,
) -> Vec<Vec<u32>> {
    (0..grid.nodes.len())
        .into_par_iter()
        .map(|node| {
            let mut diff = vec![0i32; n_steps + 1];
            for &i in active {
                let p = &picks[i];
                if let Some((a, b)) = support_range(p.time, grid.time(node, p.station, p.phase), t0, step, n_steps, tol)
                {
                    diff[a] += 1;
                    diff[b + 1] -= 1;
                }
            }
            let mut acc = 0i32;
            diff[..n_steps]
                .iter()
                .map(|d| {
                    acc += d;
                    acc as u32
                })
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn remove_support(
    picks: &[Pick],
    removed: &[usize],
    grid: &TravelTimeGrid,
    t0: f64,
    step: f64,
    n_steps: usize,
    tol: f64,
    counts: &mut [Vec<u32>],
) {
    counts.par_iter_mut().enumerate().for_each(|(node, row)| {
        for &i in removed {
            let p = &picks[i];
            if let Some((a, b)) = support_range(p.time, grid.time(node, p.station, p.phase), t0, step, n_steps, tol) {
                for c in &mut row[a..=b] {
                    *c -= 1;
                }
            }
        }
    });
}
