//! 1D layered velocity models and first-arrival travel times for P and S.
//!
//! Travel times use flat-layer ray theory. The first arrival is the minimum
//! of the direct (up-going) ray and the head waves refracted along every
//! interface below the source that is faster than everything above it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DIRECT_RAY_TOLERANCE_KM: f64 = 1e-9;
const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Error)]
pub enum VelModError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("model has no layers")]
    Empty,
    #[error("first layer must start at depth 0 (got {0} km)")]
    FirstLayerNotAtSurface(f64),
    #[error("non-increasing depth at layer {index}: {top_km} km")]
    NonIncreasingDepth { index: usize, top_km: f64 },
    #[error("layer {index}: velocities must be positive (vp {vp}, vs {vs})")]
    NonPositiveVelocity { index: usize, vp: f64, vs: f64 },
    #[error("layer {index}: vp ({vp}) must exceed vs ({vs})")]
    VpNotAboveVs { index: usize, vp: f64, vs: f64 },
    #[error("invalid travel-time argument: depth {depth_km} km, distance {distance_km} km")]
    Argument { depth_km: f64, distance_km: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    P,
    S,
}

impl Phase {
    /// Feature encoding: 0 for P, 1 for S.
    pub fn flag(self) -> f64 {
        match self {
            Phase::P => 0.0,
            Phase::S => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::P => "P",
            Phase::S => "S",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" | "0" => Ok(Phase::P),
            "S" | "s" | "1" => Ok(Phase::S),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub top_km: f64,
    pub vp: f64,
    pub vs: f64,
}

impl Layer {
    pub fn velocity(&self, phase: Phase) -> f64 {
        match phase {
            Phase::P => self.vp,
            Phase::S => self.vs,
        }
    }
}

/// Stack of constant-velocity layers; the last one is a half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Layer>", into = "Vec<Layer>")]
pub struct LayeredModel {
    layers: Vec<Layer>,
}

impl TryFrom<Vec<Layer>> for LayeredModel {
    type Error = VelModError;

    fn try_from(layers: Vec<Layer>) -> Result<Self, Self::Error> {
        Self::new(layers)
    }
}

impl From<LayeredModel> for Vec<Layer> {
    fn from(m: LayeredModel) -> Self {
        m.layers
    }
}

/// One straight segment of a ray path: vertical thickness and velocity.
#[derive(Debug, Clone, Copy)]
struct Leg {
    h: f64,
    v: f64,
}

impl LayeredModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self, VelModError> {
        let first = layers.first().ok_or(VelModError::Empty)?;
        if first.top_km != 0.0 {
            return Err(VelModError::FirstLayerNotAtSurface(first.top_km));
        }
        for (index, l) in layers.iter().enumerate() {
            if index > 0 && !(l.top_km > layers[index - 1].top_km) {
                return Err(VelModError::NonIncreasingDepth { index, top_km: l.top_km });
            }
            if !(l.vp > 0.0 && l.vs > 0.0) {
                return Err(VelModError::NonPositiveVelocity { index, vp: l.vp, vs: l.vs });
            }
            if !(l.vp > l.vs) {
                return Err(VelModError::VpNotAboveVs { index, vp: l.vp, vs: l.vs });
            }
        }
        Ok(Self { layers })
    }

    /// Single homogeneous half-space.
    pub fn half_space(vp: f64, vs: f64) -> Result<Self, VelModError> {
        Self::new(vec![Layer { top_km: 0.0, vp, vs }])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Reads a model file: one `top_depth_km vp_kms vs_kms` row per line,
    /// `#` starts a comment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, VelModError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| VelModError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# top_depth_km vp_kms vs_kms\n");
        for l in &self.layers {
            s.push_str(&format!("{} {} {}\n", l.top_km, l.vp, l.vs));
        }
        s
    }

    // A source exactly on an interface is placed in the layer above so that
    // the refraction along that interface is available.
    fn source_layer(&self, depth_km: f64) -> usize {
        self.layers.iter().rposition(|l| l.top_km < depth_km).unwrap_or(0)
    }

    fn bottom_of(&self, i: usize) -> f64 {
        self.layers.get(i + 1).map_or(f64::INFINITY, |l| l.top_km)
    }

    /// First-arrival travel time in seconds from a source at `depth_km` to a
    /// surface receiver `distance_km` away.
    pub fn travel_time(&self, depth_km: f64, distance_km: f64, phase: Phase) -> Result<f64, VelModError> {
        if !(depth_km >= 0.0 && distance_km >= 0.0 && depth_km.is_finite() && distance_km.is_finite()) {
            return Err(VelModError::Argument { depth_km, distance_km });
        }
        let k = self.source_layer(depth_km);
        let v = |i: usize| self.layers[i].velocity(phase);

        // Up-going legs from the source to the surface.
        let mut up: Vec<Leg> =
            (0..k).map(|i| Leg { h: self.layers[i + 1].top_km - self.layers[i].top_km, v: v(i) }).collect();
        up.push(Leg { h: depth_km - self.layers[k].top_km, v: v(k) });
        up.retain(|l| l.h > 0.0);

        let mut best = direct_time(&up, v(k), distance_km);

        // Head waves along interfaces strictly below the source.
        let mut down = vec![Leg { h: self.bottom_of(k) - depth_km, v: v(k) }];
        let mut vmax_above = (0..=k).map(v).fold(0.0, f64::max);
        for j in k + 1..self.layers.len() {
            let vj = v(j);
            if vj > vmax_above {
                let p = 1.0 / vj;
                let above = (0..j).map(|i| Leg { h: self.layers[i + 1].top_km - self.layers[i].top_km, v: v(i) });
                let legs: Vec<Leg> = down.iter().copied().chain(above).collect();
                let mut crit = 0.0;
                let mut intercept = 0.0;
                for l in legs.iter().filter(|l| l.h > 0.0) {
                    let s = 1.0 / (l.v * l.v) - p * p;
                    let root = s.max(0.0).sqrt();
                    intercept += l.h * root;
                    crit += l.h * p / root;
                }
                if distance_km >= crit {
                    best = best.min(intercept + distance_km * p);
                }
            }
            vmax_above = vmax_above.max(vj);
            down.push(Leg { h: self.bottom_of(j) - self.layers[j].top_km, v: vj });
        }
        Ok(best)
    }
}

/// Travel times tabulated on a regular (depth, distance) lattice with
/// bilinear interpolation. Used where millions of arrivals are needed.
#[derive(Debug, Clone)]
pub struct TravelTimeTable {
    depth_step: f64,
    dist_step: f64,
    n_depth: usize,
    n_dist: usize,
    // [phase][depth][dist]
    times: Vec<f64>,
}

impl TravelTimeTable {
    pub fn new(
        model: &LayeredModel,
        max_depth_km: f64,
        max_dist_km: f64,
        depth_step: f64,
        dist_step: f64,
    ) -> Result<Self, VelModError> {
        if !(depth_step > 0.0 && dist_step > 0.0 && max_depth_km >= 0.0 && max_dist_km >= 0.0) {
            return Err(VelModError::Argument { depth_km: max_depth_km, distance_km: max_dist_km });
        }
        let n_depth = (max_depth_km / depth_step).ceil() as usize + 2;
        let n_dist = (max_dist_km / dist_step).ceil() as usize + 2;
        let mut times = Vec::with_capacity(2 * n_depth * n_dist);
        for phase in [Phase::P, Phase::S] {
            for i in 0..n_depth {
                for j in 0..n_dist {
                    times.push(model.travel_time(i as f64 * depth_step, j as f64 * dist_step, phase)?);
                }
            }
        }
        Ok(Self { depth_step, dist_step, n_depth, n_dist, times })
    }

    pub fn max_depth_km(&self) -> f64 {
        (self.n_depth - 1) as f64 * self.depth_step
    }

    pub fn max_dist_km(&self) -> f64 {
        (self.n_dist - 1) as f64 * self.dist_step
    }

    /// Interpolated time; arguments are clamped to the tabulated range.
    pub fn time(&self, depth_km: f64, distance_km: f64, phase: Phase) -> f64 {
        let fi = (depth_km / self.depth_step).clamp(0.0, (self.n_depth - 1) as f64);
        let fj = (distance_km / self.dist_step).clamp(0.0, (self.n_dist - 1) as f64);
        let i = (fi as usize).min(self.n_depth - 2);
        let j = (fj as usize).min(self.n_dist - 2);
        let (wi, wj) = (fi - i as f64, fj - j as f64);
        let base = phase.index() * self.n_depth * self.n_dist;
        let at = |a: usize, b: usize| self.times[base + a * self.n_dist + b];
        (1.0 - wi) * ((1.0 - wj) * at(i, j) + wj * at(i, j + 1))
            + wi * ((1.0 - wj) * at(i + 1, j) + wj * at(i + 1, j + 1))
    }
}

/// Direct ray time by bisection on the take-off angle in the fastest leg.
fn direct_time(legs: &[Leg], v_source: f64, x: f64) -> f64 {
    if legs.is_empty() {
        return x / v_source;
    }
    if x == 0.0 {
        return legs.iter().map(|l| l.h / l.v).sum();
    }
    let vmax = legs.iter().map(|l| l.v).fold(0.0, f64::max);
    // Horizontal offset and time for the ray leaving at angle `phi` (from
    // vertical) in the fastest leg, so the ray parameter is sin(phi)/vmax.
    let trace = |phi: f64| -> (f64, f64) {
        let (sin_phi, cos_phi) = phi.sin_cos();
        let mut xo = 0.0;
        let mut t = 0.0;
        for l in legs {
            let s = sin_phi * l.v / vmax;
            let c = if l.v == vmax { cos_phi } else { ((1.0 - s) * (1.0 + s)).sqrt() };
            xo += l.h * s / c;
            t += l.h / (l.v * c);
        }
        (xo, t)
    };
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::FRAC_PI_2);
    let mut t = 0.0;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let (xm, tm) = trace(mid);
        t = tm;
        if (xm - x).abs() <= DIRECT_RAY_TOLERANCE_KM || mid == lo || mid == hi {
            break;
        }
        if xm < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t
}

impl FromStr for LayeredModel {
    type Err = VelModError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut layers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if fields.len() != 3 {
                return Err(VelModError::Parse {
                    line: i + 1,
                    msg: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut vals = [0.0; 3];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                *slot =
                    f.parse().map_err(|_| VelModError::Parse { line: i + 1, msg: format!("not a number: `{f}`") })?;
            }
            layers.push(Layer { top_km: vals[0], vp: vals[1], vs: vals[2] });
        }
        LayeredModel::new(layers)
    }
}
