//! Station geometry: normalization into the unit square and great-circle
//! distances.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for all distance computations.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid coordinate: lat {lat}, lon {lon}")]
    InvalidPoint { lat: f64, lon: f64 },
    #[error("invalid region: lat [{lat_min}, {lat_max}], lon [{lon_min}, {lon_max}]")]
    InvalidRegion { lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64 },
    #[error("point ({lat}, {lon}) lies outside the region")]
    OutOfRegion { lat: f64, lon: f64 },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },
    #[error("{path}: no stations")]
    NoStations { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::InvalidPoint { lat, lon });
        }
        Ok(Self { lat, lon })
    }
}

/// Axis-aligned lat/lon box. Boxes crossing the antimeridian are not supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self, GeoError> {
        let r = Self { lat_min, lat_max, lon_min, lon_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        let ok = self.lat_min < self.lat_max
            && self.lon_min < self.lon_max
            && self.lat_min >= -90.0
            && self.lat_max <= 90.0
            && self.lon_min >= -180.0
            && self.lon_max <= 180.0;
        if ok {
            Ok(())
        } else {
            Err(GeoError::InvalidRegion {
                lat_min: self.lat_min,
                lat_max: self.lat_max,
                lon_min: self.lon_min,
                lon_max: self.lon_max,
            })
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat) && (self.lon_min..=self.lon_max).contains(&p.lon)
    }

    /// Maps a point onto the unit square: `x` follows longitude, `y` latitude.
    pub fn normalize(&self, p: GeoPoint) -> Result<(f64, f64), GeoError> {
        if !self.contains(p) {
            return Err(GeoError::OutOfRegion { lat: p.lat, lon: p.lon });
        }
        Ok((
            (p.lon - self.lon_min) / (self.lon_max - self.lon_min),
            (p.lat - self.lat_min) / (self.lat_max - self.lat_min),
        ))
    }

    /// Inverse of [`Region::normalize`]. Used to place synthetic hypocenters
    /// drawn in unit coordinates.
    pub fn denormalize(&self, x: f64, y: f64) -> GeoPoint {
        GeoPoint {
            lat: self.lat_min + y * (self.lat_max - self.lat_min),
            lon: self.lon_min + x * (self.lon_max - self.lon_min),
        }
    }

    /// Shrinks the box by `margin_km` on every side (approximate, using the
    /// mid-latitude degree length).
    pub fn inset_km(&self, margin_km: f64) -> Result<Region, GeoError> {
        let dlat = margin_km / km_per_degree();
        let mid = 0.5 * (self.lat_min + self.lat_max);
        let dlon = margin_km / (km_per_degree() * mid.to_radians().cos());
        Region::new(self.lat_min + dlat, self.lat_max - dlat, self.lon_min + dlon, self.lon_max - dlon)
    }
}

/// Length of one degree of arc on the reference sphere.
pub fn km_per_degree() -> f64 {
    EARTH_RADIUS_KM * std::f64::consts::PI / 180.0
}

/// Haversine great-circle distance.
pub fn epicentral_distance_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi * 0.5).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda * 0.5).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub location: GeoPoint,
}

/// Reads a station list with header `id,lat,lon`. Extra columns (elevation)
/// are ignored.
pub fn load_stations(path: impl AsRef<Path>) -> Result<Vec<Station>, GeoError> {
    let path = path.as_ref();
    let p = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|source| GeoError::Csv { path: p.clone(), source })?;
    let headers = rdr.headers().map_err(|source| GeoError::Csv { path: p.clone(), source })?.clone();
    let col = |name: &str| -> Result<usize, GeoError> {
        headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| GeoError::Parse {
            path: p.clone(),
            line: 1,
            msg: format!("missing column `{name}`"),
        })
    };
    let (ci, clat, clon) = (col("id")?, col("lat")?, col("lon")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| GeoError::Csv { path: p.clone(), source })?;
        let line = rec.position().map_or(0, |pos| pos.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, what: &str| -> Result<f64, GeoError> {
            field(i).parse::<f64>().map_err(|_| GeoError::Parse {
                path: p.clone(),
                line,
                msg: format!("bad {what} `{}`", field(i)),
            })
        };
        let location = GeoPoint::new(num(clat, "lat")?, num(clon, "lon")?).map_err(|e| GeoError::Parse {
            path: p.clone(),
            line,
            msg: e.to_string(),
        })?;
        out.push(Station { id: field(ci).to_string(), location });
    }
    if out.is_empty() {
        return Err(GeoError::NoStations { path: p });
    }
    Ok(out)
}

pub fn write_stations(path: impl AsRef<Path>, stations: &[Station]) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "id,lat,lon")?;
    for s in stations {
        writeln!(f, "{},{:.5},{:.5}", s.id, s.location.lat, s.location.lon)?;
    }
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn socal() -> Region {
        Region::new(32.0, 37.0, -120.0, -114.0).unwrap()
    }

    #[test]
    fn normalize_corners_and_midpoint() {
        let r = socal();
        assert_eq!(r.normalize(GeoPoint { lat: 32.0, lon: -120.0 }).unwrap(), (0.0, 0.0));
        let (x, y) = r.normalize(GeoPoint { lat: 34.5, lon: -117.0 }).unwrap();
        assert!((x - 0.5).abs() < 1e-15 && (y - 0.5).abs() < 1e-15);
        let (_, y) = r.normalize(GeoPoint { lat: 34.0, lon: -117.0 }).unwrap();
        assert!((y - 0.4).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_outside() {
        let r = socal();
        assert!(matches!(r.normalize(GeoPoint { lat: 31.9, lon: -117.0 }), Err(GeoError::OutOfRegion { .. })));
    }

    #[test]
    fn region_invariants() {
        assert!(Region::new(33.0, 33.0, 0.0, 1.0).is_err());
        assert!(Region::new(33.0, 34.0, 1.0, 0.0).is_err());
        assert!(GeoPoint::new(91.0, 0.0).is_err());
    }

    #[test]
    fn distance_reference_values() {
        let a = GeoPoint { lat: 10.0, lon: 20.0 };
        assert_eq!(epicentral_distance_km(a, a), 0.0);
        let b = GeoPoint { lat: 11.0, lon: 20.0 };
        assert!((epicentral_distance_km(a, b) - 111.195).abs() < 1e-3);
        // One degree of longitude at 60N: brute-force check via the chord length.
        let c = GeoPoint { lat: 60.0, lon: 0.0 };
        let d = GeoPoint { lat: 60.0, lon: 1.0 };
        let chord = {
            let xyz = |p: GeoPoint| {
                let (la, lo) = (p.lat.to_radians(), p.lon.to_radians());
                [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
            };
            let (u, v) = (xyz(c), xyz(d));
            ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2) + (u[2] - v[2]).powi(2)).sqrt()
        };
        let expected = 2.0 * EARTH_RADIUS_KM * (chord / 2.0).asin();
        let got = epicentral_distance_km(c, d);
        assert!((got - expected).abs() < 1e-9);
        assert!((got - 55.6).abs() < 0.05);
    }

    fn point() -> impl Strategy<Value = GeoPoint> {
        (30.0f64..40.0, -125.0f64..-110.0).prop_map(|(lat, lon)| GeoPoint { lat, lon })
    }

    proptest! {
        #[test]
        fn normalize_round_trips(lat in 32.0f64..37.0, lon in -120.0f64..-114.0) {
            let r = socal();
            let p = GeoPoint { lat, lon };
            let (x, y) = r.normalize(p).unwrap();
            prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
            let q = r.denormalize(x, y);
            prop_assert!(((q.lat - lat) / lat).abs() < 1e-12);
            prop_assert!(((q.lon - lon) / lon).abs() < 1e-12);
        }

        #[test]
        fn normalize_is_monotone(a in 32.0f64..37.0, b in 32.0f64..37.0) {
            let r = socal();
            let (_, ya) = r.normalize(GeoPoint { lat: a, lon: -117.0 }).unwrap();
            let (_, yb) = r.normalize(GeoPoint { lat: b, lon: -117.0 }).unwrap();
            prop_assert_eq!(a < b, ya < yb);
        }

        #[test]
        fn distance_is_a_metric(a in point(), b in point(), c in point()) {
            let ab = epicentral_distance_km(a, b);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - epicentral_distance_km(b, a)).abs() < 1e-9);
            prop_assert!(ab <= epicentral_distance_km(a, c) + epicentral_distance_km(c, b) + 1e-9);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }
    }
}
