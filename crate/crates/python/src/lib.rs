//! Python bindings: travel times, synthetic pick streams, association with
//! the link model, the oracle or the grid baseline, and catalog scoring.
//!
//! Picks cross the boundary as `(station_id, time, phase, event_id)` tuples,
//! with `event_id` `None` when unknown.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seislink::aggregate::AggParams;
use seislink::eval;
use seislink::geo::{load_stations, Region, Station};
use seislink::gridassoc::{grid_associate, GridParams, GridSpec, TravelTimeGrid};
use seislink::linker::{load_model, LinkerModel};
use seislink::picks::{sort_picks, Pick};
use seislink::pipeline::{associate_picks, Linker};
use seislink::presets;
use seislink::synth::{Generator, SynthConfig};
use seislink::velmod::{LayeredModel, Phase};

type PickTuple = (String, f64, String, Option<u32>);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn phase(s: &str) -> PyResult<Phase> {
    s.parse().map_err(value_err)
}

/// A trained link model.
#[pyclass(module = "seislink", frozen)]
struct Model {
    inner: LinkerModel,
    n_p: usize,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (inner, header) = load_model(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Ok(Self { inner, n_p: header.n_p })
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hidden()
    }

    #[getter]
    fn n_p(&self) -> usize {
        self.n_p
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    /// Link probabilities for one window of feature rows `[x, y, t, phase, pad]`.
    fn predict(&self, rows: Vec<[f64; 5]>) -> Vec<f64> {
        self.inner.forward(&rows)
    }
}

/// A station network with its region and velocity model.
#[pyclass(module = "seislink", frozen)]
struct Network {
    stations: Vec<Station>,
    region: Region,
    model: LayeredModel,
    n_p: usize,
}

#[pymethods]
impl Network {
    /// The built-in 2 x 2 degree desk network.
    #[staticmethod]
    #[pyo3(signature = (n_p = 50))]
    fn desk(n_p: usize) -> Self {
        Self { stations: presets::desk_stations(), region: presets::desk_region(), model: presets::desk_model(), n_p }
    }

    /// Stations from an `id,lat,lon` CSV; `region` is
    /// `(lat_min, lat_max, lon_min, lon_max)`.
    #[staticmethod]
    #[pyo3(signature = (stations_csv, region, velocity_model = None, n_p = 50))]
    fn from_files(
        stations_csv: &str,
        region: (f64, f64, f64, f64),
        velocity_model: Option<&str>,
        n_p: usize,
    ) -> PyResult<Self> {
        let stations = load_stations(stations_csv).map_err(value_err)?;
        let region = Region::new(region.0, region.1, region.2, region.3).map_err(value_err)?;
        let model = match velocity_model {
            Some(p) => LayeredModel::load(p).map_err(value_err)?,
            None => presets::desk_model(),
        };
        Ok(Self { stations, region, model, n_p })
    }

    fn station_ids(&self) -> Vec<String> {
        self.stations.iter().map(|s| s.id.clone()).collect()
    }

    /// First-arrival time in seconds.
    fn travel_time(&self, depth_km: f64, distance_km: f64, phase_name: &str) -> PyResult<f64> {
        self.model.travel_time(depth_km, distance_km, phase(phase_name)?).map_err(value_err)
    }

    /// A continuous pick stream with event ids: events placed `inset_km`
    /// inside the region with gaps uniform in `[0, max_gap]` seconds.
    #[pyo3(signature = (n_events, max_gap, seed = 0, inset_km = presets::DESK_EVENT_INSET_KM))]
    fn stress_sequence(&self, n_events: usize, max_gap: f64, seed: u64, inset_km: f64) -> PyResult<Vec<PickTuple>> {
        let gen = self.generator()?;
        let region = self.region.inset_km(inset_km).map_err(value_err)?;
        let seq = gen.stress_sequence(&region, n_events, max_gap, &mut ChaCha8Rng::seed_from_u64(seed));
        Ok(seq.picks.iter().map(|p| self.to_tuple(p)).collect())
    }

    /// Clusters of pick indices (into the time-sorted picks). Without a
    /// model the event ids of the picks are used as link labels.
    #[pyo3(signature = (picks, model = None, threshold = 0.5, n_nuc = 8, n_merge = 7, n_min = 8))]
    fn associate(
        &self,
        picks: Vec<PickTuple>,
        model: Option<&Model>,
        threshold: f64,
        n_nuc: usize,
        n_merge: usize,
        n_min: usize,
    ) -> PyResult<Vec<Vec<usize>>> {
        let picks = self.from_tuples(picks)?;
        let params = AggParams { n_nuc, n_merge, n_min };
        let problems = params.problems();
        if !problems.is_empty() {
            return Err(PyValueError::new_err(problems.join("; ")));
        }
        let linker = match model {
            Some(m) if m.n_p != self.n_p => {
                return Err(PyValueError::new_err(format!("model window {} != network n_p {}", m.n_p, self.n_p)))
            }
            Some(m) => Linker::Model { model: &m.inner, threshold },
            None => Linker::Oracle,
        };
        let feat =
            seislink::window::Featurizer::new(&self.stations, &self.region, self.n_p, SynthConfig::default().window_s)
                .map_err(value_err)?;
        let cat = associate_picks(&picks, &feat, linker, params).map_err(value_err)?;
        Ok(cat.clusters())
    }

    /// Truth clusters from the event ids, indexed like `associate` output.
    fn truth_clusters(&self, picks: Vec<PickTuple>) -> PyResult<Vec<Vec<usize>>> {
        let picks = self.from_tuples(picks)?;
        let mut by_event: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, p) in picks.iter().enumerate() {
            if let Some(e) = p.event {
                by_event.entry(e).or_default().push(i);
            }
        }
        Ok(by_event.into_values().collect())
    }

    /// Grid back-projection baseline with default settings.
    fn grid_associate(&self, picks: Vec<PickTuple>) -> PyResult<Vec<Vec<usize>>> {
        let picks = self.from_tuples(picks)?;
        let grid = TravelTimeGrid::build(&self.region, &GridSpec::default(), &self.stations, &self.model)
            .map_err(value_err)?;
        Ok(grid_associate(&picks, &grid, &GridParams::default()).into_iter().map(|e| e.picks).collect())
    }
}

impl Network {
    fn generator(&self) -> PyResult<Generator> {
        let cfg = SynthConfig { n_p: self.n_p, ..Default::default() };
        Generator::new(cfg, &self.stations, self.region, &self.model).map_err(value_err)
    }

    fn to_tuple(&self, p: &Pick) -> PickTuple {
        (self.stations[p.station].id.clone(), p.time, p.phase.to_string(), p.event)
    }

    fn from_tuples(&self, picks: Vec<PickTuple>) -> PyResult<Vec<Pick>> {
        let index: std::collections::HashMap<&str, usize> =
            self.stations.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let mut out = Vec::with_capacity(picks.len());
        for (sid, time, ph, event) in picks {
            let station =
                *index.get(sid.as_str()).ok_or_else(|| PyValueError::new_err(format!("unknown station {sid}")))?;
            if !time.is_finite() {
                return Err(PyValueError::new_err(format!("non-finite pick time at {sid}")));
            }
            out.push(Pick { station, time, phase: phase(&ph)?, event });
        }
        if !seislink::picks::is_sorted(&out) {
            sort_picks(&mut out);
        }
        Ok(out)
    }
}

/// Event and phase precision/recall of `detected` against `truth`, both
/// lists of pick-index lists.
#[pyfunction]
#[pyo3(signature = (detected, truth, success_threshold = eval::SUCCESS_THRESHOLD))]
fn score<'py>(
    py: Python<'py>,
    detected: Vec<Vec<usize>>,
    truth: Vec<Vec<usize>>,
    success_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = eval::score(&detected, &truth, success_threshold);
    let d = PyDict::new(py);
    d.set_item("event_precision", m.event_precision)?;
    d.set_item("event_recall", m.event_recall)?;
    d.set_item("phase_precision", m.phase_precision)?;
    d.set_item("phase_recall", m.phase_recall)?;
    d.set_item("detected", m.detected)?;
    d.set_item("truth", m.truth)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "seislink")]
fn seislink_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Network>()?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    Ok(())
}
