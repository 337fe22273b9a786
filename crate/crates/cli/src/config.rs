//! Run configuration: one TOML file, every section optional, command-line
//! flags applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seislink::aggregate::{AggParams, ScanOrder};
use seislink::geo::Region;
use seislink::gridassoc::{GridParams, GridSpec};
use seislink::linker::TrainConfig;
use seislink::pipeline::STRESS_GAPS;
use seislink::presets;
use seislink::synth::SynthConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Station CSV; the built-in desk network when unset.
    pub stations: Option<PathBuf>,
    /// Layered model text file; the built-in desk model when unset.
    pub velocity_model: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub picks: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { n_samples: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StressSection {
    pub gaps: Vec<f64>,
    pub n_events: usize,
    /// Events are placed this far inside the network region.
    pub event_inset_km: f64,
    /// Root order for clustering link predictions: "reverse" or "forward".
    pub scan: ScanOrder,
}

impl Default for StressSection {
    fn default() -> Self {
        Self {
            gaps: STRESS_GAPS.to_vec(),
            n_events: 500,
            event_inset_km: presets::DESK_EVENT_INSET_KM,
            scan: ScanOrder::Reverse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub spacing_km: f64,
    pub depth_levels_km: Vec<f64>,
    pub max_bytes: usize,
    pub residual_tol: f64,
    pub min_picks: usize,
    pub origin_time_step: f64,
    pub dedup_window: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let (spec, params) = (GridSpec::default(), GridParams::default());
        Self {
            spacing_km: spec.spacing_km,
            depth_levels_km: spec.depth_levels_km,
            max_bytes: spec.max_bytes,
            residual_tol: params.residual_tol,
            min_picks: params.min_picks,
            origin_time_step: params.origin_time_step,
            dedup_window: params.dedup_window,
        }
    }
}

impl GridSection {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            spacing_km: self.spacing_km,
            depth_levels_km: self.depth_levels_km.clone(),
            max_bytes: self.max_bytes,
        }
    }

    pub fn params(&self) -> GridParams {
        GridParams {
            residual_tol: self.residual_tol,
            min_picks: self.min_picks,
            origin_time_step: self.origin_time_step,
            dedup_window: self.dedup_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Link probability threshold.
    pub threshold: f64,
    pub region: Region,
    pub paths: Paths,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub aggregate: AggParams,
    pub grid: GridSection,
    pub stress: StressSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            threshold: seislink::linker::DEFAULT_THRESHOLD,
            region: presets::desk_region(),
            paths: Paths::default(),
            data: DataConfig::default(),
            synth: SynthConfig { n_p: 50, ..Default::default() },
            train: TrainConfig::default(),
            aggregate: AggParams::default(),
            grid: GridSection::default(),
            stress: StressSection::default(),
        }
    }
}

/// What a command needs from the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub dataset: bool,
    pub checkpoint: bool,
    pub picks: bool,
    pub catalog: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text =
            std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
        toml::from_str(&text).map_err(|e| vec![format!("config {}: {e}", path.display())])
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Every problem with the configuration for a command with `needs`.
    pub fn problems(&self, needs: Needs) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.region.validate() {
            out.push(format!("region: {e}"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            out.push(format!("threshold {} must lie in [0, 1]", self.threshold));
        }
        out.extend(self.synth.problems().into_iter().map(|p| format!("synth: {p}")));
        out.extend(self.train.problems().into_iter().map(|p| format!("train: {p}")));
        out.extend(self.aggregate.problems().into_iter().map(|p| format!("aggregate: {p}")));
        out.extend(self.grid.params().problems().into_iter().map(|p| format!("grid: {p}")));
        if !(self.grid.spacing_km > 0.0) {
            out.push(format!("grid: spacing_km {} must be positive", self.grid.spacing_km));
        }
        if self.grid.depth_levels_km.is_empty() || self.grid.depth_levels_km.iter().any(|d| !(*d >= 0.0)) {
            out.push("grid: depth_levels_km must be a non-empty list of non-negative depths".into());
        }
        if self.data.n_samples == 0 {
            out.push("data: n_samples must be at least 1".into());
        }
        if self.stress.gaps.is_empty() || self.stress.gaps.iter().any(|g| !(*g >= 0.0)) {
            out.push("stress: gaps must be a non-empty list of non-negative seconds".into());
        }
        if self.stress.n_events == 0 {
            out.push("stress: n_events must be at least 1".into());
        }

        let mut file = |name: &str, p: &Option<PathBuf>, required: bool| match p {
            Some(p) if !p.is_file() => out.push(format!("paths.{name}: {} does not exist", p.display())),
            None if required => out.push(format!("paths.{name} is required for this command")),
            _ => {}
        };
        file("stations", &self.paths.stations, false);
        file("velocity_model", &self.paths.velocity_model, false);
        file("dataset", &self.paths.dataset, needs.dataset);
        file("checkpoint", &self.paths.checkpoint, needs.checkpoint);
        file("picks", &self.paths.picks, needs.picks);
        file("catalog", &self.paths.catalog, needs.catalog);

        let dir = self.output_dir();
        if dir.exists() && !dir.is_dir() {
            out.push(format!("paths.output_dir: {} is not a directory", dir.display()));
        } else if let Err(e) = std::fs::create_dir_all(&dir) {
            out.push(format!("paths.output_dir: cannot create {}: {e}", dir.display()));
        } else if dir.metadata().map(|m| m.permissions().readonly()).unwrap_or(true) {
            out.push(format!("paths.output_dir: {} is not writable", dir.display()));
        }
        out
    }

    /// The configuration as JSON, for output headers.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\n[synth]\nn_p = 20\n[grid]\nspacing_km = 10.0\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.synth.n_p, 20);
        assert_eq!(cfg.synth.max_events, 20);
        assert_eq!(cfg.grid.spacing_km, 10.0);
        assert_eq!(cfg.grid.residual_tol, 1.5);
        assert!(toml::from_str::<RunConfig>("[grid]\nspacing = 1.0\n").is_err());
    }

    #[test]
    fn all_problems_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.paths.output_dir = Some(dir.path().to_path_buf());
        cfg.paths.stations = Some(dir.path().join("missing.csv"));
        cfg.synth.n_p = 0;
        cfg.train.batch_size = 0;
        cfg.aggregate.n_merge = 9;
        let problems = cfg.problems(Needs { checkpoint: true, ..Default::default() });
        assert_eq!(problems.len(), 5, "{problems:#?}");
        assert!(problems.iter().any(|p| p.contains("missing.csv")));
    }
}
