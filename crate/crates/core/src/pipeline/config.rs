use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::gtfs::{parse_time, Time};
use crate::router::QueryConfig;

fn default_hours() -> Vec<String> {
    (9..=17).map(|h| format!("{h:02}:00")).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One analysis run. Relative paths resolve against the directory of the
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gtfs_dir: PathBuf,
    pub zones: PathBuf,
    pub facilities: PathBuf,
    pub walk_nodes: PathBuf,
    pub walk_edges: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deprivation: Option<PathBuf>,
    /// Old-to-new zone lookup; without one, zone ids are taken as unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookup: Option<PathBuf>,
    /// Where outputs go. Not part of the manifest, so two runs into
    /// different directories stay byte-identical.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    /// YYYY-MM-DD.
    pub service_date: String,
    /// Departure times as HH:MM, strictly increasing.
    #[serde(default = "default_hours")]
    pub hours: Vec<String>,
    #[serde(default = "defaults::k_facilities")]
    pub k_facilities: usize,
    #[serde(default = "defaults::window")]
    pub window: u32,
    #[serde(default = "defaults::percentile")]
    pub percentile: u8,
    #[serde(default = "defaults::max_duration")]
    pub max_duration: u32,
    #[serde(default = "defaults::max_rides")]
    pub max_rides: u8,
    #[serde(default = "defaults::walk_speed_kmh")]
    pub walk_speed_kmh: f64,
    #[serde(default = "defaults::max_walk_duration")]
    pub max_walk_duration: u32,
    #[serde(default = "defaults::knn_k")]
    pub knn_k: usize,
    #[serde(default = "defaults::n_perm")]
    pub n_perm: usize,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::quantile_threshold")]
    pub quantile_threshold: f64,
    #[serde(default)]
    pub row_standardize: bool,
    pub seed: u64,
    #[serde(skip)]
    base_dir: PathBuf,
}

mod defaults {
    use crate::router::QueryConfig;

    pub fn k_facilities() -> usize {
        5
    }
    pub fn window() -> u32 {
        QueryConfig::default().window
    }
    pub fn percentile() -> u8 {
        QueryConfig::default().percentile
    }
    pub fn max_duration() -> u32 {
        QueryConfig::default().max_duration
    }
    pub fn max_rides() -> u8 {
        QueryConfig::default().max_rides
    }
    pub fn walk_speed_kmh() -> f64 {
        QueryConfig::default().walk_speed_kmh
    }
    pub fn max_walk_duration() -> u32 {
        QueryConfig::default().max_walk_duration
    }
    pub fn knn_k() -> usize {
        10
    }
    pub fn n_perm() -> usize {
        999
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn quantile_threshold() -> f64 {
        0.30
    }
}

impl RunConfig {
    /// Config with every optional field at its default.
    pub fn with_paths(gtfs_dir: impl Into<PathBuf>, service_date: &str, seed: u64) -> Self {
        Self {
            gtfs_dir: gtfs_dir.into(),
            zones: "zones.csv".into(),
            facilities: "facilities.csv".into(),
            walk_nodes: "walk_nodes.csv".into(),
            walk_edges: "walk_edges.csv".into(),
            deprivation: None,
            lookup: None,
            output_dir: default_output_dir(),
            service_date: service_date.to_string(),
            hours: default_hours(),
            k_facilities: defaults::k_facilities(),
            window: defaults::window(),
            percentile: defaults::percentile(),
            max_duration: defaults::max_duration(),
            max_rides: defaults::max_rides(),
            walk_speed_kmh: defaults::walk_speed_kmh(),
            max_walk_duration: defaults::max_walk_duration(),
            knn_k: defaults::knn_k(),
            n_perm: defaults::n_perm(),
            alpha: defaults::alpha(),
            quantile_threshold: defaults::quantile_threshold(),
            row_standardize: false,
            seed,
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::input("config", format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| PipelineError::input("config", format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Directory that relative paths resolve against.
    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn service_date(&self) -> Result<NaiveDate, PipelineError> {
        NaiveDate::parse_from_str(&self.service_date, "%Y-%m-%d").map_err(|e| {
            PipelineError::input("config", format!("service_date {:?}: {e}", self.service_date))
        })
    }

    pub fn hour_seconds(&self) -> Result<Vec<Time>, PipelineError> {
        self.hours
            .iter()
            .map(|h| {
                let full = if h.matches(':').count() == 1 { format!("{h}:00") } else { h.clone() };
                parse_time(&full).map_err(|e| PipelineError::input("config", format!("hour {h:?}: {e}")))
            })
            .collect()
    }

    /// Router parameters; `departure` is set per hour by the caller.
    pub fn query_config(&self) -> QueryConfig {
        QueryConfig {
            departure: 0,
            window: self.window,
            percentile: self.percentile,
            max_duration: self.max_duration,
            max_rides: self.max_rides,
            walk_speed_kmh: self.walk_speed_kmh,
            max_walk_duration: self.max_walk_duration,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::input("config", m));
        self.service_date()?;
        let hours = self.hour_seconds()?;
        if hours.is_empty() {
            return bad("hours must not be empty".into());
        }
        if hours.windows(2).any(|w| w[0] >= w[1]) {
            return bad("hours must be strictly increasing".into());
        }
        if !(self.quantile_threshold > 0.0 && self.quantile_threshold < 1.0) {
            return bad(format!("quantile_threshold {} not in (0, 1)", self.quantile_threshold));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} not in (0, 1)", self.alpha));
        }
        if self.k_facilities == 0 || self.knn_k == 0 {
            return bad("k_facilities and knn_k must be at least 1".into());
        }
        if self.n_perm < 99 {
            return bad(format!("n_perm {} below the minimum of 99", self.n_perm));
        }
        if self.deprivation.is_none() && self.lookup.is_some() {
            return bad("lookup given without deprivation".into());
        }
        self.query_config()
            .validate()
            .map_err(|e| PipelineError::input("config", e))
    }
}
