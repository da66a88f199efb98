//! JSON run configuration and backend construction.
//!
//! Relative paths are resolved against the directory of the config file.
//! Secrets are never read from the file, only from the environment
//! variables named in the HTTP backend sections.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{RemoteAgentConfig, RemoteAgents, ScriptedAgents};
use crate::clients::{
    load_planted_events, ForwardGeocoder, GazetteerGeocoder, HttpGeocoder, HttpGeocoderConfig,
    HttpImagery, HttpImageryConfig, ImageryProvider, SyntheticImagery, SyntheticImageryConfig,
};
use crate::extraction::Gazetteer;
use crate::pipeline::{Backends, PipelineConfig, DEFAULT_MAX_ATTEMPTS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot set up {what}: {message}")]
    Backend { what: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeocoderSettings {
    /// Answer from the configured gazetteer.
    Gazetteer {},
    Http(HttpGeocoderConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticImagerySettings {
    #[serde(default)]
    pub planted_events: Option<PathBuf>,
    #[serde(default = "default_cadence")]
    pub cadence_days: u32,
    #[serde(default = "default_radius")]
    pub radius_deg: f64,
    #[serde(default = "default_synthetic_label")]
    pub source_label: String,
}

fn default_cadence() -> u32 {
    SyntheticImageryConfig::default().cadence_days
}

fn default_radius() -> f64 {
    SyntheticImageryConfig::default().radius_deg
}

fn default_synthetic_label() -> String {
    SyntheticImageryConfig::default().source_label
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImagerySettings {
    Synthetic(SyntheticImagerySettings),
    Http(HttpImageryConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSettings {
    Scripted { fixtures: PathBuf },
    Remote(RemoteAgentConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Gazetteer TSV used for place extraction (and offline geocoding).
    pub gazetteer: PathBuf,
    pub geocoder: GeocoderSettings,
    pub imagery: ImagerySettings,
    pub agents: AgentSettings,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Seed of the synthetic imagery backend.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub requeue_infra_errors: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_max_attempts() -> u32 {
    DEFAULT_MAX_ATTEMPTS
}

fn default_concurrency() -> usize {
    4
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.gazetteer);
        if let ImagerySettings::Synthetic(s) = &mut self.imagery {
            if let Some(p) = &mut s.planted_events {
                resolve(base, p);
            }
        }
        if let ImagerySettings::Http(h) = &mut self.imagery {
            if let Some(p) = &mut h.download_dir {
                resolve(base, p);
            }
        }
        match &mut self.agents {
            AgentSettings::Scripted { fixtures } => resolve(base, fixtures),
            AgentSettings::Remote(r) => {
                if let Some(p) = &mut r.prompt_dir {
                    resolve(base, p);
                }
            }
        }
        if let Some(p) = &mut self.output_dir {
            resolve(base, p);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_attempts == 0 {
            return Err(ConfigError::Invalid("max_attempts must be at least 1".into()));
        }
        if self.concurrency == 0 {
            return Err(ConfigError::Invalid("concurrency must be at least 1".into()));
        }
        if let ImagerySettings::Synthetic(s) = &self.imagery {
            if s.cadence_days == 0 {
                return Err(ConfigError::Invalid("cadence_days must be at least 1".into()));
            }
            if !(s.radius_deg.is_finite() && s.radius_deg >= 0.0) {
                return Err(ConfigError::Invalid("radius_deg must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            max_attempts: self.max_attempts,
            concurrency: self.concurrency,
            requeue_infra_errors: self.requeue_infra_errors,
        }
    }

    pub fn build_backends(&self) -> Result<Backends, ConfigError> {
        let gazetteer = Arc::new(Gazetteer::load(&self.gazetteer).map_err(|e| {
            ConfigError::Backend {
                what: "gazetteer",
                message: e.to_string(),
            }
        })?);
        let geocoder: Arc<dyn ForwardGeocoder> = match &self.geocoder {
            GeocoderSettings::Gazetteer {} => Arc::new(GazetteerGeocoder::new(gazetteer.clone())),
            GeocoderSettings::Http(c) => Arc::new(HttpGeocoder::new(c.clone())),
        };
        let imagery: Arc<dyn ImageryProvider> = match &self.imagery {
            ImagerySettings::Synthetic(s) => {
                let events = match &s.planted_events {
                    Some(p) => load_planted_events(p).map_err(|e| ConfigError::Backend {
                        what: "planted events",
                        message: e.to_string(),
                    })?,
                    None => Vec::new(),
                };
                let config = SyntheticImageryConfig {
                    seed: self.seed,
                    cadence_days: s.cadence_days,
                    radius_deg: s.radius_deg,
                    source_label: s.source_label.clone(),
                };
                Arc::new(SyntheticImagery::new(config, events))
            }
            ImagerySettings::Http(c) => Arc::new(HttpImagery::new(c.clone())),
        };
        let backends = match &self.agents {
            AgentSettings::Scripted { fixtures } => {
                let agents = Arc::new(ScriptedAgents::from_file(fixtures).map_err(|e| {
                    ConfigError::Backend {
                        what: "scripted agents",
                        message: e.to_string(),
                    }
                })?);
                Backends {
                    extractor: gazetteer,
                    geocoder,
                    imagery,
                    article_agent: agents.clone(),
                    verifier: agents.clone(),
                    captioner: agents,
                }
            }
            AgentSettings::Remote(c) => {
                let agents = Arc::new(RemoteAgents::new(c.clone()).map_err(|e| {
                    ConfigError::Backend {
                        what: "remote agents",
                        message: e.to_string(),
                    }
                })?);
                Backends {
                    extractor: gazetteer,
                    geocoder,
                    imagery,
                    article_agent: agents.clone(),
                    verifier: agents.clone(),
                    captioner: agents,
                }
            }
        };
        Ok(backends)
    }
}
