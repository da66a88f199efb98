use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, NaiveTime, TimeZone, Utc};
use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::http::{HttpSettings, HttpTransport, Method};
use super::{ClientError, ImageFrame, ImageryProvider, ImagerySequence};
use crate::agents::EventTimeline;
use crate::geo::{normalize_longitude, GeoCoordinate};

/// Coordinates are snapped to this lattice before generating frames.
const SYNTHETIC_GRID_DEG: f64 = 0.01;

/// Ground-truth event for the synthetic imagery backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub lat: f64,
    pub lon: f64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub label: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PlantedEventError {
    #[error("failed to read planted events: {0}")]
    Io(#[from] std::io::Error),
    #[error("planted events file is not a valid JSON array: {0}")]
    Json(#[from] serde_json::Error),
    #[error("planted event {index}: {message}")]
    Invalid { index: usize, message: String },
}

pub fn load_planted_events(path: impl AsRef<Path>) -> Result<Vec<PlantedEvent>, PlantedEventError> {
    let events: Vec<PlantedEvent> = serde_json::from_str(&fs::read_to_string(path)?)?;
    for (index, e) in events.iter().enumerate() {
        if GeoCoordinate::new(e.lat, e.lon).is_err() {
            return Err(PlantedEventError::Invalid {
                index,
                message: format!("invalid coordinate ({}, {})", e.lat, e.lon),
            });
        }
        if e.start > e.end {
            return Err(PlantedEventError::Invalid {
                index,
                message: "start is after end".into(),
            });
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticImageryConfig {
    pub seed: u64,
    pub cadence_days: u32,
    /// Maximum distance in degrees between a query and a planted event for
    /// the event to show up in the fetched frames.
    pub radius_deg: f64,
    pub source_label: String,
}

impl Default for SyntheticImageryConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cadence_days: 7,
            radius_deg: 0.05,
            source_label: "synthetic".into(),
        }
    }
}

/// Deterministic imagery generator. Output depends only on the seed, the
/// planted-event table, the query coordinate snapped to 0.01° and the
/// timeline.
#[derive(Debug, Clone)]
pub struct SyntheticImagery {
    config: SyntheticImageryConfig,
    events: Vec<PlantedEvent>,
}

impl SyntheticImagery {
    pub fn new(config: SyntheticImageryConfig, events: Vec<PlantedEvent>) -> Self {
        Self { config, events }
    }

    pub fn events(&self) -> &[PlantedEvent] {
        &self.events
    }

    fn frame_dates(&self, timeline: &EventTimeline) -> Vec<NaiveDate> {
        let step = Duration::days(i64::from(self.config.cadence_days.max(1)));
        let mut dates = Vec::new();
        let mut d = timeline.start;
        while d <= timeline.end {
            dates.push(d);
            d += step;
        }
        if dates.last() != Some(&timeline.end) {
            dates.push(timeline.end);
        }
        dates
    }

    /// Earliest start among planted events near `c` that overlap `timeline`.
    fn visible_event_start(&self, c: &GeoCoordinate, timeline: &EventTimeline) -> Option<NaiveDate> {
        self.events
            .iter()
            .filter(|e| e.start <= timeline.end && e.end >= timeline.start)
            .filter(|e| {
                let dlat = e.lat - c.lat();
                let dlon = normalize_longitude(e.lon - c.lon());
                dlat.hypot(dlon) <= self.config.radius_deg + 1e-9
            })
            .map(|e| e.start)
            .min()
    }
}

fn digest(parts: &str) -> [u8; 32] {
    let out = Sha256::digest(parts.as_bytes());
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&out);
    bytes
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ImageryProvider for SyntheticImagery {
    fn fetch(
        &self,
        coordinate: GeoCoordinate,
        timeline: &EventTimeline,
    ) -> Result<ImagerySequence, ClientError> {
        let c = coordinate.rounded(SYNTHETIC_GRID_DEG);
        let event_start = self.visible_event_start(&c, timeline);
        let frames = self
            .frame_dates(timeline)
            .into_iter()
            .map(|date| {
                let h = digest(&format!(
                    "{}|{:.2}|{:.2}|{}",
                    self.config.seed,
                    c.lat(),
                    c.lon(),
                    date
                ));
                let minutes = u32::from(h[0]) % 120;
                let time = NaiveTime::from_hms_opt(10 + minutes / 60, minutes % 60, 0)
                    .expect("valid time of day");
                let scene_id = format!("SYN-{}-{}", date.format("%Y%m%d"), hex(&h[1..7]));
                ImageFrame {
                    timestamp: Utc.from_utc_datetime(&date.and_time(time)),
                    image_ref: format!("synthetic://{scene_id}"),
                    scene_id,
                    cloud_fraction: f64::from(h[7]) / 255.0 * 0.6,
                    planted_event: Some(event_start.is_some_and(|s| date >= s)),
                }
            })
            .collect();
        ImagerySequence::new(frames, c, *timeline)
            .map_err(|e| ClientError::Malformed(e.to_string()))
    }

    fn source_label(&self) -> &str {
        &self.config.source_label
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpImageryConfig {
    pub endpoint: String,
    /// Half-width in degrees of the search box around the coordinate.
    #[serde(default = "default_window")]
    pub window_deg: f64,
    #[serde(default = "default_limit")]
    pub limit: u32,
    #[serde(default = "default_source")]
    pub source_label: String,
    #[serde(default)]
    pub token_env: Option<String>,
    /// Download each frame's image into this directory and reference the
    /// local file instead of the remote asset.
    #[serde(default)]
    pub download_dir: Option<PathBuf>,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_window() -> f64 {
    0.05
}

fn default_limit() -> u32 {
    100
}

fn default_source() -> String {
    "catalog".into()
}

/// Catalog search client: `POST endpoint` with `{bbox, datetime, limit}` and
/// a STAC-style item collection in response.
pub struct HttpImagery {
    config: HttpImageryConfig,
    transport: HttpTransport,
}

impl HttpImagery {
    pub fn new(config: HttpImageryConfig) -> Self {
        let transport = HttpTransport::new(config.http.clone());
        Self { config, transport }
    }

    pub fn search_body(&self, c: &GeoCoordinate, timeline: &EventTimeline) -> Value {
        let w = self.config.window_deg;
        json!({
            "bbox": [
                normalize_longitude(c.lon() - w),
                (c.lat() - w).max(-90.0),
                normalize_longitude(c.lon() + w),
                (c.lat() + w).min(90.0),
            ],
            "datetime": format!("{}T00:00:00Z/{}T23:59:59Z", timeline.start, timeline.end),
            "limit": self.config.limit,
        })
    }
}

fn parse_item(item: &Value) -> Result<ImageFrame, String> {
    let id = item
        .get("id")
        .and_then(Value::as_str)
        .ok_or("item has no id")?;
    let props = item.get("properties").ok_or("item has no properties")?;
    let datetime = props
        .get("datetime")
        .and_then(Value::as_str)
        .ok_or("item has no datetime")?;
    let timestamp = DateTime::parse_from_rfc3339(datetime)
        .map_err(|e| format!("bad datetime {datetime:?}: {e}"))?
        .with_timezone(&Utc);
    let cloud = props
        .get("eo:cloud_cover")
        .or_else(|| props.get("cloud_cover"))
        .and_then(Value::as_f64)
        .unwrap_or(0.0);
    // STAC reports percent
    let cloud_fraction = if cloud > 1.0 { cloud / 100.0 } else { cloud }.clamp(0.0, 1.0);
    let assets = item.get("assets");
    let href = ["visual", "thumbnail", "image"]
        .iter()
        .find_map(|k| assets?.get(k)?.get("href")?.as_str())
        .or_else(|| {
            assets?
                .as_object()?
                .values()
                .find_map(|a| a.get("href")?.as_str())
        })
        .unwrap_or(id);
    Ok(ImageFrame {
        timestamp,
        scene_id: id.to_string(),
        cloud_fraction,
        image_ref: href.to_string(),
        planted_event: None,
    })
}

impl ImageryProvider for HttpImagery {
    fn fetch(
        &self,
        coordinate: GeoCoordinate,
        timeline: &EventTimeline,
    ) -> Result<ImagerySequence, ClientError> {
        let body = self.search_body(&coordinate, timeline);
        let token = self
            .config
            .token_env
            .as_ref()
            .and_then(|k| std::env::var(k).ok());
        let (status, text) =
            self.transport
                .send(&self.config.endpoint, Method::Post(&body), token.as_deref())?;
        if !(200..300).contains(&status) {
            return Err(ClientError::Status {
                url: self.config.endpoint.clone(),
                status,
            });
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| ClientError::Malformed(format!("catalog response is not JSON: {e}")))?;
        let items = v
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| ClientError::Malformed("missing features array".into()))?;
        let mut frames = items
            .iter()
            .map(parse_item)
            .collect::<Result<Vec<_>, _>>()
            .map_err(ClientError::Malformed)?;
        frames.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.scene_id.cmp(&b.scene_id)));
        frames.dedup_by(|b, a| a.timestamp == b.timestamp);
        frames.retain(|f| {
            let keep = timeline.contains(f.timestamp.date_naive());
            if !keep {
                debug!("dropping scene {} outside {:?}", f.scene_id, timeline);
            }
            keep
        });
        if let Some(dir) = &self.config.download_dir {
            fs::create_dir_all(dir).map_err(|e| ClientError::Transport {
                url: dir.display().to_string(),
                message: e.to_string(),
            })?;
            for f in frames.iter_mut() {
                if !f.image_ref.starts_with("http") {
                    continue;
                }
                // scene ids come from the server, keep them from escaping `dir`
                let safe: String = f
                    .scene_id
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                    .collect();
                let dest = dir.join(format!("{safe}.img"));
                self.transport.download(&f.image_ref, &dest)?;
                f.image_ref = dest.display().to_string();
            }
        }
        ImagerySequence::new(frames, coordinate, *timeline)
            .map_err(|e| ClientError::Malformed(e.to_string()))
    }

    fn source_label(&self) -> &str {
        &self.config.source_label
    }
}
