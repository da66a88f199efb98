//! External-service boundary: forward geocoding and satellite-imagery
//! retrieval. Each service has a deterministic offline backend and a generic
//! HTTP backend.

mod geocode;
mod http;
mod imagery;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::EventTimeline;
use crate::geo::{GeoBoundingBox, GeoCoordinate};

pub use geocode::{GazetteerGeocoder, HttpGeocoder, HttpGeocoderConfig, GEOCODE_TOKEN_ENV};
pub use http::{HttpSettings, HttpTransport, InFlightLimiter, Method as HttpMethod};
pub use imagery::{
    load_planted_events, HttpImagery, HttpImageryConfig, PlantedEvent, SyntheticImagery,
    SyntheticImageryConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    /// Connection failures, timeouts and server-side (5xx) errors that
    /// persisted through every retry.
    #[error("transport error calling {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url} answered HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl ClientError {
    pub fn is_transport(&self) -> bool {
        matches!(self, ClientError::Transport { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeocodeResult {
    pub coordinate: GeoCoordinate,
    pub bbox: GeoBoundingBox,
}

impl GeocodeResult {
    pub fn new(coordinate: GeoCoordinate, bbox: GeoBoundingBox) -> Result<Self, ClientError> {
        if !bbox.contains(&coordinate) {
            return Err(ClientError::Malformed(format!(
                "coordinate {coordinate} lies outside its bounding box"
            )));
        }
        Ok(Self { coordinate, bbox })
    }
}

/// Name to coordinate lookup. `Ok(None)` means the name could not be geocoded.
pub trait ForwardGeocoder: Send + Sync {
    fn geocode(&self, name: &str) -> Result<Option<GeocodeResult>, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFrame {
    pub timestamp: DateTime<Utc>,
    pub scene_id: String,
    pub cloud_fraction: f64,
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_event: Option<bool>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("frame {index}: cloud fraction {value} outside [0, 1]")]
    CloudFraction { index: usize, value: f64 },
    #[error("frame {index}: timestamps must be strictly ascending")]
    NotAscending { index: usize },
    #[error("frame {index}: timestamp {timestamp} outside the queried timeline")]
    OutsideTimeline {
        index: usize,
        timestamp: DateTime<Utc>,
    },
}

/// Time-ordered frames fetched for one coordinate and timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagerySequence {
    pub frames: Vec<ImageFrame>,
    pub query_coordinate: GeoCoordinate,
    pub timeline: EventTimeline,
}

impl ImagerySequence {
    pub fn new(
        frames: Vec<ImageFrame>,
        query_coordinate: GeoCoordinate,
        timeline: EventTimeline,
    ) -> Result<Self, SequenceError> {
        let seq = Self {
            frames,
            query_coordinate,
            timeline,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        for (index, f) in self.frames.iter().enumerate() {
            if !(0.0..=1.0).contains(&f.cloud_fraction) {
                return Err(SequenceError::CloudFraction {
                    index,
                    value: f.cloud_fraction,
                });
            }
            if !self.timeline.contains(f.timestamp.date_naive()) {
                return Err(SequenceError::OutsideTimeline {
                    index,
                    timestamp: f.timestamp,
                });
            }
            if index > 0 && self.frames[index - 1].timestamp >= f.timestamp {
                return Err(SequenceError::NotAscending { index });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn timestamps(&self) -> Vec<DateTime<Utc>> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    /// True when any frame carries the synthetic planted-event flag.
    pub fn has_planted_event(&self) -> bool {
        self.frames.iter().any(|f| f.planted_event == Some(true))
    }
}

/// Fetches a sequence of frames at a coordinate over a timeline. An empty
/// catalog answer is an empty sequence, not an error.
pub trait ImageryProvider: Send + Sync {
    fn fetch(
        &self,
        coordinate: GeoCoordinate,
        timeline: &EventTimeline,
    ) -> Result<ImagerySequence, ClientError>;

    /// Label recorded as the imagery source of exported sequences.
    fn source_label(&self) -> &str;
}
