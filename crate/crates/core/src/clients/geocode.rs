use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::http::{HttpSettings, HttpTransport, Method};
use super::{ClientError, ForwardGeocoder, GeocodeResult};
use crate::extraction::Gazetteer;
use crate::geo::{GeoBoundingBox, GeoCoordinate};

pub const GEOCODE_TOKEN_ENV: &str = "SKY_GEOCODE_TOKEN";

/// Offline geocoder answering from a gazetteer.
#[derive(Debug, Clone)]
pub struct GazetteerGeocoder {
    gazetteer: Arc<Gazetteer>,
}

impl GazetteerGeocoder {
    pub fn new(gazetteer: Arc<Gazetteer>) -> Self {
        Self { gazetteer }
    }
}

impl ForwardGeocoder for GazetteerGeocoder {
    fn geocode(&self, name: &str) -> Result<Option<GeocodeResult>, ClientError> {
        Ok(self.gazetteer.lookup(name).map(|e| GeocodeResult {
            coordinate: e.coordinate,
            bbox: e.bbox,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpGeocoderConfig {
    pub endpoint: String,
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_token_env() -> String {
    GEOCODE_TOKEN_ENV.to_string()
}

/// Forward geocoder backed by a `GET endpoint?q=<name>` service returning a
/// GeoJSON-style feature collection; the first feature is taken.
pub struct HttpGeocoder {
    config: HttpGeocoderConfig,
    transport: HttpTransport,
}

impl HttpGeocoder {
    pub fn new(config: HttpGeocoderConfig) -> Self {
        let transport = HttpTransport::new(config.http.clone());
        Self { config, transport }
    }
}

impl ForwardGeocoder for HttpGeocoder {
    fn geocode(&self, name: &str) -> Result<Option<GeocodeResult>, ClientError> {
        let token = std::env::var(&self.config.token_env).ok();
        let (status, body) = self.transport.send(
            &self.config.endpoint,
            Method::Get(&[("q", name)]),
            token.as_deref(),
        )?;
        match status {
            200..=299 => parse_feature_collection(&body),
            404 => Ok(None),
            _ => Err(ClientError::Status {
                url: self.config.endpoint.clone(),
                status,
            }),
        }
    }
}

fn pair(v: &Value) -> Option<(f64, f64)> {
    let a = v.as_array()?;
    Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?))
}

/// Parses the top feature's `center: [lon, lat]` (or point geometry) and
/// `bbox: [west, south, east, north]`.
pub(crate) fn parse_feature_collection(body: &str) -> Result<Option<GeocodeResult>, ClientError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| ClientError::Malformed(format!("geocoder response is not JSON: {e}")))?;
    let features = v
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| ClientError::Malformed("missing features array".into()))?;
    let Some(top) = features.first() else {
        return Ok(None);
    };
    let (lon, lat) = top
        .get("center")
        .and_then(pair)
        .or_else(|| top.pointer("/geometry/coordinates").and_then(pair))
        .ok_or_else(|| ClientError::Malformed("top feature has no center".into()))?;
    let coordinate =
        GeoCoordinate::new(lat, lon).map_err(|e| ClientError::Malformed(e.to_string()))?;
    let bbox = match top.get("bbox").and_then(Value::as_array) {
        Some(b) if b.len() == 4 => {
            let n: Vec<f64> = b.iter().filter_map(Value::as_f64).collect();
            if n.len() != 4 {
                return Err(ClientError::Malformed("bbox has non-numeric entries".into()));
            }
            GeoBoundingBox::new(n[1], n[3], n[0], n[2])
                .map_err(|e| ClientError::Malformed(e.to_string()))?
        }
        Some(_) => return Err(ClientError::Malformed("bbox must have 4 entries".into())),
        None => GeoBoundingBox::point(coordinate),
    };
    GeocodeResult::new(coordinate, bbox).map(Some)
}
