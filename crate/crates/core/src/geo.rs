//! Geodetic primitives shared by every geocoder.
//!
//! Coordinates are WGS84 geodetic latitude/longitude in degrees at altitude
//! zero. Longitudes are kept in the half-open interval `(-180, 180]` so that
//! equality is testable.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// WGS84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS84 semi-minor axis in meters.
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

const INVERSE_TOLERANCE_RAD: f64 = 1e-12;
const INVERSE_MAX_ITERATIONS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("{field} is not a finite number")]
    NotFinite { field: &'static str },
    #[error("bounding box south {south} is greater than north {north}")]
    InvertedLatitudes { south: f64, north: f64 },
    #[error("{field} longitude {value} is outside [-180, 180]")]
    LongitudeOutOfRange { field: &'static str, value: f64 },
    #[error("point lies within 1 m of the Earth's center; longitude is undefined")]
    DegenerateOrigin,
}

/// Maps any finite longitude into `(-180, 180]`.
pub fn normalize_longitude(lon: f64) -> f64 {
    let r = lon.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else if r == 0.0 {
        // rem_euclid may hand back -0.0 for negative multiples of 360
        0.0
    } else {
        r
    }
}

/// A geodetic coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinate", into = "RawCoordinate")]
pub struct GeoCoordinate {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCoordinate {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawCoordinate> for GeoCoordinate {
    type Error = GeoError;

    fn try_from(raw: RawCoordinate) -> Result<Self, Self::Error> {
        GeoCoordinate::new(raw.lat, raw.lon)
    }
}

impl From<GeoCoordinate> for RawCoordinate {
    fn from(c: GeoCoordinate) -> Self {
        RawCoordinate { lat: c.lat, lon: c.lon }
    }
}

impl GeoCoordinate {
    /// Validates latitude and normalizes longitude.
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite() {
            return Err(GeoError::NotFinite { field: "lat" });
        }
        if !lon_deg.is_finite() {
            return Err(GeoError::NotFinite { field: "lon" });
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::LatitudeOutOfRange(lat_deg));
        }
        Ok(Self {
            lat: lat_deg,
            lon: normalize_longitude(lon_deg),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn to_ecef(&self) -> EcefPoint {
        geodetic_to_ecef(*self)
    }

    /// Snaps both components to a lattice of `step` degrees.
    pub fn rounded(&self, step: f64) -> GeoCoordinate {
        let lat = ((self.lat / step).round() * step).clamp(-90.0, 90.0);
        let lon = normalize_longitude((self.lon / step).round() * step);
        GeoCoordinate { lat, lon }
    }
}

impl fmt::Display for GeoCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat, self.lon)
    }
}

/// Earth-Centered Earth-Fixed position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Distance from the rotation (z) axis.
    pub fn axial_distance(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn to_geodetic(&self) -> Result<GeoCoordinate, GeoError> {
        ecef_to_geodetic(*self)
    }
}

fn prime_vertical_radius(sin_lat: f64) -> f64 {
    WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt()
}

/// Closed-form WGS84 conversion at altitude zero.
pub fn geodetic_to_ecef(c: GeoCoordinate) -> EcefPoint {
    let lat = c.lat.to_radians();
    let lon = c.lon.to_radians();
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    let n = prime_vertical_radius(sin_lat);
    EcefPoint {
        x: n * cos_lat * cos_lon,
        y: n * cos_lat * sin_lon,
        z: n * (1.0 - WGS84_E2) * sin_lat,
    }
}

/// Iterative inverse conversion; altitude is discarded.
///
/// Points inside the ellipsoid (such as averages of surface points) are
/// inverted along the ellipsoid normal through them, which yields the same
/// latitude/longitude as their normal foot point on the surface.
pub fn ecef_to_geodetic(p: EcefPoint) -> Result<GeoCoordinate, GeoError> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(GeoError::NotFinite { field: "ecef" });
    }
    if p.norm() < 1.0 {
        return Err(GeoError::DegenerateOrigin);
    }
    let axial = p.axial_distance();
    let lon = if axial == 0.0 {
        0.0
    } else {
        p.y.atan2(p.x).to_degrees()
    };

    let mut lat = p.z.atan2(axial * (1.0 - WGS84_E2));
    for _ in 0..INVERSE_MAX_ITERATIONS {
        let sin_lat = lat.sin();
        let n = prime_vertical_radius(sin_lat);
        let next = (p.z + WGS84_E2 * n * sin_lat).atan2(axial);
        let delta = (next - lat).abs();
        lat = next;
        if delta < INVERSE_TOLERANCE_RAD {
            break;
        }
    }
    GeoCoordinate::new(lat.to_degrees().clamp(-90.0, 90.0), lon)
}

/// Geographic bounding box. `west > east` encodes an antimeridian crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct GeoBoundingBox {
    south: f64,
    north: f64,
    west: f64,
    east: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    south: f64,
    north: f64,
    west: f64,
    east: f64,
}

impl TryFrom<RawBox> for GeoBoundingBox {
    type Error = GeoError;

    fn try_from(r: RawBox) -> Result<Self, Self::Error> {
        GeoBoundingBox::new(r.south, r.north, r.west, r.east)
    }
}

impl From<GeoBoundingBox> for RawBox {
    fn from(b: GeoBoundingBox) -> Self {
        RawBox {
            south: b.south,
            north: b.north,
            west: b.west,
            east: b.east,
        }
    }
}

fn check_lon(field: &'static str, value: f64) -> Result<(), GeoError> {
    if !value.is_finite() {
        return Err(GeoError::NotFinite { field });
    }
    if !(-180.0..=180.0).contains(&value) {
        return Err(GeoError::LongitudeOutOfRange { field, value });
    }
    Ok(())
}

impl GeoBoundingBox {
    pub fn new(south: f64, north: f64, west: f64, east: f64) -> Result<Self, GeoError> {
        for (field, v) in [("south", south), ("north", north)] {
            if !v.is_finite() {
                return Err(GeoError::NotFinite { field });
            }
            if !(-90.0..=90.0).contains(&v) {
                return Err(GeoError::LatitudeOutOfRange(v));
            }
        }
        if south > north {
            return Err(GeoError::InvertedLatitudes { south, north });
        }
        check_lon("west", west)?;
        check_lon("east", east)?;
        Ok(Self {
            south,
            north,
            west,
            east,
        })
    }

    /// A zero-area box at a single point.
    pub fn point(c: GeoCoordinate) -> Self {
        Self {
            south: c.lat,
            north: c.lat,
            west: c.lon,
            east: c.lon,
        }
    }

    pub fn south(&self) -> f64 {
        self.south
    }

    pub fn north(&self) -> f64 {
        self.north
    }

    pub fn west(&self) -> f64 {
        self.west
    }

    pub fn east(&self) -> f64 {
        self.east
    }

    pub fn crosses_antimeridian(&self) -> bool {
        self.west > self.east
    }

    /// Longitudinal extent in degrees, accounting for antimeridian crossing.
    pub fn lon_span(&self) -> f64 {
        if self.crosses_antimeridian() {
            self.east + 360.0 - self.west
        } else {
            self.east - self.west
        }
    }

    pub fn lat_span(&self) -> f64 {
        self.north - self.south
    }

    /// Closed-set membership.
    pub fn contains(&self, c: &GeoCoordinate) -> bool {
        if c.lat < self.south || c.lat > self.north {
            return false;
        }
        let lon = c.lon;
        if self.crosses_antimeridian() {
            lon >= self.west || lon <= self.east
        } else {
            (self.west <= lon && lon <= self.east) || (self.west == -180.0 && lon == 180.0)
        }
    }

    pub fn center(&self) -> GeoCoordinate {
        let lat = 0.5 * (self.south + self.north);
        let lon = normalize_longitude(self.west + 0.5 * self.lon_span());
        GeoCoordinate { lat, lon }
    }

    /// Splits a crossing box into `[west, 180]` and `[-180, east]`.
    pub fn split_antimeridian(&self) -> Vec<GeoBoundingBox> {
        if !self.crosses_antimeridian() {
            return vec![*self];
        }
        vec![
            GeoBoundingBox {
                east: 180.0,
                ..*self
            },
            GeoBoundingBox {
                west: -180.0,
                ..*self
            },
        ]
    }
}

/// A named geographic entity with its mention count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPlace {
    pub name: String,
    pub coordinate: GeoCoordinate,
    pub bbox: GeoBoundingBox,
    pub weight: u32,
}

impl WeightedPlace {
    pub fn new(
        name: impl Into<String>,
        coordinate: GeoCoordinate,
        bbox: GeoBoundingBox,
        weight: u32,
    ) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "place name must be non-empty");
        assert!(weight >= 1, "place weight must be at least 1");
        Self {
            name,
            coordinate,
            bbox,
            weight,
        }
    }
}
