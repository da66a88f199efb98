//! GIPSY weighted polygon stacking.
//!
//! Every candidate place becomes a prism whose base is its bounding box and
//! whose height is its mention count. Stacking the prisms (no overlap sits at
//! ground level, contained boxes sit on top of their container, partial
//! overlaps stack only on the intersection) produces a piecewise-constant
//! elevation surface whose value at any point is the sum of the heights of
//! the prisms covering it. The article location is the centroid of the
//! highest region of that surface.
//!
//! The surface is represented exactly with coordinate compression: the sorted
//! unique box edges cut the plane into a grid of cells, each with a constant
//! elevation. Cells are closed on their south/west edges and open on their
//! north/east edges.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::geo::{normalize_longitude, GeoBoundingBox, GeoCoordinate, WeightedPlace};

/// Side length of the box substituted for a zero-area footprint.
pub const DEGENERATE_EXPANSION_DEG: f64 = 0.02;
/// Footprints taller than this are cut into latitude bands of this height so
/// that cos-latitude weighting stays accurate within each cell.
pub const LATITUDE_BAND_DEG: f64 = 10.0;

const AREA_TIE_RELATIVE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GipsyError {
    #[error("no candidate places to stack")]
    NoCandidates,
    #[error("prism footprint must not cross the antimeridian")]
    CrossingFootprint,
    #[error("prism footprint has zero area")]
    EmptyFootprint,
    #[error("prism height must be at least 1")]
    ZeroHeight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prism {
    footprint: GeoBoundingBox,
    height: u32,
}

impl Prism {
    pub fn new(footprint: GeoBoundingBox, height: u32) -> Result<Self, GipsyError> {
        if footprint.crosses_antimeridian() {
            return Err(GipsyError::CrossingFootprint);
        }
        if footprint.lat_span() <= 0.0 || footprint.lon_span() <= 0.0 {
            return Err(GipsyError::EmptyFootprint);
        }
        if height == 0 {
            return Err(GipsyError::ZeroHeight);
        }
        Ok(Self { footprint, height })
    }

    pub fn footprint(&self) -> &GeoBoundingBox {
        &self.footprint
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Half-open membership matching the cell convention.
    pub fn covers(&self, lat: f64, lon: f64) -> bool {
        let f = &self.footprint;
        f.south() <= lat && lat < f.north() && f.west() <= lon && lon < f.east()
    }
}

/// Expands zero-extent sides to [`DEGENERATE_EXPANSION_DEG`] around the center.
fn expand_degenerate(b: &GeoBoundingBox) -> GeoBoundingBox {
    let half = DEGENERATE_EXPANSION_DEG / 2.0;
    let (mut south, mut north) = (b.south(), b.north());
    if b.lat_span() <= 0.0 {
        south = (south - half).max(-90.0);
        north = (north + half).min(90.0);
    }
    let (mut west, mut east) = (b.west(), b.east());
    if b.lon_span() <= 0.0 {
        west = normalize_longitude(west - half);
        east = normalize_longitude(east + half);
        // a point on the antimeridian normalizes to 180; keep the box crossing
        if west == 180.0 {
            west = 180.0 - half;
        }
    }
    GeoBoundingBox::new(south, north, west, east).expect("expanded box stays valid")
}

/// Degeneracy-expanded, antimeridian-split prisms for a list of places.
pub fn prisms_from_places(places: &[WeightedPlace]) -> Vec<Prism> {
    places
        .iter()
        .flat_map(|p| {
            let fp = expand_degenerate(&p.bbox);
            fp.split_antimeridian()
                .into_iter()
                .filter_map(move |part| Prism::new(part, p.weight).ok())
        })
        .collect()
}

/// One compressed cell of the elevation surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub south: f64,
    pub north: f64,
    pub west: f64,
    pub east: f64,
    pub elevation: u32,
}

impl Cell {
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.south + self.north),
            0.5 * (self.west + self.east),
        )
    }

    /// Square degrees scaled by the cosine of the mid-latitude.
    pub fn weighted_area(&self) -> f64 {
        let (mid_lat, _) = self.center();
        (self.north - self.south) * (self.east - self.west) * mid_lat.to_radians().cos()
    }
}

/// Piecewise-constant stacked surface over the bounding rectangle of all
/// prism footprints.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMap {
    lon_cuts: Vec<f64>,
    lat_cuts: Vec<f64>,
    // row-major, rows are latitude bands
    elevation: Vec<u32>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn cut_index(cuts: &[f64], value: f64) -> usize {
    cuts.binary_search_by(|c| c.total_cmp(&value))
        .expect("footprint edge is a cut")
}

/// Builds the stacked surface. The elevation of every cell is the sum of the
/// heights of the prisms covering it, which is what applying the three
/// stacking rules one prism at a time produces.
pub fn build_elevation_map(prisms: &[Prism]) -> Result<ElevationMap, GipsyError> {
    if prisms.is_empty() {
        return Err(GipsyError::NoCandidates);
    }
    let lon_cuts = sorted_unique(
        prisms
            .iter()
            .flat_map(|p| [p.footprint.west(), p.footprint.east()])
            .collect(),
    );
    let mut lat_edges: Vec<f64> = prisms
        .iter()
        .flat_map(|p| [p.footprint.south(), p.footprint.north()])
        .collect();
    for f in prisms.iter().map(|p| &p.footprint) {
        if f.lat_span() <= LATITUDE_BAND_DEG {
            continue;
        }
        let mut band =
            (f.south() / LATITUDE_BAND_DEG).floor() * LATITUDE_BAND_DEG + LATITUDE_BAND_DEG;
        while band < f.north() {
            lat_edges.push(band);
            band += LATITUDE_BAND_DEG;
        }
    }
    let lat_cuts = sorted_unique(lat_edges);

    let nx = lon_cuts.len();
    let ny = lat_cuts.len();
    // 2-D difference array over cut corners, then an inclusive prefix sum
    let mut diff = vec![0i64; nx * ny];
    for p in prisms {
        let f = &p.footprint;
        let (x0, x1) = (cut_index(&lon_cuts, f.west()), cut_index(&lon_cuts, f.east()));
        let (y0, y1) = (cut_index(&lat_cuts, f.south()), cut_index(&lat_cuts, f.north()));
        let h = i64::from(p.height);
        diff[y0 * nx + x0] += h;
        diff[y0 * nx + x1] -= h;
        diff[y1 * nx + x0] -= h;
        diff[y1 * nx + x1] += h;
    }
    for y in 0..ny {
        for x in 1..nx {
            diff[y * nx + x] += diff[y * nx + x - 1];
        }
    }
    for y in 1..ny {
        for x in 0..nx {
            diff[y * nx + x] += diff[(y - 1) * nx + x];
        }
    }
    let cols = nx - 1;
    let rows = ny - 1;
    let mut elevation = Vec::with_capacity(rows * cols);
    for y in 0..rows {
        for x in 0..cols {
            let v = diff[y * nx + x];
            debug_assert!(v >= 0);
            elevation.push(v as u32);
        }
    }
    Ok(ElevationMap {
        lon_cuts,
        lat_cuts,
        elevation,
    })
}

impl ElevationMap {
    pub fn lon_cuts(&self) -> &[f64] {
        &self.lon_cuts
    }

    pub fn lat_cuts(&self) -> &[f64] {
        &self.lat_cuts
    }

    pub fn columns(&self) -> usize {
        self.lon_cuts.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.lat_cuts.len() - 1
    }

    pub fn len(&self) -> usize {
        self.elevation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elevation.is_empty()
    }

    pub fn cell(&self, index: usize) -> Cell {
        let cols = self.columns();
        let (row, col) = (index / cols, index % cols);
        Cell {
            south: self.lat_cuts[row],
            north: self.lat_cuts[row + 1],
            west: self.lon_cuts[col],
            east: self.lon_cuts[col + 1],
            elevation: self.elevation[index],
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell(i))
    }

    pub fn max_elevation(&self) -> u32 {
        self.elevation.iter().copied().max().unwrap_or(0)
    }

    /// Elevation at a point; zero outside the bounding rectangle.
    pub fn elevation_at(&self, lat: f64, lon: f64) -> u32 {
        let locate = |cuts: &[f64], v: f64| -> Option<usize> {
            if v < cuts[0] || v >= cuts[cuts.len() - 1] {
                return None;
            }
            Some(cuts.partition_point(|&c| c <= v) - 1)
        };
        match (locate(&self.lat_cuts, lat), locate(&self.lon_cuts, lon)) {
            (Some(row), Some(col)) => self.elevation[row * self.columns() + col],
            _ => 0,
        }
    }

    /// JSON array of `{south, north, west, east, elevation}` for visualization.
    pub fn debug_dump(&self) -> serde_json::Value {
        serde_json::to_value(self.cells().collect::<Vec<_>>()).expect("cells serialize")
    }
}

/// An edge-connected component of cells at the map's maximal elevation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxRegion {
    pub cells: Vec<usize>,
    pub elevation: u32,
    /// cos-latitude weighted square degrees
    pub area: f64,
    pub centroid: GeoCoordinate,
    pub south: f64,
    pub west: f64,
}

/// Maximal-elevation regions ordered by preference: largest weighted area,
/// then smallest south edge, then smallest west edge.
pub fn max_regions(map: &ElevationMap) -> Vec<MaxRegion> {
    let top = map.max_elevation();
    let cols = map.columns();
    let rows = map.rows();
    let mut seen = vec![false; map.len()];
    let mut regions = Vec::new();

    for start in 0..map.len() {
        if seen[start] || map.elevation[start] != top {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut cells = Vec::new();
        while let Some(idx) = queue.pop_front() {
            cells.push(idx);
            let (r, c) = (idx / cols, idx % cols);
            let mut neighbors = [None; 4];
            if r > 0 {
                neighbors[0] = Some(idx - cols);
            }
            if r + 1 < rows {
                neighbors[1] = Some(idx + cols);
            }
            if c > 0 {
                neighbors[2] = Some(idx - 1);
            }
            if c + 1 < cols {
                neighbors[3] = Some(idx + 1);
            }
            for n in neighbors.into_iter().flatten() {
                if !seen[n] && map.elevation[n] == top {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        cells.sort_unstable();
        regions.push(summarize_region(map, cells, top));
    }

    regions.sort_by(|a, b| {
        let scale = a.area.abs().max(b.area.abs());
        let area_order = if (a.area - b.area).abs() <= AREA_TIE_RELATIVE * scale {
            std::cmp::Ordering::Equal
        } else {
            b.area.total_cmp(&a.area)
        };
        area_order
            .then(a.south.total_cmp(&b.south))
            .then(a.west.total_cmp(&b.west))
    });
    regions
}

fn summarize_region(map: &ElevationMap, cells: Vec<usize>, elevation: u32) -> MaxRegion {
    let mut area = 0.0;
    let mut lat_acc = 0.0;
    let mut lon_acc = 0.0;
    let mut south = f64::INFINITY;
    let mut west = f64::INFINITY;
    for &i in &cells {
        let cell = map.cell(i);
        let a = cell.weighted_area();
        let (clat, clon) = cell.center();
        area += a;
        lat_acc += a * clat;
        lon_acc += a * clon;
        south = south.min(cell.south);
        west = west.min(cell.west);
    }
    let centroid = GeoCoordinate::new(
        (lat_acc / area).clamp(-90.0, 90.0),
        lon_acc / area,
    )
    .expect("region centroid is finite");
    MaxRegion {
        cells,
        elevation,
        area,
        centroid,
        south,
        west,
    }
}

/// Full GIPSY geocode of a place list.
pub fn gipsy_locate(places: &[WeightedPlace]) -> Result<GeoCoordinate, GipsyError> {
    if places.is_empty() {
        return Err(GipsyError::NoCandidates);
    }
    let prisms = prisms_from_places(places);
    let map = build_elevation_map(&prisms)?;
    max_regions(&map)
        .into_iter()
        .next()
        .map(|r| r.centroid)
        .ok_or(GipsyError::NoCandidates)
}
