//! Weighted-centroid geocoding: average the ECEF positions of all mentioned
//! places by mention count and invert back to latitude/longitude.

use thiserror::Error;

use crate::geo::{ecef_to_geodetic, EcefPoint, GeoCoordinate, WeightedPlace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CentroidError {
    #[error("no candidate places to average")]
    NoCandidates,
    #[error("weighted average lies on the rotation axis; longitude is undefined")]
    DegenerateCentroid,
}

const AXIS_TOLERANCE_M: f64 = 1.0;

/// Pairwise (cascade) summation of scaled ECEF vectors.
fn pairwise_sum(terms: &[[f64; 3]]) -> [f64; 3] {
    match terms.len() {
        0 => [0.0; 3],
        1 => terms[0],
        n if n <= 8 => terms.iter().fold([0.0; 3], |acc, t| {
            [acc[0] + t[0], acc[1] + t[1], acc[2] + t[2]]
        }),
        n => {
            let (l, r) = terms.split_at(n / 2);
            let a = pairwise_sum(l);
            let b = pairwise_sum(r);
            [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
        }
    }
}

pub fn weighted_centroid(places: &[WeightedPlace]) -> Result<GeoCoordinate, CentroidError> {
    if places.is_empty() {
        return Err(CentroidError::NoCandidates);
    }
    let total: f64 = places.iter().map(|p| f64::from(p.weight)).sum();
    // normalize first so uniform weight scaling yields identical terms
    let terms: Vec<[f64; 3]> = places
        .iter()
        .map(|p| {
            let w = f64::from(p.weight) / total;
            let e = p.coordinate.to_ecef();
            [w * e.x, w * e.y, w * e.z]
        })
        .collect();
    let [x, y, z] = pairwise_sum(&terms);
    let mean = EcefPoint::new(x, y, z);

    let all_on_axis = places
        .iter()
        .all(|p| p.coordinate.to_ecef().axial_distance() < AXIS_TOLERANCE_M);
    if mean.axial_distance() < AXIS_TOLERANCE_M && !all_on_axis {
        return Err(CentroidError::DegenerateCentroid);
    }
    ecef_to_geodetic(mean).map_err(|_| CentroidError::DegenerateCentroid)
}
