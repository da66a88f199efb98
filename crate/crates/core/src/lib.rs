//! Locate news-described events in satellite imagery.
//!
//! Three geocoders are provided: a weighted ECEF centroid, GIPSY weighted
//! polygon stacking, and an iterative search-and-verify loop driven by
//! article, verifier and captioning agents. Deterministic scripted and
//! synthetic backends make every path reproducible offline.

pub mod agents;
pub mod bench;
pub mod centroid;
pub mod clients;
pub mod config;
pub mod extraction;
pub mod geo;
pub mod gipsy;
pub mod manifest;
pub mod pipeline;

pub use centroid::weighted_centroid;
pub use extraction::{ArticleRecord, Gazetteer};
pub use geo::{GeoBoundingBox, GeoCoordinate, WeightedPlace};
pub use gipsy::gipsy_locate;
pub use pipeline::{Method, PipelineResult, RunStatus};
