//! Dataset records for detected sequences and their summary statistics.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Caption, EventTimeline};
use crate::clients::ImageFrame;
use crate::pipeline::PipelineResult;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error(transparent)]
    Io(#[from] io::Error),
    /// `record` is 1-based.
    #[error("record {record}: {message}")]
    Schema { record: usize, message: String },
    #[error("result for article {0} is not a detection")]
    NotDetected(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub sequence_id: String,
    pub article_id: String,
    pub imagery_source: String,
    pub frames: Vec<ImageFrame>,
    pub caption: Caption,
    /// Set by annotators after checking caption and dates.
    pub confirmed: bool,
    pub event_dates: EventTimeline,
}

impl SequenceManifest {
    pub fn validate(&self) -> Result<(), String> {
        if self.sequence_id.trim().is_empty() {
            return Err("sequence_id is empty".into());
        }
        if self.frames.is_empty() {
            return Err("frames is empty".into());
        }
        for (i, w) in self.frames.windows(2).enumerate() {
            if w[0].timestamp >= w[1].timestamp {
                return Err(format!("frame {} is not after frame {i}", i + 1));
            }
        }
        if let Some(f) = self
            .frames
            .iter()
            .find(|f| !(0.0..=1.0).contains(&f.cloud_fraction))
        {
            return Err(format!("cloud_fraction {} outside [0, 1]", f.cloud_fraction));
        }
        if self.caption.text.trim().is_empty() {
            return Err("caption text is empty".into());
        }
        Ok(())
    }

    /// Manifest for a detected result, awaiting annotation.
    pub fn from_result(result: &PipelineResult) -> Result<Self, ManifestError> {
        let missing = || ManifestError::NotDetected(result.article_id.clone());
        if !result.is_detected() {
            return Err(missing());
        }
        let imagery = result.imagery.as_ref().ok_or_else(missing)?;
        Ok(Self {
            sequence_id: format!("{}:{}", result.method, result.article_id),
            article_id: result.article_id.clone(),
            imagery_source: result.imagery_source.clone().unwrap_or_default(),
            frames: imagery.frames.clone(),
            caption: result.caption.clone().ok_or_else(missing)?,
            confirmed: false,
            event_dates: result.timeline.ok_or_else(missing)?,
        })
    }
}

/// Writes one manifest per detected result; other results are skipped.
/// Returns the number written.
pub fn export_manifests(
    results: &[PipelineResult],
    path: impl AsRef<Path>,
) -> Result<usize, ManifestError> {
    let manifests = results
        .iter()
        .filter(|r| r.is_detected())
        .map(SequenceManifest::from_result)
        .collect::<Result<Vec<_>, _>>()?;
    write_manifests(&manifests, path)?;
    Ok(manifests.len())
}

pub fn write_manifests(
    manifests: &[SequenceManifest],
    path: impl AsRef<Path>,
) -> Result<(), ManifestError> {
    let mut w = BufWriter::new(File::create(path)?);
    for m in manifests {
        serde_json::to_writer(&mut w, m).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_manifests(path: impl AsRef<Path>) -> Result<Vec<SequenceManifest>, ManifestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out: Vec<SequenceManifest> = Vec::new();
    let mut seen = HashSet::new();
    let mut record = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        let schema = |message: String| ManifestError::Schema { record, message };
        let m: SequenceManifest = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        m.validate().map_err(schema)?;
        if !seen.insert(m.sequence_id.clone()) {
            return Err(schema(format!("duplicate sequence_id '{}'", m.sequence_id)));
        }
        out.push(m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_sequences: u64,
    pub confirmed_events: u64,
    pub avg_images_per_sequence: f64,
    /// Average rounded half-up, as printed.
    pub avg_images_rounded: u64,
}

pub fn compute_dataset_stats(manifests: &[SequenceManifest]) -> DatasetStats {
    let n = manifests.len() as u64;
    let frames: u64 = manifests.iter().map(|m| m.frames.len() as u64).sum();
    let confirmed = manifests.iter().filter(|m| m.confirmed).count() as u64;
    let (avg, rounded) = if n == 0 {
        (0.0, 0)
    } else {
        (frames as f64 / n as f64, (2 * frames + n) / (2 * n))
    };
    DatasetStats {
        total_sequences: n,
        confirmed_events: confirmed,
        avg_images_per_sequence: avg,
        avg_images_rounded: rounded,
    }
}

pub fn render_stats_table(stats: &DatasetStats) -> String {
    let header = ["Total Sequences", "Confirmed Events", "Average # Images Per Sequence"];
    let values = [
        stats.total_sequences.to_string(),
        stats.confirmed_events.to_string(),
        stats.avg_images_rounded.to_string(),
    ];
    let row: Vec<String> = header
        .iter()
        .zip(&values)
        .map(|(h, v)| format!("{v:<w$}", w = h.len()))
        .collect();
    format!("{}\n{}\n", header.join(" | "), row.join(" | ").trim_end())
}
