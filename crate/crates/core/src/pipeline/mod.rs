//! Per-article orchestration of the three methods, batch execution over a
//! corpus and the yield report.

mod batch;
mod metrics;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::agents::{
    already_failed, AgentError, ArticleAgent, Caption, CaptioningAgent, EventTimeline,
    FailureEntry, VerifierAgent,
};
use crate::centroid::weighted_centroid;
use crate::clients::{ClientError, ForwardGeocoder, ImageryProvider, ImagerySequence};
use crate::extraction::{ArticleRecord, PlaceExtractor};
use crate::geo::{GeoCoordinate, WeightedPlace};
use crate::gipsy::gipsy_locate;

pub use batch::{
    read_results, results_path, run_batch, write_results, BatchError, BatchOutput, ResultsError,
};
pub use metrics::{
    build_report, compute_metrics, render_report_table, BatchReport, MetricsError, MetricsRow,
};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Centroid,
    Gipsy,
    Agentic,
}

impl Method {
    /// Report row order.
    pub const ALL: [Method; 3] = [Method::Centroid, Method::Gipsy, Method::Agentic];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Centroid => "centroid",
            Method::Gipsy => "gipsy",
            Method::Agentic => "agentic",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            Method::Centroid => "Weighted Centroid",
            Method::Gipsy => "GIPSY",
            Method::Agentic => "Agentic Search",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "centroid" => Ok(Method::Centroid),
            "gipsy" => Ok(Method::Gipsy),
            "agentic" => Ok(Method::Agentic),
            other => Err(format!(
                "unknown method '{other}' (expected centroid, gipsy or agentic)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_attempts: u32,
    /// Articles processed in parallel by [`run_batch`].
    pub concurrency: usize,
    /// Leave infrastructure failures out of the stored results so a rerun
    /// retries them, and out of the yield denominators.
    pub requeue_infra_errors: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            concurrency: 1,
            requeue_infra_errors: false,
        }
    }
}

/// Service handles shared by every article task.
#[derive(Clone)]
pub struct Backends {
    pub extractor: Arc<dyn PlaceExtractor>,
    pub geocoder: Arc<dyn ForwardGeocoder>,
    pub imagery: Arc<dyn ImageryProvider>,
    pub article_agent: Arc<dyn ArticleAgent>,
    pub verifier: Arc<dyn VerifierAgent>,
    pub captioner: Arc<dyn CaptioningAgent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Detected,
    Exhausted,
    NoCandidates,
    InfrastructureError,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Detected => "detected",
            RunStatus::Exhausted => "exhausted",
            RunStatus::NoCandidates => "no_candidates",
            RunStatus::InfrastructureError => "infrastructure_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub article_id: String,
    pub method: Method,
    pub status: RunStatus,
    pub location_name: Option<String>,
    pub coordinate: Option<GeoCoordinate>,
    pub timeline: Option<EventTimeline>,
    pub attempts: u32,
    pub failures: Vec<FailureEntry>,
    pub caption: Option<Caption>,
    /// Frames behind a detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imagery: Option<ImagerySequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imagery_source: Option<String>,
    /// Diagnostic for infrastructure errors and agent misbehaviour.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PipelineResult {
    fn empty(article: &ArticleRecord, method: Method) -> Self {
        Self {
            article_id: article.id.clone(),
            method,
            status: RunStatus::NoCandidates,
            location_name: None,
            coordinate: None,
            timeline: None,
            attempts: 0,
            failures: Vec::new(),
            caption: None,
            imagery: None,
            imagery_source: None,
            error: None,
        }
    }

    fn infrastructure(mut self, message: String) -> Self {
        self.status = RunStatus::InfrastructureError;
        self.error = Some(message);
        self
    }

    pub fn is_detected(&self) -> bool {
        self.status == RunStatus::Detected
    }
}

pub fn run_article(
    article: &ArticleRecord,
    method: Method,
    backends: &Backends,
    config: &PipelineConfig,
) -> PipelineResult {
    let result = match method {
        Method::Agentic => run_article_agentic(article, backends, config),
        Method::Centroid | Method::Gipsy => run_article_traditional(article, method, backends),
    };
    debug!(
        "{} [{}]: {} after {} attempt(s)",
        article.id,
        method,
        result.status.as_str(),
        result.attempts
    );
    result
}

/// What happened when a located candidate was checked against imagery.
enum Check {
    Visible(Caption, ImagerySequence),
    Rejected(String),
    Infrastructure(String),
}

fn check_location(
    article: &ArticleRecord,
    label: &str,
    coordinate: &GeoCoordinate,
    timeline: &EventTimeline,
    backends: &Backends,
) -> Check {
    let imagery = match backends.imagery.fetch(*coordinate, timeline) {
        Ok(seq) => seq,
        Err(e) => return Check::Infrastructure(format!("imagery: {e}")),
    };
    if imagery.is_empty() {
        return Check::Rejected("no imagery available for the timeline".into());
    }
    let verdict = match backends.verifier.verify(article, label, &imagery) {
        Ok(v) => v,
        Err(AgentError::Transport(e)) => return Check::Infrastructure(format!("verifier: {e}")),
        Err(e) => return Check::Rejected(e.to_string()),
    };
    if !verdict.visible {
        return Check::Rejected(verdict.reason);
    }
    match backends.captioner.caption(article, label, &imagery) {
        Ok(c) => Check::Visible(c, imagery),
        Err(e) => Check::Infrastructure(format!("captioning: {e}")),
    }
}

/// Iterative search and verification: one candidate per attempt, each
/// failure fed back to the article agent.
pub fn run_article_agentic(
    article: &ArticleRecord,
    backends: &Backends,
    config: &PipelineConfig,
) -> PipelineResult {
    let mut result = PipelineResult::empty(article, Method::Agentic);
    let max_attempts = config.max_attempts.max(1);
    while result.attempts < max_attempts {
        let proposal = match backends.article_agent.propose(article, &result.failures) {
            Ok(Some(p)) => p,
            Ok(None) => return result,
            Err(AgentError::Transport(e)) => {
                return result.infrastructure(format!("article agent: {e}"))
            }
            Err(e) => {
                result.error = Some(e.to_string());
                return result;
            }
        };
        let name = proposal.candidate.name;
        if already_failed(&name, &result.failures) {
            result.error = Some(format!("article agent repeated rejected candidate '{name}'"));
            return result;
        }
        result.attempts += 1;
        let coordinate = match backends.geocoder.geocode(&name) {
            Ok(Some(g)) => g.coordinate,
            Ok(None) => {
                result.failures.push(FailureEntry::geocode_error(name));
                continue;
            }
            Err(e @ ClientError::Transport { .. }) => {
                return result.infrastructure(format!("geocoder: {e}"))
            }
            Err(e) => {
                debug!("{}: geocoding '{name}' failed: {e}", article.id);
                result.failures.push(FailureEntry::geocode_error(name));
                continue;
            }
        };
        match check_location(article, &name, &coordinate, &proposal.timeline, backends) {
            Check::Visible(caption, imagery) => {
                result.status = RunStatus::Detected;
                result.location_name = Some(name);
                result.coordinate = Some(coordinate);
                result.timeline = Some(proposal.timeline);
                result.caption = Some(caption);
                result.imagery = Some(imagery);
                result.imagery_source = Some(backends.imagery.source_label().to_string());
                return result;
            }
            Check::Rejected(reason) => result.failures.push(FailureEntry::not_visible(name, reason)),
            Check::Infrastructure(e) => return result.infrastructure(e),
        }
    }
    result.status = RunStatus::Exhausted;
    result
}

fn place_label(method: Method, places: &[WeightedPlace]) -> String {
    let names: Vec<&str> = places.iter().map(|p| p.name.as_str()).collect();
    format!("{} of {}", method.display_name(), names.join(", "))
}

/// Extract places, reduce them to one coordinate, and verify once over the
/// default publication window.
pub fn run_article_traditional(
    article: &ArticleRecord,
    method: Method,
    backends: &Backends,
) -> PipelineResult {
    assert!(method != Method::Agentic, "agentic runs use run_article_agentic");
    let mut result = PipelineResult::empty(article, method);
    let places = backends.extractor.extract_places(article);
    if places.is_empty() {
        return result;
    }
    result.attempts = 1;
    let label = place_label(method, &places);
    let located = match method {
        Method::Centroid => weighted_centroid(&places).map_err(|e| e.to_string()),
        _ => gipsy_locate(&places).map_err(|e| e.to_string()),
    };
    let coordinate = match located {
        Ok(c) => c,
        Err(e) => {
            info!("{}: {method} could not locate the article: {e}", article.id);
            result.status = RunStatus::Exhausted;
            result.failures.push(FailureEntry::geocode_error(label));
            result.error = Some(e);
            return result;
        }
    };
    let timeline = EventTimeline::around(article.published);
    match check_location(article, &label, &coordinate, &timeline, backends) {
        Check::Visible(caption, imagery) => {
            result.status = RunStatus::Detected;
            result.location_name = Some(label);
            result.coordinate = Some(coordinate);
            result.timeline = Some(timeline);
            result.caption = Some(caption);
            result.imagery = Some(imagery);
            result.imagery_source = Some(backends.imagery.source_label().to_string());
        }
        Check::Rejected(reason) => {
            result.status = RunStatus::Exhausted;
            result.failures.push(FailureEntry::not_visible(label, reason));
        }
        Check::Infrastructure(e) => return result.infrastructure(e),
    }
    result
}
