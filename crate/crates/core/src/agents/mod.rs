//! Agent roles of the search-and-verify loop.
//!
//! * the article agent proposes one candidate location (and an event
//!   timeline) at a time, given the failures so far;
//! * the verifier agent decides whether the event is visible in the fetched
//!   imagery and explains why;
//! * the captioning agent describes the change once the event is found.
//!
//! Two backends implement all three roles: [`ScriptedAgents`] replays a
//! fixture file deterministically, [`RemoteAgents`] talks to a
//! chat-completion style HTTP endpoint.

mod prompts;
mod remote;
mod scripted;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::ImagerySequence;
use crate::extraction::ArticleRecord;

pub use prompts::{render_failures, render_frame_table, PromptTemplates};
pub use remote::{RemoteAgentConfig, RemoteAgents, AGENT_TOKEN_ENV};
pub use scripted::{
    load_fixtures, ArticleFixture, FixtureError, ProposalFixture, ScriptedAgents, VerdictFixture,
    DEFAULT_CAPTION_TEMPLATE,
};

/// Days either side of the publication date used when no timeline is known.
pub const DEFAULT_TIMELINE_HALF_WIDTH_DAYS: i64 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent transport error: {0}")]
    Transport(String),
    #[error("{role} agent returned a malformed response: {detail}")]
    Malformed { role: &'static str, detail: String },
    #[error("verifier needs at least one imagery frame")]
    EmptyImagery,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("timeline start {start} is after end {end}")]
pub struct TimelineError {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// Inclusive calendar-date range of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeline")]
pub struct EventTimeline {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Deserialize)]
struct RawTimeline {
    start: NaiveDate,
    end: NaiveDate,
}

impl TryFrom<RawTimeline> for EventTimeline {
    type Error = TimelineError;

    fn try_from(r: RawTimeline) -> Result<Self, Self::Error> {
        EventTimeline::new(r.start, r.end)
    }
}

impl EventTimeline {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, TimelineError> {
        if start > end {
            return Err(TimelineError { start, end });
        }
        Ok(Self { start, end })
    }

    /// `[published - 30 days, published + 30 days]`.
    pub fn around(published: NaiveDate) -> Self {
        let d = Duration::days(DEFAULT_TIMELINE_HALF_WIDTH_DAYS);
        Self {
            start: published - d,
            end: published + d,
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLocation {
    pub name: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub candidate: CandidateLocation,
    pub timeline: EventTimeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    GeocodeError,
    NotVisible,
}

impl FailureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureKind::GeocodeError => "geocode_error",
            FailureKind::NotVisible => "not_visible",
        }
    }
}

/// A rejected candidate and why it was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub location_name: String,
    pub kind: FailureKind,
    #[serde(default)]
    pub reason: String,
}

impl FailureEntry {
    pub fn geocode_error(location_name: impl Into<String>) -> Self {
        Self {
            location_name: location_name.into(),
            kind: FailureKind::GeocodeError,
            reason: String::new(),
        }
    }

    pub fn not_visible(location_name: impl Into<String>, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        debug_assert!(!reason.is_empty(), "not_visible failures carry a reason");
        Self {
            location_name: location_name.into(),
            kind: FailureKind::NotVisible,
            reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierVerdict {
    pub visible: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    #[serde(default)]
    pub referenced_frames: Vec<DateTime<Utc>>,
}

pub trait ArticleAgent: Send + Sync {
    /// Next candidate not already in `failures`, or `None` once the agent has
    /// no plausible candidates left.
    fn propose(
        &self,
        article: &ArticleRecord,
        failures: &[FailureEntry],
    ) -> Result<Option<Proposal>, AgentError>;
}

pub trait VerifierAgent: Send + Sync {
    fn verify(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<VerifierVerdict, AgentError>;
}

pub trait CaptioningAgent: Send + Sync {
    fn caption(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<Caption, AgentError>;
}

pub(crate) fn already_failed(name: &str, failures: &[FailureEntry]) -> bool {
    failures
        .iter()
        .any(|f| f.location_name.trim().eq_ignore_ascii_case(name.trim()))
}
