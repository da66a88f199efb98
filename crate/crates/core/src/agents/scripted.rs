use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    already_failed, AgentError, ArticleAgent, Caption, CandidateLocation, CaptioningAgent,
    EventTimeline, FailureEntry, Proposal, VerifierAgent, VerifierVerdict,
};
use crate::clients::ImagerySequence;
use crate::extraction::ArticleRecord;

pub const DEFAULT_CAPTION_TEMPLATE: &str = "Article {article_id}: a {count}-frame sequence over \
{location} from {first} to {last} shows the reported change. Frames: {frames}.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalFixture {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictFixture {
    pub visible: bool,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArticleFixture {
    #[serde(default)]
    pub proposals: Vec<ProposalFixture>,
    /// Verdict overrides keyed by location name; locations without an entry
    /// are judged by the imagery's planted-event flags.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub verdicts: BTreeMap<String, VerdictFixture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_template: Option<String>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("failed to read fixtures: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid fixture file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("article {article}: {message}")]
    Invalid { article: String, message: String },
}

pub fn load_fixtures(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, ArticleFixture>, FixtureError> {
    let fixtures: BTreeMap<String, ArticleFixture> =
        serde_json::from_str(&fs::read_to_string(path)?)?;
    for (article, f) in &fixtures {
        for p in &f.proposals {
            if p.name.trim().is_empty() {
                return Err(FixtureError::Invalid {
                    article: article.clone(),
                    message: "proposal with empty name".into(),
                });
            }
            if let (Some(s), Some(e)) = (p.start, p.end) {
                if s > e {
                    return Err(FixtureError::Invalid {
                        article: article.clone(),
                        message: format!("proposal {:?} has start after end", p.name),
                    });
                }
            }
        }
        if f.verdicts.values().any(|v| v.reason.trim().is_empty()) {
            return Err(FixtureError::Invalid {
                article: article.clone(),
                message: "verdict with empty reason".into(),
            });
        }
    }
    Ok(fixtures)
}

/// Deterministic replay backend for all three agent roles.
///
/// Proposals are indexed by the number of failures so far; a fixture name
/// that already failed is skipped so the no-repetition contract holds even
/// for sloppy fixtures.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAgents {
    fixtures: HashMap<String, ArticleFixture>,
}

impl ScriptedAgents {
    pub fn new(fixtures: impl IntoIterator<Item = (String, ArticleFixture)>) -> Self {
        Self {
            fixtures: fixtures.into_iter().collect(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        Ok(Self::new(load_fixtures(path)?))
    }

    fn fixture(&self, article: &ArticleRecord) -> Option<&ArticleFixture> {
        self.fixtures.get(&article.id)
    }
}

impl ArticleAgent for ScriptedAgents {
    fn propose(
        &self,
        article: &ArticleRecord,
        failures: &[FailureEntry],
    ) -> Result<Option<Proposal>, AgentError> {
        let Some(fixture) = self.fixture(article) else {
            return Ok(None);
        };
        let next = fixture
            .proposals
            .iter()
            .skip(failures.len())
            .find(|p| !already_failed(&p.name, failures));
        Ok(next.map(|p| {
            let timeline = match (p.start, p.end) {
                (Some(start), Some(end)) => EventTimeline::new(start, end)
                    .unwrap_or_else(|_| EventTimeline::around(article.published)),
                _ => EventTimeline::around(article.published),
            };
            Proposal {
                candidate: CandidateLocation {
                    name: p.name.clone(),
                    rationale: p
                        .rationale
                        .clone()
                        .unwrap_or_else(|| format!("scripted candidate {}", failures.len() + 1)),
                },
                timeline,
            }
        }))
    }
}

impl VerifierAgent for ScriptedAgents {
    fn verify(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<VerifierVerdict, AgentError> {
        if imagery.is_empty() {
            return Err(AgentError::EmptyImagery);
        }
        let scripted = self.fixture(article).and_then(|f| {
            f.verdicts
                .iter()
                .find(|(name, _)| name.trim().eq_ignore_ascii_case(location.trim()))
                .map(|(_, v)| v)
        });
        if let Some(v) = scripted {
            return Ok(VerifierVerdict {
                visible: v.visible,
                reason: v.reason.clone(),
            });
        }
        let first = imagery.frames.first().expect("non-empty");
        let last = imagery.frames.last().expect("non-empty");
        Ok(match imagery.frames.iter().find(|f| f.planted_event == Some(true)) {
            Some(f) => VerifierVerdict {
                visible: true,
                reason: format!(
                    "planted change visible near {} from frame {} ({}) onward",
                    location,
                    f.scene_id,
                    f.timestamp.format("%Y-%m-%d")
                ),
            },
            None => VerifierVerdict {
                visible: false,
                reason: format!(
                    "no change visible near {} across {} frames between {} and {}",
                    location,
                    imagery.len(),
                    first.timestamp.format("%Y-%m-%d"),
                    last.timestamp.format("%Y-%m-%d")
                ),
            },
        })
    }
}

impl CaptioningAgent for ScriptedAgents {
    fn caption(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<Caption, AgentError> {
        let template = self
            .fixture(article)
            .and_then(|f| f.caption_template.as_deref())
            .unwrap_or(DEFAULT_CAPTION_TEMPLATE);
        let stamps = imagery.timestamps();
        let fmt = |d: &chrono::DateTime<chrono::Utc>| d.format("%Y-%m-%dT%H:%M:%SZ").to_string();
        let frames = stamps.iter().map(fmt).collect::<Vec<_>>().join(", ");
        let first = stamps.first().map(fmt).unwrap_or_default();
        let last = stamps.last().map(fmt).unwrap_or_default();
        let text = template
            .replace("{article_id}", &article.id)
            .replace("{location}", location)
            .replace("{count}", &stamps.len().to_string())
            .replace("{first}", &first)
            .replace("{last}", &last)
            .replace("{frames}", &frames);
        Ok(Caption {
            text,
            referenced_frames: stamps,
        })
    }
}
