use std::io;
use std::path::PathBuf;

use chrono::{DateTime, NaiveDate, Utc};
use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompts::{render, render_failures, render_frame_table, subsample, PromptTemplates};
use super::{
    already_failed, AgentError, ArticleAgent, CandidateLocation, Caption, CaptioningAgent,
    EventTimeline, FailureEntry, Proposal, VerifierAgent, VerifierVerdict,
};
use crate::clients::{HttpMethod, HttpSettings, HttpTransport, ImagerySequence};
use crate::extraction::ArticleRecord;

pub const AGENT_TOKEN_ENV: &str = "SKY_AGENT_TOKEN";

const SYSTEM_PROMPT: &str = "You are a careful remote-sensing analyst. Always answer with exactly \
one JSON object and no surrounding prose.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteAgentConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_token_env")]
    pub token_env: String,
    /// Directory holding `article.txt`, `verifier.txt`, `caption.txt`.
    #[serde(default)]
    pub prompt_dir: Option<PathBuf>,
    /// Send frame `image_ref`s as an `images` array next to the messages.
    #[serde(default)]
    pub attach_images: bool,
    /// Upper bound on frames shown to the verifier and captioner.
    #[serde(default)]
    pub max_frames: Option<usize>,
    #[serde(default)]
    pub http: HttpSettings,
}

fn default_token_env() -> String {
    AGENT_TOKEN_ENV.to_string()
}

/// All three agent roles backed by one chat-completion endpoint.
pub struct RemoteAgents {
    config: RemoteAgentConfig,
    prompts: PromptTemplates,
    transport: HttpTransport,
}

impl RemoteAgents {
    pub fn new(config: RemoteAgentConfig) -> io::Result<Self> {
        let prompts = match &config.prompt_dir {
            Some(dir) => PromptTemplates::load_dir(dir)?,
            None => PromptTemplates::default(),
        };
        Ok(Self::with_prompts(config, prompts))
    }

    pub fn with_prompts(config: RemoteAgentConfig, prompts: PromptTemplates) -> Self {
        let transport = HttpTransport::new(config.http.clone());
        Self {
            config,
            prompts,
            transport,
        }
    }

    fn images(&self, imagery: &ImagerySequence) -> Vec<String> {
        if !self.config.attach_images {
            return Vec::new();
        }
        subsample(imagery.frames.len(), self.config.max_frames)
            .into_iter()
            .map(|i| imagery.frames[i].image_ref.clone())
            .collect()
    }

    /// Sends `prompt`, parses the reply with `parse`, and on a schema
    /// violation asks once more with the rejected reply quoted back.
    fn complete<T>(
        &self,
        role: &'static str,
        prompt: String,
        images: &[String],
        parse: impl Fn(&Value) -> Result<T, String>,
    ) -> Result<T, AgentError> {
        let mut messages = vec![
            json!({"role": "system", "content": SYSTEM_PROMPT}),
            json!({"role": "user", "content": prompt}),
        ];
        let mut last_problem = String::new();
        for round in 0..2 {
            let mut body = json!({"model": self.config.model, "messages": messages});
            if !images.is_empty() {
                body["images"] = json!(images);
            }
            let reply = self.call(&body)?;
            match parse_object(&reply).and_then(|v| parse(&v)) {
                Ok(t) => return Ok(t),
                Err(problem) => {
                    debug!("{role} agent reply rejected (round {round}): {problem}");
                    messages.push(json!({"role": "assistant", "content": reply}));
                    messages.push(json!({
                        "role": "user",
                        "content": format!(
                            "Your previous reply was rejected: {problem}. Reply again with a \
                             single JSON object in the requested format."
                        ),
                    }));
                    last_problem = problem;
                }
            }
        }
        Err(AgentError::Malformed {
            role,
            detail: last_problem,
        })
    }

    fn call(&self, body: &Value) -> Result<String, AgentError> {
        let token = std::env::var(&self.config.token_env).ok();
        let (status, text) = self
            .transport
            .send(&self.config.endpoint, HttpMethod::Post(body), token.as_deref())
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(AgentError::Transport(format!(
                "{} answered HTTP {status}",
                self.config.endpoint
            )));
        }
        Ok(message_content(&text))
    }
}

/// Pulls the assistant text out of the common chat-completion envelopes;
/// anything else is taken verbatim.
fn message_content(body: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(body) else {
        return body.to_string();
    };
    ["/choices/0/message/content", "/message/content", "/content"]
        .iter()
        .find_map(|p| v.pointer(p).and_then(Value::as_str))
        .map(str::to_string)
        .unwrap_or_else(|| body.to_string())
}

fn parse_object(reply: &str) -> Result<Value, String> {
    let mut text = reply.trim();
    if let Some(rest) = text.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        text = rest.strip_suffix("```").unwrap_or(rest).trim();
    }
    match serde_json::from_str::<Value>(text) {
        Ok(v) if v.is_object() => Ok(v),
        Ok(_) => Err("reply is JSON but not an object".into()),
        Err(e) => Err(format!("reply is not a JSON object ({e})")),
    }
}

fn date_field(v: &Value, key: &str) -> Option<NaiveDate> {
    v.get(key)?.as_str()?.trim().parse().ok()
}

fn parse_proposal(
    v: &Value,
    article: &ArticleRecord,
    failures: &[FailureEntry],
) -> Result<Option<Proposal>, String> {
    let name = match v.get("location") {
        Some(Value::Null) => return Ok(None),
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        _ => return Err("\"location\" must be a non-empty string or null".into()),
    };
    if already_failed(&name, failures) {
        return Err(format!("\"{name}\" was already rejected"));
    }
    let rationale = v
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let timeline = match (date_field(v, "start"), date_field(v, "end")) {
        (Some(s), Some(e)) => {
            EventTimeline::new(s, e).unwrap_or_else(|_| EventTimeline::around(article.published))
        }
        _ => EventTimeline::around(article.published),
    };
    Ok(Some(Proposal {
        candidate: CandidateLocation { name, rationale },
        timeline,
    }))
}

fn parse_verdict(v: &Value) -> Result<VerifierVerdict, String> {
    let visible = v
        .get("visible")
        .and_then(Value::as_bool)
        .ok_or("\"visible\" must be a boolean")?;
    let reason = v
        .get("reason")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .ok_or("\"reason\" must be a non-empty string")?;
    Ok(VerifierVerdict {
        visible,
        reason: reason.to_string(),
    })
}

fn parse_caption(v: &Value, imagery: &ImagerySequence) -> Result<Caption, String> {
    let text = v
        .get("caption")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or("\"caption\" must be a non-empty string")?;
    let known = imagery.timestamps();
    let mut referenced_frames = Vec::new();
    match v.get("frames") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let ts = item
                    .as_str()
                    .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
                    .map(|t| t.with_timezone(&Utc))
                    .ok_or_else(|| format!("frame reference {item} is not an RFC 3339 timestamp"))?;
                if !known.contains(&ts) {
                    return Err(format!("frame {ts} is not part of the sequence"));
                }
                referenced_frames.push(ts);
            }
        }
        Some(_) => return Err("\"frames\" must be an array of timestamps".into()),
    }
    Ok(Caption {
        text: text.to_string(),
        referenced_frames,
    })
}

fn article_vars(article: &ArticleRecord) -> [(&'static str, String); 3] {
    [
        ("article_id", article.id.clone()),
        ("article_text", article.text.clone()),
        ("published", article.published.to_string()),
    ]
}

fn render_with(template: &str, base: &[(&'static str, String)], extra: &[(&str, String)]) -> String {
    let vars: Vec<(&str, &str)> = base
        .iter()
        .map(|(k, v)| (*k, v.as_str()))
        .chain(extra.iter().map(|(k, v)| (*k, v.as_str())))
        .collect();
    render(template, &vars)
}

impl ArticleAgent for RemoteAgents {
    fn propose(
        &self,
        article: &ArticleRecord,
        failures: &[FailureEntry],
    ) -> Result<Option<Proposal>, AgentError> {
        let prompt = render_with(
            &self.prompts.article,
            &article_vars(article),
            &[("failures", render_failures(failures))],
        );
        self.complete("article", prompt, &[], |v| {
            parse_proposal(v, article, failures)
        })
    }
}

impl VerifierAgent for RemoteAgents {
    fn verify(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<VerifierVerdict, AgentError> {
        if imagery.is_empty() {
            return Err(AgentError::EmptyImagery);
        }
        let prompt = render_with(
            &self.prompts.verifier,
            &article_vars(article),
            &[
                ("location", location.to_string()),
                (
                    "frame_table",
                    render_frame_table(imagery, self.config.max_frames),
                ),
            ],
        );
        self.complete("verifier", prompt, &self.images(imagery), parse_verdict)
    }
}

impl CaptioningAgent for RemoteAgents {
    fn caption(
        &self,
        article: &ArticleRecord,
        location: &str,
        imagery: &ImagerySequence,
    ) -> Result<Caption, AgentError> {
        let prompt = render_with(
            &self.prompts.caption,
            &article_vars(article),
            &[
                ("location", location.to_string()),
                (
                    "frame_table",
                    render_frame_table(imagery, self.config.max_frames),
                ),
            ],
        );
        self.complete("caption", prompt, &self.images(imagery), |v| {
            parse_caption(v, imagery)
        })
    }
}
