use std::fs;
use std::io;
use std::path::Path;

use super::FailureEntry;
use crate::clients::ImagerySequence;

const ARTICLE_PROMPT: &str = "\
You locate news events in satellite imagery. Read the article and propose ONE \
specific named place where the event should be visible from orbit, together \
with the date range of the event.

Article (published {published}):
{article_text}

Previously rejected candidates. Do not repeat any of them and use the reasons \
to refine your next choice:
{failures}

Reply with a single JSON object and nothing else:
{\"location\": \"<place name, or null if no plausible candidate remains>\", \
\"rationale\": \"<why>\", \"start\": \"YYYY-MM-DD\", \"end\": \"YYYY-MM-DD\"}
";

const VERIFIER_PROMPT: &str = "\
You verify whether a news event is visible in a satellite image sequence.

Article (published {published}):
{article_text}

Candidate location: {location}

Frames:
{frame_table}

Reply with a single JSON object and nothing else:
{\"visible\": true or false, \"reason\": \"<what you see or why the event is not visible>\"}
";

const CAPTION_PROMPT: &str = "\
Write a multi-sentence change caption describing how the scene at {location} \
evolves across the satellite frames below. Use the article as context.

Article (published {published}):
{article_text}

Frames:
{frame_table}

Reply with a single JSON object and nothing else:
{\"caption\": \"<caption>\", \"frames\": [\"<timestamps of the frames the caption refers to>\"]}
";

/// Prompt text with `{article_text}`, `{failures}`, `{frame_table}`,
/// `{location}`, `{published}` and `{article_id}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub article: String,
    pub verifier: String,
    pub caption: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            article: ARTICLE_PROMPT.into(),
            verifier: VERIFIER_PROMPT.into(),
            caption: CAPTION_PROMPT.into(),
        }
    }
}

impl PromptTemplates {
    /// Reads `article.txt`, `verifier.txt` and `caption.txt` from `dir`,
    /// falling back to the built-in text for any that are missing.
    pub fn load_dir(dir: impl AsRef<Path>) -> io::Result<Self> {
        let dir = dir.as_ref();
        let mut t = Self::default();
        for (file, slot) in [
            ("article.txt", &mut t.article),
            ("verifier.txt", &mut t.verifier),
            ("caption.txt", &mut t.caption),
        ] {
            let path = dir.join(file);
            if path.exists() {
                *slot = fs::read_to_string(path)?;
            }
        }
        Ok(t)
    }
}

/// Single-pass substitution, so substituted text is never re-scanned.
pub(crate) fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let value = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| (*v, close))
        });
        match value {
            Some((v, close)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// One numbered line per failure, in occurrence order.
pub fn render_failures(failures: &[FailureEntry]) -> String {
    if failures.is_empty() {
        return "(none)".into();
    }
    failures
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.reason.is_empty() {
                format!("{}. {}: {}", i + 1, f.location_name, f.kind.as_str())
            } else {
                format!(
                    "{}. {}: {}: {}",
                    i + 1,
                    f.location_name,
                    f.kind.as_str(),
                    f.reason
                )
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_frame_table(imagery: &ImagerySequence, max_frames: Option<usize>) -> String {
    let frames = subsample(imagery.frames.len(), max_frames);
    let mut out = String::from("timestamp | scene_id | cloud_fraction | image_ref");
    for i in frames {
        let f = &imagery.frames[i];
        out.push_str(&format!(
            "\n{} | {} | {:.2} | {}",
            f.timestamp.format("%Y-%m-%dT%H:%M:%SZ"),
            f.scene_id,
            f.cloud_fraction,
            f.image_ref
        ));
    }
    out
}

/// Evenly spaced indices, always keeping the first and last frame.
pub(crate) fn subsample(len: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m >= 2 && len > m => {
            let mut idx: Vec<usize> = (0..m).map(|k| k * (len - 1) / (m - 1)).collect();
            idx.dedup();
            idx
        }
        Some(1) if len > 1 => vec![len - 1],
        _ => (0..len).collect(),
    }
}
