use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use log::{info, warn};
use thiserror::Error;

use super::metrics::{build_report, BatchReport, MetricsError};
use super::{run_article, Backends, Method, PipelineConfig, PipelineResult, RunStatus};
use crate::extraction::ArticleRecord;

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("article id '{0}' appears more than once in the corpus")]
    DuplicateArticle(String),
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// Per method, sorted by article id.
    pub results: BTreeMap<Method, Vec<PipelineResult>>,
    pub report: BatchReport,
    /// Results carried over from an earlier, interrupted run.
    pub resumed: BTreeMap<Method, usize>,
}

pub fn results_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(format!("results_{method}.jsonl"))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ResultsError + '_ {
    move |source| ResultsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Strict reader: any malformed line is an error.
pub fn read_results(path: &Path) -> Result<Vec<PipelineResult>, ResultsError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| ResultsError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

/// Lenient reader for resuming: a torn line left by an interrupted run is
/// skipped, not fatal.
fn read_previous(path: &Path) -> Result<Vec<PipelineResult>, ResultsError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => warn!("{}:{}: ignoring unreadable result ({e})", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Replaces `path` atomically with one JSON line per result.
pub fn write_results(path: &Path, results: &[PipelineResult]) -> Result<(), ResultsError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        for r in results {
            serde_json::to_writer(&mut w, r).expect("results serialize");
            w.write_all(b"\n").map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Runs every method over `articles` with up to `config.concurrency` article
/// tasks at a time.
///
/// With `out_dir`, each finished result is appended to
/// `results_<method>.jsonl` as soon as it is available, and articles already
/// present there are skipped (infrastructure errors are retried when
/// `requeue_infra_errors` is set). The files are rewritten sorted by article
/// id at the end, so their content does not depend on scheduling.
pub fn run_batch(
    articles: &[ArticleRecord],
    methods: &[Method],
    backends: &Backends,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<BatchOutput, BatchError> {
    let mut ids = HashSet::new();
    for a in articles {
        if !ids.insert(a.id.as_str()) {
            return Err(BatchError::DuplicateArticle(a.id.clone()));
        }
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut all = BTreeMap::new();
    let mut resumed = BTreeMap::new();
    for &method in methods {
        if all.contains_key(&method) {
            continue;
        }
        let path = out_dir.map(|d| results_path(d, method));
        let mut kept: Vec<PipelineResult> = match &path {
            Some(p) => read_previous(p)?
                .into_iter()
                .filter(|r| r.method == method && ids.contains(r.article_id.as_str()))
                .filter(|r| {
                    !(config.requeue_infra_errors && r.status == RunStatus::InfrastructureError)
                })
                .collect(),
            None => Vec::new(),
        };
        kept.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        kept.dedup_by(|a, b| a.article_id == b.article_id);
        let done: HashSet<&str> = kept.iter().map(|r| r.article_id.as_str()).collect();
        let pending: Vec<&ArticleRecord> = articles
            .iter()
            .filter(|a| !done.contains(a.id.as_str()))
            .collect();
        if !kept.is_empty() {
            info!("{method}: resuming, {} article(s) already done", kept.len());
        }
        resumed.insert(method, kept.len());

        let sink = match &path {
            Some(p) => {
                write_results(p, &kept)?;
                let f = OpenOptions::new().append(true).open(p).map_err(io_err(p))?;
                Some(f)
            }
            None => None,
        };
        let fresh = run_pending(&pending, method, backends, config, sink, path.as_deref())?;
        let mut results = kept;
        results.extend(fresh);
        results.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        if let Some(p) = &path {
            write_results(p, &results)?;
        }
        all.insert(method, results);
    }
    let report = build_report(&all, config.requeue_infra_errors)?;
    Ok(BatchOutput {
        results: all,
        report,
        resumed,
    })
}

fn run_pending(
    pending: &[&ArticleRecord],
    method: Method,
    backends: &Backends,
    config: &PipelineConfig,
    sink: Option<File>,
    path: Option<&Path>,
) -> Result<Vec<PipelineResult>, ResultsError> {
    let next = AtomicUsize::new(0);
    let state = Mutex::new((sink, Vec::with_capacity(pending.len()), None::<io::Error>));
    let workers = config.concurrency.max(1).min(pending.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(article) = pending.get(i) else { break };
                let result = run_article(article, method, backends, config);
                let mut guard = state.lock().expect("results sink poisoned");
                let (sink, results, error) = &mut *guard;
                if let (Some(f), None) = (sink.as_mut(), error.as_ref()) {
                    let mut line = serde_json::to_vec(&result).expect("results serialize");
                    line.push(b'\n');
                    if let Err(e) = f.write_all(&line).and_then(|_| f.flush()) {
                        *error = Some(e);
                    }
                }
                results.push(result);
            });
        }
    });
    let (_, results, error) = state.into_inner().expect("results sink poisoned");
    match (error, path) {
        (Some(e), Some(p)) => Err(io_err(p)(e)),
        _ => Ok(results),
    }
}
