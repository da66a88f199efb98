use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, warn};
use serde::Serialize;

use eventloc::bench::generate_benchmark;
use eventloc::config::RunConfig;
use eventloc::extraction::{parse_article, read_corpus, Gazetteer};
use eventloc::manifest::{
    compute_dataset_stats, export_manifests, import_manifests, render_stats_table,
};
use eventloc::pipeline::{
    build_report, read_results, render_report_table, results_path, run_article, run_batch, Method,
    RunStatus,
};

/// Exit codes: 0 success or detection, 1 usage or input error,
/// 2 infrastructure error, 3 no detection (exhausted or no candidates).
const EXIT_USAGE: u8 = 1;
const EXIT_INFRA: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "eventloc", version, about = "Locate news events in satellite imagery")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the synthetic imagery seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print human-readable tables to standard error.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method on a single article (JSON object file).
    Geocode {
        article: PathBuf,
        #[arg(long, default_value = "agentic")]
        method: Method,
        #[arg(long)]
        max_attempts: Option<u32>,
    },
    /// Run methods over a line-delimited JSON corpus.
    RunBatch {
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "centroid,gipsy,agentic")]
        methods: Vec<Method>,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        concurrency: Option<usize>,
        #[arg(long)]
        max_attempts: Option<u32>,
    },
    /// Rebuild the comparison report from the results files in a directory.
    Report {
        dir: PathBuf,
        /// Leave infrastructure errors out of the denominators.
        #[arg(long)]
        exclude_infra_errors: bool,
    },
    /// Summary statistics of a manifest file.
    DatasetStats { manifest: PathBuf },
    /// Check a gazetteer file.
    GazetteerValidate { path: PathBuf },
    /// Write the synthetic planted-event benchmark into a directory.
    GenerateBenchmark {
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        articles: usize,
    },
}

struct CliError {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn infra(message: impl ToString) -> CliError {
    CliError {
        code: EXIT_INFRA,
        message: message.to_string(),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(infra)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").map_err(infra)
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| usage("this command needs --config"))?;
    let mut config = RunConfig::load(path).map_err(usage)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Geocode {
            article,
            method,
            max_attempts,
        } => {
            let mut config = load_config(cli)?;
            if let Some(n) = max_attempts {
                config.max_attempts = *n;
            }
            config.validate().map_err(usage)?;
            let text = fs::read_to_string(article)
                .map_err(|e| usage(format!("{}: {e}", article.display())))?;
            let record = parse_article(&text)
                .map_err(|e| usage(format!("{}: {e}", article.display())))?;
            let backends = config.build_backends().map_err(usage)?;
            let result = run_article(&record, *method, &backends, &config.pipeline());
            print_json(&result)?;
            if cli.pretty {
                eprintln!(
                    "{}: {} after {} attempt(s){}",
                    result.article_id,
                    result.status.as_str(),
                    result.attempts,
                    result
                        .location_name
                        .as_ref()
                        .map(|n| format!(" at {n}"))
                        .unwrap_or_default()
                );
            }
            Ok(match result.status {
                RunStatus::Detected => 0,
                RunStatus::Exhausted | RunStatus::NoCandidates => EXIT_NOT_FOUND,
                RunStatus::InfrastructureError => {
                    error!("{}", result.error.as_deref().unwrap_or("infrastructure error"));
                    EXIT_INFRA
                }
            })
        }
        Command::RunBatch {
            corpus,
            methods,
            out,
            concurrency,
            max_attempts,
        } => {
            let mut config = load_config(cli)?;
            if let Some(n) = concurrency {
                config.concurrency = *n;
            }
            if let Some(n) = max_attempts {
                config.max_attempts = *n;
            }
            config.validate().map_err(usage)?;
            let out = out
                .clone()
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| usage("no output directory: pass --out or set output_dir"))?;
            let (articles, errors) = read_corpus(corpus)
                .map_err(|e| usage(format!("{}: {e}", corpus.display())))?;
            for e in &errors {
                warn!("{}:{}: skipped: {}", corpus.display(), e.line, e.message);
            }
            let backends = config.build_backends().map_err(usage)?;
            let output = run_batch(&articles, methods, &backends, &config.pipeline(), Some(&out))
                .map_err(infra)?;
            for (method, results) in &output.results {
                let path = out.join(format!("manifests_{method}.jsonl"));
                export_manifests(results, &path).map_err(infra)?;
            }
            write_report(&out, &output.report)?;
            print_json(&output.report)?;
            if cli.pretty {
                eprint!("{}", render_report_table(&output.report));
            }
            Ok(0)
        }
        Command::Report {
            dir,
            exclude_infra_errors,
        } => {
            let mut results = BTreeMap::new();
            for method in Method::ALL {
                let path = results_path(dir, method);
                if path.exists() {
                    results.insert(method, read_results(&path).map_err(usage)?);
                }
            }
            if results.is_empty() {
                return Err(usage(format!("no results files in {}", dir.display())));
            }
            let report = build_report(&results, *exclude_infra_errors).map_err(usage)?;
            print_json(&report)?;
            if cli.pretty {
                eprint!("{}", render_report_table(&report));
            }
            Ok(0)
        }
        Command::DatasetStats { manifest } => {
            let manifests = import_manifests(manifest)
                .map_err(|e| usage(format!("{}: {e}", manifest.display())))?;
            let stats = compute_dataset_stats(&manifests);
            print_json(&stats)?;
            if cli.pretty {
                eprint!("{}", render_stats_table(&stats));
            }
            Ok(0)
        }
        Command::GazetteerValidate { path } => {
            let g = Gazetteer::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            print_json(&serde_json::json!({"path": path, "entries": g.len(), "valid": true}))?;
            Ok(0)
        }
        Command::GenerateBenchmark { dir, articles } => {
            let bench = generate_benchmark(*articles, cli.seed.unwrap_or(0)).map_err(usage)?;
            bench.write(dir).map_err(infra)?;
            let expected: BTreeMap<&str, usize> =
                bench.expected.iter().map(|(m, n)| (m.as_str(), *n)).collect();
            print_json(&serde_json::json!({
                "dir": dir,
                "articles": bench.articles.len(),
                "expected_detections": expected,
            }))?;
            Ok(0)
        }
    }
}

fn write_report(dir: &Path, report: &eventloc::pipeline::BatchReport) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).map_err(infra)?;
    fs::write(dir.join("report.json"), json + "\n").map_err(infra)?;
    fs::write(dir.join("report.txt"), render_report_table(report)).map_err(infra)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}
