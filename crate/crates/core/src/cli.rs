//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on data errors (including validation
//! violations), 2 on usage errors.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::clock::HostId;
use crate::graph::{CausalGraph, GraphConfig, DEFAULT_MAX_EVENTS};
use crate::infer::{by_action, estimate_model, EstimateConfig, EventClass};
use crate::logmodel::{parse_log, validate, ParseConfig, ParsedLog};
use crate::search::{grep_filter, keyword_search, motif_search, KeywordMode, Motif, Truncate};
use crate::sim2pc::{simulate, LabelStyle, SimConfig, Vote};

pub const MAX_EVENTS_ENV: &str = "LOGSCOPE_MAX_EVENTS";

const MOTIF_HELP: &str = "Motif, e.g. \"[action=prepare] -comm-> [*] -comm-> [host=node-2]\". \
Steps are [*] or [key=value,...] with keys action, host, desc (substring). \
Links: -comm-> (message), -hb-> (happens before), -next-> (next event on the same host).";

#[derive(Debug, Parser)]
#[command(name = "logscope", version, about = "Happens-before analysis of vector-clock logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LogInput {
    /// Log file (alternatively --log)
    #[arg(value_name = "FILE")]
    file: Option<PathBuf>,
    /// Log file
    #[arg(long = "log", value_name = "FILE", conflicts_with = "file")]
    log: Option<PathBuf>,
    /// Line regex with named groups host, clock and event
    #[arg(long)]
    pattern: Option<String>,
    /// Report non-matching lines as warnings instead of failing
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a log and list its events
    Parse {
        #[command(flatten)]
        input: LogInput,
        #[arg(long)]
        json: bool,
    },
    /// Check a log against the vector clock update rules
    Validate {
        #[command(flatten)]
        input: LogInput,
        #[arg(long)]
        json: bool,
    },
    /// Keyword or motif search over the causal graph
    Search {
        #[command(flatten)]
        input: LogInput,
        /// Match events whose action equals KEYWORD
        #[arg(long, conflicts_with = "motif", required_unless_present = "motif")]
        keyword: Option<String>,
        /// Match KEYWORD anywhere in the description instead
        #[arg(long, requires = "keyword")]
        substring: bool,
        #[arg(long, help = MOTIF_HELP)]
        motif: Option<String>,
        /// Let one event fill several motif steps
        #[arg(long, requires = "motif")]
        allow_reuse: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print lines containing PATTERN
    Grep {
        pattern: String,
        /// Input file; standard input when absent
        file: Option<PathBuf>,
        /// Keep only the first N matches
        #[arg(long)]
        head: Option<usize>,
        /// Keep only the last N matches
        #[arg(long)]
        tail: Option<usize>,
    },
    /// Happens-before ordering of two events
    Order {
        #[command(flatten)]
        input: LogInput,
        #[arg(long = "a")]
        a: usize,
        #[arg(long = "b")]
        b: usize,
        #[arg(long)]
        json: bool,
    },
    /// List all concurrent event pairs
    Concurrent {
        #[command(flatten)]
        input: LogInput,
        #[arg(long)]
        json: bool,
    },
    /// Rank likely root causes of a symptom class
    Infer {
        #[command(flatten)]
        input: LogInput,
        #[arg(long)]
        symptom: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Laplace smoothing constant
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Write the estimated model as JSON
        #[arg(long, value_name = "FILE")]
        model_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Simulate two-phase commit and write the vector-clocked log
    #[command(name = "simulate-2pc")]
    Simulate2pc {
        /// JSON SimConfig; flags below override its fields
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long)]
        manager: Option<String>,
        /// Comma-separated participant hosts
        #[arg(long, value_delimiter = ',')]
        participants: Vec<String>,
        /// Comma-separated votes (commit|abort), one per participant
        #[arg(long, value_delimiter = ',')]
        votes: Vec<String>,
        /// Propagation delay FROM,TO,MS (repeatable)
        #[arg(long, value_name = "FROM,TO,MS")]
        delay: Vec<String>,
        /// Local processing delay HOST,MS (repeatable)
        #[arg(long, value_name = "HOST,MS")]
        processing: Vec<String>,
        /// Use the labels of the classic three-node abort diagram
        #[arg(long)]
        fig4_labels: bool,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write the causal graph as JSON
    Export {
        #[command(flatten)]
        input: LogInput,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Serve the diagram UI bundle and graph API
    Serve {
        #[arg(long, value_name = "DIR")]
        bundle: PathBuf,
        /// Graph export JSON produced by `export`
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn data(e: impl std::fmt::Display) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

pub fn graph_config_from_env() -> Result<GraphConfig, String> {
    match std::env::var(MAX_EVENTS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|max_events| GraphConfig { max_events })
            .map_err(|_| format!("{MAX_EVENTS_ENV}={v:?} is not a non-negative integer")),
        Err(_) => Ok(GraphConfig {
            max_events: DEFAULT_MAX_EVENTS,
        }),
    }
}

fn read_path(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))
}

fn load_log(input: &LogInput, err: &mut dyn Write) -> Result<ParsedLog, Failure> {
    let path = input
        .file
        .as_ref()
        .or(input.log.as_ref())
        .ok_or_else(|| Failure::Usage("a log file is required (FILE or --log)".into()))?;
    let cfg = match &input.pattern {
        Some(p) => ParseConfig::new(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => ParseConfig::default(),
    }
    .lenient(input.lenient);
    let log = parse_log(&read_path(path)?, &cfg).map_err(Failure::data)?;
    for s in &log.skipped {
        let _ = writeln!(err, "warning: line {} skipped: {:?}", s.line, s.content);
    }
    Ok(log)
}

fn load_graph(input: &LogInput, err: &mut dyn Write) -> Result<CausalGraph, Failure> {
    let log = load_log(input, err)?;
    let cfg = graph_config_from_env().map_err(Failure::Usage)?;
    CausalGraph::build_with(&log, &cfg).map_err(Failure::data)
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string(value).map_err(Failure::data)?;
    writeln!(out, "{s}").map_err(Failure::data)
}

fn host(s: &str) -> Result<HostId, Failure> {
    HostId::new(s.trim()).map_err(|e| Failure::Usage(e.to_string()))
}

fn sim_config(
    config: Option<&Path>,
    manager: Option<&str>,
    participants: &[String],
    votes: &[String],
    delays: &[String],
    processing: &[String],
    fig4_labels: bool,
) -> Result<SimConfig, Failure> {
    let mut cfg = match config {
        Some(p) => serde_json::from_str(&read_path(p)?)
            .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => SimConfig::fig4(),
    };
    if let Some(m) = manager {
        cfg.manager = host(m)?;
    }
    if !participants.is_empty() {
        cfg.participants = participants.iter().map(|p| host(p)).collect::<Result<_, _>>()?;
        cfg.votes.retain(|h, _| participants.iter().any(|p| p.trim() == h.as_str()));
        for p in &cfg.participants {
            cfg.votes.entry(p.clone()).or_insert(Vote::Commit);
        }
    }
    if !votes.is_empty() {
        if votes.len() != cfg.participants.len() {
            return Err(Failure::Usage(format!(
                "{} votes given for {} participants",
                votes.len(),
                cfg.participants.len()
            )));
        }
        for (p, v) in cfg.participants.clone().iter().zip(votes) {
            let v: Vote = v.parse().map_err(Failure::Usage)?;
            cfg.votes.insert(p.clone(), v);
        }
    }
    for d in delays {
        let parts: Vec<&str> = d.split(',').collect();
        let [from, to, ms] = parts.as_slice() else {
            return Err(Failure::Usage(format!("--delay expects FROM,TO,MS, got {d:?}")));
        };
        let ms: u64 = ms
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("bad delay in {d:?}")))?;
        cfg.set_delay(&host(from)?, &host(to)?, ms);
    }
    for p in processing {
        let Some((h, ms)) = p.split_once(',') else {
            return Err(Failure::Usage(format!("--processing expects HOST,MS, got {p:?}")));
        };
        let ms: u64 = ms
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("bad processing delay in {p:?}")))?;
        cfg.local_processing.insert(host(h)?, ms);
    }
    if fig4_labels {
        cfg.labels = LabelStyle::Fig4;
    }
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Failure::data),
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Parse { input, json } => {
            let log = load_log(&input, err)?;
            if json {
                emit_json(out, &log.events)?;
            } else {
                for e in &log.events {
                    writeln!(out, "{:>5}  {:<12} {:<32} {}", e.id, e.host, e.clock, e.description).map_err(Failure::data)?;
                }
            }
            Ok(0)
        }
        Command::Validate { input, json } => {
            let log = load_log(&input, err)?;
            let violations = validate(&log);
            if json {
                emit_json(out, &violations)?;
            } else if violations.is_empty() {
                writeln!(out, "ok: {} events, no violations", log.len()).map_err(Failure::data)?;
            } else {
                for v in &violations {
                    writeln!(out, "{v}").map_err(Failure::data)?;
                }
            }
            Ok(if violations.is_empty() { 0 } else { 1 })
        }
        Command::Search {
            input,
            keyword,
            substring,
            motif,
            allow_reuse,
            json,
        } => {
            let g = load_graph(&input, err)?;
            if let Some(k) = keyword {
                let mode = if substring {
                    KeywordMode::Substring
                } else {
                    KeywordMode::ActionExact
                };
                let ids = keyword_search(&g, &k, mode).map_err(|e| Failure::Usage(e.to_string()))?;
                if json {
                    emit_json(out, &ids)?;
                } else {
                    for id in ids {
                        let e = g.event(id).map_err(Failure::data)?;
                        writeln!(out, "{:>5}  {:<12} {}", id, e.host, e.description).map_err(Failure::data)?;
                    }
                }
            } else {
                let text = motif.unwrap_or_default();
                let mut m: Motif = text.parse().map_err(|e: crate::search::SearchError| Failure::Usage(e.to_string()))?;
                if allow_reuse {
                    m = m.allow_reuse();
                }
                let found = motif_search(&g, &m);
                if json {
                    emit_json(out, &found)?;
                } else {
                    for t in found.iter() {
                        let row: Vec<String> = t.iter().map(usize::to_string).collect();
                        writeln!(out, "{}", row.join(" ")).map_err(Failure::data)?;
                    }
                }
            }
            Ok(0)
        }
        Command::Grep {
            pattern,
            file,
            head,
            tail,
        } => {
            let text = match file {
                Some(p) => read_path(&p)?,
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s).map_err(Failure::data)?;
                    s
                }
            };
            out.write_all(grep_filter(&text, &pattern, Truncate { head, tail }).as_bytes())
                .map_err(Failure::data)?;
            Ok(0)
        }
        Command::Order { input, a, b, json } => {
            let g = load_graph(&input, err)?;
            let o = g.ordering(a, b).map_err(Failure::data)?;
            if json {
                emit_json(out, &o)?;
            } else {
                writeln!(out, "{o}").map_err(Failure::data)?;
            }
            Ok(0)
        }
        Command::Concurrent { input, json } => {
            let g = load_graph(&input, err)?;
            let pairs = g.concurrent_pairs();
            if json {
                emit_json(out, &pairs)?;
            } else {
                for (a, b) in pairs {
                    writeln!(out, "{a} {b}").map_err(Failure::data)?;
                }
            }
            Ok(0)
        }
        Command::Infer {
            input,
            symptom,
            top,
            alpha,
            model_out,
            json,
        } => {
            let g = load_graph(&input, err)?;
            let cfg = EstimateConfig {
                alpha,
                class_count: None,
            };
            let model = estimate_model(&g, by_action, &cfg).map_err(Failure::data)?;
            for w in model.warnings() {
                writeln!(err, "warning: {w}").map_err(Failure::data)?;
            }
            if let Some(p) = model_out {
                let text = serde_json::to_string(&model.to_export()).map_err(Failure::data)?;
                write_output(Some(&p), &text, out)?;
            }
            let symptom = EventClass::new(symptom).map_err(|e| Failure::Usage(e.to_string()))?;
            let ranked = model.rank_root_causes(&symptom, top).map_err(Failure::data)?;
            if json {
                emit_json(out, &ranked)?;
            } else {
                for p in &ranked {
                    writeln!(out, "{:<24} {:.6}", p.cause, p.probability).map_err(Failure::data)?;
                }
            }
            Ok(0)
        }
        Command::Simulate2pc {
            config,
            manager,
            participants,
            votes,
            delay,
            processing,
            fig4_labels,
            out: out_path,
        } => {
            let cfg = sim_config(
                config.as_deref(),
                manager.as_deref(),
                &participants,
                &votes,
                &delay,
                &processing,
                fig4_labels,
            )?;
            let log = simulate(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            write_output(out_path.as_deref(), &log.to_text(), out)?;
            Ok(0)
        }
        Command::Export { input, out: out_path } => {
            let g = load_graph(&input, err)?;
            let mut text = g.export_json();
            text.push('\n');
            write_output(out_path.as_deref(), &text, out)?;
            Ok(0)
        }
        Command::Serve { bundle, data, port } => {
            let cfg = graph_config_from_env().map_err(Failure::Usage)?;
            let rt = tokio::runtime::Runtime::new().map_err(Failure::data)?;
            rt.block_on(crate::serve::serve(&bundle, &data, port, &cfg))
                .map_err(Failure::data)?;
            Ok(0)
        }
    }
}
