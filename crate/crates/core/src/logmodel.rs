//! Event model and log parsing.
//!
//! The default line grammar is `<host> <clock> <description>`, where `<clock>`
//! is canonical clock text. Other layouts are handled by supplying a regular
//! expression with the named groups `host`, `clock` and `event`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockError, ClockOrdering, HostId, VectorClock};

pub const DEFAULT_PATTERN: &str = r"^(?P<host>\S+) (?P<clock>\{\S*\}) (?P<event>\S.*)$";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid pattern: {0}")]
    BadPattern(#[from] regex::Error),
    #[error("pattern is missing the named capture group `{0}`")]
    MissingGroup(&'static str),
    #[error("line {line}: {source}")]
    MalformedClock {
        line: usize,
        #[source]
        source: ClockError,
    },
    #[error("line {line}: invalid host: {source}")]
    BadHost {
        line: usize,
        #[source]
        source: ClockError,
    },
    #[error("line {line}: host {host} already logged an event with clock {clock}")]
    DuplicateClock {
        line: usize,
        host: HostId,
        clock: VectorClock,
    },
    #[error("line {line} does not match the line pattern: {content:?}")]
    NonMatchingLine { line: usize, content: String },
}

/// One logged event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEvent {
    pub id: usize,
    pub host: HostId,
    pub clock: VectorClock,
    pub action: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_time: Option<u64>,
}

impl LogEvent {
    /// Builds an event; `action` is the first whitespace-delimited token of
    /// `description`.
    pub fn new(id: usize, host: HostId, clock: VectorClock, description: impl Into<String>) -> Self {
        let description = description.into();
        let action = action_of(&description).to_string();
        LogEvent {
            id,
            host,
            clock,
            action,
            description,
            sim_time: None,
        }
    }

    pub fn with_sim_time(mut self, t: u64) -> Self {
        self.sim_time = Some(t);
        self
    }

    /// Counter of the event's own host.
    pub fn own_counter(&self) -> u64 {
        self.clock.get(&self.host)
    }

    /// Renders the event in the default line grammar.
    pub fn to_line(&self) -> String {
        format!("{} {} {}", self.host, self.clock, self.description)
    }
}

pub fn action_of(description: &str) -> &str {
    description.split_whitespace().next().unwrap_or("")
}

#[derive(Debug, Clone)]
pub struct ParseConfig {
    pattern: Regex,
    /// Input interleaves events from several hosts in one file.
    pub multi_host: bool,
    /// Record non-matching lines in [`ParsedLog::skipped`] instead of failing.
    pub lenient: bool,
}

impl ParseConfig {
    pub fn new(pattern: &str) -> Result<Self, ParseError> {
        let re = Regex::new(pattern)?;
        let names: HashSet<&str> = re.capture_names().flatten().collect();
        for group in ["host", "clock", "event"] {
            if !names.contains(group) {
                return Err(ParseError::MissingGroup(group));
            }
        }
        Ok(ParseConfig {
            pattern: re,
            multi_host: true,
            lenient: false,
        })
    }

    pub fn lenient(mut self, lenient: bool) -> Self {
        self.lenient = lenient;
        self
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig::new(DEFAULT_PATTERN).expect("default pattern is valid")
    }
}

/// A line dropped in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub content: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub events: Vec<LogEvent>,
    pub hosts: BTreeSet<HostId>,
    pub skipped: Vec<SkippedLine>,
}

impl ParsedLog {
    /// Wraps already-built events; ids are reassigned densely in the given order.
    pub fn from_events(events: impl IntoIterator<Item = LogEvent>) -> Self {
        let events: Vec<LogEvent> = events
            .into_iter()
            .enumerate()
            .map(|(i, mut e)| {
                e.id = i;
                e
            })
            .collect();
        let hosts = events.iter().map(|e| e.host.clone()).collect();
        ParsedLog {
            events,
            hosts,
            skipped: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Text rendering in the default grammar, one line per event.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }
}

/// Parses `text` into events, one per matching line, in file order.
/// Blank lines are ignored; line numbers in errors are 1-based.
pub fn parse_log(text: &str, cfg: &ParseConfig) -> Result<ParsedLog, ParseError> {
    let mut events = Vec::new();
    let mut hosts = BTreeSet::new();
    let mut skipped = Vec::new();
    let mut seen: HashSet<(HostId, VectorClock)> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let Some(caps) = cfg.pattern.captures(raw) else {
            if cfg.lenient {
                skipped.push(SkippedLine {
                    line,
                    content: raw.to_string(),
                });
                continue;
            }
            return Err(ParseError::NonMatchingLine {
                line,
                content: raw.to_string(),
            });
        };
        let host = HostId::new(&caps["host"]).map_err(|source| ParseError::BadHost { line, source })?;
        let clock = VectorClock::parse_canonical(&caps["clock"])
            .map_err(|source| ParseError::MalformedClock { line, source })?;
        if !seen.insert((host.clone(), clock.clone())) {
            return Err(ParseError::DuplicateClock { line, host, clock });
        }
        hosts.insert(host.clone());
        events.push(LogEvent::new(events.len(), host, clock, &caps["event"]));
    }

    Ok(ParsedLog {
        events,
        hosts,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// The event's own-host counter does not exceed that of the previous
    /// event on the same host in file order.
    OwnCounterRegression {
        event: usize,
        previous: usize,
        host: HostId,
    },
    /// The event never ticked its own host.
    ZeroOwnCounter { event: usize, host: HostId },
    /// A later event on the same host (by own counter) does not dominate an
    /// earlier one, so program order is broken.
    ProgramOrderBroken {
        earlier: usize,
        later: usize,
        host: HostId,
    },
    /// The clock claims knowledge of `sender`'s counter `counter`, but no
    /// logged event on `sender` with that counter precedes it.
    OrphanEntry {
        event: usize,
        sender: HostId,
        counter: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OwnCounterRegression { event, previous, host } => write!(
                f,
                "event {event}: own counter on {host} does not increase after event {previous}"
            ),
            Violation::ZeroOwnCounter { event, host } => {
                write!(f, "event {event}: clock has no entry for its own host {host}")
            }
            Violation::ProgramOrderBroken { earlier, later, host } => write!(
                f,
                "events {earlier} and {later} on {host}: later clock does not dominate earlier"
            ),
            Violation::OrphanEntry { event, sender, counter } => write!(
                f,
                "event {event}: entry {sender}={counter} is not justified by any logged event on {sender}"
            ),
        }
    }
}

/// Checks the log against the vector-clock update rules. An empty result
/// means the log is consistent.
///
/// Clock entries naming hosts that never appear in the log are accepted: an
/// unlogged host cannot be proven wrong.
pub fn validate(log: &ParsedLog) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut by_host: BTreeMap<&HostId, Vec<&LogEvent>> = BTreeMap::new();
    let mut last_seen: BTreeMap<&HostId, &LogEvent> = BTreeMap::new();
    for e in &log.events {
        if e.own_counter() == 0 {
            out.push(Violation::ZeroOwnCounter {
                event: e.id,
                host: e.host.clone(),
            });
        }
        if let Some(prev) = last_seen.get(&e.host) {
            if e.own_counter() <= prev.own_counter() {
                out.push(Violation::OwnCounterRegression {
                    event: e.id,
                    previous: prev.id,
                    host: e.host.clone(),
                });
            }
        }
        last_seen.insert(&e.host, e);
        by_host.entry(&e.host).or_default().push(e);
    }

    for (host, evs) in by_host.iter_mut() {
        evs.sort_by_key(|e| (e.own_counter(), e.id));
        for w in evs.windows(2) {
            if w[0].clock.compare(&w[1].clock) != ClockOrdering::Before {
                out.push(Violation::ProgramOrderBroken {
                    earlier: w[0].id,
                    later: w[1].id,
                    host: (*host).clone(),
                });
            }
        }
    }

    for e in &log.events {
        for (sender, counter) in e.clock.iter() {
            if sender == &e.host {
                continue;
            }
            let Some(candidates) = by_host.get(sender) else {
                continue;
            };
            let justified = candidates
                .iter()
                .any(|s| s.own_counter() == counter && s.clock.dominated_by(&e.clock));
            if !justified {
                out.push(Violation::OrphanEntry {
                    event: e.id,
                    sender: sender.clone(),
                    counter,
                });
            }
        }
    }

    out
}
