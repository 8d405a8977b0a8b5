//! Keyword search, motif (structured) search and grep-style line filtering.
//!
//! Motif text form:
//!
//! ```text
//! motif := step (link step)*
//! step  := "[" "*" "]" | "[" pred ("," pred)* "]"
//! pred  := "action=" value | "host=" value | "desc=" value
//! link  := "-comm->" | "-hb->" | "-next->"
//! ```
//!
//! `-comm->` follows a communication edge, `-hb->` any happens-before
//! successor, `-next->` the next event on the same host. `desc=` is a
//! substring test on the description. Values run to the next `,` or `]`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::HostId;
use crate::graph::CausalGraph;
use crate::logmodel::LogEvent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search keyword must not be empty")]
    EmptyQuery,
    #[error("motif needs at least one step")]
    EmptyMotif,
    #[error("motif has {steps} steps but {links} links")]
    LinkCount { steps: usize, links: usize },
    #[error("cannot parse motif at offset {offset}: {reason}")]
    Syntax { offset: usize, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeywordMode {
    /// The action field equals the keyword.
    #[default]
    ActionExact,
    /// The description contains the keyword.
    Substring,
}

/// Ids of events matching `keyword`, ascending.
pub fn keyword_search(
    g: &CausalGraph,
    keyword: &str,
    mode: KeywordMode,
) -> Result<BTreeSet<usize>, SearchError> {
    if keyword.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    Ok(g.events()
        .iter()
        .filter(|e| match mode {
            KeywordMode::ActionExact => e.action == keyword,
            KeywordMode::Substring => e.description.contains(keyword),
        })
        .map(|e| e.id)
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventPredicate {
    pub action: Option<String>,
    pub host: Option<HostId>,
    pub description_contains: Option<String>,
}

impl EventPredicate {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn action(a: impl Into<String>) -> Self {
        EventPredicate {
            action: Some(a.into()),
            ..Self::default()
        }
    }

    pub fn host(h: HostId) -> Self {
        EventPredicate {
            host: Some(h),
            ..Self::default()
        }
    }

    pub fn matches(&self, e: &LogEvent) -> bool {
        self.action.as_ref().is_none_or(|a| &e.action == a)
            && self.host.as_ref().is_none_or(|h| &e.host == h)
            && self
                .description_contains
                .as_ref()
                .is_none_or(|s| e.description.contains(s.as_str()))
    }
}

impl fmt::Display for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(a) = &self.action {
            parts.push(format!("action={a}"));
        }
        if let Some(h) = &self.host {
            parts.push(format!("host={h}"));
        }
        if let Some(d) = &self.description_contains {
            parts.push(format!("desc={d}"));
        }
        if parts.is_empty() {
            write!(f, "[*]")
        } else {
            write!(f, "[{}]", parts.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    HappensBefore,
    CommEdge,
    SameHostNext,
}

impl Link {
    fn token(self) -> &'static str {
        match self {
            Link::HappensBefore => "-hb->",
            Link::CommEdge => "-comm->",
            Link::SameHostNext => "-next->",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motif {
    steps: Vec<EventPredicate>,
    links: Vec<Link>,
    /// Forbid the same event from filling two steps of one match.
    pub distinct: bool,
}

impl Motif {
    pub fn new(steps: Vec<EventPredicate>, links: Vec<Link>) -> Result<Self, SearchError> {
        if steps.is_empty() {
            return Err(SearchError::EmptyMotif);
        }
        if links.len() + 1 != steps.len() {
            return Err(SearchError::LinkCount {
                steps: steps.len(),
                links: links.len(),
            });
        }
        Ok(Motif {
            steps,
            links,
            distinct: true,
        })
    }

    pub fn allow_reuse(mut self) -> Self {
        self.distinct = false;
        self
    }

    pub fn steps(&self) -> &[EventPredicate] {
        &self.steps
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.steps[0])?;
        for (l, s) in self.links.iter().zip(&self.steps[1..]) {
            write!(f, " {} {}", l.token(), s)?;
        }
        Ok(())
    }
}

impl FromStr for Motif {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = |offset: usize, reason: &str| SearchError::Syntax {
            offset,
            reason: reason.to_string(),
        };
        let mut steps = Vec::new();
        let mut links = Vec::new();
        let mut rest = s;
        loop {
            rest = rest.trim_start();
            let at = s.len() - rest.len();
            let Some(body) = rest.strip_prefix('[') else {
                return Err(syntax(at, "expected `[`"));
            };
            let close = body.find(']').ok_or_else(|| syntax(at, "unclosed `[`"))?;
            let inner = body[..close].trim();
            let mut pred = EventPredicate::any();
            if inner != "*" {
                for part in inner.split(',') {
                    let (key, value) = part
                        .split_once('=')
                        .ok_or_else(|| syntax(at, "expected key=value"))?;
                    let value = value.trim();
                    if value.is_empty() {
                        return Err(syntax(at, "empty predicate value"));
                    }
                    match key.trim() {
                        "action" => pred.action = Some(value.to_string()),
                        "host" => {
                            pred.host = Some(HostId::new(value).map_err(|e| syntax(at, &e.to_string()))?)
                        }
                        "desc" => pred.description_contains = Some(value.to_string()),
                        other => return Err(syntax(at, &format!("unknown predicate key `{other}`"))),
                    }
                }
            }
            steps.push(pred);
            rest = body[close + 1..].trim_start();
            if rest.is_empty() {
                break;
            }
            let at = s.len() - rest.len();
            let link = [Link::CommEdge, Link::HappensBefore, Link::SameHostNext]
                .into_iter()
                .find(|l| rest.starts_with(l.token()))
                .ok_or_else(|| syntax(at, "expected -comm->, -hb-> or -next->"))?;
            rest = &rest[link.token().len()..];
            links.push(link);
        }
        Motif::new(steps, links)
    }
}

/// Ordered match tuples, one event id per motif step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct MatchSet {
    pub matches: BTreeSet<Vec<usize>>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.matches.iter()
    }
}

/// Exhaustive backtracking search for every tuple matching `m`.
pub fn motif_search(g: &CausalGraph, m: &Motif) -> MatchSet {
    let mut out = MatchSet::default();
    let mut partial = Vec::with_capacity(m.steps.len());
    for e in g.events() {
        if m.steps[0].matches(e) {
            partial.push(e.id);
            extend(g, m, &mut partial, &mut out);
            partial.pop();
        }
    }
    out
}

fn extend(g: &CausalGraph, m: &Motif, partial: &mut Vec<usize>, out: &mut MatchSet) {
    let k = partial.len();
    if k == m.steps.len() {
        out.matches.insert(partial.clone());
        return;
    }
    let last = partial[k - 1];
    // Ids come from the graph itself, so lookups cannot fail.
    let next: Vec<usize> = match m.links[k - 1] {
        Link::CommEdge => g
            .comm_edges()
            .iter()
            .filter(|(a, _)| *a == last)
            .map(|&(_, b)| b)
            .collect(),
        Link::HappensBefore => g.descendants(last).unwrap_or_default(),
        Link::SameHostNext => g.next_on_host(last).ok().flatten().into_iter().collect(),
    };
    for id in next {
        if m.distinct && partial.contains(&id) {
            continue;
        }
        let Ok(e) = g.event(id) else { continue };
        if m.steps[k].matches(e) {
            partial.push(id);
            extend(g, m, partial, out);
            partial.pop();
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Truncate {
    pub head: Option<usize>,
    pub tail: Option<usize>,
}

/// Lines of `text` containing `pattern`, in order, each newline-terminated.
/// `head` keeps the first K matches; `tail` then keeps the last K of those.
pub fn grep_filter(text: &str, pattern: &str, truncate: Truncate) -> String {
    let mut hits: Vec<&str> = text.lines().filter(|l| l.contains(pattern)).collect();
    if let Some(k) = truncate.head {
        hits.truncate(k);
    }
    if let Some(k) = truncate.tail {
        let skip = hits.len().saturating_sub(k);
        hits.drain(..skip);
    }
    let mut out = String::new();
    for l in hits {
        out.push_str(l);
        out.push('\n');
    }
    out
}
