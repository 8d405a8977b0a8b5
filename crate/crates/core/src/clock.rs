//! Vector clocks and the happens-before comparison.
//!
//! Clocks are sparse: a host missing from the map has counter 0, so a log may
//! omit hosts a process never heard from. Zero entries are never stored, which
//! keeps structural equality and `Equal` ordering the same thing.
//!
//! ```
//! use logscope::clock::{ClockOrdering, HostId, VectorClock};
//!
//! let mgr = HostId::new("node-2").unwrap();
//! let prepare = VectorClock::new().tick(&mgr).unwrap();
//! assert_eq!(prepare.to_string(), r#"{"node-2":1}"#);
//!
//! let vote: VectorClock = r#"{"node-1":1,"node-2":1}"#.parse().unwrap();
//! assert_eq!(prepare.compare(&vote), ClockOrdering::Before);
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("invalid host id {0:?}: must be a non-empty token without whitespace, quotes or backslashes")]
    InvalidHost(String),
    #[error("counter for {0} would overflow")]
    Overflow(HostId),
    #[error("malformed clock text {text:?}: {reason}")]
    Malformed { text: String, reason: String },
}

/// Name of a process or node in the execution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct HostId(String);

impl HostId {
    pub fn new(name: impl Into<String>) -> Result<Self, ClockError> {
        let name = name.into();
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| !c.is_whitespace() && !c.is_control() && c != '"' && c != '\\');
        if ok {
            Ok(HostId(name))
        } else {
            Err(ClockError::InvalidHost(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for HostId {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HostId::new(s)
    }
}

impl<'de> Deserialize<'de> for HostId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        HostId::new(s).map_err(serde::de::Error::custom)
    }
}

/// Result of comparing two vector clocks under happens-before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClockOrdering {
    Before,
    After,
    Concurrent,
    Equal,
}

impl ClockOrdering {
    pub fn reverse(self) -> Self {
        match self {
            ClockOrdering::Before => ClockOrdering::After,
            ClockOrdering::After => ClockOrdering::Before,
            other => other,
        }
    }
}

impl fmt::Display for ClockOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClockOrdering::Before => "Before",
            ClockOrdering::After => "After",
            ClockOrdering::Concurrent => "Concurrent",
            ClockOrdering::Equal => "Equal",
        };
        f.write_str(s)
    }
}

/// Immutable sparse vector clock.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VectorClock {
    entries: BTreeMap<HostId, u64>,
}

impl VectorClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a clock from `(host, counter)` pairs; zero counters are dropped
    /// and repeated hosts keep the larger value.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (HostId, u64)>,
    {
        let mut map = BTreeMap::new();
        for (h, c) in entries {
            if c > 0 {
                let slot = map.entry(h).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        VectorClock { entries: map }
    }

    pub fn get(&self, host: &HostId) -> u64 {
        self.entries.get(host).copied().unwrap_or(0)
    }

    /// Non-zero entries in host order.
    pub fn iter(&self) -> impl Iterator<Item = (&HostId, u64)> {
        self.entries.iter().map(|(h, c)| (h, *c))
    }

    pub fn hosts(&self) -> impl Iterator<Item = &HostId> {
        self.entries.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counters. Strictly increases along happens-before, so
    /// sorting by it yields a linear extension.
    pub fn weight(&self) -> u128 {
        self.entries.values().map(|&c| c as u128).sum()
    }

    pub fn tick(&self, host: &HostId) -> Result<VectorClock, ClockError> {
        let next = self
            .get(host)
            .checked_add(1)
            .ok_or_else(|| ClockError::Overflow(host.clone()))?;
        let mut entries = self.entries.clone();
        entries.insert(host.clone(), next);
        Ok(VectorClock { entries })
    }

    pub fn merge(&self, received: &VectorClock) -> VectorClock {
        let mut entries = self.entries.clone();
        for (h, &c) in &received.entries {
            let slot = entries.entry(h.clone()).or_insert(0);
            *slot = (*slot).max(c);
        }
        VectorClock { entries }
    }

    /// `merge` followed by `tick`: the receive rule.
    pub fn receive(&self, received: &VectorClock, host: &HostId) -> Result<VectorClock, ClockError> {
        self.merge(received).tick(host)
    }

    /// Element-wise `self <= other`.
    pub fn dominated_by(&self, other: &VectorClock) -> bool {
        self.entries.iter().all(|(h, &c)| c <= other.get(h))
    }

    pub fn compare(&self, other: &VectorClock) -> ClockOrdering {
        let le = self.dominated_by(other);
        let ge = other.dominated_by(self);
        match (le, ge) {
            (true, true) => ClockOrdering::Equal,
            (true, false) => ClockOrdering::Before,
            (false, true) => ClockOrdering::After,
            (false, false) => ClockOrdering::Concurrent,
        }
    }

    /// Canonical text: `{"host":count,...}`, hosts sorted, no whitespace,
    /// zero entries omitted.
    pub fn to_canonical(&self) -> String {
        let mut out = String::with_capacity(2 + self.entries.len() * 12);
        out.push('{');
        for (i, (h, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('"');
            out.push_str(h.as_str());
            out.push_str("\":");
            out.push_str(&c.to_string());
        }
        out.push('}');
        out
    }

    /// Parses canonical clock text. Anything that does not re-encode to the
    /// same bytes (whitespace, unsorted or repeated keys, zero counters) is
    /// rejected.
    pub fn parse_canonical(text: &str) -> Result<VectorClock, ClockError> {
        let malformed = |reason: &str| ClockError::Malformed {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let map: BTreeMap<String, u64> =
            serde_json::from_str(text).map_err(|e| malformed(&e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (h, c) in map {
            if c == 0 {
                return Err(malformed("zero counters are not written"));
            }
            let host = HostId::new(h).map_err(|e| malformed(&e.to_string()))?;
            entries.insert(host, c);
        }
        let clock = VectorClock { entries };
        if clock.to_canonical() != text {
            return Err(malformed("not in canonical form"));
        }
        Ok(clock)
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

impl FromStr for VectorClock {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VectorClock::parse_canonical(s)
    }
}

impl Serialize for VectorClock {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VectorClock {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = BTreeMap::<HostId, u64>::deserialize(d)?;
        Ok(VectorClock::from_entries(entries))
    }
}
