//! Happens-before graph reconstructed from event clocks.
//!
//! Logs carry clocks but no message identifiers, so edges are inferred: the
//! covering (transitively reduced) edges of the happens-before relation are
//! computed, and a covering edge between two hosts is read as a message.
//!
//! For each event the only possible covering predecessors are, per host, the
//! latest event on that host that precedes it. Those candidates are found by
//! binary search over each host's events in program order, then the dominated
//! ones are discarded. Reachability is kept as one ancestor bitset per event.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockOrdering, HostId, VectorClock};
use crate::logmodel::{LogEvent, ParsedLog};

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("events {a} and {b} carry identical clocks; the relation would be cyclic")]
    CycleDetected { a: usize, b: usize },
    #[error("events {earlier} and {later} on {host} are not ordered by their clocks")]
    BrokenProgramOrder {
        host: HostId,
        earlier: usize,
        later: usize,
    },
    #[error("event {0} has no counter for its own host")]
    ZeroOwnCounter(usize),
    #[error("log has {count} events, above the limit of {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error("unknown event id {0}")]
    UnknownEvent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphConfig {
    pub max_events: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CausalGraph {
    events: Vec<LogEvent>,
    hosts: BTreeSet<HostId>,
    pos: HashMap<usize, usize>,
    /// Covering edges as (event id, event id), sorted.
    edges: Vec<(usize, usize)>,
    comm_edges: Vec<(usize, usize)>,
    /// `ancestors[p]` holds the positions of every event that happens before
    /// the event at position `p`.
    ancestors: Vec<FixedBitSet>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl CausalGraph {
    pub fn build(log: &ParsedLog) -> Result<Self, GraphError> {
        Self::build_with(log, &GraphConfig::default())
    }

    pub fn build_with(log: &ParsedLog, cfg: &GraphConfig) -> Result<Self, GraphError> {
        let n = log.events.len();
        if n > cfg.max_events {
            return Err(GraphError::TooLarge {
                count: n,
                limit: cfg.max_events,
            });
        }
        let events = &log.events;

        let mut seen: HashMap<&VectorClock, usize> = HashMap::with_capacity(n);
        for e in events {
            if e.own_counter() == 0 {
                return Err(GraphError::ZeroOwnCounter(e.id));
            }
            if let Some(&other) = seen.get(&e.clock) {
                return Err(GraphError::CycleDetected { a: other, b: e.id });
            }
            seen.insert(&e.clock, e.id);
        }

        // Program order per host, by own counter.
        let mut lanes: BTreeMap<&HostId, Vec<usize>> = BTreeMap::new();
        for (p, e) in events.iter().enumerate() {
            lanes.entry(&e.host).or_default().push(p);
        }
        for (host, lane) in lanes.iter_mut() {
            lane.sort_by_key(|&p| events[p].own_counter());
            for w in lane.windows(2) {
                if events[w[0]].clock.compare(&events[w[1]].clock) != ClockOrdering::Before {
                    return Err(GraphError::BrokenProgramOrder {
                        host: (*host).clone(),
                        earlier: events[w[0]].id,
                        later: events[w[1]].id,
                    });
                }
            }
        }

        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (p, e) in events.iter().enumerate() {
            let mut candidates: Vec<usize> = Vec::new();
            for lane in lanes.values() {
                // Preceding events form a prefix of each lane.
                let k = lane.partition_point(|&q| {
                    q != p && events[q].clock.compare(&e.clock) == ClockOrdering::Before
                });
                if k > 0 {
                    candidates.push(lane[k - 1]);
                }
            }
            let covering: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&c| {
                    !candidates.iter().any(|&d| {
                        d != c && events[c].clock.compare(&events[d].clock) == ClockOrdering::Before
                    })
                })
                .collect();
            preds[p] = covering;
        }

        Ok(Self::assemble(events.clone(), log.hosts.clone(), preds))
    }

    /// Builds indexes from covering predecessor lists (positions).
    fn assemble(events: Vec<LogEvent>, hosts: BTreeSet<HostId>, mut preds: Vec<Vec<usize>>) -> Self {
        let n = events.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&p| (events[p].clock.weight(), events[p].id));

        let mut ancestors = vec![FixedBitSet::with_capacity(n); n];
        for &p in &order {
            let mut acc = FixedBitSet::with_capacity(n);
            for &q in &preds[p] {
                acc.union_with(&ancestors[q]);
                acc.insert(q);
            }
            ancestors[p] = acc;
        }

        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut edges = Vec::new();
        let mut comm_edges = Vec::new();
        for (p, ps) in preds.iter_mut().enumerate() {
            ps.sort_unstable();
            for &q in ps.iter() {
                succs[q].push(p);
                let edge = (events[q].id, events[p].id);
                edges.push(edge);
                if events[q].host != events[p].host {
                    comm_edges.push(edge);
                }
            }
        }
        for s in &mut succs {
            s.sort_unstable();
        }
        edges.sort_unstable();
        comm_edges.sort_unstable();

        let pos = events.iter().enumerate().map(|(p, e)| (e.id, p)).collect();
        CausalGraph {
            events,
            hosts,
            pos,
            edges,
            comm_edges,
            ancestors,
            preds,
            succs,
        }
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn hosts(&self) -> &BTreeSet<HostId> {
        &self.hosts
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, id: usize) -> Result<&LogEvent, GraphError> {
        self.position(id).map(|p| &self.events[p])
    }

    fn position(&self, id: usize) -> Result<usize, GraphError> {
        self.pos.get(&id).copied().ok_or(GraphError::UnknownEvent(id))
    }

    pub fn covering_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Covering edges whose endpoints are on different hosts.
    pub fn comm_edges(&self) -> &[(usize, usize)] {
        &self.comm_edges
    }

    /// Direct covering predecessors of `id`, sorted by id.
    pub fn predecessors(&self, id: usize) -> Result<Vec<usize>, GraphError> {
        let p = self.position(id)?;
        Ok(self.preds[p].iter().map(|&q| self.events[q].id).collect())
    }

    pub fn successors(&self, id: usize) -> Result<Vec<usize>, GraphError> {
        let p = self.position(id)?;
        Ok(self.succs[p].iter().map(|&q| self.events[q].id).collect())
    }

    /// The next event on the same host in program order, if any. This is
    /// not always a covering successor: a round trip through another host
    /// makes the direct edge redundant.
    pub fn next_on_host(&self, id: usize) -> Result<Option<usize>, GraphError> {
        let p = self.position(id)?;
        let e = &self.events[p];
        let own = e.own_counter();
        Ok(self
            .events
            .iter()
            .filter(|q| q.host == e.host && q.own_counter() > own)
            .min_by_key(|q| q.own_counter())
            .map(|q| q.id))
    }

    /// `a` happens before `b`, read from the reachability index.
    pub fn reaches(&self, a: usize, b: usize) -> Result<bool, GraphError> {
        let pa = self.position(a)?;
        let pb = self.position(b)?;
        Ok(self.ancestors[pb].contains(pa))
    }

    /// Ids of every event that happens after `id`, ascending.
    pub fn descendants(&self, id: usize) -> Result<Vec<usize>, GraphError> {
        let p = self.position(id)?;
        Ok((0..self.events.len())
            .filter(|&q| self.ancestors[q].contains(p))
            .map(|q| self.events[q].id)
            .collect())
    }

    /// Ids of every event that happens before `id`, ascending.
    pub fn ancestors(&self, id: usize) -> Result<Vec<usize>, GraphError> {
        let p = self.position(id)?;
        Ok(self.ancestors[p].ones().map(|q| self.events[q].id).collect())
    }

    pub fn ordering(&self, a: usize, b: usize) -> Result<ClockOrdering, GraphError> {
        let pa = self.position(a)?;
        let pb = self.position(b)?;
        let result = if pa == pb {
            ClockOrdering::Equal
        } else if self.ancestors[pb].contains(pa) {
            ClockOrdering::Before
        } else if self.ancestors[pa].contains(pb) {
            ClockOrdering::After
        } else {
            ClockOrdering::Concurrent
        };
        debug_assert_eq!(result, self.events[pa].clock.compare(&self.events[pb].clock));
        Ok(result)
    }

    /// Every unordered pair `(a, b)` with `a < b` that is concurrent.
    pub fn concurrent_pairs(&self) -> BTreeSet<(usize, usize)> {
        let n = self.events.len();
        let mut out = BTreeSet::new();
        for pa in 0..n {
            for pb in pa + 1..n {
                if !self.ancestors[pb].contains(pa) && !self.ancestors[pa].contains(pb) {
                    let (a, b) = (self.events[pa].id, self.events[pb].id);
                    out.insert((a.min(b), a.max(b)));
                }
            }
        }
        out
    }

    /// Events within `radius` covering-edge hops of `id`, in either direction.
    ///
    /// Edges of the result are the covering edges among the selected events;
    /// ordering queries on it still reflect the full execution.
    pub fn neighborhood(&self, id: usize, radius: usize) -> Result<CausalGraph, GraphError> {
        let start = self.position(id)?;
        let n = self.events.len();
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            if dist[p] == radius {
                continue;
            }
            for &q in self.preds[p].iter().chain(&self.succs[p]) {
                if dist[q] == usize::MAX {
                    dist[q] = dist[p] + 1;
                    queue.push_back(q);
                }
            }
        }

        let keep: Vec<usize> = (0..n).filter(|&p| dist[p] != usize::MAX).collect();
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let events: Vec<LogEvent> = keep.iter().map(|&p| self.events[p].clone()).collect();
        let hosts = events.iter().map(|e| e.host.clone()).collect();
        let preds: Vec<Vec<usize>> = keep
            .iter()
            .map(|&p| self.preds[p].iter().filter_map(|q| remap.get(q).copied()).collect())
            .collect();
        let mut sub = Self::assemble(events, hosts, preds);
        for (i, &p) in keep.iter().enumerate() {
            let mut acc = FixedBitSet::with_capacity(keep.len());
            for (j, &q) in keep.iter().enumerate() {
                if self.ancestors[p].contains(q) {
                    acc.insert(j);
                }
            }
            sub.ancestors[i] = acc;
        }
        Ok(sub)
    }

    pub fn to_export(&self) -> GraphExport {
        let mut events = self.events.clone();
        events.sort_by_key(|e| e.id);
        GraphExport {
            hosts: self.hosts.iter().cloned().collect(),
            events,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            comm_edges: self.comm_edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    /// Compact JSON export; byte-stable for a given graph.
    pub fn export_json(&self) -> String {
        serde_json::to_string(&self.to_export()).expect("export serializes")
    }
}

/// Serialized graph consumed by the diagram viewer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphExport {
    pub hosts: Vec<HostId>,
    pub events: Vec<LogEvent>,
    pub edges: Vec<[usize; 2]>,
    pub comm_edges: Vec<[usize; 2]>,
}

impl GraphExport {
    /// Rebuilds the graph from the exported events; stored edges are ignored
    /// and recomputed.
    pub fn rebuild(&self, cfg: &GraphConfig) -> Result<CausalGraph, GraphError> {
        let mut events = self.events.clone();
        events.sort_by_key(|e| e.id);
        let hosts = events.iter().map(|e| e.host.clone()).collect();
        let log = ParsedLog {
            events,
            hosts,
            skipped: Vec::new(),
        };
        CausalGraph::build_with(&log, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(name: &str) -> HostId {
        HostId::new(name).unwrap()
    }

    fn ev(host: &str, clock: &[(&str, u64)], desc: &str) -> LogEvent {
        LogEvent::new(
            0,
            h(host),
            VectorClock::from_entries(clock.iter().map(|(n, c)| (h(n), *c))),
            desc,
        )
    }

    /// Fig. 4 style trace over (node-1, node-2, node-3).
    fn fig4() -> ParsedLog {
        let c = |a, b, d| vec![("node-1", a), ("node-2", b), ("node-3", d)];
        ParsedLog::from_events([
            ev("node-2", &c(0, 1, 0), "prepare"),
            ev("node-1", &c(1, 1, 0), "vote-commit"),
            ev("node-3", &c(0, 1, 1), "vote-abort"),
            ev("node-2", &c(1, 2, 0), "recv-vote commit"),
            ev("node-2", &c(1, 3, 1), "recv-vote abort"),
            ev("node-2", &c(1, 4, 1), "tx-abort"),
            ev("node-1", &c(2, 4, 1), "tx-aborted"),
            ev("node-3", &c(1, 4, 2), "tx-aborted"),
        ])
    }

    #[test]
    fn fig4_covering_edges() {
        let g = CausalGraph::build(&fig4()).unwrap();
        let expected = vec![(0, 1), (0, 2), (1, 3), (2, 4), (3, 4), (4, 5), (5, 6), (5, 7)];
        assert_eq!(g.covering_edges(), expected.as_slice());
        assert_eq!(
            g.comm_edges(),
            &[(0, 1), (0, 2), (1, 3), (2, 4), (5, 6), (5, 7)]
        );
    }

    #[test]
    fn single_event_and_chain() {
        let g = CausalGraph::build(&ParsedLog::from_events([ev("a", &[("a", 1)], "x")])).unwrap();
        assert!(g.covering_edges().is_empty());

        let g = CausalGraph::build(&ParsedLog::from_events([
            ev("a", &[("a", 1)], "x"),
            ev("a", &[("a", 2)], "y"),
            ev("a", &[("a", 3)], "z"),
        ]))
        .unwrap();
        assert_eq!(g.covering_edges(), &[(0, 1), (1, 2)]);
        assert!(g.comm_edges().is_empty());
    }

    #[test]
    fn ordering_queries() {
        let g = CausalGraph::build(&fig4()).unwrap();
        assert_eq!(g.ordering(0, 5).unwrap(), ClockOrdering::Before);
        assert_eq!(g.ordering(5, 0).unwrap(), ClockOrdering::After);
        assert_eq!(g.ordering(6, 7).unwrap(), ClockOrdering::Concurrent);
        assert_eq!(g.ordering(3, 3).unwrap(), ClockOrdering::Equal);
        assert_eq!(g.ordering(0, 99), Err(GraphError::UnknownEvent(99)));
    }

    #[test]
    fn concurrent_pairs_fig4() {
        let g = CausalGraph::build(&fig4()).unwrap();
        let pairs = g.concurrent_pairs();
        assert!(pairs.contains(&(1, 2)));
        assert!(pairs.contains(&(6, 7)));
        let events = g.events();
        let mut scan = BTreeSet::new();
        for a in 0..events.len() {
            for b in a + 1..events.len() {
                if events[a].clock.compare(&events[b].clock) == ClockOrdering::Concurrent {
                    scan.insert((a, b));
                }
            }
        }
        assert_eq!(pairs, scan);
    }

    #[test]
    fn neighborhood_examples() {
        let g = CausalGraph::build(&fig4()).unwrap();
        let sub = g.neighborhood(5, 1).unwrap();
        let ids: Vec<usize> = sub.events().iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![4, 5, 6, 7]);
        assert_eq!(sub.covering_edges(), &[(4, 5), (5, 6), (5, 7)]);
        assert_eq!(sub.ordering(4, 7).unwrap(), ClockOrdering::Before);

        let zero = g.neighborhood(3, 0).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(zero.covering_edges().is_empty());

        let all = g.neighborhood(0, 100).unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all.covering_edges(), g.covering_edges());

        assert!(matches!(g.neighborhood(42, 1), Err(GraphError::UnknownEvent(42))));
    }

    #[test]
    fn duplicate_clock_across_hosts_is_a_cycle() {
        let log = ParsedLog::from_events([
            ev("a", &[("a", 1), ("b", 1)], "x"),
            ev("b", &[("a", 1), ("b", 1)], "y"),
        ]);
        assert_eq!(
            CausalGraph::build(&log).unwrap_err(),
            GraphError::CycleDetected { a: 0, b: 1 }
        );
    }

    #[test]
    fn size_cap() {
        let cfg = GraphConfig { max_events: 2 };
        assert!(matches!(
            CausalGraph::build_with(&fig4(), &cfg),
            Err(GraphError::TooLarge { count: 8, limit: 2 })
        ));
    }

    #[test]
    fn export_shape() {
        let g = CausalGraph::build(&fig4()).unwrap();
        let json = g.export_json();
        assert!(json.starts_with(r#"{"hosts":["node-1","node-2","node-3"],"events":[{"id":0,"host":"node-2","clock":{"node-2":1},"action":"prepare","description":"prepare"}"#));
        assert_eq!(json, g.export_json());
        let back: GraphExport = serde_json::from_str(&json).unwrap();
        let rebuilt = back.rebuild(&GraphConfig::default()).unwrap();
        assert_eq!(rebuilt.export_json(), json);

        let empty = CausalGraph::build(&ParsedLog::default()).unwrap();
        assert_eq!(
            empty.export_json(),
            r#"{"hosts":[],"events":[],"edges":[],"comm_edges":[]}"#
        );
    }
}
