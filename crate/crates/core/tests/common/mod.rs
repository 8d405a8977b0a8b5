#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use logscope::clock::{ClockOrdering, HostId, VectorClock};
use logscope::graph::CausalGraph;
use logscope::logmodel::{LogEvent, ParsedLog};
use logscope::sim2pc::{SimConfig, Vote};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn h(name: &str) -> HostId {
    HostId::new(name).unwrap()
}

/// Clock over (node-1, node-2, node-3).
pub fn vc3(a: u64, b: u64, c: u64) -> VectorClock {
    VectorClock::from_entries([(h("node-1"), a), (h("node-2"), b), (h("node-3"), c)])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 2PC scenario with `1..=max_participants` participants.
pub fn random_sim_config(r: &mut ChaCha8Rng, max_participants: usize) -> SimConfig {
    let k = r.gen_range(1..=max_participants);
    let manager = h("mgr");
    let participants: Vec<HostId> = (0..k).map(|i| h(&format!("p{i:02}"))).collect();
    let mut cfg = SimConfig::new(manager.clone(), participants.clone());
    for p in &participants {
        cfg.set_delay(&manager, p, r.gen_range(0..20));
        cfg.set_delay(p, &manager, r.gen_range(0..20));
        let v = if r.gen_bool(0.7) { Vote::Commit } else { Vote::Abort };
        cfg.votes.insert(p.clone(), v);
        if r.gen_bool(0.3) {
            cfg.local_processing.insert(p.clone(), r.gen_range(0..6));
        }
    }
    if r.gen_bool(0.3) {
        cfg.local_processing.insert(manager, r.gen_range(0..6));
    }
    cfg
}

pub const ACTIONS: [&str; 6] = ["send", "recv", "flush", "io-contention", "tick", "retry"];

/// Random message-passing execution: each logged event ticks its host, and
/// may first receive a pending message and/or send one. Clocks follow the
/// update rules by construction. File order is the execution order.
pub fn random_execution(r: &mut ChaCha8Rng, hosts: usize, events: usize) -> ParsedLog {
    let names: Vec<HostId> = (0..hosts).map(|i| h(&format!("h{i}"))).collect();
    let mut clocks = vec![VectorClock::new(); hosts];
    let mut inbox: Vec<VecDeque<VectorClock>> = vec![VecDeque::new(); hosts];
    let mut out = Vec::with_capacity(events);
    for _ in 0..events {
        let i = r.gen_range(0..hosts);
        let mut desc = ACTIONS.choose(r).unwrap().to_string();
        if !inbox[i].is_empty() && r.gen_bool(0.6) {
            let m = if r.gen_bool(0.5) {
                inbox[i].pop_front()
            } else {
                let j = r.gen_range(0..inbox[i].len());
                inbox[i].remove(j)
            }
            .unwrap();
            clocks[i] = clocks[i].merge(&m);
            desc.push_str(" got-message");
        }
        clocks[i] = clocks[i].tick(&names[i]).unwrap();
        if hosts > 1 && r.gen_bool(0.4) {
            let mut j = r.gen_range(0..hosts - 1);
            if j >= i {
                j += 1;
            }
            inbox[j].push_back(clocks[i].clone());
            desc.push_str(&format!(" to {}", names[j]));
        }
        out.push(LogEvent::new(0, names[i].clone(), clocks[i].clone(), desc));
    }
    ParsedLog::from_events(out)
}

/// Transitive closure of the covering edges by DFS from every event.
pub fn closure_by_dfs(g: &CausalGraph) -> BTreeSet<(usize, usize)> {
    let n = g.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in g.covering_edges() {
        adj[a].push(b);
    }
    let mut out = BTreeSet::new();
    for s in 0..n {
        let mut seen = vec![false; n];
        let mut stack = adj[s].clone();
        while let Some(x) = stack.pop() {
            if !seen[x] {
                seen[x] = true;
                out.insert((s, x));
                stack.extend(adj[x].iter().copied());
            }
        }
    }
    out
}

/// All pairs related by clock comparison alone.
pub fn before_by_compare(log: &ParsedLog) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for a in &log.events {
        for b in &log.events {
            if a.clock.compare(&b.clock) == ClockOrdering::Before {
                out.insert((a.id, b.id));
            }
        }
    }
    out
}

pub fn concurrent_by_compare(log: &ParsedLog) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for (i, a) in log.events.iter().enumerate() {
        for b in &log.events[i + 1..] {
            if a.clock.compare(&b.clock) == ClockOrdering::Concurrent {
                out.insert((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    out
}

pub fn reach_index(g: &CausalGraph) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for a in 0..g.len() {
        for b in 0..g.len() {
            if g.reaches(a, b).unwrap() {
                out.insert((a, b));
            }
        }
    }
    out
}

/// Naive filter used as the keyword search oracle.
pub fn scan_keyword(log: &ParsedLog, keyword: &str, substring: bool) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for e in &log.events {
        let first = e.description.split(' ').next().unwrap_or("");
        let hit = if substring {
            e.description.contains(keyword)
        } else {
            first == keyword
        };
        if hit {
            out.insert(e.id);
        }
    }
    out
}

pub struct RandomDag {
    pub labels: Vec<String>,
    pub priors: Vec<f64>,
    /// (cause, effect, p) with cause < effect, so the graph is acyclic.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Random DAG over `2..=max_nodes` classes. Priors stay in [0.05, 1].
pub fn random_dag(r: &mut ChaCha8Rng, max_nodes: usize) -> RandomDag {
    let n = r.gen_range(2..=max_nodes);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let labels: Vec<String> = order.iter().map(|i| format!("c{i}")).collect();
    let priors = (0..n).map(|_| r.gen_range(0.05..=1.0)).collect();
    let density = r.gen_range(0.2..0.8);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(density) {
                // Occasional exact ties exercise label tie-breaking.
                let p = if r.gen_bool(0.1) { 0.5 } else { r.gen_range(0.0..=1.0) };
                edges.push((a, b, p));
            }
        }
    }
    RandomDag { labels, priors, edges }
}

/// Every directed path from `from` to `to`, as products of edge weights.
pub fn path_products(dag: &RandomDag, from: usize, to: usize) -> Vec<f64> {
    fn walk(dag: &RandomDag, at: usize, to: usize, acc: f64, out: &mut Vec<f64>) {
        if at == to {
            out.push(acc);
            return;
        }
        for &(a, b, p) in &dag.edges {
            if a == at {
                walk(dag, b, to, acc * p, out);
            }
        }
    }
    let mut out = Vec::new();
    if from != to {
        walk(dag, from, to, 1.0, &mut out);
    }
    out
}

/// Oracle ranking: (label, score) for every ancestor, best first, ties by label.
pub fn oracle_rank(dag: &RandomDag, symptom: usize) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for a in 0..dag.labels.len() {
        let paths = path_products(dag, a, symptom);
        if paths.is_empty() {
            continue;
        }
        let best = paths.iter().copied().fold(f64::MIN, f64::max);
        let score = (best * dag.priors[a] / dag.priors[symptom]).min(1.0);
        out.push((dag.labels[a].clone(), score));
    }
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    out
}
