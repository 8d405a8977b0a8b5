//! Deterministic discrete-event simulation of two-phase commit.
//!
//! Each logged event is one clock step on its host:
//!
//! * manager `prepare` (tick, send prepare to every participant),
//! * participant vote (receive prepare, merge + tick, send vote),
//! * manager vote receipt (merge + tick), one per participant,
//! * manager decision (tick, send decision to every participant),
//! * participant acknowledgement (receive decision, merge + tick).
//!
//! A run with `k` participants therefore logs `3k + 2` events. Every message
//! arrives exactly `PD[from -> to]` milliseconds after it leaves. Events that
//! are not triggered by a delivery (prepare, decision) happen after the host's
//! local processing delay; a participant's vote also leaves after its
//! processing delay. Arrivals at the same instant are handled in receiver then
//! sender host order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockError, HostId, VectorClock};
use crate::logmodel::{LogEvent, ParsedLog};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no propagation delay defined for {from} -> {to}")]
    UndefinedDelay { from: HostId, to: HostId },
    #[error(transparent)]
    Clock(#[from] ClockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Commit,
    Abort,
}

impl fmt::Display for Vote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vote::Commit => "commit",
            Vote::Abort => "abort",
        })
    }
}

impl std::str::FromStr for Vote {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "commit" | "c" => Ok(Vote::Commit),
            "abort" | "a" => Ok(Vote::Abort),
            other => Err(format!("unknown vote {other:?} (expected commit or abort)")),
        }
    }
}

/// Which action names the simulator writes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelStyle {
    /// prepare, vote-commit/vote-abort, recv-vote, tx-commit/tx-abort,
    /// tx-committed/tx-aborted.
    #[default]
    Neutral,
    /// The labels of the classic three-node abort diagram, reproduced as-is.
    Fig4,
}

/// One directed propagation delay, as written in configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delay {
    pub from: HostId,
    pub to: HostId,
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub manager: HostId,
    pub participants: Vec<HostId>,
    #[serde(with = "delay_list")]
    pub delays: BTreeMap<(HostId, HostId), u64>,
    pub votes: BTreeMap<HostId, Vote>,
    #[serde(default)]
    pub local_processing: BTreeMap<HostId, u64>,
    /// Reserved for randomized delay models; unused by the deterministic model.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub labels: LabelStyle,
}

mod delay_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(HostId, HostId), u64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<Delay> = map
            .iter()
            .map(|((from, to), &ms)| Delay {
                from: from.clone(),
                to: to.clone(),
                ms,
            })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(HostId, HostId), u64>, D::Error> {
        let list = Vec::<Delay>::deserialize(d)?;
        Ok(list.into_iter().map(|x| ((x.from, x.to), x.ms)).collect())
    }
}

fn host(name: &str) -> HostId {
    HostId::new(name).expect("static host name")
}

impl SimConfig {
    /// Manager with participants, every participant voting commit and no
    /// delays defined yet.
    pub fn new(manager: HostId, participants: Vec<HostId>) -> Self {
        let votes = participants.iter().map(|p| (p.clone(), Vote::Commit)).collect();
        SimConfig {
            manager,
            participants,
            delays: BTreeMap::new(),
            votes,
            local_processing: BTreeMap::new(),
            seed: 0,
            labels: LabelStyle::Neutral,
        }
    }

    /// The three-node abort scenario: manager node-2, node-1 votes commit,
    /// node-3 votes abort, and node-1's vote reaches the manager first.
    pub fn fig4() -> Self {
        let (n1, n2, n3) = (host("node-1"), host("node-2"), host("node-3"));
        let mut cfg = SimConfig::new(n2.clone(), vec![n1.clone(), n3.clone()]);
        cfg.votes.insert(n3.clone(), Vote::Abort);
        cfg.set_delay(&n2, &n1, 1);
        cfg.set_delay(&n1, &n2, 2);
        cfg.set_delay(&n2, &n3, 2);
        cfg.set_delay(&n3, &n2, 2);
        cfg
    }

    pub fn set_delay(&mut self, from: &HostId, to: &HostId, ms: u64) {
        self.delays.insert((from.clone(), to.clone()), ms);
    }

    /// Sets both directions between two hosts.
    pub fn set_link(&mut self, a: &HostId, b: &HostId, ms: u64) {
        self.set_delay(a, b, ms);
        self.set_delay(b, a, ms);
    }

    pub fn delay(&self, from: &HostId, to: &HostId) -> Result<u64, SimError> {
        self.delays
            .get(&(from.clone(), to.clone()))
            .copied()
            .ok_or_else(|| SimError::UndefinedDelay {
                from: from.clone(),
                to: to.clone(),
            })
    }

    fn processing(&self, h: &HostId) -> u64 {
        self.local_processing.get(h).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.participants.is_empty() {
            return bad("at least one participant is required".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.participants {
            if p == &self.manager {
                return bad(format!("manager {p} cannot also be a participant"));
            }
            if !seen.insert(p) {
                return bad(format!("participant {p} listed twice"));
            }
            if !self.votes.contains_key(p) {
                return bad(format!("no vote configured for {p}"));
            }
            for (a, b) in [(&self.manager, p), (p, &self.manager)] {
                if self.delay(a, b).is_err() {
                    return bad(format!("no propagation delay for {a} -> {b}"));
                }
            }
        }
        if let Some(extra) = self.votes.keys().find(|h| !seen.contains(h)) {
            return bad(format!("vote configured for non-participant {extra}"));
        }
        Ok(())
    }
}

/// Cumulative arrival times along `path`: `t[k+1] = t[k] + PD[k -> k+1]`.
pub fn delay_chain(cfg: &SimConfig, path: &[HostId], t0: u64) -> Result<Vec<(HostId, u64)>, SimError> {
    let mut out = Vec::with_capacity(path.len());
    let mut t = t0;
    for (i, h) in path.iter().enumerate() {
        if i > 0 {
            t += cfg.delay(&path[i - 1], h)?;
        }
        out.push((h.clone(), t));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimEventKind {
    Send,
    Receive,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Payload {
    Prepare,
    Vote(Vote),
    Decision(Vote),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimMessage {
    pub from: HostId,
    pub to: HostId,
    pub payload: Payload,
    pub sent_at: u64,
    pub arrives_at: u64,
    /// Index of the event that sent the message.
    pub sender_event: usize,
    pub receiver_event: Option<usize>,
    #[serde(skip)]
    clock: VectorClock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub sim_time: u64,
    pub host: HostId,
    pub kind: SimEventKind,
    pub description: String,
    pub clock: VectorClock,
    /// Message delivered by this event.
    pub received: Option<usize>,
    /// Messages sent by this event.
    pub sent: Vec<usize>,
}

impl SimEvent {
    pub fn action(&self) -> &str {
        crate::logmodel::action_of(&self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimTrace {
    pub events: Vec<SimEvent>,
    pub messages: Vec<SimMessage>,
    pub decision: Vote,
}

impl SimTrace {
    pub fn to_log(&self) -> ParsedLog {
        ParsedLog::from_events(self.events.iter().enumerate().map(|(i, e)| {
            LogEvent::new(i, e.host.clone(), e.clock.clone(), e.description.clone())
                .with_sim_time(e.sim_time)
        }))
    }
}

#[derive(Debug, Clone, Copy)]
enum Timer {
    Prepare,
    Decide,
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Deliver(usize),
    Fire(Timer),
}

struct Labels(LabelStyle);

impl Labels {
    fn prepare(&self) -> String {
        match self.0 {
            LabelStyle::Neutral => "prepare".into(),
            LabelStyle::Fig4 => "tx-abort".into(),
        }
    }

    fn vote(&self, v: Vote) -> String {
        match self.0 {
            LabelStyle::Neutral => format!("vote-{v}"),
            LabelStyle::Fig4 => format!("tx-{v}"),
        }
    }

    fn vote_receipt(&self, from: &HostId, v: Vote) -> String {
        match self.0 {
            LabelStyle::Neutral => format!("recv-vote {v} from {from}"),
            LabelStyle::Fig4 => {
                let tag = from.as_str().rsplit('-').next().unwrap_or(from.as_str());
                format!("N_{tag} {v}")
            }
        }
    }

    fn decision(&self, v: Vote) -> String {
        format!("tx-{v}")
    }

    fn ack(&self, v: Vote) -> String {
        match v {
            Vote::Commit => "tx-committed".into(),
            Vote::Abort => "tx-aborted".into(),
        }
    }
}

/// (time, target host, rank, sender host, sequence, pending index); deliveries
/// rank 0 and timers rank 1.
type QueueKey = (u64, HostId, u8, HostId, u64, usize);

struct Engine<'a> {
    cfg: &'a SimConfig,
    labels: Labels,
    queue: BinaryHeap<Reverse<QueueKey>>,
    pending: Vec<Pending>,
    seq: u64,
    clocks: BTreeMap<HostId, VectorClock>,
    events: Vec<SimEvent>,
    messages: Vec<SimMessage>,
    votes_in: usize,
    all_commit: bool,
    decision: Option<Vote>,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, at: u64, target: &HostId, rank: u8, sender: &HostId, what: Pending) {
        let idx = self.pending.len();
        self.pending.push(what);
        self.seq += 1;
        self.queue
            .push(Reverse((at, target.clone(), rank, sender.clone(), self.seq, idx)));
    }

    /// Records a step on `h`: tick (after merging `received`'s clock if any).
    fn step(
        &mut self,
        at: u64,
        h: &HostId,
        description: String,
        received: Option<usize>,
    ) -> Result<usize, SimError> {
        let current = self.clocks.get(h).cloned().unwrap_or_default();
        let clock = match received {
            Some(m) => current.receive(&self.messages[m].clock, h)?,
            None => current.tick(h)?,
        };
        self.clocks.insert(h.clone(), clock.clone());
        let idx = self.events.len();
        if let Some(m) = received {
            self.messages[m].receiver_event = Some(idx);
        }
        self.events.push(SimEvent {
            sim_time: at,
            host: h.clone(),
            kind: if received.is_some() {
                SimEventKind::Receive
            } else {
                SimEventKind::Local
            },
            description,
            clock,
            received,
            sent: Vec::new(),
        });
        Ok(idx)
    }

    fn send(&mut self, event: usize, depart: u64, to: &HostId, payload: Payload) -> Result<(), SimError> {
        let from = self.events[event].host.clone();
        let arrives_at = depart + self.cfg.delay(&from, to)?;
        let m = self.messages.len();
        self.messages.push(SimMessage {
            from: from.clone(),
            to: to.clone(),
            payload,
            sent_at: depart,
            arrives_at,
            sender_event: event,
            receiver_event: None,
            clock: self.events[event].clock.clone(),
        });
        let ev = &mut self.events[event];
        ev.sent.push(m);
        if ev.kind == SimEventKind::Local {
            ev.kind = SimEventKind::Send;
        }
        self.schedule(arrives_at, to, 0, &from, Pending::Deliver(m));
        Ok(())
    }

    fn run(mut self) -> Result<SimTrace, SimError> {
        let manager = self.cfg.manager.clone();
        self.schedule(
            self.cfg.processing(&manager),
            &manager,
            1,
            &manager,
            Pending::Fire(Timer::Prepare),
        );

        while let Some(Reverse((now, target, _, _, _, idx))) = self.queue.pop() {
            match self.pending[idx] {
                Pending::Fire(Timer::Prepare) => {
                    let e = self.step(now, &target, self.labels.prepare(), None)?;
                    for p in self.cfg.participants.clone() {
                        self.send(e, now, &p, Payload::Prepare)?;
                    }
                }
                Pending::Fire(Timer::Decide) => {
                    let d = if self.all_commit { Vote::Commit } else { Vote::Abort };
                    self.decision = Some(d);
                    let e = self.step(now, &target, self.labels.decision(d), None)?;
                    for p in self.cfg.participants.clone() {
                        self.send(e, now, &p, Payload::Decision(d))?;
                    }
                }
                Pending::Deliver(m) => match self.messages[m].payload {
                    Payload::Prepare => {
                        let v = self.cfg.votes[&target];
                        let e = self.step(now, &target, self.labels.vote(v), Some(m))?;
                        let depart = now + self.cfg.processing(&target);
                        self.send(e, depart, &manager, Payload::Vote(v))?;
                    }
                    Payload::Vote(v) => {
                        let from = self.messages[m].from.clone();
                        self.step(now, &target, self.labels.vote_receipt(&from, v), Some(m))?;
                        self.votes_in += 1;
                        self.all_commit &= v == Vote::Commit;
                        if self.votes_in == self.cfg.participants.len() {
                            let at = now + self.cfg.processing(&manager);
                            self.schedule(at, &manager, 1, &manager, Pending::Fire(Timer::Decide));
                        }
                    }
                    Payload::Decision(d) => {
                        self.step(now, &target, self.labels.ack(d), Some(m))?;
                    }
                },
            }
        }

        Ok(SimTrace {
            events: self.events,
            messages: self.messages,
            decision: self.decision.expect("decision reached once all votes arrive"),
        })
    }
}

/// Runs the protocol and returns the full trace, messages included.
pub fn simulate_trace(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    Engine {
        cfg,
        labels: Labels(cfg.labels),
        queue: BinaryHeap::new(),
        pending: Vec::new(),
        seq: 0,
        clocks: BTreeMap::new(),
        events: Vec::new(),
        messages: Vec::new(),
        votes_in: 0,
        all_commit: true,
        decision: None,
    }
    .run()
}

/// Runs the protocol and returns the logged events with `sim_time` set.
pub fn simulate(cfg: &SimConfig) -> Result<ParsedLog, SimError> {
    simulate_trace(cfg).map(|t| t.to_log())
}
