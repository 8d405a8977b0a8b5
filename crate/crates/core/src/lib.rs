//! Happens-before reconstruction and analysis for distributed-system logs
//! whose events carry vector clocks.
//!
//! * [`clock`]: vector clocks and their comparison
//! * [`logmodel`]: the event model, line parsing and rule validation
//! * [`graph`]: the causal graph, ordering and concurrency queries, JSON export
//! * [`search`]: keyword, motif and grep-style search
//! * [`infer`]: cause-effect estimation and Bayesian root-cause ranking
//! * [`sim2pc`]: a deterministic two-phase commit simulator
//! * [`cli`] and [`serve`]: the command-line tool and the viewer's HTTP API

pub mod cli;
pub mod clock;
pub mod graph;
pub mod infer;
pub mod logmodel;
pub mod search;
pub mod serve;
pub mod sim2pc;

pub use clock::{ClockOrdering, HostId, VectorClock};
pub use graph::CausalGraph;
pub use logmodel::{parse_log, LogEvent, ParseConfig, ParsedLog};
