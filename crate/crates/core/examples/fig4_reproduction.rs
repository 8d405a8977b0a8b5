//! Simulates the three-node two-phase-commit abort run and prints the log
//! with its covering and communication edges.
//!
//! ```text
//! cargo run --example fig4_reproduction
//! ```

use logscope::graph::CausalGraph;
use logscope::sim2pc::{simulate_trace, LabelStyle, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SimConfig::fig4();
    cfg.labels = LabelStyle::Fig4;
    let trace = simulate_trace(&cfg)?;
    println!("decision: {}", trace.decision);

    let log = trace.to_log();
    for e in &log.events {
        println!("t={:<2} {}", e.sim_time.unwrap_or(0), e.to_line());
    }

    let g = CausalGraph::build(&log)?;
    println!("covering edges: {:?}", g.covering_edges());
    println!("messages:       {:?}", g.comm_edges());
    for m in &trace.messages {
        println!("  {} -> {} sent {} arrived {}", m.from, m.to, m.sent_at, m.arrives_at);
    }
    Ok(())
}
