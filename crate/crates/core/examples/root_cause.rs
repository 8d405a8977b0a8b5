//! Root-cause ranking. First with a hand-written cause/effect model, then
//! with one estimated from a log.

use logscope::graph::CausalGraph;
use logscope::infer::{bayes_posterior, by_action, estimate_model, CauseEffectModel, EstimateConfig, EventClass};
use logscope::logmodel::{LogEvent, ParsedLog};
use logscope::{HostId, VectorClock};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = bayes_posterior(0.9, 0.2, 0.45)?;
    println!("P(cause|effect) = {:.3}", p.probability);

    let c = |s: &str| EventClass::new(s);
    let model = CauseEffectModel::new(
        [
            (c("disk-full")?, 0.05),
            (c("gc-pause")?, 0.2),
            (c("io-contention")?, 0.1),
            (c("slow-write")?, 0.15),
            (c("timeout")?, 0.1),
        ],
        [
            (c("disk-full")?, c("io-contention")?, 0.9),
            (c("io-contention")?, c("slow-write")?, 0.8),
            (c("slow-write")?, c("timeout")?, 0.6),
            (c("gc-pause")?, c("timeout")?, 0.3),
        ],
    )?;
    println!("ranked causes of timeout:");
    for r in model.rank_root_causes(&c("timeout")?, 3)? {
        println!("  {:<14} {:.4}", r.cause.as_str(), r.probability);
    }

    // A small log: io-contention on the disk host, then a timeout on the client.
    let disk = HostId::new("disk")?;
    let client = HostId::new("client")?;
    let mut events = Vec::new();
    let mut d = VectorClock::new();
    let mut cl = VectorClock::new();
    for round in 0..4 {
        d = d.tick(&disk)?;
        events.push(LogEvent::new(0, disk.clone(), d.clone(), "io-contention"));
        if round < 3 {
            cl = cl.receive(&d, &client)?;
            events.push(LogEvent::new(0, client.clone(), cl.clone(), "timeout"));
        }
    }
    let g = CausalGraph::build(&ParsedLog::from_events(events))?;
    let est = estimate_model(&g, by_action, &EstimateConfig::default())?;
    for e in est.edges() {
        println!("estimated P({} | {}) = {:.3}", e.effect.as_str(), e.cause.as_str(), e.p);
    }
    println!("{:?}", est.rank_root_causes(&c("timeout")?, 1)?);
    Ok(())
}
