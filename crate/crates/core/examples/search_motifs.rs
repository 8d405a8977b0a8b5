//! Keyword search and motif search over a simulated run.

use logscope::graph::CausalGraph;
use logscope::search::{keyword_search, motif_search, EventPredicate, KeywordMode, Link, Motif};
use logscope::sim2pc::{simulate, SimConfig, Vote};
use logscope::HostId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tm = HostId::new("tm")?;
    let parts: Vec<HostId> = ["a", "b", "c", "d"].iter().map(|s| HostId::new(*s)).collect::<Result<_, _>>()?;
    let mut cfg = SimConfig::new(tm.clone(), parts.clone());
    for (i, p) in parts.iter().enumerate() {
        cfg.set_link(&tm, p, 1 + i as u64);
    }
    cfg.votes.insert(parts[2].clone(), Vote::Abort);
    let log = simulate(&cfg)?;
    let g = CausalGraph::build(&log)?;

    println!("vote-commit events: {:?}", keyword_search(&g, "vote-commit", KeywordMode::ActionExact)?);
    println!("anything mentioning 'abort': {:?}", keyword_search(&g, "abort", KeywordMode::Substring)?);

    // Text form: every vote that reached the manager before the abort decision.
    let motif: Motif = "[action=recv-vote] -hb-> [action=tx-abort,host=tm]".parse()?;
    println!("{motif}");
    for m in motif_search(&g, &motif).iter() {
        println!("  {}  =>  {}", g.event(m[0])?.description, g.event(m[1])?.description);
    }

    // Built programmatically: prepare, a message out, then the next event on that host.
    let motif = Motif::new(
        vec![EventPredicate::action("prepare"), EventPredicate::any(), EventPredicate::any()],
        vec![Link::CommEdge, Link::SameHostNext],
    )?;
    println!("{motif}: {} matches", motif_search(&g, &motif).len());
    Ok(())
}
