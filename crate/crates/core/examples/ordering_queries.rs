//! Happens-before queries over a parsed log: pairwise ordering, concurrent
//! pairs, ancestors, and a bounded neighbourhood.

use logscope::graph::CausalGraph;
use logscope::{parse_log, ParseConfig};

const LOG: &str = r#"node-2 {"node-2":1} prepare
node-1 {"node-1":1,"node-2":1} vote-commit
node-3 {"node-2":1,"node-3":1} vote-abort
node-2 {"node-1":1,"node-2":2} recv-vote commit from node-1
node-2 {"node-1":1,"node-2":3,"node-3":1} recv-vote abort from node-3
node-2 {"node-1":1,"node-2":4,"node-3":1} tx-abort
node-1 {"node-1":2,"node-2":4,"node-3":1} tx-aborted
node-3 {"node-1":1,"node-2":4,"node-3":2} tx-aborted
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = parse_log(LOG, &ParseConfig::default())?;
    let g = CausalGraph::build(&log)?;

    for (a, b) in [(0, 5), (6, 7), (3, 2), (7, 0)] {
        println!("{a} vs {b}: {}", g.ordering(a, b)?);
    }
    println!("concurrent pairs: {:?}", g.concurrent_pairs());
    println!("ancestors of 5: {:?}", g.ancestors(5)?);
    println!("next on host after 1: {:?}", g.next_on_host(1)?);

    let near = g.neighborhood(4, 1)?;
    let ids: Vec<usize> = near.events().iter().map(|e| e.id).collect();
    println!("radius-1 neighbourhood of 4: {ids:?}");
    Ok(())
}
