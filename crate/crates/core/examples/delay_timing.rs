//! Message timing: arrival times along a path, and how processing delay at
//! one participant moves the decision.

use logscope::sim2pc::{delay_chain, simulate_trace, SimConfig};
use logscope::HostId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::fig4();
    let [n1, n2, n3] = ["node-1", "node-2", "node-3"].map(|s| HostId::new(s).unwrap());
    for (host, t) in delay_chain(&cfg, &[n2.clone(), n1.clone(), n2.clone(), n3.clone()], 0)? {
        println!("{host} at {t}");
    }

    for slow in [0, 5] {
        let mut cfg = cfg.clone();
        cfg.local_processing.insert(n3.clone(), slow);
        let trace = simulate_trace(&cfg)?;
        let decided = trace.events.iter().find(|e| e.host == n2 && e.action().starts_with("tx-")).unwrap();
        println!("processing {slow} at node-3: decision {} at t={}", trace.decision, decided.sim_time);
    }
    Ok(())
}
