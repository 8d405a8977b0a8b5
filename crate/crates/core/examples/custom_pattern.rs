//! Parsing a log in a non-default layout with a custom pattern, and lenient
//! mode for files interleaved with unrelated lines.

use logscope::logmodel::validate;
use logscope::{parse_log, ParseConfig};

const LOG: &str = r#"2026-10-15T10:00:00Z [alpha] clock={"alpha":1} msg=send req-1
2026-10-15T10:00:01Z [beta] clock={"alpha":1,"beta":1} msg=recv req-1
-- rotated --
2026-10-15T10:00:02Z [beta] clock={"alpha":1,"beta":2} msg=send ack-1
2026-10-15T10:00:03Z [alpha] clock={"alpha":2,"beta":2} msg=recv ack-1
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pattern = r"^\S+ \[(?P<host>[^\]]+)\] clock=(?P<clock>\{\S*\}) msg=(?P<event>.+)$";
    let strict = ParseConfig::new(pattern)?;
    match parse_log(LOG, &strict) {
        Ok(_) => println!("strict parse succeeded"),
        Err(e) => println!("strict parse failed: {e}"),
    }

    let log = parse_log(LOG, &strict.lenient(true))?;
    println!("skipped lines: {:?}", log.skipped);
    for e in &log.events {
        println!("{} {} {}  (action {})", e.id, e.host, e.clock, e.action);
    }
    println!("violations: {:?}", validate(&log));
    Ok(())
}
