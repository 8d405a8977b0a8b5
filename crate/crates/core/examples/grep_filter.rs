//! Plain-text filtering with head/tail truncation, for logs without clocks.

use logscope::search::{grep_filter, Truncate};

fn main() {
    let mut syslog = String::new();
    for i in 0..20 {
        let msg = if i % 3 == 0 { "error: link down" } else { "heartbeat ok" };
        syslog.push_str(&format!("Oct 15 10:00:{i:02} router{} netd: {msg}\n", i % 2));
    }
    print!("{}", grep_filter(&syslog, "link down", Truncate::default()));
    println!("-- first 2 --");
    print!("{}", grep_filter(&syslog, "link down", Truncate { head: Some(2), tail: None }));
    println!("-- last 2 --");
    print!("{}", grep_filter(&syslog, "link down", Truncate { head: None, tail: Some(2) }));
}
