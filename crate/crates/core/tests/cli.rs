mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use common::*;
use logscope::cli::run;
use logscope::graph::{CausalGraph, GraphExport};
use logscope::logmodel::{parse_log, ParseConfig};

const FIG4_GOLDEN: &str = include_str!("golden/fig4.log");
const FIG4_LABELS_GOLDEN: &str = include_str!("golden/fig4_labels.log");
const FIG4_EXPORT: &str = include_str!("golden/fig4_export.json");

fn logscope(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("logscope").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fig4.log");
    let (code, _, _) = logscope(&["simulate-2pc", "--fig4-labels", "--out", p(&log)]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&log).unwrap(), FIG4_LABELS_GOLDEN);

    let (code, out, _) = logscope(&["validate", p(&log)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("ok: 8 events"));

    let (code, out, _) = logscope(&["validate", "--log", p(&log), "--json"]);
    assert_eq!((code, out.trim()), (0, "[]"));
}

#[test]
fn simulate_default_is_golden() {
    let (code, out, _) = logscope(&["simulate-2pc"]);
    assert_eq!(code, 0);
    assert_eq!(out, FIG4_GOLDEN);
}

#[test]
fn simulate_flags_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = logscope(&[
        "simulate-2pc",
        "--manager", "tm",
        "--participants", "a,b,c",
        "--votes", "commit,commit,commit",
        "--delay", "tm,a,1", "--delay", "a,tm,1",
        "--delay", "tm,b,2", "--delay", "b,tm,2",
        "--delay", "tm,c,3", "--delay", "c,tm,3",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().count(), 11);
    assert!(out.lines().any(|l| l.ends_with(" tx-commit")));

    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&logscope::sim2pc::SimConfig::fig4()).unwrap()).unwrap();
    let (code, out, _) = logscope(&["simulate-2pc", "--config", p(&cfg_path)]);
    assert_eq!((code, out.as_str()), (0, FIG4_GOLDEN));

    // Missing delay for a participant is a usage error.
    let (code, _, err) = logscope(&["simulate-2pc", "--participants", "node-1,node-4"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = logscope(&["simulate-2pc", "--votes", "commit"]);
    assert_eq!(code, 2);
    let (code, _, _) = logscope(&["simulate-2pc", "--delay", "x,y"]);
    assert_eq!(code, 2);
}

#[test]
fn order_and_concurrent() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fig4.log");
    std::fs::write(&log, FIG4_LABELS_GOLDEN).unwrap();

    let (code, out, _) = logscope(&["order", "--log", p(&log), "--a", "0", "--b", "5"]);
    assert_eq!((code, out.trim()), (0, "Before"));
    let (_, out, _) = logscope(&["order", p(&log), "--a", "6", "--b", "7", "--json"]);
    assert_eq!(out.trim(), "\"Concurrent\"");
    let (code, _, err) = logscope(&["order", p(&log), "--a", "0", "--b", "8"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown event id 8"));

    let (code, out, _) = logscope(&["concurrent", p(&log), "--json"]);
    assert_eq!(code, 0);
    let pairs: BTreeSet<(usize, usize)> = serde_json::from_str(&out).unwrap();
    assert_eq!(pairs, BTreeSet::from([(1, 2), (2, 3), (6, 7)]));
}

#[test]
fn keyword_search_matches_scan() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("corpus.log");
    let log = random_execution(&mut rng(11), 4, 60);
    std::fs::write(&log_path, log.to_text()).unwrap();

    let (code, out, _) = logscope(&["search", "--keyword", "send", "--log", p(&log_path), "--json"]);
    assert_eq!(code, 0);
    let ids: BTreeSet<usize> = serde_json::from_str(&out).unwrap();
    assert_eq!(ids, scan_keyword(&log, "send", false));
    assert!(!ids.is_empty());

    let (_, out, _) = logscope(&["search", "--keyword", "got", "--substring", p(&log_path), "--json"]);
    let ids: BTreeSet<usize> = serde_json::from_str(&out).unwrap();
    assert_eq!(ids, scan_keyword(&log, "got", true));

    let (code, _, _) = logscope(&["search", "--keyword", "", p(&log_path)]);
    assert_eq!(code, 2);
}

#[test]
fn motif_search_cli() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fig4.log");
    std::fs::write(&log, FIG4_GOLDEN).unwrap();
    let (code, out, _) = logscope(&[
        "search",
        p(&log),
        "--motif",
        "[action=prepare] -comm-> [*] -comm-> [host=node-2]",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "0 1 3\n0 2 4\n");
    let (code, _, _) = logscope(&["search", p(&log), "--motif", "[action=prepare] ->"]);
    assert_eq!(code, 2);
}

#[test]
fn grep_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let syslog = dir.path().join("syslog");
    let mut text = String::new();
    for i in 0..30 {
        text.push_str(&format!("Mar {i} host sshd[1]: {}\n", if i % 2 == 0 { "error: connection dropped" } else { "ok" }));
    }
    std::fs::write(&syslog, &text).unwrap();
    let (code, out, _) = logscope(&["grep", "connection dropped", p(&syslog)]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 15);
    let (_, out, _) = logscope(&["grep", "error", p(&syslog), "--head", "10"]);
    assert_eq!(out.lines().count(), 10);
    assert!(out.starts_with("Mar 0 "));
    let (_, out, _) = logscope(&["grep", "error", p(&syslog), "--tail", "2"]);
    assert_eq!(out, "Mar 26 host sshd[1]: error: connection dropped\nMar 28 host sshd[1]: error: connection dropped\n");
}

#[test]
fn export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fig4.log");
    std::fs::write(&log, FIG4_GOLDEN).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(logscope(&["export", p(&log), "--out", p(&a)]).0, 0);
    assert_eq!(logscope(&["export", "--log", p(&log), "--out", p(&b)]).0, 0);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap(), FIG4_EXPORT);

    let export: GraphExport = serde_json::from_str(FIG4_EXPORT).unwrap();
    assert_eq!(export.events.len(), 8);
    assert_eq!(export.hosts.iter().map(|h| h.as_str()).collect::<Vec<_>>(), ["node-1", "node-2", "node-3"]);

    let empty = dir.path().join("empty.log");
    std::fs::write(&empty, "").unwrap();
    let (code, out, _) = logscope(&["export", p(&empty)]);
    assert_eq!(code, 0);
    assert_eq!(out, "{\"hosts\":[],\"events\":[],\"edges\":[],\"comm_edges\":[]}\n");
}

#[test]
fn infer_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("n.log");
    std::fs::write(&log, FIG4_GOLDEN).unwrap();
    let model = dir.path().join("model.json");
    let (code, out, err) = logscope(&[
        "infer", p(&log), "--symptom", "tx-aborted", "--top", "2", "--alpha", "0", "--model-out", p(&model), "--json",
    ]);
    assert_eq!(code, 0, "{err}");
    let ranked: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(ranked.len(), 2);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert!(m["classes"].as_array().unwrap().iter().any(|c| c == "prepare"));
    assert!(m["priors"].is_object());
    assert!(m["edges"].as_array().unwrap().iter().all(|e| e["p"].as_f64().unwrap() <= 1.0));

    let (code, _, _) = logscope(&["infer", p(&log), "--symptom", "nope"]);
    assert_eq!(code, 1);
}

#[test]
fn parse_errors_and_lenient_mode() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.log");
    std::fs::write(&log, format!("{FIG4_GOLDEN}garbage line\n")).unwrap();
    let (code, _, err) = logscope(&["parse", p(&log)]);
    assert_eq!(code, 1);
    assert!(err.contains("line 9"));
    let (code, out, err) = logscope(&["parse", p(&log), "--lenient", "--json"]);
    assert_eq!(code, 0);
    assert!(err.contains("line 9 skipped"));
    let events: Vec<serde_json::Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(events.len(), 8);

    let (code, _, _) = logscope(&["parse", p(&log), "--pattern", "(?P<host>x)"]);
    assert_eq!(code, 2);
    let (code, _, _) = logscope(&["parse"]);
    assert_eq!(code, 2);
    let (code, _, _) = logscope(&["parse", "/definitely/not/here.log"]);
    assert_eq!(code, 1);
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.log");
    std::fs::write(&log, "node-1 {\"node-1\":2} a\nnode-1 {\"node-1\":1} b\n").unwrap();
    let (code, out, _) = logscope(&["validate", p(&log), "--json"]);
    assert_eq!(code, 1);
    assert!(out.contains("OwnCounterRegression"));
}

#[test]
fn end_to_end_ordering_claims() {
    let (_, text, _) = logscope(&["simulate-2pc", "--fig4-labels"]);
    let log = parse_log(&text, &ParseConfig::default()).unwrap();
    let g = CausalGraph::build(&log).unwrap();
    let find = |c: logscope::VectorClock| log.events.iter().find(|e| e.clock == c).unwrap().id;
    use logscope::ClockOrdering::*;
    let chain = [vc3(0, 1, 0), vc3(1, 3, 1), vc3(1, 4, 1), vc3(1, 4, 2)];
    for w in chain.windows(2) {
        assert_eq!(g.ordering(find(w[0].clone()), find(w[1].clone())).unwrap(), Before);
    }
    assert_eq!(g.ordering(find(vc3(2, 4, 1)), find(vc3(1, 4, 2))).unwrap(), Concurrent);
    assert_eq!(g.ordering(find(vc3(0, 1, 1)), find(vc3(1, 1, 0))).unwrap(), Concurrent);
    assert_eq!(g.ordering(find(vc3(1, 2, 0)), find(vc3(1, 3, 1))).unwrap(), Before);
    assert_eq!(g.ordering(find(vc3(0, 1, 1)), find(vc3(1, 3, 1))).unwrap(), Before);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_logscope");
    let status = Command::new(bin).arg("no-such-command").output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let out = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8(out.stdout).unwrap();
    for sub in ["parse", "validate", "search", "grep", "order", "concurrent", "infer", "simulate-2pc", "export", "serve"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
    let out = Command::new(bin)
        .env("LOGSCOPE_MAX_EVENTS", "3")
        .args(["export", "tests/golden/fig4.log"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit of 3"));
}
