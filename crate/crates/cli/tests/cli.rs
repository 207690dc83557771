// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

fn adf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adf"))
        .args(args)
        .output()
        .expect("run adf")
}

fn ok(args: &[&str]) -> Output {
    let out = adf(args);
    assert!(
        out.status.success(),
        "adf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small topology plus a ten-second trace over it.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let topo = dir.join("topo.txt");
    let trace = dir.join("trace.txt");
    ok(&[
        "gen-topology",
        "--tier1",
        "4",
        "--tier2",
        "30",
        "--tier3",
        "150",
        "--seed",
        "7",
        "--out",
        s(&topo),
    ]);
    ok(&[
        "gen-attack",
        "--topology",
        s(&topo),
        "--set",
        "ddos_sources=150",
        "--set",
        "legit_sources=60",
        "--set",
        "duration=8",
        "--set",
        "ramp=4",
        "--set",
        "ddos_home_ases=6",
        "--set",
        "volume=lognormal:2:0.5",
        "--out",
        s(&trace),
    ]);
    (topo, trace)
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = csv(path);
    let i = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

#[test]
fn same_seed_gives_identical_outputs() {
    let dir = scratch("determinism");
    let (topo, trace) = fixture(&dir);
    let again = dir.join("again");
    fs::create_dir_all(&again).unwrap();
    let (topo2, trace2) = fixture(&again);
    assert_eq!(fs::read(&topo).unwrap(), fs::read(&topo2).unwrap());
    assert_eq!(fs::read(&trace).unwrap(), fs::read(&trace2).unwrap());

    let run = |out: &Path| {
        ok(&[
            "generate",
            "--trace",
            s(&trace),
            "--problem",
            "max-coverage",
            "--max-collateral",
            "10%",
            "--rule-budget",
            "20",
            "--out",
            s(out),
        ]);
    };
    let (a, b) = (dir.join("a"), dir.join("b"));
    run(&a);
    run(&b);
    for f in ["rules.txt", "report.csv", "manifest.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    assert!(a.join("timings.csv").exists());
}

#[test]
fn min_rules_with_zero_coverage_needs_no_rules() {
    let dir = scratch("zero_coverage");
    let (_, trace) = fixture(&dir);
    let out = dir.join("gen");
    ok(&[
        "generate",
        "--trace",
        s(&trace),
        "--problem",
        "min-rules",
        "--min-coverage",
        "0",
        "--max-collateral",
        "0",
        "--out",
        s(&out),
    ]);
    let rules = column(&out.join("report.csv"), "rules");
    assert!(!rules.is_empty());
    assert!(rules.iter().all(|r| r == "0"), "{rules:?}");
}

#[test]
fn unbounded_max_coverage_covers_everything() {
    let dir = scratch("full_coverage");
    let (_, trace) = fixture(&dir);
    let out = dir.join("gen");
    ok(&[
        "generate",
        "--trace",
        s(&trace),
        "--problem",
        "max-coverage",
        "--max-collateral",
        "inf",
        "--rule-budget",
        "inf",
        "--out",
        s(&out),
    ]);
    for pct in column(&out.join("report.csv"), "coverage_pct") {
        assert_eq!(pct, "100.0000");
    }
}

#[test]
fn unfiltered_replay_lets_everything_through() {
    let dir = scratch("baseline");
    let (_, trace) = fixture(&dir);
    let out = dir.join("sim");
    ok(&["simulate", "--trace", s(&trace), "--out", s(&out)]);
    let seconds = out.join("seconds.csv");
    let filtered = column(&seconds, "ddos_filtered_flows");
    assert!(filtered.iter().all(|f| f == "0"));
    assert_eq!(
        column(&seconds, "ddos_reached_flows"),
        column(&seconds, "ddos_arrivals_flows")
    );
    assert!(fs::read_to_string(out.join("manifest.txt"))
        .unwrap()
        .contains("problem=none\n"));
}

#[test]
fn filtered_replay_conserves_flows_and_spares_legit() {
    let dir = scratch("replay");
    let (topo, _) = fixture(&dir);
    let out = dir.join("sim");
    ok(&[
        "simulate",
        "--topology",
        s(&topo),
        "--set",
        "ddos_sources=150",
        "--set",
        "duration=8",
        "--set",
        "ramp=4",
        "--set",
        "ddos_home_ases=6",
        "--problem",
        "min-rules",
        "--min-coverage",
        "100%",
        "--max-collateral",
        "0",
        "--limit",
        "1000",
        "--out",
        s(&out),
    ]);
    let (header, rows) = csv(&out.join("seconds.csv"));
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let (arr, fil, rea, lf) = (
        col("ddos_arrivals_flows"),
        col("ddos_filtered_flows"),
        col("ddos_reached_flows"),
        col("legit_filtered_flows"),
    );
    for r in &rows {
        let n = |i: usize| r[i].parse::<usize>().unwrap();
        assert_eq!(n(arr), n(fil) + n(rea));
        assert_eq!(n(lf), 0);
    }
    let last = rows.last().unwrap();
    assert_eq!(last[fil], last[arr], "not fully filtered at the end");
    assert!(out.join("placement.csv").exists() && out.join("distribution.csv").exists());
}

#[test]
fn place_writes_placement_and_distribution() {
    let dir = scratch("place");
    let (topo, trace) = fixture(&dir);
    let gen = dir.join("gen");
    ok(&[
        "generate",
        "--trace",
        s(&trace),
        "--problem",
        "min-rules",
        "--min-coverage",
        "100%",
        "--max-collateral",
        "0",
        "--out",
        s(&gen),
    ]);
    let pl = dir.join("pl");
    ok(&[
        "place",
        "--rules",
        s(&gen.join("rules.txt")),
        "--limit",
        "1000",
        "--topology",
        s(&topo),
        "--out",
        s(&pl),
    ]);
    let text = fs::read_to_string(pl.join("placement.txt")).unwrap();
    assert!(text.contains("success_rate=1.000000"), "{text}");
    let dist = fs::read_to_string(pl.join("distribution.csv")).unwrap();
    assert!(dist.starts_with("rules_per_node,cumulative_fraction_of_nodes\n"));
}

#[test]
fn config_errors_exit_nonzero_with_a_message() {
    let dir = scratch("errors");
    let (_, trace) = fixture(&dir);
    let out = dir.join("x");
    let cases: [(&[&str], &str); 4] = [
        (
            &[
                "generate",
                "--trace",
                s(&trace),
                "--problem",
                "min-rules",
                "--min-coverage",
                "50%",
                "--out",
                s(&out),
            ],
            "--max-collateral",
        ),
        (
            &[
                "generate",
                "--trace",
                s(&trace),
                "--problem",
                "max-coverage",
                "--max-collateral",
                "0",
                "--rule-budget",
                "3",
                "--min-coverage",
                "1",
                "--out",
                s(&out),
            ],
            "--min-coverage",
        ),
        (
            &[
                "generate",
                "--trace",
                "/nonexistent/trace.txt",
                "--problem",
                "min-rules",
                "--min-coverage",
                "1",
                "--max-collateral",
                "0",
                "--out",
                s(&out),
            ],
            "/nonexistent/trace.txt",
        ),
        (
            &[
                "generate",
                "--problem",
                "min-rules",
                "--min-coverage",
                "1",
                "--max-collateral",
                "0",
                "--out",
                s(&out),
            ],
            "--trace",
        ),
    ];
    for (args, needle) in cases {
        let o = adf(args);
        assert!(!o.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

/// A `serve-node` child process, killed on drop.
struct Node {
    child: Child,
    addr: String,
}

impl Node {
    fn start(capacity: usize) -> Node {
        let mut child = Command::new(env!("CARGO_BIN_EXE_adf"))
            .args([
                "serve-node",
                "--listen",
                "127.0.0.1:0",
                "--capacity",
                &capacity.to_string(),
            ])
            .stdout(Stdio::piped())
            .spawn()
            .expect("spawn node");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on ")
            .expect("banner")
            .to_string();
        Node { child, addr }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn ten_rules(dir: &Path) -> PathBuf {
    let path = dir.join("rules.txt");
    let mut text =
        String::from("# id,source,protocol,tcp_flags,destination,candidates,start,end\n");
    for i in 0..10 {
        text += &format!("{i},10.0.{i}.0/24,ANY,ANY,203.0.113.1,1,0,3600\n");
    }
    fs::write(&path, text).unwrap();
    path
}

fn submit(dir: &Path, node: &str) -> Vec<Vec<String>> {
    let rules = ten_rules(dir);
    let report = dir.join("acks.csv");
    ok(&[
        "submit",
        "--rules",
        s(&rules),
        "--node",
        &format!("1={node}"),
        "--timeout-ms",
        "2000",
        "--out",
        s(&report),
    ]);
    let (header, rows) = csv(&report);
    assert_eq!(header, ["rule_id", "node", "code", "status"]);
    rows
}

#[test]
fn submit_within_capacity_installs_every_rule() {
    let dir = scratch("submit10");
    let node = Node::start(10);
    let rows = submit(&dir, &node.addr);
    assert_eq!(rows.len(), 10);
    assert!(
        rows.iter()
            .all(|r| r[1] == "1" && r[2] == "0" && r[3] == "installed"),
        "{rows:?}"
    );
}

#[test]
fn submit_past_capacity_reports_out_of_rule_space() {
    let dir = scratch("submit5");
    let node = Node::start(5);
    let rows = submit(&dir, &node.addr);
    let installed = rows
        .iter()
        .filter(|r| r[3] == "installed" && r[2] == "0")
        .count();
    let full = rows
        .iter()
        .filter(|r| r[3] == "rejected" && r[2] == "3")
        .count();
    let failed = rows.iter().filter(|r| r[3] == "all-failed").count();
    assert_eq!((installed, full, failed), (5, 5, 5), "{rows:?}");
}

#[test]
fn submit_to_absent_node_reports_all_failed() {
    let dir = scratch("absent");
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().to_string()
    };
    let rows = submit(&dir, &addr);
    let failed: Vec<_> = rows
        .iter()
        .filter(|r| r[3] == "all-failed")
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(failed, (0..10).map(|i| i.to_string()).collect::<Vec<_>>());
    assert_eq!(rows.iter().filter(|r| r[3] == "unreachable").count(), 10);
}
