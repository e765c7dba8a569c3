use std::path::PathBuf;
use std::process::{Command, Output};

use twincircuit::circuit::Circuit;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twincircuit")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twincircuit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn demo_on_a_bid_file_prints_the_plaintext_result() {
    let bids = scratch("bids.txt");
    std::fs::write(&bids, "alice, 1, 10\nbob, 1, 6\n").unwrap();
    let o = bin(&["demo", "--vm-types", "1", "--capacity", "1", "--copies", "4", "--bids-file", bids.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("bidder,winner,payment\nalice,1,6\nbob,0,0\n"), "{out}");
    assert!(out.contains("outputs match the plaintext auction: true"));
}

#[test]
fn bench_bytes_are_reproducible() {
    let args = ["bench", "--bidders", "2,3", "--vm-types", "1", "--capacity", "2", "--copies", "3", "--seed", "5"];
    let a = stdout(&bin(&args));
    let b = stdout(&bin(&args));
    assert!(a.starts_with("n,m,k,time_seconds,bytes\n"));
    let bytes = |s: &str| -> Vec<String> { s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect() };
    assert_eq!(bytes(&a).len(), 2);
    assert_eq!(bytes(&a), bytes(&b));
}

#[test]
fn attack_reports_detection() {
    let o = bin(&["attack", "--bidders", "2", "--vm-types", "1", "--copies", "4", "--trials", "5", "--adversary", "tamper-gate"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("detected: 5 (1.0000)"), "{out}");
    assert!(out.contains("wrong outputs accepted: 0"));

    let o = bin(&["attack", "--bidders", "2", "--vm-types", "1", "--copies", "4", "--trials", "3"]);
    assert!(stdout(&o).contains("detected: 0 (0.0000)"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = bin(&["attack", "--bidders", "2", "--vm-types", "1", "--adversary", "nope", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["demo", "--bidders", "2,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dumped_netlist_parses_back() {
    let path = scratch("auction.net");
    let o = bin(&["dump-circuit", "--bidders", "2", "--vm-types", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let c = Circuit::from_netlist(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(stdout(&o).contains(&format!("gates={}", c.gates().len())));
    assert_eq!(c.inputs().len(), 3);
}
