//! Acceptance criteria A1-A8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use twincircuit::auction::{self, AuctionConfig, AuctionOutcome, Bid};
use twincircuit::circuit::{Circuit, Gate, GateKind, WireId};
use twincircuit::cli;
use twincircuit::garble::{self, Encoding};
use twincircuit::input_consistency::{
    coin_commit, coin_toss_committed, commitment_count, generate_input_material, run_wire_checks, WireMaterial,
};
use twincircuit::session::{self, AdversaryScript, Behavior, SessionOptions, SessionResult, Transcript};

// A1
const A1_SESSIONS: u64 = 100;
// A2
const A2_MC_TRIALS: u64 = 10_000;
const A2_SIGMAS: f64 = 3.0;
// A4
const A4_CIRCUITS: u64 = 1000;
const A4_MAX_GATES: usize = 64;
// A5
const A5_SEEDS: u64 = 100;
const A5_COPIES: usize = 10;
// A6
const A6_INSTANCES: u64 = 200;
// A7
const A7_BIDDERS: [usize; 4] = [4, 8, 16, 32];
const A7_VM_TYPES: [usize; 3] = [2, 4, 6];
const A7_CAPACITIES: [u64; 3] = [10, 100, 1000];
const A7_MIN_R2: f64 = 0.9;
const A7_K_SPREAD: f64 = 0.05;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Transcripts seen by every criterion that runs sessions, for A8.
#[derive(Default)]
struct Audit {
    sessions: usize,
    violations: Vec<String>,
}

impl Audit {
    fn record(&mut self, t: &Transcript) {
        self.sessions += 1;
        if let Err(e) = session::audit_output_privacy(t) {
            self.violations.push(e);
        }
    }
}

type Check = Result<String, String>;

fn a1(audit: &mut Audit) -> Check {
    let cfg = AuctionConfig { width: 16, copies: 10, ..AuctionConfig::uniform(2, 3) };
    let c = auction::build_auction_circuit(&cfg, 6).map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for seed in 0..A1_SESSIONS {
        let mut r = rng(seed);
        let bids: Vec<Bid> = (0..6).map(|_| Bid::random(2, 3, 100, &mut r)).collect();
        let inputs = session::auction_inputs(&cfg, &bids);
        let res = session::run_protocol(&c, &inputs, cfg.copies, &SessionOptions::default(), None, seed)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        audit.record(&res.transcript);
        bytes = res.transcript.bytes_total();
        let oracle = auction::oracle_run(&cfg, &bids).map_err(|e| e.to_string())?;
        let mut expected: Vec<Vec<bool>> = (0..6).map(|j| oracle.bidder_bits(j, c.outputs()[j].len() - 1)).collect();
        expected.push(expected.concat());
        match res.outputs() {
            Some(y) if y == expected => {}
            Some(_) => return Err(format!("seed {seed}: accepted outputs differ from oracle_run")),
            None => return Err(format!("seed {seed}: not every provider accepted")),
        }
    }
    Ok(format!("{A1_SESSIONS} sessions accepted, outputs equal oracle_run ({bytes} bytes each)"))
}

fn all_patterns(s: usize) -> impl Iterator<Item = Vec<bool>> {
    // every strategy except the honest all-consistent one
    (0..(1u32 << s) - 1).map(move |v| (0..s).map(|j| (v >> j) & 1 == 1).collect())
}

fn all_challenges(s: usize) -> impl Iterator<Item = Vec<bool>> {
    (1..(1u32 << s) - 1).map(move |v| (0..s).map(|j| (v >> j) & 1 == 1).collect())
}

/// Number of challenges under which `pattern` passes every check.
fn escapes(pattern: &[bool], r: &mut ChaCha20Rng) -> usize {
    let m = WireMaterial::with_pattern(r.gen(), pattern, r);
    all_challenges(pattern.len()).filter(|rho| run_wire_checks(0, 0, &m, rho, r).is_ok()).count()
}

fn a2() -> Check {
    let mut r = rng(2);
    let mut detail = Vec::new();
    for s in 2..=5usize {
        let total = (1usize << s) - 2;
        let worst = all_patterns(s).map(|p| escapes(&p, &mut r)).max().unwrap();
        // worst / total ≤ 2^(1-s)  ⇔  worst · 2^(s-1) ≤ total
        if worst << (s - 1) > total {
            return Err(format!("s={s}: worst case escapes {worst}/{total}"));
        }
        detail.push(format!("s={s} {worst}/{total}"));
    }

    // Monte-Carlo at s=5: a random mixed pattern against a committed coin toss
    let s = 5;
    let p = 1.0 / ((1u64 << s) - 2) as f64;
    let mut escaped = 0u64;
    for _ in 0..A2_MC_TRIALS {
        let pattern = session::adversary::random_pattern(s, &mut r);
        let m = WireMaterial::with_pattern(r.gen(), &pattern, &mut r);
        let rho = loop {
            let (_, c1, o1) = coin_commit(s, &mut r);
            let (_, c2, o2) = coin_commit(s, &mut r);
            if let Some(rho) = coin_toss_committed(s, (&c1, &o1), (&c2, &o2)).map_err(|e| e.to_string())? {
                break rho;
            }
        };
        if run_wire_checks(0, 0, &m, &rho, &mut r).is_ok() {
            escaped += 1;
        }
    }
    let n = A2_MC_TRIALS as f64;
    let rate = escaped as f64 / n;
    let sigma = (p * (1.0 - p) / n).sqrt();
    let z = (rate - p) / sigma;
    detail.push(format!("MC s=5 {escaped}/{A2_MC_TRIALS} = {rate:.4} vs {p:.4} (z={z:+.2})"));
    if z.abs() > A2_SIGMAS {
        return Err(detail.join(", "));
    }
    Ok(detail.join(", "))
}

fn a3() -> Check {
    let mut r = rng(3);
    let x: Vec<bool> = (0..16).map(|_| r.gen()).collect();
    let count = commitment_count(&generate_input_material(&x, 10, &mut r));
    if count != 800 {
        return Err(format!("{count} commitments for l=16, s=10"));
    }
    Ok("800 commitments for l=16, s=10".into())
}

/// A random valid circuit with up to `max_gates` gates over 1 to 3 providers.
fn random_circuit(max_gates: usize, r: &mut ChaCha20Rng) -> Circuit {
    let providers = r.gen_range(1..=3);
    let mut next = 0u32;
    let inputs: Vec<Vec<WireId>> = (0..providers)
        .map(|_| {
            (0..r.gen_range(1..=4))
                .map(|_| {
                    next += 1;
                    WireId(next - 1)
                })
                .collect()
        })
        .collect();
    let mut gates = Vec::new();
    for _ in 0..r.gen_range(1..=max_gates) {
        let kind = [GateKind::And, GateKind::Or, GateKind::Xor, GateKind::Not][r.gen_range(0..4)];
        let a = WireId(r.gen_range(0..next));
        let b = if kind == GateKind::Not { a } else { WireId(r.gen_range(0..next)) };
        gates.push(Gate { kind, a, b, out: WireId(next) });
        next += 1;
    }
    let first_gate_out = next - gates.len() as u32;
    let outputs = (0..providers)
        .map(|_| (0..r.gen_range(1..=4)).map(|_| WireId(r.gen_range(first_gate_out..next))).collect())
        .collect();
    Circuit::new(next, gates, inputs, outputs).expect("generated circuit is valid")
}

fn a4() -> Check {
    let mut r = rng(4);
    for i in 0..A4_CIRCUITS {
        let c = random_circuit(A4_MAX_GATES, &mut r);
        let bits: Vec<Vec<bool>> = c.inputs().iter().map(|ws| ws.iter().map(|_| r.gen()).collect()).collect();
        let encs: Vec<Vec<Encoding>> =
            c.inputs().iter().map(|ws| ws.iter().map(|_| Encoding::random(&mut r)).collect()).collect();
        let gc = garble::garble(&c, &encs, r.gen()).map_err(|e| format!("circuit {i}: {e}"))?;
        let out = garble::evaluate(&c, &gc.tables, &garble::select_labels(&encs, &bits))
            .map_err(|e| format!("circuit {i}: {e}"))?;
        let decoded: Vec<Vec<bool>> = out
            .iter()
            .zip(&gc.output_encodings)
            .map(|(l, e)| garble::decode(l, e))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("circuit {i}: {e}"))?;
        if decoded != c.eval_plain(&bits).map_err(|e| e.to_string())? {
            return Err(format!("circuit {i}: garbled evaluation differs from eval_plain"));
        }
    }
    Ok(format!("{A4_CIRCUITS} random circuits of at most {A4_MAX_GATES} gates agree with eval_plain"))
}

fn a5(audit: &mut Audit) -> Check {
    let cfg = AuctionConfig { copies: A5_COPIES, ..AuctionConfig::uniform(1, 3) };
    let c = auction::build_auction_circuit(&cfg, 2).map_err(|e| e.to_string())?;
    let bound = 1.0 - 2f64.powi(1 - A5_COPIES as i32);
    let mut detail = Vec::new();
    let mut ok = true;
    let mut wrong = 0;
    for name in Behavior::NAMES {
        let mut detected = 0;
        for seed in 0..A5_SEEDS {
            let mut r = rng(seed);
            let bids: Vec<Bid> = (0..2).map(|_| Bid::random(1, 3, 100, &mut r)).collect();
            let inputs = session::auction_inputs(&cfg, &bids);
            let expected = c.eval_plain(&inputs).map_err(|e| e.to_string())?;
            let script = AdversaryScript::named(name, &c, cfg.copies, None, &mut r).map_err(|e| e.to_string())?;
            let res = session::run_protocol(&c, &inputs, cfg.copies, &SessionOptions::default(), Some(&script), seed)
                .map_err(|e| format!("{name} seed {seed}: {e}"))?;
            audit.record(&res.transcript);
            let t = cli::classify(&res, &expected, Some(&script), seed);
            detected += t.detected as u64;
            wrong += t.wrong_accept as u64;
        }
        let rate = detected as f64 / A5_SEEDS as f64;
        let needed = if name == "inconsistent-labels" { bound } else { 1.0 };
        ok &= rate >= needed;
        detail.push(format!("{name} {detected}/{A5_SEEDS}"));
    }
    detail.push(format!("wrong accepts {wrong}"));
    if ok && wrong == 0 {
        Ok(detail.join(", "))
    } else {
        Err(detail.join(", "))
    }
}

fn a6() -> Check {
    let mut r = rng(6);
    let mut cache = std::collections::HashMap::new();
    for i in 0..A6_INSTANCES {
        let n = r.gen_range(1..=10);
        let m = r.gen_range(1..=3);
        let k = r.gen_range(1..=10);
        let cfg = AuctionConfig::uniform(m, k);
        let c = cache.entry((n, m, k)).or_insert_with(|| auction::build_auction_circuit(&cfg, n).unwrap());
        let bids: Vec<Bid> = (0..n).map(|_| Bid::random(m, 5, 100, &mut r)).collect();
        let oracle = auction::oracle_run(&cfg, &bids).map_err(|e| e.to_string())?;
        let out = c.eval_plain(&session::auction_inputs(&cfg, &bids)).map_err(|e| e.to_string())?;
        if AuctionOutcome::from_bidder_bits(&out[..n], cfg.frac_bits) != oracle {
            return Err(format!("instance {i} (n={n}, m={m}, k={k}): circuit differs from oracle_run"));
        }
    }

    let cfg = AuctionConfig::uniform(1, 1);
    let bids = [Bid { quantities: vec![1], prices: vec![10] }, Bid { quantities: vec![1], prices: vec![6] }];
    let c = auction::build_auction_circuit(&cfg, 2).map_err(|e| e.to_string())?;
    let out = c.eval_plain(&session::auction_inputs(&cfg, &bids)).map_err(|e| e.to_string())?;
    let got = AuctionOutcome::from_bidder_bits(&out[..2], cfg.frac_bits);
    let hand = (got.allocations.clone(), got.payment_value(0), got.payment_value(1));
    if hand != (vec![true, false], 6.0, 0.0) {
        return Err(format!("hand example gave {hand:?}"));
    }
    Ok(format!("{A6_INSTANCES} instances agree; hand example x=(1,0), payments=(6.0, 0)"))
}

/// Coefficient of determination of the least-squares line through the points.
fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn session_bytes(n: usize, m: usize, k: u64, audit: &mut Audit) -> Result<u64, String> {
    let cfg = AuctionConfig::uniform(m, k);
    let mut r = rng((n * 100 + m) as u64 ^ k);
    let bids: Vec<Bid> = (0..n).map(|_| Bid::random(m, 3, 100, &mut r)).collect();
    let res: SessionResult = session::run_session(&cfg, &bids, &SessionOptions::default(), None, 7)
        .map_err(|e| format!("n={n} m={m} k={k}: {e}"))?;
    audit.record(&res.transcript);
    if !res.all_accept() {
        return Err(format!("n={n} m={m} k={k}: honest session did not accept"));
    }
    Ok(res.transcript.bytes_total())
}

fn a7(audit: &mut Audit) -> Check {
    let mut bytes = std::collections::BTreeMap::new();
    for &n in &A7_BIDDERS {
        for &m in &A7_VM_TYPES {
            for &k in &A7_CAPACITIES {
                bytes.insert((n, m, k), session_bytes(n, m, k, audit)? as f64);
            }
        }
    }
    let mut fails = Vec::new();
    let mut min_r2 = f64::INFINITY;
    let mut max_spread = 0f64;
    for &n in &A7_BIDDERS {
        for &k in &A7_CAPACITIES {
            let xs: Vec<f64> = A7_VM_TYPES.iter().map(|&m| m as f64).collect();
            let ys: Vec<f64> = A7_VM_TYPES.iter().map(|&m| bytes[&(n, m, k)]).collect();
            let r2 = r_squared(&xs, &ys);
            min_r2 = min_r2.min(r2);
            if r2 < A7_MIN_R2 {
                fails.push(format!("n={n} k={k}: R²={r2:.3} in m"));
            }
        }
    }
    for &m in &A7_VM_TYPES {
        for &k in &A7_CAPACITIES {
            let ys: Vec<f64> = A7_BIDDERS.iter().map(|&n| bytes[&(n, m, k)]).collect();
            // second differences over the doubling grid, and bytes per bidder rising
            let second_ok = ys.windows(3).all(|w| w[2] - w[1] > w[1] - w[0]);
            let per_bidder: Vec<f64> = A7_BIDDERS.iter().zip(&ys).map(|(&n, y)| y / n as f64).collect();
            let rising = per_bidder.windows(2).all(|w| w[1] > w[0]);
            if !(second_ok && rising) {
                fails.push(format!("m={m} k={k}: bytes {ys:?} not super-linear in n"));
            }
        }
    }
    for &n in &A7_BIDDERS {
        for &m in &A7_VM_TYPES {
            let ys: Vec<f64> = A7_CAPACITIES.iter().map(|&k| bytes[&(n, m, k)]).collect();
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(0.0, f64::max);
            let spread = hi / lo - 1.0;
            max_spread = max_spread.max(spread);
            if spread > A7_K_SPREAD {
                fails.push(format!("n={n} m={m}: bytes vary {:.1}% over k", spread * 100.0));
            }
        }
    }
    let summary = format!(
        "{} sessions; min R² in m {min_r2:.4}; super-linear in n; max spread over k {:.2}%",
        bytes.len(),
        max_spread * 100.0
    );
    if fails.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", fails.join("; ")))
    }
}

fn a8(audit: &Audit) -> Check {
    if !session::output_phase_is_silent_towards_parties() {
        return Err("a provider-to-party message type exists in the output phase".into());
    }
    if audit.sessions == 0 {
        return Err("no transcripts audited".into());
    }
    match audit.violations.first() {
        Some(v) => Err(format!("{} of {} transcripts violate: {v}", audit.violations.len(), audit.sessions)),
        None => Ok(format!("message types clean; {} transcripts audited", audit.sessions)),
    }
}

fn report(id: &str, started: Instant, result: Check) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(d) => {
            println!("{id} PASS ({secs:.1} s) {d}");
            true
        }
        Err(d) => {
            println!("{id} FAIL ({secs:.1} s) {d}");
            false
        }
    }
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--list`; only a filter picks criteria
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let wanted = |id: &str| args.is_empty() || args.iter().any(|a| id.eq_ignore_ascii_case(a));
    let mut audit = Audit::default();
    let mut ok = true;
    macro_rules! criterion {
        ($id:literal, $e:expr) => {
            if wanted($id) {
                let t = Instant::now();
                ok &= report($id, t, $e);
            }
        };
    }
    criterion!("A1", a1(&mut audit));
    criterion!("A2", a2());
    criterion!("A3", a3());
    criterion!("A4", a4());
    criterion!("A5", a5(&mut audit));
    criterion!("A6", a6());
    criterion!("A7", a7(&mut audit));
    criterion!("A8", a8(&audit));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
