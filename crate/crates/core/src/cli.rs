//! Operator tasks behind the command-line tool: demo auctions, scaling
//! benchmarks, adversary sweeps and circuit dumps.

use std::collections::BTreeMap;
use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::auction::{self, AuctionConfig, AuctionError, AuctionOutcome, Bid};
use crate::circuit::Circuit;
use crate::session::{
    self, AdversaryScript, Metrics, Outcome, Phase, SessionError, SessionOptions, SessionResult, Verdict,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {err}")]
    File { path: PathBuf, err: std::io::Error },
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Parameters shared by every subcommand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSpec {
    /// Bidders `n`; ignored when bids come from a file.
    pub bidders: usize,
    /// VM types `m`.
    pub vm_types: usize,
    /// Instances per VM type `k`.
    pub capacity: u64,
    /// Copies `s` per input wire.
    pub copies: usize,
    /// Bit width `w` of inputs.
    pub bits: usize,
    pub seed: u64,
    pub bids_file: Option<PathBuf>,
    /// Auction configuration file; overrides `vm_types`, `capacity`, `copies` and `bits`.
    pub config_file: Option<PathBuf>,
    pub max_quantity: u64,
    pub max_price: u64,
    pub adversary: Option<String>,
    pub trials: usize,
    pub tcp: Option<SocketAddr>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            bidders: 4,
            vm_types: 6,
            capacity: 3,
            copies: 10,
            bits: 16,
            seed: 0,
            bids_file: None,
            config_file: None,
            max_quantity: 3,
            max_price: 100,
            adversary: None,
            trials: 100,
            tcp: None,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::File { path: path.clone(), err })
}

impl RunSpec {
    pub fn config(&self) -> Result<AuctionConfig, CliError> {
        let cfg = match &self.config_file {
            Some(p) => auction::parse_config(&read(p)?)?,
            None => {
                let mut cfg = AuctionConfig::uniform(self.vm_types, self.capacity);
                cfg.width = self.bits;
                cfg.copies = self.copies;
                cfg
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn options(&self) -> SessionOptions {
        match self.tcp {
            Some(addr) => SessionOptions::tcp(addr),
            None => SessionOptions::default(),
        }
    }

    /// Bids from the bid file, or `bidders` random bids drawn from `seed`.
    pub fn bids(&self, cfg: &AuctionConfig, seed: u64) -> Result<Vec<(String, Bid)>, CliError> {
        let bids = match &self.bids_file {
            Some(p) => auction::parse_bids(&read(p)?, cfg.vm_types())?,
            None => {
                if self.bidders == 0 {
                    return usage("at least one bidder");
                }
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                (0..self.bidders)
                    .map(|j| (format!("bidder{j}"), Bid::random(cfg.vm_types(), self.max_quantity, self.max_price, &mut rng)))
                    .collect()
            }
        };
        if bids.is_empty() {
            return usage("no bids");
        }
        Ok(bids)
    }
}

pub struct DemoReport {
    pub ids: Vec<String>,
    pub outcome: AuctionOutcome,
    pub oracle: AuctionOutcome,
    pub result: SessionResult,
    pub elapsed: Duration,
}

impl DemoReport {
    pub fn matches_oracle(&self) -> bool {
        self.outcome == self.oracle
    }
}

impl fmt::Display for DemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bidder,winner,payment")?;
        for (j, id) in self.ids.iter().enumerate() {
            writeln!(f, "{id},{},{}", self.outcome.allocations[j] as u8, self.outcome.payment_value(j))?;
        }
        let m = self.result.metrics();
        writeln!(f, "# all providers accepted; outputs match the plaintext auction: {}", self.matches_oracle())?;
        write!(f, "# {} messages, {} bytes, {:.3} s", m.messages, m.bytes_total, self.elapsed.as_secs_f64())
    }
}

/// Runs one honest session and checks it against the plaintext auction.
pub fn demo(spec: &RunSpec) -> Result<DemoReport, CliError> {
    let cfg = spec.config()?;
    let named = spec.bids(&cfg, spec.seed)?;
    let (ids, bids): (Vec<String>, Vec<Bid>) = named.into_iter().unzip();
    let oracle = auction::oracle_run(&cfg, &bids)?;
    let start = Instant::now();
    let result = session::run_session(&cfg, &bids, &spec.options(), None, spec.seed)?;
    let elapsed = start.elapsed();
    let Some(outcome) = result.auction_outcome(cfg.frac_bits) else {
        return Err(CliError::Usage(format!("session did not complete: {:?}", result.providers)));
    };
    Ok(DemoReport { ids, outcome, oracle, result, elapsed })
}

/// Parameter grid for [`bench`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub bidders: Vec<usize>,
    pub vm_types: Vec<usize>,
    pub capacities: Vec<u64>,
}

impl Grid {
    fn validate(&self) -> Result<(), CliError> {
        if self.bidders.is_empty() || self.vm_types.is_empty() || self.capacities.is_empty() {
            return usage("every grid axis needs at least one value");
        }
        if self.bidders.contains(&0) || self.vm_types.contains(&0) {
            return usage("bidders and VM types must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub k: u64,
    pub time_seconds: f64,
    pub bytes: u64,
    pub metrics: Metrics,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("n,m,k,time_seconds,bytes\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{:.6},{}\n", r.n, r.m, r.k, r.time_seconds, r.bytes));
    }
    s
}

/// One full honest session per grid point, in `n`, `m`, `k` order. Bids are
/// drawn from `spec.seed` for each point.
pub fn bench(spec: &RunSpec, grid: &Grid, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>, CliError> {
    grid.validate()?;
    if spec.bids_file.is_some() || spec.config_file.is_some() {
        return usage("bench draws random bids; bid and config files are not used");
    }
    let mut rows = Vec::new();
    for &n in &grid.bidders {
        for &m in &grid.vm_types {
            for &k in &grid.capacities {
                let point = RunSpec { bidders: n, vm_types: m, capacity: k, ..spec.clone() };
                let cfg = point.config()?;
                let bids: Vec<Bid> = point.bids(&cfg, spec.seed)?.into_iter().map(|b| b.1).collect();
                let start = Instant::now();
                let r = session::run_session(&cfg, &bids, &spec.options(), None, spec.seed)?;
                let time_seconds = start.elapsed().as_secs_f64();
                if !r.all_accept() {
                    return Err(CliError::Usage(format!("honest session at n={n}, m={m}, k={k} did not complete")));
                }
                let metrics = r.metrics();
                let row = BenchRow { n, m, k, time_seconds, bytes: metrics.bytes_total, metrics };
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Classification of one adversarial session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trial {
    pub seed: u64,
    /// Some honest role stopped, or an honest verdict implicates the adversary.
    pub detected: bool,
    /// An honest provider accepted an output that differs from the plaintext result.
    pub wrong_accept: bool,
    /// Honest verdicts implicate the adversary and no one else alone.
    pub verdict_correct: bool,
    pub abort_phase: Option<Phase>,
    pub verdicts: Vec<Verdict>,
}

/// Judges a finished session against the plaintext outputs.
pub fn classify(r: &SessionResult, expected: &[Vec<bool>], adversary: Option<&AdversaryScript>, seed: u64) -> Trial {
    let target = adversary.map(|a| a.target);
    let verdicts = r.verdicts(target);
    let wrong_accept = r.providers.iter().filter(|p| Some(p.role) != target).any(|p| match &p.outcome {
        Outcome::Accept(y) => {
            let g = p.role.group(expected.len() - 1).expect("provider");
            expected.get(g).is_some_and(|e| e != y)
        }
        _ => false,
    });
    let abort_phase = r.abort_phase(target);
    let implicated = target.is_some_and(|t| verdicts.iter().any(|v| v.implicates(t)));
    let framed = verdicts.iter().any(|v| matches!(v.culprit, session::Culprit::Role(x) if Some(x) != target));
    Trial {
        seed,
        detected: abort_phase.is_some() || implicated,
        wrong_accept,
        verdict_correct: implicated && !framed,
        abort_phase,
        verdicts,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackReport {
    pub adversary: Option<String>,
    pub copies: usize,
    pub trials: Vec<Trial>,
}

impl AttackReport {
    fn count(&self, f: impl Fn(&Trial) -> bool) -> usize {
        self.trials.iter().filter(|t| f(t)).count()
    }

    pub fn detected(&self) -> usize {
        self.count(|t| t.detected)
    }

    pub fn detection_rate(&self) -> f64 {
        self.detected() as f64 / self.trials.len().max(1) as f64
    }

    pub fn wrong_accepts(&self) -> usize {
        self.count(|t| t.wrong_accept)
    }

    pub fn correct_verdicts(&self) -> usize {
        self.count(|t| t.verdict_correct)
    }

    /// Trials per abort phase; `None` counts sessions every honest provider accepted.
    pub fn phases(&self) -> BTreeMap<Option<Phase>, usize> {
        let mut m = BTreeMap::new();
        for t in &self.trials {
            *m.entry(t.abort_phase).or_default() += 1;
        }
        m
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.trials.len();
        writeln!(f, "adversary: {}", self.adversary.as_deref().unwrap_or("none"))?;
        writeln!(f, "trials: {n}, copies: {}", self.copies)?;
        writeln!(f, "detected: {} ({:.4})", self.detected(), self.detection_rate())?;
        if self.adversary.is_some() {
            writeln!(f, "verdict names the adversary: {}", self.correct_verdicts())?;
        }
        writeln!(f, "wrong outputs accepted: {}", self.wrong_accepts())?;
        for (p, c) in self.phases() {
            writeln!(f, "stopped in {}: {c}", p.map_or("none (accepted)", |p| p.name()))?;
        }
        Ok(())
    }
}

/// Runs `spec.trials` seeded sessions against the named adversary (or none).
pub fn attack(spec: &RunSpec, mut progress: impl FnMut(&Trial)) -> Result<AttackReport, CliError> {
    if spec.trials == 0 {
        return usage("at least one trial");
    }
    if let Some(name) = &spec.adversary {
        if !session::Behavior::NAMES.contains(&name.as_str()) {
            return usage(format!(
                "unknown adversary {name:?}; expected one of {}",
                session::Behavior::NAMES.join(", ")
            ));
        }
    }
    let cfg = spec.config()?;
    let n = match &spec.bids_file {
        Some(_) => spec.bids(&cfg, spec.seed)?.len(),
        None => spec.bidders,
    };
    let c = auction::build_auction_circuit(&cfg, n)?;
    let mut trials = Vec::with_capacity(spec.trials);
    for t in 0..spec.trials as u64 {
        let seed = spec.seed.wrapping_add(t);
        let bids: Vec<Bid> = spec.bids(&cfg, seed)?.into_iter().map(|b| b.1).collect();
        auction::check_bids(&cfg, &bids)?;
        let inputs = session::auction_inputs(&cfg, &bids);
        let expected = c.eval_plain(&inputs).expect("well-formed auction inputs");
        let script = match &spec.adversary {
            Some(name) => Some(
                AdversaryScript::named(name, &c, cfg.copies, None, &mut ChaCha20Rng::seed_from_u64(seed))
                    .map_err(SessionError::from)?,
            ),
            None => None,
        };
        let r = session::run_protocol(&c, &inputs, cfg.copies, &spec.options(), script.as_ref(), seed)?;
        let trial = classify(&r, &expected, script.as_ref(), seed);
        progress(&trial);
        trials.push(trial);
    }
    Ok(AttackReport { adversary: spec.adversary.clone(), copies: cfg.copies, trials })
}

/// The auction circuit for these run settings, with a one-line summary.
pub fn dump_circuit(spec: &RunSpec) -> Result<(Circuit, String), CliError> {
    let cfg = spec.config()?;
    let n = match &spec.bids_file {
        Some(_) => spec.bids(&cfg, spec.seed)?.len(),
        None => spec.bidders,
    };
    if n == 0 {
        return usage("at least one bidder");
    }
    let c = auction::build_auction_circuit(&cfg, n)?;
    let summary = format!(
        "# n={n} m={} w={} gates={} table_rows={} input_bits={}",
        cfg.vm_types(),
        cfg.width,
        c.gates().len(),
        c.table_rows(),
        c.input_count()
    );
    Ok((c, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunSpec {
        RunSpec { bidders: 2, vm_types: 1, copies: 3, trials: 3, ..RunSpec::default() }
    }

    #[test]
    fn defaults_follow_the_evaluation_setup() {
        let d = RunSpec::default();
        assert_eq!((d.vm_types, d.copies, d.bits, d.max_price, d.max_quantity), (6, 10, 16, 100, 3));
    }

    #[test]
    fn demo_matches_oracle() {
        let r = demo(&small()).unwrap();
        assert!(r.matches_oracle());
        assert!(r.to_string().starts_with("bidder,winner,payment\nbidder0,"));
    }

    #[test]
    fn honest_attack_sweep_detects_nothing() {
        let r = attack(&small(), |_| {}).unwrap();
        assert_eq!((r.detected(), r.wrong_accepts()), (0, 0));
        assert_eq!(r.phases()[&None], 3);
    }

    #[test]
    fn tamper_sweep_detects_everything() {
        let spec = RunSpec { adversary: Some("tamper-gate".into()), ..small() };
        let r = attack(&spec, |_| {}).unwrap();
        assert_eq!(r.detected(), 3);
        assert_eq!(r.wrong_accepts(), 0);
    }

    #[test]
    fn unknown_adversary_is_a_usage_error() {
        let spec = RunSpec { adversary: Some("eavesdrop".into()), ..small() };
        assert!(matches!(attack(&spec, |_| {}), Err(CliError::Usage(_))));
    }

    #[test]
    fn bench_rejects_empty_grid_and_writes_csv() {
        let g = Grid { bidders: vec![], vm_types: vec![1], capacities: vec![3] };
        assert!(matches!(bench(&small(), &g, |_| {}), Err(CliError::Usage(_))));
        let g = Grid { bidders: vec![2], vm_types: vec![1], capacities: vec![3, 4] };
        let rows = bench(&small(), &g, |_| {}).unwrap();
        let csv = bench_csv(&rows);
        assert!(csv.starts_with("n,m,k,time_seconds,bytes\n2,1,3,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn dump_reports_size() {
        let (c, s) = dump_circuit(&small()).unwrap();
        assert!(s.contains(&format!("gates={}", c.gates().len())));
    }
}
