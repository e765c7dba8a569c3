//! Protocol orchestration: the two computation parties and the data providers
//! as independent state machines exchanging framed messages.
//!
//! Providers `0..n` are the input holders; the cloud provider is group `n` of
//! the circuit. Phase 1 commits and checks inputs, phase 2 garbles and
//! evaluates both circuits, phase 3 lets each provider decode both outputs.

/// Receives the next message from a peer and unpacks the expected variant.
macro_rules! recv_as {
    ($ep:expr, $from:expr, $variant:ident) => {{
        let from = $from;
        match $ep.recv(from)? {
            Body::$variant(x) => x,
            other => return Err(unexpected(from, &other, Tag::$variant)),
        }
    }};
}

pub mod adversary;
pub mod message;
mod party;
mod provider;
pub mod transcript;
mod transport;

use std::fmt;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use adversary::{AdversaryError, AdversaryScript, Behavior};
pub use message::{frame, unframe, AbortReason, Allegation, Body, DecodeError, FramingError, Message, Phase, ProtocolError, Tag};
pub use transcript::{measure, Metrics, Transcript};
pub use transport::TcpMesh;

use crate::auction::{AuctionConfig, AuctionError, AuctionOutcome, Bid};
use crate::circuit::Circuit;
use crate::commit::sha256;
use crate::Party;
use transcript::Recorder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    P1,
    P2,
    Provider(u32),
    CloudProvider,
}

impl Role {
    pub fn party(p: Party) -> Role {
        match p {
            Party::P1 => Role::P1,
            Party::P2 => Role::P2,
        }
    }

    pub fn as_party(self) -> Option<Party> {
        match self {
            Role::P1 => Some(Party::P1),
            Role::P2 => Some(Party::P2),
            _ => None,
        }
    }

    /// Circuit input/output group of a provider role, given `n` input providers.
    pub fn group(self, n: usize) -> Option<usize> {
        match self {
            Role::Provider(u) => Some(u as usize),
            Role::CloudProvider => Some(n),
            _ => None,
        }
    }

    pub fn of_group(g: usize, n: usize) -> Role {
        if g == n {
            Role::CloudProvider
        } else {
            Role::Provider(g as u32)
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::P1 => write!(f, "P1"),
            Role::P2 => write!(f, "P2"),
            Role::Provider(u) => write!(f, "provider{u}"),
            Role::CloudProvider => write!(f, "cloud"),
        }
    }
}

/// Provider roles in group order.
pub fn provider_roles(n: usize) -> Vec<Role> {
    (0..=n).map(|g| Role::of_group(g, n)).collect()
}

/// Every role of a session with `n` input providers.
pub fn roles(n: usize) -> Vec<Role> {
    let mut v = vec![Role::P1, Role::P2];
    v.extend(provider_roles(n));
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transport {
    InProcess,
    /// A TCP mesh on loopback or LAN; role `i` listens on `port + i`.
    Tcp(SocketAddr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionOptions {
    pub transport: Transport,
    /// How long a role waits for a peer; `None` waits forever.
    pub timeout: Option<Duration>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { transport: Transport::InProcess, timeout: None }
    }
}

impl SessionOptions {
    pub fn tcp(addr: SocketAddr) -> Self {
        SessionOptions { transport: Transport::Tcp(addr), timeout: Some(Duration::from_secs(30)) }
    }
}

/// Final state of a party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RolePhase {
    Input,
    Compute,
    Output,
    Done,
    Aborted(AbortReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyState {
    pub role: Role,
    pub phase: RolePhase,
}

/// Who a verdict holds responsible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Culprit {
    Role(Role),
    /// One of the two parties, not identified.
    EitherParty,
    /// One of the two, with no evidence to decide.
    Dispute(Role, Role),
    /// Misbehaviour shown, culprit not attributable.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub culprit: Culprit,
    pub reason: String,
}

impl Verdict {
    pub(crate) fn new(culprit: Culprit, reason: impl Into<String>) -> Self {
        Verdict { culprit, reason: reason.into() }
    }

    /// Whether this verdict puts `r` under suspicion.
    pub fn implicates(&self, r: Role) -> bool {
        match self.culprit {
            Culprit::Role(x) => x == r,
            Culprit::EitherParty => r.as_party().is_some(),
            Culprit::Dispute(a, b) => a == r || b == r,
            Culprit::Unknown => false,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.culprit {
            Culprit::Role(r) => write!(f, "{r}: {}", self.reason),
            Culprit::EitherParty => write!(f, "P1 or P2: {}", self.reason),
            Culprit::Dispute(a, b) => write!(f, "{a} or {b}: {}", self.reason),
            Culprit::Unknown => write!(f, "unattributed: {}", self.reason),
        }
    }
}

/// A provider's final decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accept(Vec<bool>),
    /// Its own two decodes disagreed or could not be checked.
    Reject,
    /// Another provider showed a confirmed failure.
    Discarded,
    Aborted { phase: Phase, reason: AbortReason },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderReport {
    pub role: Role,
    pub outcome: Outcome,
    pub verdicts: Vec<Verdict>,
}

#[derive(Clone, Debug)]
pub struct SessionResult {
    pub session: u64,
    pub providers: Vec<ProviderReport>,
    pub parties: [PartyState; 2],
    pub transcript: Transcript,
}

impl SessionResult {
    pub fn all_accept(&self) -> bool {
        self.providers.iter().all(|p| matches!(p.outcome, Outcome::Accept(_)))
    }

    /// Outputs in group order, if every provider accepted.
    pub fn outputs(&self) -> Option<Vec<Vec<bool>>> {
        self.providers
            .iter()
            .map(|p| match &p.outcome {
                Outcome::Accept(y) => Some(y.clone()),
                _ => None,
            })
            .collect()
    }

    fn honest(&self, adversary: Option<Role>) -> impl Iterator<Item = &ProviderReport> {
        self.providers.iter().filter(move |p| Some(p.role) != adversary)
    }

    /// Distinct verdicts reached by providers other than `adversary`.
    pub fn verdicts(&self, adversary: Option<Role>) -> Vec<Verdict> {
        let mut v: Vec<Verdict> = Vec::new();
        for p in self.honest(adversary) {
            for x in &p.verdicts {
                if !v.contains(x) {
                    v.push(x.clone());
                }
            }
        }
        v
    }

    /// Earliest phase in which an honest provider stopped without accepting.
    pub fn abort_phase(&self, adversary: Option<Role>) -> Option<Phase> {
        self.honest(adversary)
            .filter_map(|p| match &p.outcome {
                Outcome::Accept(_) => None,
                Outcome::Reject | Outcome::Discarded => Some(Phase::Output),
                Outcome::Aborted { phase, .. } => Some(*phase),
            })
            .min()
    }

    pub fn metrics(&self) -> Metrics {
        measure(&self.transcript)
    }

    /// The auction outcome, if every provider accepted.
    pub fn auction_outcome(&self, frac_bits: usize) -> Option<AuctionOutcome> {
        let outs = self.outputs()?;
        let n = outs.len() - 1;
        Some(AuctionOutcome::from_bidder_bits(&outs[..n], frac_bits))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session setup: {0}")]
    Setup(String),
    #[error("transport: {0}")]
    Transport(#[from] std::io::Error),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error("{0} panicked")]
    Panicked(Role),
}

fn session_id(seed: u64) -> u64 {
    let mut m = b"session".to_vec();
    m.extend_from_slice(&seed.to_be_bytes());
    u64::from_be_bytes(sha256(&m)[..8].try_into().unwrap())
}

fn role_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut m = b"role".to_vec();
    m.extend_from_slice(&seed.to_be_bytes());
    m.extend_from_slice(role.to_string().as_bytes());
    ChaCha20Rng::from_seed(sha256(&m))
}

/// What every role knows in advance.
pub(crate) struct Common<'a> {
    pub circuit: &'a Circuit,
    pub n: usize,
    pub s: usize,
}

impl Common<'_> {
    pub fn wires(&self, g: usize) -> usize {
        self.circuit.inputs()[g].len()
    }

    pub fn providers(&self) -> Vec<Role> {
        provider_roles(self.n)
    }
}

fn unexpected(from: Role, got: &Body, want: Tag) -> transport::Stop {
    transport::Stop::Local(AbortReason::Protocol(format!(
        "expected {} from {from}, got {}",
        want.name(),
        got.tag().name()
    )))
}

fn protocol(msg: impl Into<String>) -> transport::Stop {
    transport::Stop::Local(AbortReason::Protocol(msg.into()))
}

enum RoleResult {
    Party(PartyState),
    Provider(ProviderReport),
}

/// Runs one session of the framework on `circuit` with `s` copies per input
/// wire. `inputs[g]` are the bits of input group `g`; the last group belongs to
/// the cloud provider.
pub fn run_protocol(
    circuit: &Circuit,
    inputs: &[Vec<bool>],
    s: usize,
    opts: &SessionOptions,
    adversary: Option<&AdversaryScript>,
    seed: u64,
) -> Result<SessionResult, SessionError> {
    if inputs.len() < 2 || circuit.inputs().len() != inputs.len() || circuit.outputs().len() > inputs.len() {
        return Err(SessionError::Setup(format!(
            "circuit has {} input groups, {} inputs given; need at least one provider and the cloud provider",
            circuit.inputs().len(),
            inputs.len()
        )));
    }
    for (g, (x, ws)) in inputs.iter().zip(circuit.inputs()).enumerate() {
        if x.len() != ws.len() {
            return Err(SessionError::Setup(format!("group {g}: {} bits for {} wires", x.len(), ws.len())));
        }
    }
    if !(2..=u16::MAX as usize).contains(&s) {
        return Err(SessionError::Setup(format!("copies must be in 2..=65535, got {s}")));
    }
    if let Some(a) = adversary {
        a.validate(circuit, s)?;
    }
    let n = inputs.len() - 1;
    let all = roles(n);
    let session = session_id(seed);
    let recorder = Arc::new(Recorder::new());
    let endpoints = match &opts.transport {
        Transport::InProcess => transport::in_process(&all, session, opts.timeout, &recorder),
        Transport::Tcp(addr) => {
            let mesh = TcpMesh::bind(*addr, all.len())?;
            transport::tcp(mesh, &all, session, opts.timeout, &recorder)?
        }
    };
    let common = Common { circuit, n, s };
    let behavior = |r: Role| adversary.filter(|a| a.target == r).map(|a| &a.behavior);

    let results: Vec<Result<RoleResult, Role>> = std::thread::scope(|sc| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .map(|mut ep| {
                let role = ep.role;
                let rng = role_rng(seed, role);
                let b = behavior(role);
                let common = &common;
                let h = sc.spawn(move || {
                    let r = match role.as_party() {
                        Some(p) => RoleResult::Party(party::run(&mut ep, p, common, rng, b)),
                        None => {
                            let g = role.group(n).unwrap();
                            RoleResult::Provider(provider::run(&mut ep, g, &inputs[g], common, rng, b))
                        }
                    };
                    (r, ep)
                });
                (role, h)
            })
            .collect();
        // endpoints stay alive until every role is finished
        let mut kept = Vec::new();
        let mut out = Vec::new();
        for (role, h) in handles {
            match h.join() {
                Ok((r, ep)) => {
                    kept.push(ep);
                    out.push(Ok(r));
                }
                Err(_) => out.push(Err(role)),
            }
        }
        drop(kept);
        out
    });

    let mut parties = Vec::new();
    let mut providers = Vec::new();
    for r in results {
        match r.map_err(SessionError::Panicked)? {
            RoleResult::Party(p) => parties.push(p),
            RoleResult::Provider(p) => providers.push(p),
        }
    }
    let recorder = Arc::try_unwrap(recorder).map_err(|_| SessionError::Setup("recorder still shared".into()))?;
    Ok(SessionResult {
        session,
        providers,
        parties: parties.try_into().expect("two parties"),
        transcript: recorder.finish(),
    })
}

/// Input bits for an auction session: one group per bidder, then the cloud
/// provider with none.
pub fn auction_inputs(cfg: &AuctionConfig, bids: &[Bid]) -> Vec<Vec<bool>> {
    let mut v: Vec<Vec<bool>> = bids.iter().map(|b| b.to_bits(cfg.width)).collect();
    v.push(Vec::new());
    v
}

/// Runs the auction among `bids.len()` bidders and the cloud provider, with
/// `cfg.copies` copies per input wire.
pub fn run_session(
    cfg: &AuctionConfig,
    bids: &[Bid],
    opts: &SessionOptions,
    adversary: Option<&AdversaryScript>,
    seed: u64,
) -> Result<SessionResult, SessionError> {
    crate::auction::check_bids(cfg, bids)?;
    let c = crate::auction::build_auction_circuit(cfg, bids.len())?;
    run_protocol(&c, &auction_inputs(cfg, bids), cfg.copies, opts, adversary, seed)
}

/// No message type lets a provider talk to a party once outputs are opened.
pub fn output_phase_is_silent_towards_parties() -> bool {
    Tag::ALL.iter().all(|t| {
        let late = matches!(t.phase(), None | Some(Phase::Output));
        !late || !t.directions().contains(&(message::Side::Provider, message::Side::Party))
    })
}

/// Checks a transcript for provider-to-party traffic after the first output
/// opening, or of any output-phase type.
pub fn audit_output_privacy(t: &Transcript) -> Result<(), String> {
    let first = t.entries.iter().filter(|e| e.tag == Tag::OutputOpenings).map(|e| e.micros).min();
    for e in &t.entries {
        if e.sender.as_party().is_some() || e.receiver.as_party().is_none() {
            continue;
        }
        if e.tag.phase() != Some(Phase::Input) || first.is_some_and(|f| e.micros > f) {
            return Err(format!("{} sent {} to {} at {} us", e.sender, e.tag.name(), e.receiver, e.micros));
        }
    }
    Ok(())
}
