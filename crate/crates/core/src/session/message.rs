//! Wire messages and framing.
//!
//! A frame is `len (u32 BE) ‖ tag (u8) ‖ session id (u64 BE) ‖ payload`, where
//! `len` counts everything after itself. The payload starts with the sender
//! role (5 bytes) followed by the tag-specific body.

use thiserror::Error;

use super::Role;
use crate::codec::{pack_bits, unpack_bits, CodecError, Reader, Writer};
use crate::commit::{Commitment, Nonce, Opening, DIGEST_LEN, NONCE_LEN};
use crate::garble::GarbledTables;
use crate::input_consistency::{
    CheckOpening, ConsistencyProof, CopyCommitments, EvalOpening, Hash, HashTuple, RebuttalCopy,
    COMMITMENTS_PER_COPY,
};
use crate::output_verification::{OutputFailureProof, ProviderOpenings};
use crate::Party;

/// Bytes before the payload: length, tag and session id.
pub const FRAME_HEADER: usize = 13;
const ROLE_LEN: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FramingError {
    #[error("frame shorter than its header ({0} bytes)")]
    Short(usize),
    #[error("length field says {declared} bytes, {actual} present")]
    Length { declared: usize, actual: usize },
    #[error("payload of {0} bytes does not fit a frame")]
    Oversized(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),
    #[error("malformed {tag} payload: {err}")]
    Payload { tag: &'static str, err: CodecError },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Protocol phase a message type belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Input,
    Compute,
    Output,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Input, Phase::Compute, Phase::Output];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Input => "input",
            Phase::Compute => "compute",
            Phase::Output => "output",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Sender or receiver class, for the direction table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Party,
    Provider,
}

impl Role {
    pub fn side(self) -> Side {
        match self {
            Role::P1 | Role::P2 => Side::Party,
            _ => Side::Provider,
        }
    }
}

macro_rules! tags {
    ($($name:ident = $v:expr, $s:literal, $phase:expr, [$(($from:ident, $to:ident)),*];)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum Tag { $($name = $v,)* }

        impl Tag {
            pub const ALL: &'static [Tag] = &[$(Tag::$name,)*];

            pub fn from_u8(b: u8) -> Option<Tag> {
                match b {
                    $($v => Some(Tag::$name),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self { $(Tag::$name => $s,)* }
            }

            /// The phase this message type is sent in; `None` for aborts, which
            /// may come at any point.
            pub fn phase(self) -> Option<Phase> {
                match self { $(Tag::$name => $phase,)* }
            }

            /// Permitted (sender, receiver) classes.
            pub fn directions(self) -> &'static [(Side, Side)] {
                match self { $(Tag::$name => &[$((Side::$from, Side::$to)),*],)* }
            }
        }
    };
}

tags! {
    InputCommitments = 0x01, "INPUT_COMMITMENTS", Some(Phase::Input), [(Provider, Party)];
    InputDigest = 0x02, "INPUT_DIGEST", Some(Phase::Input), [(Provider, Provider)];
    InputDigests = 0x03, "INPUT_DIGESTS", Some(Phase::Input), [(Party, Party)];
    CoinCommit = 0x04, "COIN_COMMIT", Some(Phase::Input), [(Party, Party)];
    CoinOpen = 0x05, "COIN_OPEN", Some(Phase::Input), [(Party, Party)];
    Challenge = 0x06, "CHALLENGE", Some(Phase::Input), [(Party, Provider)];
    CheckOpenings = 0x07, "CHECK_OPENINGS", Some(Phase::Input), [(Provider, Party)];
    HashTuples = 0x08, "HASH_TUPLES", Some(Phase::Input), [(Party, Party)];
    InputStatus = 0x09, "INPUT_STATUS", Some(Phase::Input), [(Party, Party), (Party, Provider)];
    ProofOpenings = 0x0a, "PROOF_OPENINGS", Some(Phase::Input), [(Party, Provider)];
    Rebuttal = 0x0b, "REBUTTAL", Some(Phase::Input), [(Provider, Provider)];
    InputAbort = 0x0c, "INPUT_ABORT", Some(Phase::Input),
        [(Party, Party), (Party, Provider), (Provider, Party), (Provider, Provider)];
    GarbledCircuit = 0x10, "GARBLED_CIRCUIT", Some(Phase::Compute), [(Party, Party)];
    OutputCommitments = 0x20, "OUTPUT_COMMITMENTS", Some(Phase::Output), [(Party, Provider)];
    OutputOpenings = 0x21, "OUTPUT_OPENINGS", Some(Phase::Output), [(Party, Provider)];
    BundleDigest = 0x22, "BUNDLE_DIGEST", Some(Phase::Output), [(Provider, Provider)];
    OutputStatus = 0x23, "OUTPUT_STATUS", Some(Phase::Output), [(Provider, Provider)];
    Abort = 0x30, "ABORT", None, [(Party, Party), (Party, Provider), (Provider, Provider)];
}

impl Tag {
    pub fn allows(self, from: Role, to: Role) -> bool {
        self.directions().contains(&(from.side(), to.side()))
    }
}

/// Why a role stopped before finishing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbortReason {
    /// `cheater`'s coin opening does not match its commitment; carries both.
    CoinTossCheat { cheater: Party, commitment: Commitment, opening: Opening },
    /// The parties received different input commitments from this provider.
    DigestMismatch { provider: u32 },
    /// The parties sent this provider different challenges.
    ChallengeMismatch,
    /// Input checks raised allegations.
    InputRejected,
    /// The garbled circuit from `garbler` could not be evaluated.
    Evaluation { garbler: Party },
    Protocol(String),
    Timeout(Role),
    Transport(String),
    /// Relayed: the named role aborted first.
    Peer(Role),
}

/// One accusation raised by a party during the input checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Allegation {
    /// A check copy failed the construction check; carries the openings received.
    Construction { provider: u32, wire: u32, copy: u32, opening: CheckOpening },
    /// An opening from the provider did not verify.
    BadOpening { provider: u32, wire: u32, copy: u32 },
    /// Label consistency failed; carries the accuser's opening of `proof.c[2]`.
    Inconsistent { proof: ConsistencyProof, opening: Opening },
}

impl Allegation {
    pub fn target(&self) -> (u32, u32) {
        match self {
            Allegation::Construction { provider, wire, .. } | Allegation::BadOpening { provider, wire, .. } => {
                (*provider, *wire)
            }
            Allegation::Inconsistent { proof, .. } => (proof.provider, proof.wire),
        }
    }
}

/// The non-accusing party's answer to a consistency proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofReply {
    pub provider: u32,
    pub wire: u32,
    /// The reordered tuple as it was sent.
    pub tuple: HashTuple,
    pub openings: [Opening; 2],
}

/// Per-wire openings from a provider: check copies then evaluation copies,
/// each in ascending copy order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireOpenings {
    pub check: Vec<CheckOpening>,
    pub eval: Vec<EvalOpening>,
}

/// Everything an accused provider reveals about one wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireRebuttal {
    pub wire: u32,
    pub commitments: Vec<CopyCommitments>,
    pub check: Vec<CheckOpening>,
    pub eval: Vec<RebuttalCopy>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputStatus {
    Ok,
    Failure(OutputFailureProof),
    OpeningError(Party),
    BundleMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    InputCommitments(Vec<Vec<CopyCommitments>>),
    InputDigest(Hash),
    InputDigests(Vec<Hash>),
    CoinCommit(Vec<Commitment>),
    CoinOpen(Vec<Opening>),
    /// `ρ` per provider, per wire.
    Challenge(Vec<Vec<Vec<bool>>>),
    CheckOpenings(Vec<WireOpenings>),
    /// Per provider, per wire; `None` where the sender has no hashes.
    HashTuples(Vec<Vec<Option<HashTuple>>>),
    InputStatus(Vec<Allegation>),
    ProofOpenings(Vec<ProofReply>),
    Rebuttal { wire_digests: Vec<Hash>, wires: Vec<WireRebuttal> },
    InputAbort(AbortReason),
    GarbledCircuit(GarbledTables),
    OutputCommitments(Vec<[Commitment; 2]>),
    OutputOpenings([Opening; 2]),
    BundleDigest(Hash),
    OutputStatus(OutputStatus),
    Abort(AbortReason),
}

impl Body {
    pub fn tag(&self) -> Tag {
        match self {
            Body::InputCommitments(_) => Tag::InputCommitments,
            Body::InputDigest(_) => Tag::InputDigest,
            Body::InputDigests(_) => Tag::InputDigests,
            Body::CoinCommit(_) => Tag::CoinCommit,
            Body::CoinOpen(_) => Tag::CoinOpen,
            Body::Challenge(_) => Tag::Challenge,
            Body::CheckOpenings(_) => Tag::CheckOpenings,
            Body::HashTuples(_) => Tag::HashTuples,
            Body::InputStatus(_) => Tag::InputStatus,
            Body::ProofOpenings(_) => Tag::ProofOpenings,
            Body::Rebuttal { .. } => Tag::Rebuttal,
            Body::InputAbort(_) => Tag::InputAbort,
            Body::GarbledCircuit(_) => Tag::GarbledCircuit,
            Body::OutputCommitments(_) => Tag::OutputCommitments,
            Body::OutputOpenings(_) => Tag::OutputOpenings,
            Body::BundleDigest(_) => Tag::BundleDigest,
            Body::OutputStatus(_) => Tag::OutputStatus,
            Body::Abort(_) => Tag::Abort,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub session: u64,
    pub sender: Role,
    pub body: Body,
}

impl Message {
    pub fn tag(&self) -> Tag {
        self.body.tag()
    }
}

// ---------------------------------------------------------------------------
// Encoding helpers

fn put_role(w: &mut Writer, r: Role) {
    let (k, i) = match r {
        Role::P1 => (0, 0),
        Role::P2 => (1, 0),
        Role::Provider(u) => (2, u),
        Role::CloudProvider => (3, 0),
    };
    w.u8(k).u32(i);
}

fn get_role(r: &mut Reader) -> Result<Role, CodecError> {
    let k = r.u8()?;
    let i = r.u32()?;
    match (k, i) {
        (0, 0) => Ok(Role::P1),
        (1, 0) => Ok(Role::P2),
        (2, u) => Ok(Role::Provider(u)),
        (3, 0) => Ok(Role::CloudProvider),
        _ => Err(CodecError::Invalid(format!("role {k}/{i}"))),
    }
}

fn put_party(w: &mut Writer, p: Party) {
    w.u8(p.index() as u8);
}

fn get_party(r: &mut Reader) -> Result<Party, CodecError> {
    match r.u8()? {
        0 => Ok(Party::P1),
        1 => Ok(Party::P2),
        b => Err(CodecError::Invalid(format!("party {b}"))),
    }
}

fn get_bool(r: &mut Reader) -> Result<bool, CodecError> {
    match r.u8()? {
        0 => Ok(false),
        1 => Ok(true),
        b => Err(CodecError::Invalid(format!("flag {b}"))),
    }
}

fn put_commitment(w: &mut Writer, c: &Commitment) {
    w.bytes(&c.0);
}

fn get_commitment(r: &mut Reader) -> Result<Commitment, CodecError> {
    Ok(Commitment(r.array()?))
}

fn put_opening(w: &mut Writer, o: &Opening) {
    w.var_bytes(&o.message).bytes(&o.randomness.0);
}

fn get_opening(r: &mut Reader) -> Result<Opening, CodecError> {
    let message = r.var_bytes()?.to_vec();
    Ok(Opening { message, randomness: Nonce(r.array()?) })
}

const MIN_OPENING: usize = 4 + NONCE_LEN;

fn put_list<T>(w: &mut Writer, xs: &[T], mut f: impl FnMut(&mut Writer, &T)) {
    w.u32(xs.len() as u32);
    for x in xs {
        f(w, x);
    }
}

fn get_list<'a, T>(
    r: &mut Reader<'a>,
    min: usize,
    mut f: impl FnMut(&mut Reader<'a>) -> Result<T, CodecError>,
) -> Result<Vec<T>, CodecError> {
    let n = r.count(min.max(1))?;
    (0..n).map(|_| f(r)).collect()
}

fn put_copy(w: &mut Writer, c: &CopyCommitments) {
    for x in c.all() {
        put_commitment(w, &x);
    }
}

fn get_copy(r: &mut Reader) -> Result<CopyCommitments, CodecError> {
    let mut all = [Commitment([0; DIGEST_LEN]); COMMITMENTS_PER_COPY];
    for c in &mut all {
        *c = get_commitment(r)?;
    }
    Ok(CopyCommitments::from_all(all))
}

fn put_check(w: &mut Writer, o: &CheckOpening) {
    for x in o.w.iter().chain(&o.w_prime) {
        put_opening(w, x);
    }
}

fn get_check(r: &mut Reader) -> Result<CheckOpening, CodecError> {
    let w = [get_opening(r)?, get_opening(r)?];
    let w_prime = [get_opening(r)?, get_opening(r)?];
    Ok(CheckOpening { w, w_prime })
}

fn put_tuple(w: &mut Writer, t: &HashTuple) {
    w.bytes(&t.h[0]).bytes(&t.h[1]);
    put_commitment(w, &t.c[0]);
    put_commitment(w, &t.c[1]);
}

fn get_tuple(r: &mut Reader) -> Result<HashTuple, CodecError> {
    let h = [r.array()?, r.array()?];
    let c = [get_commitment(r)?, get_commitment(r)?];
    Ok(HashTuple { h, c })
}

fn put_proof(w: &mut Writer, p: &ConsistencyProof) {
    w.u32(p.provider).u32(p.wire);
    put_party(w, p.accuser);
    for h in &p.h {
        w.bytes(h);
    }
    for c in &p.c {
        put_commitment(w, c);
    }
}

fn get_proof(r: &mut Reader) -> Result<ConsistencyProof, CodecError> {
    let provider = r.u32()?;
    let wire = r.u32()?;
    let accuser = get_party(r)?;
    let h = [r.array()?, r.array()?, r.array()?];
    let c = [get_commitment(r)?, get_commitment(r)?, get_commitment(r)?];
    Ok(ConsistencyProof { provider, wire, accuser, h, c })
}

fn put_reason(w: &mut Writer, a: &AbortReason) {
    match a {
        AbortReason::CoinTossCheat { cheater, commitment, opening } => {
            w.u8(1);
            put_party(w, *cheater);
            put_commitment(w, commitment);
            put_opening(w, opening);
        }
        AbortReason::DigestMismatch { provider } => {
            w.u8(2).u32(*provider);
        }
        AbortReason::ChallengeMismatch => {
            w.u8(3);
        }
        AbortReason::InputRejected => {
            w.u8(4);
        }
        AbortReason::Evaluation { garbler } => {
            w.u8(5);
            put_party(w, *garbler);
        }
        AbortReason::Protocol(s) => {
            w.u8(6).var_bytes(s.as_bytes());
        }
        AbortReason::Timeout(role) => {
            w.u8(7);
            put_role(w, *role);
        }
        AbortReason::Transport(s) => {
            w.u8(8).var_bytes(s.as_bytes());
        }
        AbortReason::Peer(role) => {
            w.u8(9);
            put_role(w, *role);
        }
    }
}

fn get_string(r: &mut Reader) -> Result<String, CodecError> {
    String::from_utf8(r.var_bytes()?.to_vec()).map_err(|_| CodecError::Invalid("utf-8".into()))
}

fn get_reason(r: &mut Reader) -> Result<AbortReason, CodecError> {
    Ok(match r.u8()? {
        1 => AbortReason::CoinTossCheat {
            cheater: get_party(r)?,
            commitment: get_commitment(r)?,
            opening: get_opening(r)?,
        },
        2 => AbortReason::DigestMismatch { provider: r.u32()? },
        3 => AbortReason::ChallengeMismatch,
        4 => AbortReason::InputRejected,
        5 => AbortReason::Evaluation { garbler: get_party(r)? },
        6 => AbortReason::Protocol(get_string(r)?),
        7 => AbortReason::Timeout(get_role(r)?),
        8 => AbortReason::Transport(get_string(r)?),
        9 => AbortReason::Peer(get_role(r)?),
        b => return Err(CodecError::Invalid(format!("abort reason {b}"))),
    })
}

fn put_allegation(w: &mut Writer, a: &Allegation) {
    match a {
        Allegation::Construction { provider, wire, copy, opening } => {
            w.u8(1).u32(*provider).u32(*wire).u32(*copy);
            put_check(w, opening);
        }
        Allegation::BadOpening { provider, wire, copy } => {
            w.u8(2).u32(*provider).u32(*wire).u32(*copy);
        }
        Allegation::Inconsistent { proof, opening } => {
            w.u8(3);
            put_proof(w, proof);
            put_opening(w, opening);
        }
    }
}

fn get_allegation(r: &mut Reader) -> Result<Allegation, CodecError> {
    Ok(match r.u8()? {
        1 => Allegation::Construction { provider: r.u32()?, wire: r.u32()?, copy: r.u32()?, opening: get_check(r)? },
        2 => Allegation::BadOpening { provider: r.u32()?, wire: r.u32()?, copy: r.u32()? },
        3 => Allegation::Inconsistent { proof: get_proof(r)?, opening: get_opening(r)? },
        b => return Err(CodecError::Invalid(format!("allegation kind {b}"))),
    })
}

fn put_output_status(w: &mut Writer, s: &OutputStatus) {
    match s {
        OutputStatus::Ok => {
            w.u8(0);
        }
        OutputStatus::Failure(p) => {
            w.u8(1).u32(p.provider);
            for o in p.openings.p1.iter().chain(&p.openings.p2) {
                put_opening(w, o);
            }
        }
        OutputStatus::OpeningError(party) => {
            w.u8(2);
            put_party(w, *party);
        }
        OutputStatus::BundleMismatch => {
            w.u8(3);
        }
    }
}

fn get_output_status(r: &mut Reader) -> Result<OutputStatus, CodecError> {
    Ok(match r.u8()? {
        0 => OutputStatus::Ok,
        1 => {
            let provider = r.u32()?;
            let p1 = [get_opening(r)?, get_opening(r)?];
            let p2 = [get_opening(r)?, get_opening(r)?];
            OutputStatus::Failure(OutputFailureProof { provider, openings: ProviderOpenings { p1, p2 } })
        }
        2 => OutputStatus::OpeningError(get_party(r)?),
        3 => OutputStatus::BundleMismatch,
        b => return Err(CodecError::Invalid(format!("output status {b}"))),
    })
}

fn encode_body(w: &mut Writer, body: &Body) {
    match body {
        Body::InputCommitments(wires) => put_list(w, wires, |w, copies| put_list(w, copies, put_copy)),
        Body::InputDigest(h) | Body::BundleDigest(h) => {
            w.bytes(h);
        }
        Body::InputDigests(hs) => put_list(w, hs, |w, h| {
            w.bytes(h);
        }),
        Body::CoinCommit(cs) => put_list(w, cs, put_commitment),
        Body::CoinOpen(os) => put_list(w, os, put_opening),
        Body::Challenge(rho) => put_list(w, rho, |w, wires| {
            put_list(w, wires, |w, bits| {
                w.u16(bits.len() as u16).bytes(&pack_bits(bits));
            })
        }),
        Body::CheckOpenings(wires) => put_list(w, wires, |w, wo| {
            put_list(w, &wo.check, put_check);
            put_list(w, &wo.eval, |w, e| {
                put_opening(w, &e.position);
                put_opening(w, &e.triple);
            });
        }),
        Body::HashTuples(t) => put_list(w, t, |w, wires| {
            put_list(w, wires, |w, t| match t {
                None => {
                    w.u8(0);
                }
                Some(t) => {
                    w.u8(1);
                    put_tuple(w, t);
                }
            })
        }),
        Body::InputStatus(a) => put_list(w, a, put_allegation),
        Body::ProofOpenings(rs) => put_list(w, rs, |w, r| {
            w.u32(r.provider).u32(r.wire);
            put_tuple(w, &r.tuple);
            put_opening(w, &r.openings[0]);
            put_opening(w, &r.openings[1]);
        }),
        Body::Rebuttal { wire_digests, wires } => {
            put_list(w, wire_digests, |w, h| {
                w.bytes(h);
            });
            put_list(w, wires, |w, r| {
                w.u32(r.wire);
                put_list(w, &r.commitments, put_copy);
                put_list(w, &r.check, put_check);
                put_list(w, &r.eval, |w, c| {
                    put_opening(w, &c.position);
                    put_opening(w, &c.triples[0]);
                    put_opening(w, &c.triples[1]);
                });
            });
        }
        Body::InputAbort(a) | Body::Abort(a) => put_reason(w, a),
        Body::GarbledCircuit(t) => {
            w.bytes(&t.to_bytes());
        }
        Body::OutputCommitments(cs) => put_list(w, cs, |w, c| {
            put_commitment(w, &c[0]);
            put_commitment(w, &c[1]);
        }),
        Body::OutputOpenings(o) => {
            put_opening(w, &o[0]);
            put_opening(w, &o[1]);
        }
        Body::OutputStatus(s) => put_output_status(w, s),
    }
}

fn decode_body(tag: Tag, r: &mut Reader) -> Result<Body, CodecError> {
    const C: usize = DIGEST_LEN;
    Ok(match tag {
        Tag::InputCommitments => {
            Body::InputCommitments(get_list(r, 4, |r| get_list(r, COMMITMENTS_PER_COPY * C, get_copy))?)
        }
        Tag::InputDigest => Body::InputDigest(r.array()?),
        Tag::BundleDigest => Body::BundleDigest(r.array()?),
        Tag::InputDigests => Body::InputDigests(get_list(r, C, |r| r.array())?),
        Tag::CoinCommit => Body::CoinCommit(get_list(r, C, get_commitment)?),
        Tag::CoinOpen => Body::CoinOpen(get_list(r, MIN_OPENING, get_opening)?),
        Tag::Challenge => Body::Challenge(get_list(r, 4, |r| {
            get_list(r, 2, |r| {
                let s = r.u16()? as usize;
                Ok(unpack_bits(r.take(s.div_ceil(8))?, s))
            })
        })?),
        Tag::CheckOpenings => Body::CheckOpenings(get_list(r, 8, |r| {
            let check = get_list(r, 4 * MIN_OPENING, get_check)?;
            let eval = get_list(r, 2 * MIN_OPENING, |r| {
                Ok(EvalOpening { position: get_opening(r)?, triple: get_opening(r)? })
            })?;
            Ok(WireOpenings { check, eval })
        })?),
        Tag::HashTuples => Body::HashTuples(get_list(r, 4, |r| {
            get_list(r, 1, |r| if get_bool(r)? { get_tuple(r).map(Some) } else { Ok(None) })
        })?),
        Tag::InputStatus => Body::InputStatus(get_list(r, 13, get_allegation)?),
        Tag::ProofOpenings => Body::ProofOpenings(get_list(r, 8 + 4 * C + 2 * MIN_OPENING, |r| {
            Ok(ProofReply {
                provider: r.u32()?,
                wire: r.u32()?,
                tuple: get_tuple(r)?,
                openings: [get_opening(r)?, get_opening(r)?],
            })
        })?),
        Tag::Rebuttal => {
            let wire_digests = get_list(r, C, |r| r.array())?;
            let wires = get_list(r, 16, |r| {
                Ok(WireRebuttal {
                    wire: r.u32()?,
                    commitments: get_list(r, COMMITMENTS_PER_COPY * C, get_copy)?,
                    check: get_list(r, 4 * MIN_OPENING, get_check)?,
                    eval: get_list(r, 3 * MIN_OPENING, |r| {
                        Ok(RebuttalCopy { position: get_opening(r)?, triples: [get_opening(r)?, get_opening(r)?] })
                    })?,
                })
            })?;
            Body::Rebuttal { wire_digests, wires }
        }
        Tag::InputAbort => Body::InputAbort(get_reason(r)?),
        Tag::Abort => Body::Abort(get_reason(r)?),
        Tag::GarbledCircuit => {
            let rest = r.take(r.remaining())?;
            let t = GarbledTables::from_bytes(rest).map_err(|e| CodecError::Invalid(e.to_string()))?;
            Body::GarbledCircuit(t)
        }
        Tag::OutputCommitments => {
            Body::OutputCommitments(get_list(r, 2 * C, |r| Ok([get_commitment(r)?, get_commitment(r)?]))?)
        }
        Tag::OutputOpenings => Body::OutputOpenings([get_opening(r)?, get_opening(r)?]),
        Tag::OutputStatus => Body::OutputStatus(get_output_status(r)?),
    })
}

/// Frames a message. Fails only if the payload exceeds the 32-bit length field.
pub fn frame(m: &Message) -> Result<Vec<u8>, FramingError> {
    let mut w = Writer::new();
    put_role(&mut w, m.sender);
    encode_body(&mut w, &m.body);
    let payload = w.finish();
    let len = payload.len() + 9;
    if len > u32::MAX as usize {
        return Err(FramingError::Oversized(payload.len()));
    }
    let mut out = Vec::with_capacity(4 + len);
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.push(m.tag() as u8);
    out.extend_from_slice(&m.session.to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Inverse of [`frame`]. The input must be exactly one frame.
pub fn unframe(bytes: &[u8]) -> Result<Message, DecodeError> {
    if bytes.len() < FRAME_HEADER {
        return Err(FramingError::Short(bytes.len()).into());
    }
    let declared = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
    if declared != bytes.len() - 4 {
        return Err(FramingError::Length { declared, actual: bytes.len() - 4 }.into());
    }
    let tag = Tag::from_u8(bytes[4]).ok_or(ProtocolError::UnknownTag(bytes[4]))?;
    let session = u64::from_be_bytes(bytes[5..13].try_into().unwrap());
    let payload_err = |err| ProtocolError::Payload { tag: tag.name(), err };
    let mut r = Reader::new(&bytes[FRAME_HEADER..]);
    if r.remaining() < ROLE_LEN {
        return Err(payload_err(CodecError::Truncated { offset: 0, needed: ROLE_LEN }).into());
    }
    let sender = get_role(&mut r).map_err(payload_err)?;
    let body = decode_body(tag, &mut r).map_err(payload_err)?;
    r.finish().map_err(payload_err)?;
    Ok(Message { session, sender, body })
}

/// Length of the frame at the start of `buf`, if its header is complete.
pub fn frame_len(buf: &[u8]) -> Option<usize> {
    (buf.len() >= 4).then(|| 4 + u32::from_be_bytes(buf[..4].try_into().unwrap()) as usize)
}
