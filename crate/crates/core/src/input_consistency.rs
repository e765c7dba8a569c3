//! Input commitments, cut-and-choose and label consistency.
//!
//! For each input wire a provider prepares `s` copies. Copy `j` holds fresh
//! encodings `E1 = (K1⁰, K1¹)` and `E2 = (K2⁰, K2¹)`, a random bit `b`, and two
//! commitment sets:
//!
//! ```text
//! W  = { com(K1⁰ ‖ K1¹ ‖ K2^b),   com(K2⁰ ‖ K2¹ ‖ K1^b)   }
//! W' = { com(K1⁰ ‖ K1¹ ‖ K2^¬b),  com(K2⁰ ‖ K2¹ ‖ K1^¬b)  }
//! ```
//!
//! plus a position commitment to `p = b ⊕ x` (`p = 0` selects `W` as the input
//! set). A coin-tossed challenge splits the copies into check sets, opened in
//! full, and evaluation sets, whose input sets are opened: the first commitment
//! to P1, the second to P2. XOR-ed label hashes let each party test that the
//! other party's encoding contains its own cross label.

use rand::{CryptoRng, Rng, RngCore};

use crate::codec::{pack_bits, unpack_bits};
use crate::commit::{self, sha256, Commitment, Context, Opening, DIGEST_LEN};
use crate::garble::{Encoding, Label};
use crate::Party;

pub type Hash = [u8; DIGEST_LEN];

/// Commitments per copy: two sets of two plus the position.
pub const COMMITMENTS_PER_COPY: usize = 5;

/// One committed triple: an encoding for one circuit and a label for the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triple {
    pub enc: Encoding,
    pub cross: Label,
}

impl Triple {
    pub fn to_bytes(&self) -> [u8; 48] {
        let mut b = [0u8; 48];
        b[..32].copy_from_slice(&self.enc.to_bytes());
        b[32..].copy_from_slice(&self.cross.to_be_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() != 48 {
            return None;
        }
        Some(Triple {
            enc: Encoding::from_bytes(b[..32].try_into().unwrap()),
            cross: u128::from_be_bytes(b[32..].try_into().unwrap()),
        })
    }

    /// Label hash for position `q` ∈ {0, 1, 2}: zero label, one label, cross label.
    pub fn hash(&self, q: usize) -> Hash {
        let l = match q {
            0 => self.enc.zero,
            1 => self.enc.one,
            _ => self.cross,
        };
        sha256(&l.to_be_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CopyCommitments {
    pub w: [Commitment; 2],
    pub w_prime: [Commitment; 2],
    pub position: Commitment,
}

impl CopyCommitments {
    /// The set selected by position bit `p`.
    pub fn set(&self, p: bool) -> &[Commitment; 2] {
        if p {
            &self.w_prime
        } else {
            &self.w
        }
    }

    pub fn all(&self) -> [Commitment; COMMITMENTS_PER_COPY] {
        [self.w[0], self.w[1], self.w_prime[0], self.w_prime[1], self.position]
    }

    pub fn from_all(c: [Commitment; COMMITMENTS_PER_COPY]) -> Self {
        CopyCommitments { w: [c[0], c[1]], w_prime: [c[2], c[3]], position: c[4] }
    }
}

/// Hash binding all commitments of one wire.
pub fn wire_digest(copies: &[CopyCommitments]) -> Hash {
    let mut buf = Vec::with_capacity(copies.len() * COMMITMENTS_PER_COPY * DIGEST_LEN);
    for c in copies {
        for x in c.all() {
            buf.extend_from_slice(&x.0);
        }
    }
    sha256(&buf)
}

/// Hash binding a provider's whole input commitment, from its per-wire digests.
pub fn input_digest(wire_digests: &[Hash]) -> Hash {
    sha256(&wire_digests.concat())
}

/// Openings of both sets of a check copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOpening {
    pub w: [Opening; 2],
    pub w_prime: [Opening; 2],
}

/// What one party receives for an evaluation copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOpening {
    pub position: Opening,
    pub triple: Opening,
}

#[derive(Clone, Debug)]
pub struct CopySecret {
    pub enc: [Encoding; 2],
    pub b: bool,
    pub position: bool,
    w: [Opening; 2],
    w_prime: [Opening; 2],
    position_opening: Opening,
}

impl CopySecret {
    fn set(&self, p: bool) -> &[Opening; 2] {
        if p {
            &self.w_prime
        } else {
            &self.w
        }
    }
}

/// A provider's material for one input wire.
#[derive(Clone, Debug)]
pub struct WireMaterial {
    pub bit: bool,
    pub commitments: Vec<CopyCommitments>,
    pub secrets: Vec<CopySecret>,
}

fn commit_triple<R: RngCore + CryptoRng>(t: Triple, rng: &mut R) -> (Commitment, Opening) {
    commit::commit_tagged(Context::InputSet, &t.to_bytes(), rng)
}

impl WireMaterial {
    /// Honest material for input bit `x` with `s` copies.
    pub fn honest<R: RngCore + CryptoRng>(x: bool, s: usize, rng: &mut R) -> Self {
        Self::with_pattern(x, &vec![true; s], rng)
    }

    /// Material where copy `j` is well formed iff `consistent[j]`. A malformed
    /// copy crosses its labels so that P1 receives the circuit-2 label for `x`
    /// while P2 receives the circuit-1 label for `¬x`.
    pub fn with_pattern<R: RngCore + CryptoRng>(x: bool, consistent: &[bool], rng: &mut R) -> Self {
        let mut commitments = Vec::with_capacity(consistent.len());
        let mut secrets = Vec::with_capacity(consistent.len());
        for &ok in consistent {
            let enc = [Encoding::random(rng), Encoding::random(rng)];
            let b: bool = rng.gen();
            let position = b ^ x;
            // cross-label bits placed in (W, W') for each of the two triples
            let (w_bits, wp_bits) = if ok { ([b, b], [!b, !b]) } else { ([b, !b], [!b, b]) };
            let mk = |bits: [bool; 2], rng: &mut R| {
                let t1 = Triple { enc: enc[0], cross: enc[1].label(bits[0]) };
                let t2 = Triple { enc: enc[1], cross: enc[0].label(bits[1]) };
                let (c1, o1) = commit_triple(t1, rng);
                let (c2, o2) = commit_triple(t2, rng);
                ([c1, c2], [o1, o2])
            };
            let (wc, wo) = mk(w_bits, rng);
            let (wpc, wpo) = mk(wp_bits, rng);
            let (pc, po) = commit::commit_tagged(Context::Position, &[position as u8], rng);
            commitments.push(CopyCommitments { w: wc, w_prime: wpc, position: pc });
            secrets.push(CopySecret { enc, b, position, w: wo, w_prime: wpo, position_opening: po });
        }
        WireMaterial { bit: x, commitments, secrets }
    }

    pub fn copies(&self) -> usize {
        self.commitments.len()
    }

    pub fn digest(&self) -> Hash {
        wire_digest(&self.commitments)
    }

    pub fn check_opening(&self, j: usize) -> CheckOpening {
        let s = &self.secrets[j];
        CheckOpening { w: s.w.clone(), w_prime: s.w_prime.clone() }
    }

    pub fn eval_opening(&self, j: usize, party: Party) -> EvalOpening {
        let s = &self.secrets[j];
        EvalOpening {
            position: s.position_opening.clone(),
            triple: s.set(s.position)[party.index()].clone(),
        }
    }

    pub fn position_opening(&self, j: usize) -> &Opening {
        &self.secrets[j].position_opening
    }

    /// Openings answering a consistency proof against this wire: for every
    /// evaluation copy, the position and both input-set triples.
    pub fn rebuttal(&self, eval_set: &[usize]) -> Rebuttal {
        Rebuttal {
            copies: eval_set
                .iter()
                .map(|&j| {
                    let s = &self.secrets[j];
                    RebuttalCopy { position: s.position_opening.clone(), triples: s.set(s.position).clone() }
                })
                .collect(),
        }
    }
}

/// Honest material for all input bits of one provider.
pub fn generate_input_material<R: RngCore + CryptoRng>(x: &[bool], s: usize, rng: &mut R) -> Vec<WireMaterial> {
    assert!(s >= 2, "at least two copies per wire");
    x.iter().map(|&bit| WireMaterial::honest(bit, s, rng)).collect()
}

pub fn commitment_count(material: &[WireMaterial]) -> usize {
    material.iter().map(|w| w.copies() * COMMITMENTS_PER_COPY).sum()
}

// ---------------------------------------------------------------------------
// Coin toss

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CoinTossError {
    #[error("{0} revealed a coin that does not match its commitment")]
    Cheat(Party),
}

pub fn coin_commit<R: RngCore + CryptoRng>(s: usize, rng: &mut R) -> (Vec<bool>, Commitment, Opening) {
    let bits: Vec<bool> = (0..s).map(|_| rng.gen()).collect();
    let mut payload = (s as u16).to_be_bytes().to_vec();
    payload.extend(pack_bits(&bits));
    let (c, o) = commit::commit_tagged(Context::CoinToss, &payload, rng);
    (bits, c, o)
}

/// Recovers the committed contribution, if the opening is valid.
pub fn coin_open(c: &Commitment, o: &Opening, s: usize) -> Option<Vec<bool>> {
    if !commit::verify_tagged(c, o, Context::CoinToss) {
        return None;
    }
    let p = o.payload();
    if p.len() != 2 + s.div_ceil(8) || u16::from_be_bytes([p[0], p[1]]) as usize != s {
        return None;
    }
    Some(unpack_bits(&p[2..], s))
}

/// `ρ = ρ1 ⊕ ρ2`; `None` when ρ is all zeros or all ones and must be re-tossed.
pub fn coin_toss(rho1: &[bool], rho2: &[bool]) -> Option<Vec<bool>> {
    let rho: Vec<bool> = rho1.iter().zip(rho2).map(|(a, b)| a ^ b).collect();
    let ones = rho.iter().filter(|&&b| b).count();
    (ones != 0 && ones != rho.len()).then_some(rho)
}

/// Combines two committed contributions.
pub fn coin_toss_committed(
    s: usize,
    p1: (&Commitment, &Opening),
    p2: (&Commitment, &Opening),
) -> Result<Option<Vec<bool>>, CoinTossError> {
    let r1 = coin_open(p1.0, p1.1, s).ok_or(CoinTossError::Cheat(Party::P1))?;
    let r2 = coin_open(p2.0, p2.1, s).ok_or(CoinTossError::Cheat(Party::P2))?;
    Ok(coin_toss(&r1, &r2))
}

pub fn check_set(rho: &[bool]) -> Vec<usize> {
    (0..rho.len()).filter(|&j| rho[j]).collect()
}

pub fn eval_set(rho: &[bool]) -> Vec<usize> {
    (0..rho.len()).filter(|&j| !rho[j]).collect()
}

// ---------------------------------------------------------------------------
// Commitment construction check

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CheckFailure {
    #[error("invalid opening: {0}")]
    Opening(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

fn open_triple(c: &Commitment, o: &Opening) -> Result<Triple, CheckFailure> {
    if !commit::verify_tagged(c, o, Context::InputSet) {
        return Err(CheckFailure::Opening("triple does not open its commitment".into()));
    }
    Triple::from_bytes(o.payload()).ok_or_else(|| CheckFailure::Opening("triple has wrong length".into()))
}

fn check_set_pair(t: &[Triple; 2]) -> Option<bool> {
    let [a, b] = t;
    if a.enc.zero == a.enc.one || b.enc.zero == b.enc.one {
        return None;
    }
    if a.enc.zero == b.cross && b.enc.zero == a.cross {
        Some(false)
    } else if a.enc.one == b.cross && b.enc.one == a.cross {
        Some(true)
    } else {
        None
    }
}

/// Verifies a fully opened check copy.
pub fn check_construction(c: &CopyCommitments, o: &CheckOpening) -> Result<(), CheckFailure> {
    let w = [open_triple(&c.w[0], &o.w[0])?, open_triple(&c.w[1], &o.w[1])?];
    let wp = [open_triple(&c.w_prime[0], &o.w_prime[0])?, open_triple(&c.w_prime[1], &o.w_prime[1])?];
    if w[0].enc != wp[0].enc || w[1].enc != wp[1].enc {
        return Err(CheckFailure::BadInput("W and W' carry different encodings".into()));
    }
    let bw = check_set_pair(&w).ok_or_else(|| CheckFailure::BadInput("W is not well formed".into()))?;
    let bwp = check_set_pair(&wp).ok_or_else(|| CheckFailure::BadInput("W' is not well formed".into()))?;
    if bw == bwp {
        return Err(CheckFailure::BadInput("W and W' encode the same bit".into()));
    }
    Ok(())
}

/// Opens an evaluation copy as seen by `party`; returns the position bit and triple.
pub fn open_eval(c: &CopyCommitments, o: &EvalOpening, party: Party) -> Result<(bool, Triple), CheckFailure> {
    if !commit::verify_tagged(&c.position, &o.position, Context::Position) {
        return Err(CheckFailure::Opening("position does not open its commitment".into()));
    }
    let p = match o.position.payload() {
        [0] => false,
        [1] => true,
        _ => return Err(CheckFailure::Opening("position is not a bit".into())),
    };
    let t = open_triple(&c.set(p)[party.index()], &o.triple)?;
    Ok((p, t))
}

// ---------------------------------------------------------------------------
// Label consistency

/// A party's label hashes over its evaluation triples (ascending copy index).
#[derive(Clone, Debug)]
pub struct LabelHashes {
    pub xor: [Hash; 3],
    pub per_copy: [Vec<Hash>; 3],
    pub commitments: [Commitment; 3],
    pub openings: [Opening; 3],
}

/// The reordered hash pair sent to the other party.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashTuple {
    pub h: [Hash; 2],
    pub c: [Commitment; 2],
}

fn xor_hashes(hs: &[Hash]) -> Hash {
    let mut out = [0u8; DIGEST_LEN];
    for h in hs {
        for (o, x) in out.iter_mut().zip(h) {
            *o ^= x;
        }
    }
    out
}

/// Commits to a list of per-copy hashes.
pub fn commit_hash_list<R: RngCore + CryptoRng>(hs: &[Hash], rng: &mut R) -> (Hash, Commitment, Opening) {
    let (c, o) = commit::commit_tagged(Context::LabelHash, &hs.concat(), rng);
    (xor_hashes(hs), c, o)
}

pub fn label_hashes<R: RngCore + CryptoRng>(triples: &[Triple], rng: &mut R) -> LabelHashes {
    let per_copy: [Vec<Hash>; 3] = [0, 1, 2].map(|q| triples.iter().map(|t| t.hash(q)).collect());
    let mut xor = [[0u8; DIGEST_LEN]; 3];
    let mut commitments = Vec::with_capacity(3);
    let mut openings = Vec::with_capacity(3);
    for q in 0..3 {
        let (h, c, o) = commit_hash_list(&per_copy[q], rng);
        xor[q] = h;
        commitments.push(c);
        openings.push(o);
    }
    LabelHashes {
        xor,
        per_copy,
        commitments: commitments.try_into().unwrap(),
        openings: openings.try_into().unwrap(),
    }
}

impl LabelHashes {
    /// The encoding hashes, swapped when `swap` is set, with matching openings.
    pub fn reordered(&self, swap: bool) -> (HashTuple, [Opening; 2]) {
        let (a, b) = if swap { (1, 0) } else { (0, 1) };
        (
            HashTuple { h: [self.xor[a], self.xor[b]], c: [self.commitments[a], self.commitments[b]] },
            [self.openings[a].clone(), self.openings[b].clone()],
        )
    }

    /// Whether our cross-label hash is one of the other party's encoding hashes.
    pub fn accepts(&self, other: &HashTuple) -> bool {
        other.h.contains(&self.xor[2])
    }
}

/// Evidence that the cross labels one party received do not belong to the
/// other party's encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConsistencyProof {
    pub provider: u32,
    pub wire: u32,
    pub accuser: Party,
    /// `(H̃¹, H̃², H³)`: the other party's reordered encoding hashes, then ours.
    pub h: [Hash; 3],
    pub c: [Commitment; 3],
}

pub fn make_proof(provider: u32, wire: u32, accuser: Party, own: &LabelHashes, other: &HashTuple) -> ConsistencyProof {
    ConsistencyProof {
        provider,
        wire,
        accuser,
        h: [other.h[0], other.h[1], own.xor[2]],
        c: [other.c[0], other.c[1], own.commitments[2]],
    }
}

/// Openings gathered by the verifying provider.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofOpenings {
    /// From the party that did not raise the proof, for `c[0]` and `c[1]`.
    pub other: [Opening; 2],
    /// From the accuser, for `c[2]`.
    pub accuser: Opening,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RebuttalCopy {
    pub position: Opening,
    pub triples: [Opening; 2],
}

/// The accused provider's openings of its evaluation copies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rebuttal {
    pub copies: Vec<RebuttalCopy>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofVerdict {
    /// The provider's committed labels are inconsistent.
    CheatingProvider,
    /// The proof does not match what was committed. `Some` when the culprit is identified.
    CheatingParty(Option<Party>),
    /// The proof does not show any inconsistency.
    ProofInvalid,
}

#[derive(Debug, thiserror::Error, Clone, Copy, PartialEq, Eq)]
#[error("{party} sent an opening that does not match its commitment")]
pub struct OpeningError {
    pub party: Party,
}

fn open_hash_list(c: &Commitment, o: &Opening, n: usize) -> Option<Vec<Hash>> {
    if !commit::verify_tagged(c, o, Context::LabelHash) || o.payload().len() != n * DIGEST_LEN {
        return None;
    }
    Some(o.payload().chunks(DIGEST_LEN).map(|h| h.try_into().unwrap()).collect())
}

/// The triples committed for the evaluation copies, as the provider opened them.
fn rebuttal_triples(copies: &[CopyCommitments], eval: &[usize], r: &Rebuttal) -> Option<Vec<[Triple; 2]>> {
    if r.copies.len() != eval.len() {
        return None;
    }
    eval.iter()
        .zip(&r.copies)
        .map(|(&j, rc)| {
            let c = copies.get(j)?;
            let mut out = [Triple { enc: Encoding { zero: 0, one: 0 }, cross: 0 }; 2];
            for party in [Party::P1, Party::P2] {
                let o = EvalOpening { position: rc.position.clone(), triple: rc.triples[party.index()].clone() };
                out[party.index()] = open_eval(c, &o, party).ok()?.1;
            }
            Some(out)
        })
        .collect()
}

/// Checks a consistency proof for the wire whose evaluation copies are `eval`.
///
/// `rebuttal` carries the accused provider's commitments for the wire (already
/// authenticated by the caller) and its openings. With a valid rebuttal the
/// verdict follows from what the provider really committed, so a party cannot
/// frame an honest provider by committing to invented hashes.
pub fn verify_consistency_proof(
    proof: &ConsistencyProof,
    eval: &[usize],
    openings: &ProofOpenings,
    rebuttal: Option<(&[CopyCommitments], &Rebuttal)>,
) -> Result<ProofVerdict, OpeningError> {
    let n = eval.len();
    let accuser = proof.accuser;
    let other = accuser.other();
    let o1 = open_hash_list(&proof.c[0], &openings.other[0], n).ok_or(OpeningError { party: other })?;
    let o2 = open_hash_list(&proof.c[1], &openings.other[1], n).ok_or(OpeningError { party: other })?;
    let own = open_hash_list(&proof.c[2], &openings.accuser, n).ok_or(OpeningError { party: accuser })?;

    if xor_hashes(&o1) != proof.h[0] || xor_hashes(&o2) != proof.h[1] || xor_hashes(&own) != proof.h[2] {
        return Ok(ProofVerdict::CheatingParty(None));
    }
    if proof.h[2] == proof.h[0] || proof.h[2] == proof.h[1] || own == o1 || own == o2 {
        return Ok(ProofVerdict::ProofInvalid);
    }
    let Some((copies, r)) = rebuttal else {
        return Ok(ProofVerdict::CheatingProvider);
    };
    let Some(triples) = rebuttal_triples(copies, eval, r) else {
        return Ok(ProofVerdict::CheatingProvider);
    };
    let true_own: Vec<Hash> = triples.iter().map(|t| t[accuser.index()].hash(2)).collect();
    if true_own != own {
        return Ok(ProofVerdict::CheatingParty(Some(accuser)));
    }
    let zeros: Vec<Hash> = triples.iter().map(|t| t[other.index()].hash(0)).collect();
    let ones: Vec<Hash> = triples.iter().map(|t| t[other.index()].hash(1)).collect();
    if !((o1 == zeros && o2 == ones) || (o1 == ones && o2 == zeros)) {
        return Ok(ProofVerdict::CheatingParty(Some(other)));
    }
    Ok(ProofVerdict::CheatingProvider)
}

// ---------------------------------------------------------------------------
// Final labels

/// A party's labels for one wire: its own circuit's encoding and the input
/// label for the other party's circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FinalLabels {
    pub encoding: Encoding,
    pub label: Label,
}

pub fn final_labels(triples: &[Triple]) -> FinalLabels {
    let mut f = FinalLabels { encoding: Encoding { zero: 0, one: 0 }, label: 0 };
    for t in triples {
        f.encoding.zero ^= t.enc.zero;
        f.encoding.one ^= t.enc.one;
        f.label ^= t.cross;
    }
    f
}

// ---------------------------------------------------------------------------
// Whole-wire run between two honest parties

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireFailure {
    /// A check copy failed the construction check.
    Construction { copy: usize, failure: CheckFailure },
    /// An evaluation opening did not verify.
    Opening { copy: usize, party: Party },
    /// Label consistency failed; one proof per complaining party.
    Inconsistent(Vec<ConsistencyProof>),
}

/// Runs the construction and label-consistency checks for one wire with the
/// given challenge, as two honest parties would, and returns their final labels
/// (P1's first).
pub fn run_wire_checks<R: RngCore + CryptoRng>(
    provider: u32,
    wire: u32,
    m: &WireMaterial,
    rho: &[bool],
    rng: &mut R,
) -> Result<[FinalLabels; 2], WireFailure> {
    for j in check_set(rho) {
        check_construction(&m.commitments[j], &m.check_opening(j))
            .map_err(|failure| WireFailure::Construction { copy: j, failure })?;
    }
    let eval = eval_set(rho);
    let mut triples: [Vec<Triple>; 2] = [Vec::new(), Vec::new()];
    for party in [Party::P1, Party::P2] {
        for &j in &eval {
            let (_, t) = open_eval(&m.commitments[j], &m.eval_opening(j, party), party)
                .map_err(|_| WireFailure::Opening { copy: j, party })?;
            triples[party.index()].push(t);
        }
    }
    let hashes = [label_hashes(&triples[0], rng), label_hashes(&triples[1], rng)];
    let tuples = [hashes[0].reordered(rng.gen()).0, hashes[1].reordered(rng.gen()).0];
    let mut proofs = Vec::new();
    for party in [Party::P1, Party::P2] {
        let k = party.index();
        if !hashes[k].accepts(&tuples[1 - k]) {
            proofs.push(make_proof(provider, wire, party, &hashes[k], &tuples[1 - k]));
        }
    }
    if !proofs.is_empty() {
        return Err(WireFailure::Inconsistent(proofs));
    }
    Ok([final_labels(&triples[0]), final_labels(&triples[1])])
}
