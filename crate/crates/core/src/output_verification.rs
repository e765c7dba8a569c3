//! Output commitments, dual decoding and failure proofs.
//!
//! Garbler `k` commits, per provider `u`, to its output encodings
//! `E_{k,u} = ‖_i (K̄⁰ ‖ K̄¹)` and, as evaluator of the other circuit, to the output
//! labels `O_{3−k,u} = ‖_i K̄^{y_i}`. Provider `u` receives the openings of its
//! four commitments, decodes both circuits and accepts only if they agree.

use rand::{CryptoRng, RngCore};

use crate::commit::{self, sha256, Commitment, Context, Opening};
use crate::garble::{self, Encoding, Label, LABEL_LEN};
use crate::input_consistency::Hash;
use crate::Party;

/// What one party holds after garbled evaluation, grouped by provider.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyOutputs {
    /// Output encodings of the circuit this party garbled.
    pub encodings: Vec<Vec<Encoding>>,
    /// Output labels of the circuit this party evaluated.
    pub labels: Vec<Vec<Label>>,
}

/// `[com(E), com(O)]` per provider from one party.
pub type PartyCommitments = Vec<[Commitment; 2]>;
pub type PartyOpenings = Vec<[Opening; 2]>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputCommitmentBundle {
    pub p1: PartyCommitments,
    pub p2: PartyCommitments,
}

impl OutputCommitmentBundle {
    pub fn commitment_count(&self) -> usize {
        2 * (self.p1.len() + self.p2.len())
    }

    pub fn of(&self, party: Party) -> &PartyCommitments {
        match party {
            Party::P1 => &self.p1,
            Party::P2 => &self.p2,
        }
    }

    /// Hash providers exchange to confirm they received the same bundle.
    pub fn digest(&self) -> Hash {
        let mut buf = Vec::with_capacity(self.commitment_count() * 32);
        for c in self.p1.iter().chain(&self.p2).flatten() {
            buf.extend_from_slice(&c.0);
        }
        sha256(&buf)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum OutputError {
    #[error("output encoding for provider {provider}, wire {wire} has equal labels")]
    DegenerateEncoding { provider: usize, wire: usize },
    #[error("{party} sent an output opening that does not match its commitment")]
    Opening { party: Party },
}

fn encodings_message(es: &[Encoding]) -> Vec<u8> {
    es.iter().flat_map(|e| e.to_bytes()).collect()
}

fn labels_message(ls: &[Label]) -> Vec<u8> {
    ls.iter().flat_map(|l| l.to_be_bytes()).collect()
}

fn parse_encodings(o: &Opening) -> Option<Vec<Encoding>> {
    let p = o.payload();
    p.len().is_multiple_of(2 * LABEL_LEN)
        .then(|| p.chunks(2 * LABEL_LEN).map(|c| Encoding::from_bytes(c.try_into().unwrap())).collect())
}

fn parse_labels(o: &Opening) -> Option<Vec<Label>> {
    let p = o.payload();
    p.len().is_multiple_of(LABEL_LEN).then(|| p.chunks(LABEL_LEN).map(|c| u128::from_be_bytes(c.try_into().unwrap())).collect())
}

/// Commits to one party's outputs. Returns the commitments to broadcast and the
/// openings to hand each provider.
pub fn publish_output_commitments<R: RngCore + CryptoRng>(
    out: &PartyOutputs,
    rng: &mut R,
) -> Result<(PartyCommitments, PartyOpenings), OutputError> {
    for (provider, es) in out.encodings.iter().enumerate() {
        if let Some(wire) = es.iter().position(|e| e.zero == e.one) {
            return Err(OutputError::DegenerateEncoding { provider, wire });
        }
    }
    let mut cs = Vec::with_capacity(out.encodings.len());
    let mut os = Vec::with_capacity(out.encodings.len());
    for (es, ls) in out.encodings.iter().zip(&out.labels) {
        let (ce, oe) = commit::commit_tagged(Context::OutputEncoding, &encodings_message(es), rng);
        let (cl, ol) = commit::commit_tagged(Context::OutputLabel, &labels_message(ls), rng);
        cs.push([ce, cl]);
        os.push([oe, ol]);
    }
    Ok((cs, os))
}

/// The four openings provider `u` holds, by sender.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderOpenings {
    pub p1: [Opening; 2],
    pub p2: [Opening; 2],
}

/// Evidence that a provider's two decoded outputs disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFailureProof {
    pub provider: u32,
    pub openings: ProviderOpenings,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputCheck {
    Accept(Vec<bool>),
    Reject(OutputFailureProof),
}

/// Both decodes, or `None` where decoding failed.
fn decode_both(
    u: usize,
    bundle: &OutputCommitmentBundle,
    o: &ProviderOpenings,
) -> Result<[Option<Vec<bool>>; 2], OutputError> {
    let mut parsed_e: [Vec<Encoding>; 2] = Default::default();
    let mut parsed_l: [Vec<Label>; 2] = Default::default();
    for (party, ops) in [(Party::P1, &o.p1), (Party::P2, &o.p2)] {
        let bad = OutputError::Opening { party };
        let cs = bundle.of(party).get(u).ok_or(bad.clone())?;
        if !commit::verify_tagged(&cs[0], &ops[0], Context::OutputEncoding)
            || !commit::verify_tagged(&cs[1], &ops[1], Context::OutputLabel)
        {
            return Err(bad);
        }
        parsed_e[party.index()] = parse_encodings(&ops[0]).ok_or(bad.clone())?;
        parsed_l[party.index()] = parse_labels(&ops[1]).ok_or(bad)?;
    }
    // circuit 1: P1's encodings, P2's labels; circuit 2 the reverse
    let y1 = garble::decode(&parsed_l[1], &parsed_e[0]).ok();
    let y2 = garble::decode(&parsed_l[0], &parsed_e[1]).ok();
    Ok([y1, y2])
}

/// Provider `u`'s check of its openings against the broadcast bundle.
pub fn verify_output(
    u: usize,
    bundle: &OutputCommitmentBundle,
    o: &ProviderOpenings,
) -> Result<OutputCheck, OutputError> {
    match decode_both(u, bundle, o)? {
        [Some(y1), Some(y2)] if y1 == y2 => Ok(OutputCheck::Accept(y1)),
        _ => Ok(OutputCheck::Reject(OutputFailureProof { provider: u as u32, openings: o.clone() })),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofStatus {
    Confirmed,
    Spurious,
}

pub fn verify_failure_proof(proof: &OutputFailureProof, bundle: &OutputCommitmentBundle) -> ProofStatus {
    match decode_both(proof.provider as usize, bundle, &proof.openings) {
        Ok([Some(y1), Some(y2)]) if y1 == y2 => ProofStatus::Spurious,
        Ok(_) => ProofStatus::Confirmed,
        Err(_) => ProofStatus::Spurious,
    }
}

/// Hands provider `u` its openings from both parties.
pub fn openings_for(u: usize, p1: &PartyOpenings, p2: &PartyOpenings) -> ProviderOpenings {
    ProviderOpenings { p1: p1[u].clone(), p2: p2[u].clone() }
}
