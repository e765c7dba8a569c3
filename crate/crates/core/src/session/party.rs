//! The computation parties.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::adversary::Behavior;
use super::message::{AbortReason, Allegation, Body, Phase, ProofReply, Tag, WireOpenings};
use super::transport::{Endpoint, Stop};
use super::{protocol, unexpected, Common, PartyState, Role, RolePhase};
use crate::garble::{self, Encoding, GateFault, Label};
use crate::input_consistency::{
    self as ic, check_construction, check_set, coin_commit, coin_open, coin_toss, eval_set, label_hashes, make_proof,
    CheckFailure, CopyCommitments, HashTuple, LabelHashes, Triple,
};
use crate::output_verification::{publish_output_commitments, PartyOutputs};
use crate::commit::Opening;
use crate::Party;

/// Re-toss rounds before giving up on a degenerate challenge.
const MAX_TOSS_ROUNDS: usize = 64;

enum Flow {
    Done,
    Rejected,
}

pub(super) fn run(
    ep: &mut Endpoint,
    party: Party,
    common: &Common,
    mut rng: ChaCha20Rng,
    behavior: Option<&Behavior>,
) -> PartyState {
    let role = Role::party(party);
    ep.set_phase(Some(Phase::Input));
    let phase = match run_inner(ep, party, common, &mut rng, behavior) {
        Ok(Flow::Done) => RolePhase::Done,
        Ok(Flow::Rejected) => RolePhase::Aborted(AbortReason::InputRejected),
        Err(Stop::Local(reason)) => {
            ep.broadcast_abort(reason.clone());
            RolePhase::Aborted(reason)
        }
        Err(Stop::Peer { reason, .. }) => {
            // relayed unchanged so that evidence reaches every provider
            ep.broadcast_abort(reason.clone());
            RolePhase::Aborted(reason)
        }
    };
    ep.set_phase(None);
    PartyState { role, phase }
}

/// Per-wire state after the construction check.
struct WireView {
    triples: Option<Vec<Triple>>,
    hashes: Option<(LabelHashes, HashTuple, [Opening; 2])>,
}

fn run_inner(
    ep: &mut Endpoint,
    party: Party,
    common: &Common,
    rng: &mut ChaCha20Rng,
    behavior: Option<&Behavior>,
) -> Result<Flow, Stop> {
    let other = Role::party(party.other());
    let providers = common.providers();
    let (n, s) = (common.n, common.s);

    // commitments from every provider
    let mut commitments: Vec<Vec<Vec<CopyCommitments>>> = Vec::with_capacity(n + 1);
    for (g, &p) in providers.iter().enumerate() {
        let cm = recv_as!(ep, p, InputCommitments);
        if cm.len() != common.wires(g) || cm.iter().any(|w| w.len() != s) {
            return Err(protocol(format!("{p} committed to the wrong number of wires or copies")));
        }
        commitments.push(cm);
    }
    let digests: Vec<ic::Hash> = commitments
        .iter()
        .map(|cm| ic::input_digest(&cm.iter().map(|w| ic::wire_digest(w)).collect::<Vec<_>>()))
        .collect();
    ep.send(other, Body::InputDigests(digests.clone()))?;
    let theirs = recv_as!(ep, other, InputDigests);
    if theirs.len() != digests.len() {
        return Err(protocol(format!("{other} sent {} digests", theirs.len())));
    }
    if let Some(g) = (0..digests.len()).find(|&g| digests[g] != theirs[g]) {
        return Err(Stop::Local(AbortReason::DigestMismatch { provider: g as u32 }));
    }

    let rhos = toss_challenges(ep, party, common, rng, behavior)?;
    ep.send_all(&providers, Body::Challenge(rhos.clone()))?;

    // construction check and evaluation openings
    let mut allegations = Vec::new();
    let mut views: Vec<Vec<WireView>> = Vec::with_capacity(n + 1);
    let mut received: Vec<Vec<WireOpenings>> = Vec::with_capacity(n + 1);
    for (g, &p) in providers.iter().enumerate() {
        let opened = recv_as!(ep, p, CheckOpenings);
        if opened.len() != common.wires(g) {
            return Err(protocol(format!("{p} opened {} wires", opened.len())));
        }
        let mut row = Vec::with_capacity(opened.len());
        for (i, wo) in opened.iter().enumerate() {
            row.push(check_wire(party, g as u32, i as u32, &commitments[g][i], &rhos[g][i], wo, &mut allegations)?);
        }
        views.push(row);
        received.push(opened);
    }
    if let Some(&Behavior::FalsifyCheckFailure { provider, wire }) = behavior {
        let (g, i) = (provider as usize, wire as usize);
        let copy = check_set(&rhos[g][i])[0];
        // the genuine opening, reported as a construction failure
        let opening = received[g][i].check[0].clone();
        allegations.push(Allegation::Construction { provider, wire, copy: copy as u32, opening });
    }
    drop(received);

    // label hashes
    for (g, row) in views.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let Some(t) = &v.triples else { continue };
            let mut lh = label_hashes(t, rng);
            if behavior == Some(&Behavior::ForgeConsistencyProof { provider: g as u32, wire: i as u32 }) {
                let fake: Vec<ic::Hash> = (0..t.len()).map(|_| rng.gen()).collect();
                let (h, c, o) = ic::commit_hash_list(&fake, rng);
                lh.xor[2] = h;
                lh.per_copy[2] = fake;
                lh.commitments[2] = c;
                lh.openings[2] = o;
            }
            let (tuple, openings) = lh.reordered(rng.gen());
            v.hashes = Some((lh, tuple, openings));
        }
    }
    let tuples: Vec<Vec<Option<HashTuple>>> =
        views.iter().map(|row| row.iter().map(|v| v.hashes.as_ref().map(|h| h.1)).collect()).collect();
    ep.send(other, Body::HashTuples(tuples))?;
    let their_tuples = recv_as!(ep, other, HashTuples);
    if their_tuples.len() != views.len() || their_tuples.iter().zip(&views).any(|(t, v)| t.len() != v.len()) {
        return Err(protocol(format!("{other} sent hash tuples of the wrong shape")));
    }
    for (g, row) in views.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if let (Some((lh, _, _)), Some(t)) = (&v.hashes, &their_tuples[g][i]) {
                if !lh.accepts(t) {
                    let proof = make_proof(g as u32, i as u32, party, lh, t);
                    allegations.push(Allegation::Inconsistent { proof, opening: lh.openings[2].clone() });
                }
            }
        }
    }

    // statuses, then answers to the other party's consistency proofs
    let mut to = vec![other];
    to.extend_from_slice(&providers);
    ep.send_all(&to, Body::InputStatus(allegations.clone()))?;
    let their_status = recv_as!(ep, other, InputStatus);
    let replies: Vec<ProofReply> = their_status
        .iter()
        .filter_map(|a| match a {
            Allegation::Inconsistent { proof, .. } if proof.accuser == party.other() => {
                let v = views.get(proof.provider as usize)?.get(proof.wire as usize)?;
                let (_, tuple, openings) = v.hashes.as_ref()?;
                Some(ProofReply { provider: proof.provider, wire: proof.wire, tuple: *tuple, openings: openings.clone() })
            }
            _ => None,
        })
        .collect();
    ep.send_all(&providers, Body::ProofOpenings(replies))?;
    if !allegations.is_empty() || !their_status.is_empty() {
        return Ok(Flow::Rejected);
    }

    // own encodings for our circuit, labels for the other one
    let mut encodings: Vec<Vec<Encoding>> = Vec::with_capacity(n + 1);
    let mut labels: Vec<Vec<Label>> = Vec::with_capacity(n + 1);
    for row in &views {
        let finals: Vec<ic::FinalLabels> =
            row.iter().map(|v| ic::final_labels(v.triples.as_ref().expect("checked wire"))).collect();
        encodings.push(finals.iter().map(|f| f.encoding).collect());
        labels.push(finals.iter().map(|f| f.label).collect());
    }

    ep.set_phase(Some(Phase::Compute));
    let fault = match behavior {
        Some(&Behavior::TamperGarbledGate { gate, mask }) => Some(GateFault { gate, mask }),
        _ => None,
    };
    let gc = garble::garble_with_fault(common.circuit, &encodings, rng.gen(), fault)
        .map_err(|e| protocol(format!("garbling failed: {e}")))?;
    drop(encodings);
    ep.send(other, Body::GarbledCircuit(gc.tables))?;
    let tables = recv_as!(ep, other, GarbledCircuit);
    let mut evaluated = garble::evaluate(common.circuit, &tables, &labels)
        .map_err(|_| Stop::Local(AbortReason::Evaluation { garbler: party.other() }))?;
    drop(tables);

    ep.set_phase(Some(Phase::Output));
    let mut out_encodings = gc.output_encodings;
    out_encodings.resize(n + 1, Vec::new());
    evaluated.resize(n + 1, Vec::new());
    if let Some(&Behavior::SubstituteOutputLabel { provider, wire }) = behavior {
        evaluated[provider as usize][wire as usize] = rng.gen();
    }
    // the labels we hold belong to the other circuit: none decodes under our encodings
    assert!(evaluated
        .iter()
        .zip(&out_encodings)
        .all(|(ls, es)| ls.iter().zip(es).all(|(&l, e)| e.decode(l).is_none())));
    let outputs = PartyOutputs { encodings: out_encodings, labels: evaluated };
    let (cs, os) = publish_output_commitments(&outputs, rng).map_err(|e| protocol(e.to_string()))?;
    drop(outputs);
    ep.send_all(&providers, Body::OutputCommitments(cs))?;
    for (&p, o) in providers.iter().zip(os) {
        ep.send(p, Body::OutputOpenings(o))?;
    }
    Ok(Flow::Done)
}

/// Commit-then-open coin toss for every input wire, re-tossing wires whose
/// challenge came out all zeros or all ones.
fn toss_challenges(
    ep: &mut Endpoint,
    party: Party,
    common: &Common,
    rng: &mut ChaCha20Rng,
    behavior: Option<&Behavior>,
) -> Result<Vec<Vec<Vec<bool>>>, Stop> {
    let other = Role::party(party.other());
    let s = common.s;
    let flat: Vec<(usize, usize)> =
        (0..=common.n).flat_map(|g| (0..common.wires(g)).map(move |i| (g, i))).collect();
    let mut rhos: Vec<Vec<Vec<bool>>> = (0..=common.n).map(|g| vec![Vec::new(); common.wires(g)]).collect();
    let mut pending: Vec<(usize, usize)> = flat;
    let mut cheat = matches!(behavior, Some(Behavior::BiasCoinToss));
    for _ in 0..MAX_TOSS_ROUNDS {
        if pending.is_empty() {
            return Ok(rhos);
        }
        let mine: Vec<_> = pending.iter().map(|_| coin_commit(s, rng)).collect();
        ep.send(other, Body::CoinCommit(mine.iter().map(|m| m.1).collect()))?;
        let their_commits = recv_as!(ep, other, CoinCommit);
        let mut openings: Vec<Opening> = mine.iter().map(|m| m.2.clone()).collect();
        if cheat {
            // a different contribution than the one committed to
            if let Some(b) = openings[0].message.last_mut() {
                *b ^= 1;
            }
            cheat = false;
        }
        ep.send(other, Body::CoinOpen(openings))?;
        let their_openings = recv_as!(ep, other, CoinOpen);
        if their_commits.len() != pending.len() || their_openings.len() != pending.len() {
            return Err(protocol(format!("{other} tossed coins for the wrong number of wires")));
        }
        let mut next = Vec::new();
        for (k, &(g, i)) in pending.iter().enumerate() {
            let theirs = coin_open(&their_commits[k], &their_openings[k], s).ok_or_else(|| {
                Stop::Local(AbortReason::CoinTossCheat {
                    cheater: party.other(),
                    commitment: their_commits[k],
                    opening: their_openings[k].clone(),
                })
            })?;
            match coin_toss(&mine[k].0, &theirs) {
                Some(rho) => rhos[g][i] = rho,
                None => next.push((g, i)),
            }
        }
        pending = next;
    }
    Err(protocol("coin toss did not produce a usable challenge"))
}

/// Runs the construction check on the check copies and opens the evaluation
/// copies of one wire. Failures are appended to `allegations`.
fn check_wire(
    party: Party,
    provider: u32,
    wire: u32,
    cm: &[CopyCommitments],
    rho: &[bool],
    wo: &WireOpenings,
    allegations: &mut Vec<Allegation>,
) -> Result<WireView, Stop> {
    let (cs, es) = (check_set(rho), eval_set(rho));
    if wo.check.len() != cs.len() || wo.eval.len() != es.len() {
        return Err(protocol(format!("provider{provider} opened the wrong copies of wire {wire}")));
    }
    for (&j, o) in cs.iter().zip(&wo.check) {
        match check_construction(&cm[j], o) {
            Ok(()) => {}
            Err(CheckFailure::Opening(_)) => {
                allegations.push(Allegation::BadOpening { provider, wire, copy: j as u32 })
            }
            Err(CheckFailure::BadInput(_)) => {
                allegations.push(Allegation::Construction { provider, wire, copy: j as u32, opening: o.clone() })
            }
        }
    }
    let mut triples = Vec::with_capacity(es.len());
    for (&j, o) in es.iter().zip(&wo.eval) {
        match ic::open_eval(&cm[j], o, party) {
            Ok((_, t)) => triples.push(t),
            Err(_) => {
                allegations.push(Allegation::BadOpening { provider, wire, copy: j as u32 });
                return Ok(WireView { triples: None, hashes: None });
            }
        }
    }
    Ok(WireView { triples: Some(triples), hashes: None })
}
