//! Data providers: commit inputs, answer the challenge, judge complaints and
//! verify outputs.

use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;

use super::adversary::Behavior;
use super::message::{
    AbortReason, Allegation, Body, OutputStatus, Phase, ProofReply, Tag, WireOpenings, WireRebuttal,
};
use super::transport::{Endpoint, Stop};
use super::{protocol, unexpected, Common, Culprit, Outcome, ProviderReport, Role, Verdict};
use crate::input_consistency::{
    self as ic, check_construction, check_set, coin_open, eval_set, verify_consistency_proof, CheckFailure,
    EvalOpening, Hash, ProofOpenings, ProofVerdict, Rebuttal, WireMaterial,
};
use crate::output_verification::{
    verify_failure_proof, verify_output, OutputCheck, OutputCommitmentBundle, OutputError, OutputFailureProof,
    ProofStatus, ProviderOpenings,
};
use crate::Party;

pub(super) fn run(
    ep: &mut Endpoint,
    group: usize,
    x: &[bool],
    common: &Common,
    mut rng: ChaCha20Rng,
    behavior: Option<&Behavior>,
) -> ProviderReport {
    let role = ep.role;
    ep.set_phase(Some(Phase::Input));
    let mut verdicts = Vec::new();
    let outcome = match run_inner(ep, group, x, common, &mut rng, behavior, &mut verdicts) {
        Ok(o) => o,
        Err(stop) => {
            let phase = ep.phase.unwrap_or(Phase::Input);
            let reason = match stop {
                Stop::Local(reason) => {
                    ep.broadcast_abort(reason.clone());
                    reason
                }
                Stop::Peer { reason, .. } => {
                    verdicts.extend(judge_abort(&reason, common.s));
                    ep.broadcast_abort(reason.clone());
                    reason
                }
            };
            Outcome::Aborted { phase, reason }
        }
    };
    ep.set_phase(None);
    let mut distinct: Vec<Verdict> = Vec::new();
    for v in verdicts {
        if !distinct.contains(&v) {
            distinct.push(v);
        }
    }
    ProviderReport { role, outcome, verdicts: distinct }
}

fn run_inner(
    ep: &mut Endpoint,
    group: usize,
    x: &[bool],
    common: &Common,
    rng: &mut ChaCha20Rng,
    behavior: Option<&Behavior>,
    verdicts: &mut Vec<Verdict>,
) -> Result<Outcome, Stop> {
    let (n, s) = (common.n, common.s);
    let me = ep.role;
    let parties = [Role::P1, Role::P2];
    let providers = common.providers();
    let others: Vec<Role> = providers.iter().copied().filter(|&r| r != me).collect();

    let material: Vec<WireMaterial> = x
        .iter()
        .enumerate()
        .map(|(i, &bit)| match behavior {
            Some(Behavior::InconsistentLabels { pattern, wires }) if wires.contains(&(i as u32)) => {
                WireMaterial::with_pattern(bit, pattern, rng)
            }
            _ => WireMaterial::honest(bit, s, rng),
        })
        .collect();
    let wire_digests: Vec<Hash> = material.iter().map(|m| m.digest()).collect();
    ep.send_all(&parties, Body::InputCommitments(material.iter().map(|m| m.commitments.clone()).collect()))?;
    ep.send_all(&others, Body::InputDigest(ic::input_digest(&wire_digests)))?;
    let mut digests = BTreeMap::new();
    for &q in &others {
        digests.insert(q, recv_as!(ep, q, InputDigest));
    }

    let rho1 = recv_as!(ep, Role::P1, Challenge);
    let rho2 = recv_as!(ep, Role::P2, Challenge);
    if rho1 != rho2 {
        return Err(Stop::Local(AbortReason::ChallengeMismatch));
    }
    let rhos = rho1;
    let shape_ok = rhos.len() == n + 1
        && rhos.iter().enumerate().all(|(g, ws)| {
            ws.len() == common.wires(g) && ws.iter().all(|r| r.len() == s && ic::coin_toss(r, &vec![false; s]).is_some())
        });
    if !shape_ok {
        return Err(protocol("challenge has the wrong shape"));
    }
    let mine = &rhos[group];
    for party in [Party::P1, Party::P2] {
        let opened = material
            .iter()
            .zip(mine)
            .map(|(m, rho)| WireOpenings {
                check: check_set(rho).into_iter().map(|j| m.check_opening(j)).collect(),
                eval: eval_set(rho).into_iter().map(|j| m.eval_opening(j, party)).collect(),
            })
            .collect();
        ep.send(Role::party(party), Body::CheckOpenings(opened))?;
    }

    let statuses = [recv_as!(ep, Role::P1, InputStatus), recv_as!(ep, Role::P2, InputStatus)];
    let replies = [recv_as!(ep, Role::P1, ProofOpenings), recv_as!(ep, Role::P2, ProofOpenings)];

    // reveal the accused wires to the other providers
    let mut accused: Vec<u32> = statuses
        .iter()
        .flatten()
        .map(|a| a.target())
        .filter(|&(p, w)| p as usize == group && (w as usize) < material.len())
        .map(|(_, w)| w)
        .collect();
    accused.sort_unstable();
    accused.dedup();
    let own: Vec<WireRebuttal> =
        accused.iter().map(|&w| wire_rebuttal(&material[w as usize], w, &mine[w as usize])).collect();
    let shared = if own.is_empty() { Vec::new() } else { wire_digests.clone() };
    ep.send_all(&others, Body::Rebuttal { wire_digests: shared, wires: own.clone() })?;
    let mut rebuttals: BTreeMap<(usize, u32), WireRebuttal> =
        own.into_iter().map(|r| ((group, r.wire), r)).collect();
    for &q in &others {
        let (wds, wires) = match ep.recv(q)? {
            Body::Rebuttal { wire_digests, wires } => (wire_digests, wires),
            other => return Err(unexpected(q, &other, Tag::Rebuttal)),
        };
        let g = q.group(n).expect("provider role");
        if wires.is_empty() || wds.len() != common.wires(g) || ic::input_digest(&wds) != digests[&q] {
            continue;
        }
        for r in wires {
            if authentic(&r, &wds, &rhos[g], s) {
                rebuttals.insert((g, r.wire), r);
            }
        }
    }

    if statuses.iter().any(|st| !st.is_empty()) {
        for party in [Party::P1, Party::P2] {
            for a in &statuses[party.index()] {
                let judge = Judge { common, rhos: &rhos, rebuttals: &rebuttals, replies: &replies[party.other().index()] };
                verdicts.push(judge.allegation(a, party));
            }
        }
        return Ok(Outcome::Aborted { phase: Phase::Input, reason: AbortReason::InputRejected });
    }

    // nothing to do while the parties garble and evaluate
    ep.set_phase(Some(Phase::Compute));
    ep.set_phase(Some(Phase::Output));
    let c1 = recv_as!(ep, Role::P1, OutputCommitments);
    let c2 = recv_as!(ep, Role::P2, OutputCommitments);
    if c1.len() != n + 1 || c2.len() != n + 1 {
        return Err(protocol("output commitments do not cover every provider"));
    }
    let bundle = OutputCommitmentBundle { p1: c1, p2: c2 };
    ep.send_all(&others, Body::BundleDigest(bundle.digest()))?;
    let mut mismatch = false;
    for &q in &others {
        mismatch |= recv_as!(ep, q, BundleDigest) != bundle.digest();
    }
    let openings =
        ProviderOpenings { p1: recv_as!(ep, Role::P1, OutputOpenings), p2: recv_as!(ep, Role::P2, OutputOpenings) };

    let (mut outcome, mut status) = if mismatch {
        verdicts.push(Verdict::new(Culprit::Unknown, "providers received different output commitments"));
        (Outcome::Reject, OutputStatus::BundleMismatch)
    } else {
        match verify_output(group, &bundle, &openings) {
            Ok(OutputCheck::Accept(y)) => (Outcome::Accept(y), OutputStatus::Ok),
            Ok(OutputCheck::Reject(proof)) => {
                verdicts.push(Verdict::new(Culprit::Unknown, format!("the two circuits disagree on the outputs of {me}")));
                (Outcome::Reject, OutputStatus::Failure(proof))
            }
            Err(OutputError::Opening { party }) => {
                verdicts.push(Verdict::new(Culprit::Role(Role::party(party)), "output opening does not match its commitment"));
                (Outcome::Reject, OutputStatus::OpeningError(party))
            }
            Err(e) => return Err(protocol(e.to_string())),
        }
    };
    if behavior == Some(&Behavior::FalseOutputComplaint) {
        status = OutputStatus::Failure(OutputFailureProof { provider: group as u32, openings });
    }
    ep.send_all(&others, Body::OutputStatus(status))?;
    for &q in &others {
        let (discard, verdict) = match recv_as!(ep, q, OutputStatus) {
            OutputStatus::Ok => (false, None),
            OutputStatus::Failure(proof) => {
                if Some(proof.provider as usize) != q.group(n) {
                    (false, Some(Verdict::new(Culprit::Role(q), "failure proof names another provider")))
                } else {
                    match verify_failure_proof(&proof, &bundle) {
                        ProofStatus::Confirmed => {
                            (true, Some(Verdict::new(Culprit::Unknown, format!("the two circuits disagree on the outputs of {q}"))))
                        }
                        ProofStatus::Spurious => {
                            (false, Some(Verdict::new(Culprit::Role(q), "failure proof shows no disagreement")))
                        }
                    }
                }
            }
            OutputStatus::OpeningError(p) => (
                true,
                Some(Verdict::new(Culprit::Dispute(Role::party(p), q), format!("{q} reports a bad output opening"))),
            ),
            OutputStatus::BundleMismatch => {
                (true, Some(Verdict::new(Culprit::Unknown, format!("{q} received different output commitments"))))
            }
        };
        verdicts.extend(verdict);
        if discard && matches!(outcome, Outcome::Accept(_)) {
            outcome = Outcome::Discarded;
        }
    }
    Ok(outcome)
}

fn wire_rebuttal(m: &WireMaterial, wire: u32, rho: &[bool]) -> WireRebuttal {
    WireRebuttal {
        wire,
        commitments: m.commitments.clone(),
        check: check_set(rho).into_iter().map(|j| m.check_opening(j)).collect(),
        eval: m.rebuttal(&eval_set(rho)).copies,
    }
}

/// Whether a received rebuttal carries the commitments its sender bound itself to.
fn authentic(r: &WireRebuttal, wire_digests: &[Hash], rhos: &[Vec<bool>], s: usize) -> bool {
    let Some(rho) = rhos.get(r.wire as usize) else { return false };
    r.commitments.len() == s
        && ic::wire_digest(&r.commitments) == wire_digests[r.wire as usize]
        && r.check.len() == check_set(rho).len()
        && r.eval.len() == eval_set(rho).len()
}

/// Verdicts a provider can draw from an abort reason. Reasons may have been
/// relayed, so the evidence is judged on its own.
fn judge_abort(reason: &AbortReason, s: usize) -> Option<Verdict> {
    match reason {
        AbortReason::CoinTossCheat { cheater, commitment, opening } => {
            let (accused, accuser) = (Role::party(*cheater), Role::party(cheater.other()));
            // the party channel is unsigned: the evidence cannot show who sent the opening
            Some(if coin_open(commitment, opening, s).is_some() {
                Verdict::new(Culprit::Dispute(accuser, accused), format!("{accuser} presented a valid coin opening as cheating"))
            } else {
                Verdict::new(Culprit::Dispute(accused, accuser), format!("{accuser} reports a bad coin opening from {accused}"))
            })
        }
        AbortReason::Evaluation { garbler } => Some(Verdict::new(
            Culprit::Dispute(Role::party(*garbler), Role::party(garbler.other())),
            format!("{} could not evaluate the circuit garbled by {garbler}", garbler.other()),
        )),
        AbortReason::DigestMismatch { provider } => Some(Verdict::new(
            Culprit::Unknown,
            format!("the parties hold different commitments from provider {provider}"),
        )),
        _ => None,
    }
}

struct Judge<'a> {
    common: &'a Common<'a>,
    rhos: &'a [Vec<Vec<bool>>],
    rebuttals: &'a BTreeMap<(usize, u32), WireRebuttal>,
    /// Replies from the party that did not raise the allegation.
    replies: &'a [ProofReply],
}

impl Judge<'_> {
    fn allegation(&self, a: &Allegation, by: Party) -> Verdict {
        let accuser = Role::party(by);
        let (p, w) = a.target();
        let (g, i) = (p as usize, w as usize);
        if g > self.common.n || i >= self.common.wires(g) {
            return Verdict::new(Culprit::Role(accuser), "complaint names a wire that does not exist");
        }
        let provider = Role::of_group(g, self.common.n);
        let Some(rb) = self.rebuttals.get(&(g, w)) else {
            return Verdict::new(Culprit::Role(provider), format!("no valid rebuttal for wire {w}"));
        };
        let rho = &self.rhos[g][i];
        let (cs, es) = (check_set(rho), eval_set(rho));
        match a {
            Allegation::Construction { copy, opening, .. } => {
                let Some(_) = cs.iter().position(|&j| j == *copy as usize) else {
                    return Verdict::new(Culprit::Role(accuser), "complaint about a copy that was not checked");
                };
                match check_construction(&rb.commitments[*copy as usize], opening) {
                    Ok(()) => Verdict::new(Culprit::Role(accuser), format!("check copy {copy} of wire {w} is well formed")),
                    Err(CheckFailure::Opening(_)) => {
                        Verdict::new(Culprit::Role(accuser), "presented openings that do not match the commitments")
                    }
                    Err(CheckFailure::BadInput(e)) => {
                        Verdict::new(Culprit::Role(provider), format!("check copy {copy} of wire {w}: {e}"))
                    }
                }
            }
            Allegation::BadOpening { copy, .. } => {
                let j = *copy as usize;
                let genuine = if let Some(k) = cs.iter().position(|&c| c == j) {
                    check_construction(&rb.commitments[j], &rb.check[k]).is_ok()
                } else if let Some(k) = es.iter().position(|&c| c == j) {
                    let rc = &rb.eval[k];
                    let o = EvalOpening { position: rc.position.clone(), triple: rc.triples[by.index()].clone() };
                    ic::open_eval(&rb.commitments[j], &o, by).is_ok()
                } else {
                    return Verdict::new(Culprit::Role(accuser), "complaint about a copy that does not exist");
                };
                if genuine {
                    Verdict::new(
                        Culprit::Dispute(provider, accuser),
                        format!("{accuser} reports a bad opening of wire {w} copy {copy}; the revealed openings verify"),
                    )
                } else {
                    Verdict::new(Culprit::Role(provider), format!("cannot open wire {w} copy {copy}"))
                }
            }
            Allegation::Inconsistent { proof, opening } => {
                if proof.accuser != by {
                    return Verdict::new(Culprit::Role(accuser), "consistency proof names another accuser");
                }
                let other = Role::party(by.other());
                let Some(reply) = self.replies.iter().find(|r| (r.provider, r.wire) == (p, w)) else {
                    return Verdict::new(Culprit::Role(other), "did not open its label hashes");
                };
                if reply.tuple.h != [proof.h[0], proof.h[1]] || reply.tuple.c != [proof.c[0], proof.c[1]] {
                    return Verdict::new(Culprit::Dispute(Role::P1, Role::P2), "the parties disagree on the exchanged hashes");
                }
                let openings = ProofOpenings { other: reply.openings.clone(), accuser: opening.clone() };
                let rebuttal = Rebuttal { copies: rb.eval.clone() };
                match verify_consistency_proof(proof, &es, &openings, Some((&rb.commitments, &rebuttal))) {
                    Ok(ProofVerdict::CheatingProvider) => {
                        Verdict::new(Culprit::Role(provider), format!("inconsistent input labels on wire {w}"))
                    }
                    Ok(ProofVerdict::CheatingParty(Some(x))) => {
                        Verdict::new(Culprit::Role(Role::party(x)), format!("label hashes for wire {w} do not match the commitments"))
                    }
                    Ok(ProofVerdict::CheatingParty(None)) => {
                        Verdict::new(Culprit::EitherParty, format!("label hashes for wire {w} do not match their openings"))
                    }
                    Ok(ProofVerdict::ProofInvalid) => {
                        Verdict::new(Culprit::Role(accuser), format!("consistency proof for wire {w} shows no inconsistency"))
                    }
                    Err(e) => Verdict::new(Culprit::Role(Role::party(e.party)), "label hash opening does not verify"),
                }
            }
        }
    }
}
