//! Scripted misbehaviour for one role.

use rand::{CryptoRng, Rng, RngCore};

use super::Role;
use crate::circuit::Circuit;
use crate::circuit::GateKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Behavior {
    /// Provider: the listed wires get copies where `pattern[j]` is false
    /// crossed so that the two circuits see different bits.
    InconsistentLabels { pattern: Vec<bool>, wires: Vec<u32> },
    /// Party: its garbled circuit has `gate`'s truth table XORed with `mask`.
    TamperGarbledGate { gate: usize, mask: u8 },
    /// Party: replaces one evaluated output label before committing.
    SubstituteOutputLabel { provider: u32, wire: u32 },
    /// Party: opens its coin commitment to a different value.
    BiasCoinToss,
    /// Party: claims a well-formed check copy failed the construction check.
    FalsifyCheckFailure { provider: u32, wire: u32 },
    /// Party: commits to invented label hashes and raises a consistency proof.
    ForgeConsistencyProof { provider: u32, wire: u32 },
    /// Provider: reports an output failure although its outputs agree.
    FalseOutputComplaint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryScript {
    pub target: Role,
    pub behavior: Behavior,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("invalid adversary script: {0}")]
pub struct AdversaryError(pub String);

impl Behavior {
    pub const NAMES: [&'static str; 7] = [
        "inconsistent-labels",
        "tamper-gate",
        "substitute-output",
        "bias-coin",
        "falsify-check",
        "forge-proof",
        "false-complaint",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Behavior::InconsistentLabels { .. } => Self::NAMES[0],
            Behavior::TamperGarbledGate { .. } => Self::NAMES[1],
            Behavior::SubstituteOutputLabel { .. } => Self::NAMES[2],
            Behavior::BiasCoinToss => Self::NAMES[3],
            Behavior::FalsifyCheckFailure { .. } => Self::NAMES[4],
            Behavior::ForgeConsistencyProof { .. } => Self::NAMES[5],
            Behavior::FalseOutputComplaint => Self::NAMES[6],
        }
    }

    /// Whether the script runs on a provider (otherwise on a party).
    pub fn on_provider(&self) -> bool {
        matches!(self, Behavior::InconsistentLabels { .. } | Behavior::FalseOutputComplaint)
    }
}

/// A uniformly random pattern with at least one well-formed and one crossed copy.
pub fn random_pattern<R: RngCore + CryptoRng>(s: usize, rng: &mut R) -> Vec<bool> {
    assert!(s >= 2);
    loop {
        let p: Vec<bool> = (0..s).map(|_| rng.gen()).collect();
        if p.iter().any(|&b| b) && p.iter().any(|&b| !b) {
            return p;
        }
    }
}

/// The gate driving the first gate-driven output wire of `provider`, with a
/// mask that inverts it for every input.
pub fn output_gate_fault(c: &Circuit, provider: usize) -> Option<(usize, u8)> {
    let outs = c.outputs().get(provider)?;
    outs.iter().find_map(|w| {
        let g = c.gates().iter().position(|g| g.out == *w)?;
        Some((g, if c.gates()[g].kind == GateKind::Not { 0b11 } else { 0b1111 }))
    })
}

impl AdversaryScript {
    /// The default script for a behaviour name, aimed at `target` (P1 or
    /// provider 0 when `None`).
    pub fn named<R: RngCore + CryptoRng>(
        name: &str,
        c: &Circuit,
        s: usize,
        target: Option<Role>,
        rng: &mut R,
    ) -> Result<Self, AdversaryError> {
        let party = target.unwrap_or(Role::P1);
        let provider = target.unwrap_or(Role::Provider(0));
        let (target, behavior) = match name {
            "inconsistent-labels" => {
                (provider, Behavior::InconsistentLabels { pattern: random_pattern(s, rng), wires: vec![0] })
            }
            "tamper-gate" => {
                let (gate, mask) = output_gate_fault(c, 0)
                    .ok_or_else(|| AdversaryError("provider 0 has no gate-driven output".into()))?;
                (party, Behavior::TamperGarbledGate { gate, mask })
            }
            "substitute-output" => (party, Behavior::SubstituteOutputLabel { provider: 0, wire: 0 }),
            "bias-coin" => (party, Behavior::BiasCoinToss),
            "falsify-check" => (party, Behavior::FalsifyCheckFailure { provider: 0, wire: 0 }),
            "forge-proof" => (party, Behavior::ForgeConsistencyProof { provider: 0, wire: 0 }),
            "false-complaint" => (provider, Behavior::FalseOutputComplaint),
            _ => {
                return Err(AdversaryError(format!(
                    "unknown adversary {name:?}; expected one of {}",
                    Behavior::NAMES.join(", ")
                )))
            }
        };
        let a = AdversaryScript { target, behavior };
        a.validate(c, s)?;
        Ok(a)
    }

    /// Checks the script against the circuit and copy count.
    pub fn validate(&self, c: &Circuit, s: usize) -> Result<(), AdversaryError> {
        let groups = c.inputs().len();
        let err = |m: String| Err(AdversaryError(m));
        let is_party = matches!(self.target, Role::P1 | Role::P2);
        if self.behavior.on_provider() == is_party {
            return err(format!("{} cannot run on {}", self.behavior.name(), self.target));
        }
        if let Some(g) = self.target.group(groups - 1) {
            if g >= groups {
                return err(format!("{} does not exist", self.target));
            }
        }
        let wire_ok = |p: u32, w: u32, per: &[Vec<crate::circuit::WireId>]| {
            per.get(p as usize).is_some_and(|ws| (w as usize) < ws.len())
        };
        match &self.behavior {
            Behavior::InconsistentLabels { pattern, wires } => {
                let g = self.target.group(groups - 1).unwrap();
                if pattern.len() != s {
                    return err(format!("pattern has {} copies, sessions use {s}", pattern.len()));
                }
                if wires.is_empty() || wires.iter().any(|&w| !wire_ok(g as u32, w, c.inputs())) {
                    return err("wire set names wires the provider does not have".into());
                }
            }
            Behavior::TamperGarbledGate { gate, .. } => {
                if *gate >= c.gates().len() {
                    return err(format!("gate {gate} out of range"));
                }
            }
            Behavior::SubstituteOutputLabel { provider, wire } => {
                if !wire_ok(*provider, *wire, c.outputs()) {
                    return err("no such output wire".into());
                }
            }
            Behavior::FalsifyCheckFailure { provider, wire } | Behavior::ForgeConsistencyProof { provider, wire } => {
                if !wire_ok(*provider, *wire, c.inputs()) {
                    return err("no such input wire".into());
                }
            }
            Behavior::BiasCoinToss | Behavior::FalseOutputComplaint => {}
        }
        Ok(())
    }
}
