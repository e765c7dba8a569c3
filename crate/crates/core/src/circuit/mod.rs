//! Boolean circuit representation, plaintext evaluation and netlist text format.
//!
//! A [`Circuit`] is a single-assignment, topologically ordered list of binary
//! gates over the basis {AND, OR, XOR, NOT}. Inputs and outputs are grouped by
//! data provider: provider `u` owns the ordered input wires `inputs[u]` and
//! receives the ordered output wires `outputs[u]`.

mod builder;
pub mod gadgets;
mod sort;

pub use builder::{Bit, Builder, Word};
pub use gadgets::{build_gadget, GadgetKind};
pub use sort::{bitonic_sort, build_sorting_network, Record};

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("provider {provider}: expected {expected} input bits, got {got}")]
    InputShape { provider: usize, expected: usize, got: usize },
    #[error("expected inputs for {expected} providers, got {got}")]
    ProviderCount { expected: usize, got: usize },
    #[error("gadget width must be at least 1")]
    GadgetWidth,
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("netlist line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireId(pub u32);

impl WireId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Not,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Not => 1,
            _ => 2,
        }
    }

    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a & b,
            GateKind::Or => a | b,
            GateKind::Xor => a ^ b,
            GateKind::Not => !a,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Not => "NOT",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            GateKind::And => 0,
            GateKind::Or => 1,
            GateKind::Xor => 2,
            GateKind::Not => 3,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "XOR" => GateKind::Xor,
            "NOT" => GateKind::Not,
            _ => return None,
        })
    }
}

/// A gate. For NOT, `b` is ignored and equals `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    wire_count: u32,
    gates: Vec<Gate>,
    inputs: Vec<Vec<WireId>>,
    outputs: Vec<Vec<WireId>>,
}

impl Circuit {
    /// Assembles and validates a circuit.
    pub fn new(
        wire_count: u32,
        gates: Vec<Gate>,
        inputs: Vec<Vec<WireId>>,
        outputs: Vec<Vec<WireId>>,
    ) -> Result<Self, CircuitError> {
        let c = Circuit { wire_count, gates, inputs, outputs };
        c.validate()?;
        Ok(c)
    }

    pub fn wire_count(&self) -> usize {
        self.wire_count as usize
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn inputs(&self) -> &[Vec<WireId>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<WireId>] {
        &self.outputs
    }

    pub fn provider_count(&self) -> usize {
        self.inputs.len()
    }

    /// All input wires, provider by provider.
    pub fn input_wires(&self) -> impl Iterator<Item = WireId> + '_ {
        self.inputs.iter().flatten().copied()
    }

    pub fn input_count(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum()
    }

    /// Number of garbled-table rows this circuit needs (4 per binary gate, 2 per NOT).
    pub fn table_rows(&self) -> usize {
        self.gates.iter().map(|g| if g.kind == GateKind::Not { 2 } else { 4 }).sum()
    }

    /// Checks single assignment, topological order and map consistency.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.wire_count as usize;
        if self.inputs.len() != self.outputs.len() {
            return Err(CircuitError::Invalid(format!(
                "{} input groups but {} output groups",
                self.inputs.len(),
                self.outputs.len()
            )));
        }
        let mut defined = vec![false; n];
        for w in self.input_wires() {
            let slot = defined
                .get_mut(w.index())
                .ok_or_else(|| CircuitError::Invalid(format!("input wire {} out of range", w.0)))?;
            if *slot {
                return Err(CircuitError::Invalid(format!("input wire {} listed twice", w.0)));
            }
            *slot = true;
        }
        for (i, g) in self.gates.iter().enumerate() {
            let operands: &[WireId] = if g.kind == GateKind::Not { &[g.a] } else { &[g.a, g.b] };
            for w in operands {
                if !defined.get(w.index()).copied().unwrap_or(false) {
                    return Err(CircuitError::Invalid(format!(
                        "gate {i} reads wire {} before it is defined",
                        w.0
                    )));
                }
            }
            let slot = defined
                .get_mut(g.out.index())
                .ok_or_else(|| CircuitError::Invalid(format!("gate {i} output {} out of range", g.out.0)))?;
            if *slot {
                return Err(CircuitError::Invalid(format!("wire {} assigned twice (gate {i})", g.out.0)));
            }
            *slot = true;
        }
        for w in self.outputs.iter().flatten() {
            if !defined.get(w.index()).copied().unwrap_or(false) {
                return Err(CircuitError::Invalid(format!("output wire {} is never defined", w.0)));
            }
        }
        Ok(())
    }

    fn check_shape(&self, inputs: &[Vec<bool>]) -> Result<(), CircuitError> {
        if inputs.len() != self.inputs.len() {
            return Err(CircuitError::ProviderCount { expected: self.inputs.len(), got: inputs.len() });
        }
        for (u, (wires, bits)) in self.inputs.iter().zip(inputs).enumerate() {
            if wires.len() != bits.len() {
                return Err(CircuitError::InputShape { provider: u, expected: wires.len(), got: bits.len() });
            }
        }
        Ok(())
    }

    /// Evaluates the circuit in the clear.
    pub fn eval_plain(&self, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>, CircuitError> {
        self.check_shape(inputs)?;
        let mut v = vec![false; self.wire_count as usize];
        for (wires, bits) in self.inputs.iter().zip(inputs) {
            for (w, &b) in wires.iter().zip(bits) {
                v[w.index()] = b;
            }
        }
        for g in &self.gates {
            v[g.out.index()] = g.kind.apply(v[g.a.index()], v[g.b.index()]);
        }
        Ok(self
            .outputs
            .iter()
            .map(|ws| ws.iter().map(|w| v[w.index()]).collect())
            .collect())
    }

    /// SHA-256 over a canonical binary encoding of the netlist.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.wire_count.to_be_bytes());
        for group in [&self.inputs, &self.outputs] {
            h.update((group.len() as u32).to_be_bytes());
            for ws in group.iter() {
                h.update((ws.len() as u32).to_be_bytes());
                for w in ws {
                    h.update(w.0.to_be_bytes());
                }
            }
        }
        h.update((self.gates.len() as u64).to_be_bytes());
        let mut buf = Vec::with_capacity(13 * 1024);
        for chunk in self.gates.chunks(1024) {
            buf.clear();
            for g in chunk {
                buf.push(g.kind.code());
                buf.extend_from_slice(&g.a.0.to_be_bytes());
                buf.extend_from_slice(&g.b.0.to_be_bytes());
                buf.extend_from_slice(&g.out.0.to_be_bytes());
            }
            h.update(&buf);
        }
        h.finalize().into()
    }

    /// Line-oriented text netlist.
    ///
    /// ```text
    /// wires <count>
    /// input <provider> <wire>...
    /// output <provider> <wire>...
    /// <KIND> <in1> [<in2>] <out>
    /// ```
    /// `input`/`output` lines appear once per provider, in provider order.
    pub fn to_netlist(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "wires {}", self.wire_count);
        for (tag, group) in [("input", &self.inputs), ("output", &self.outputs)] {
            for (u, ws) in group.iter().enumerate() {
                let _ = write!(s, "{tag} {u}");
                for w in ws {
                    let _ = write!(s, " {}", w.0);
                }
                s.push('\n');
            }
        }
        for g in &self.gates {
            match g.kind {
                GateKind::Not => {
                    let _ = writeln!(s, "NOT {} {}", g.a.0, g.out.0);
                }
                k => {
                    let _ = writeln!(s, "{} {} {} {}", k.name(), g.a.0, g.b.0, g.out.0);
                }
            }
        }
        s
    }

    pub fn from_netlist(text: &str) -> Result<Self, CircuitError> {
        let mut wire_count: Option<u32> = None;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut gates = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let err = |msg: &str| CircuitError::Parse { line: line_no, msg: msg.to_string() };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let head = parts.next().unwrap_or_default();
            let nums: Result<Vec<u32>, _> = parts.map(str::parse::<u32>).collect();
            let nums = nums.map_err(|_| err("expected unsigned integers"))?;
            match head {
                "wires" => {
                    if wire_count.is_some() || nums.len() != 1 {
                        return Err(err("malformed or repeated wires header"));
                    }
                    wire_count = Some(nums[0]);
                }
                "input" | "output" => {
                    let group = if head == "input" { &mut inputs } else { &mut outputs };
                    let (u, ws) = nums.split_first().ok_or_else(|| err("missing provider index"))?;
                    if *u as usize != group.len() {
                        return Err(err("provider lines must be consecutive from 0"));
                    }
                    group.push(ws.iter().map(|&w| WireId(w)).collect());
                }
                kind => {
                    let kind = GateKind::parse(kind).ok_or_else(|| err("unknown gate kind"))?;
                    if nums.len() != kind.arity() + 1 {
                        return Err(err("wrong operand count"));
                    }
                    let a = WireId(nums[0]);
                    let b = if kind == GateKind::Not { a } else { WireId(nums[1]) };
                    gates.push(Gate { kind, a, b, out: WireId(*nums.last().unwrap()) });
                }
            }
        }
        let wire_count = wire_count.ok_or(CircuitError::Parse { line: 0, msg: "missing wires header".into() })?;
        Circuit::new(wire_count, gates, inputs, outputs)
    }
}

/// Big-endian bits of `v`, `width` bits wide.
pub fn to_bits_be(v: u128, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| i < 128 && (v >> i) & 1 == 1).collect()
}

/// Reads big-endian bits as an integer; bits beyond 128 must be zero.
pub fn from_bits_be(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}
