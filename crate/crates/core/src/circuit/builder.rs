use super::{Circuit, Gate, GateKind, WireId};

/// A circuit value during construction: a known constant or a wire.
///
/// Gates whose result is determined by constant operands are folded away and
/// never reach the netlist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Zero,
    One,
    Wire(WireId),
}

impl Bit {
    pub fn constant(v: bool) -> Bit {
        if v {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn as_const(self) -> Option<bool> {
        match self {
            Bit::Zero => Some(false),
            Bit::One => Some(true),
            Bit::Wire(_) => None,
        }
    }

    pub fn is_const(self) -> bool {
        !matches!(self, Bit::Wire(_))
    }
}

/// Unsigned integer as bits, least significant first.
pub type Word = Vec<Bit>;

#[derive(Default, Debug)]
pub struct Builder {
    wire_count: u32,
    gates: Vec<Gate>,
    inputs: Vec<Vec<WireId>>,
    outputs: Vec<Vec<WireId>>,
    zero: Option<WireId>,
    one: Option<WireId>,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> WireId {
        let w = WireId(self.wire_count);
        self.wire_count += 1;
        w
    }

    /// Declares the next provider with `count` input wires, in declaration order.
    pub fn input_provider(&mut self, count: usize) -> Vec<Bit> {
        let ws: Vec<WireId> = (0..count).map(|_| self.fresh()).collect();
        self.inputs.push(ws.clone());
        self.outputs.push(Vec::new());
        ws.into_iter().map(Bit::Wire).collect()
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    fn emit(&mut self, kind: GateKind, a: WireId, b: WireId) -> Bit {
        let out = self.fresh();
        self.gates.push(Gate { kind, a, b, out });
        Bit::Wire(out)
    }

    /// Emits a gate without any folding. Both operands must be wires.
    pub fn raw_gate(&mut self, kind: GateKind, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Wire(a), Bit::Wire(b)) => {
                let b = if kind == GateKind::Not { a } else { b };
                self.emit(kind, a, b)
            }
            _ => panic!("raw_gate needs wire operands"),
        }
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
            Bit::Wire(w) => self.emit(GateKind::Not, w, w),
        }
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Zero, _) | (_, Bit::Zero) => Bit::Zero,
            (Bit::One, x) | (x, Bit::One) => x,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => a,
            (Bit::Wire(x), Bit::Wire(y)) => self.emit(GateKind::And, x, y),
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::One, _) | (_, Bit::One) => Bit::One,
            (Bit::Zero, x) | (x, Bit::Zero) => x,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => a,
            (Bit::Wire(x), Bit::Wire(y)) => self.emit(GateKind::Or, x, y),
        }
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Zero, x) | (x, Bit::Zero) => x,
            (Bit::One, x) | (x, Bit::One) => self.not(x),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Zero,
            (Bit::Wire(x), Bit::Wire(y)) => self.emit(GateKind::Xor, x, y),
        }
    }

    /// A wire carrying a constant, built from the first input wire.
    fn materialize(&mut self, v: bool) -> WireId {
        let zero = match self.zero {
            Some(z) => z,
            None => {
                let w = *self
                    .inputs
                    .iter()
                    .flatten()
                    .next()
                    .expect("constant outputs need at least one input wire");
                let z = match self.emit(GateKind::Xor, w, w) {
                    Bit::Wire(z) => z,
                    _ => unreachable!(),
                };
                self.zero = Some(z);
                z
            }
        };
        if !v {
            return zero;
        }
        match self.one {
            Some(o) => o,
            None => {
                let o = match self.emit(GateKind::Not, zero, zero) {
                    Bit::Wire(o) => o,
                    _ => unreachable!(),
                };
                self.one = Some(o);
                o
            }
        }
    }

    /// Appends `bits` to provider `u`'s outputs.
    pub fn set_outputs(&mut self, u: usize, bits: &[Bit]) {
        for &bit in bits {
            let w = match bit {
                Bit::Wire(w) => w,
                Bit::Zero => self.materialize(false),
                Bit::One => self.materialize(true),
            };
            self.outputs[u].push(w);
        }
    }

    pub fn finish(self) -> Circuit {
        Circuit::new(self.wire_count, self.gates, self.inputs, self.outputs)
            .expect("builder produced an invalid circuit")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_fold_without_gates() {
        let mut b = Builder::new();
        let x = b.input_provider(1)[0];
        assert_eq!(b.and(x, Bit::Zero), Bit::Zero);
        assert_eq!(b.and(x, Bit::One), x);
        assert_eq!(b.or(x, Bit::One), Bit::One);
        assert_eq!(b.xor(x, x), Bit::Zero);
        assert_eq!(b.or(x, x), x);
        assert_eq!(b.gate_count(), 0);
        let nx = b.xor(x, Bit::One);
        assert_ne!(nx, x);
        assert_eq!(b.gate_count(), 1);
    }

    #[test]
    fn constant_outputs_are_materialized() {
        let mut b = Builder::new();
        let x = b.input_provider(1)[0];
        b.set_outputs(0, &[Bit::One, Bit::Zero, x, Bit::One]);
        let c = b.finish();
        for v in [false, true] {
            assert_eq!(c.eval_plain(&[vec![v]]).unwrap()[0], vec![true, false, v, true]);
        }
        // XOR(x,x) and NOT of it, shared across both constant-one outputs
        assert_eq!(c.gates().len(), 2);
    }
}
