//! Arithmetic gadgets over [`Word`]s (least significant bit first).
//!
//! Every gadget has a fixed gate structure for a given operand width, so the
//! resulting circuits are data-oblivious by construction.

use super::{Bit, Builder, Circuit, CircuitError, Word};

pub fn const_word(v: u128, width: usize) -> Word {
    (0..width).map(|i| Bit::constant(i < 128 && (v >> i) & 1 == 1)).collect()
}

/// Interprets provider input bits (big-endian) as a word.
pub fn word_from_be(bits: &[Bit]) -> Word {
    bits.iter().rev().copied().collect()
}

/// Big-endian bit order for outputs.
pub fn word_to_be(w: &[Bit]) -> Vec<Bit> {
    w.iter().rev().copied().collect()
}

pub fn resize(w: &[Bit], width: usize) -> Word {
    (0..width).map(|i| w.get(i).copied().unwrap_or(Bit::Zero)).collect()
}

/// Drops constant-zero high bits.
pub fn trim(w: &[Bit]) -> Word {
    let mut v = w.to_vec();
    while v.last() == Some(&Bit::Zero) {
        v.pop();
    }
    v
}

/// Majority of three bits.
fn maj(b: &mut Builder, x: Bit, y: Bit, z: Bit) -> Bit {
    for (c, p, q) in [(x, y, z), (y, x, z), (z, x, y)] {
        match c {
            Bit::Zero => return b.and(p, q),
            Bit::One => return b.or(p, q),
            Bit::Wire(_) => {}
        }
    }
    let xz = b.xor(x, z);
    let yz = b.xor(y, z);
    let t = b.and(xz, yz);
    b.xor(t, z)
}

fn full_add(b: &mut Builder, x: Bit, y: Bit, c: Bit) -> (Bit, Bit) {
    let xy = b.xor(x, y);
    let sum = b.xor(xy, c);
    let carry = if x.is_const() || y.is_const() || c.is_const() {
        maj(b, x, y, c)
    } else {
        // c ⊕ ((x⊕c)(y⊕c)), sharing nothing with the sum path
        let xc = b.xor(x, c);
        let t = b.and(xy, xc);
        b.xor(t, x)
    };
    (sum, carry)
}

/// One bit of `x − y − borrow_in`: returns (difference, borrow_out).
fn full_sub(b: &mut Builder, x: Bit, y: Bit, c: Bit) -> (Bit, Bit) {
    // borrow_out = MAJ(¬x, y, c) = c ⊕ ((x⊕y)(c⊕y))
    let p = b.xor(x, y);
    let diff = b.xor(p, c);
    let q = b.xor(c, y);
    let r = b.and(p, q);
    (diff, b.xor(c, r))
}

/// `x + y + cin`, truncated to max(|x|,|y|) bits, plus carry out.
pub fn add_carry(b: &mut Builder, x: &[Bit], y: &[Bit], cin: Bit) -> (Word, Bit) {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    let mut carry = cin;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (s, c) = full_add(b, x[i], y[i], carry);
        out.push(s);
        carry = c;
    }
    (out, carry)
}

/// Full-width sum (one bit wider than the wider operand).
pub fn add(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Word {
    let (mut s, c) = add_carry(b, x, y, Bit::Zero);
    s.push(c);
    s
}

/// `x − y` modulo 2^max(|x|,|y|), and the borrow (set iff x < y).
pub fn sub(b: &mut Builder, x: &[Bit], y: &[Bit]) -> (Word, Bit) {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    let mut borrow = Bit::Zero;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (d, bo) = full_sub(b, x[i], y[i], borrow);
        out.push(d);
        borrow = bo;
    }
    (out, borrow)
}

/// `x < y`, computed as the borrow chain of `x − y` alone.
pub fn lt(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Bit {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    let mut borrow = Bit::Zero;
    for i in 0..n {
        let p = b.xor(x[i], y[i]);
        let q = b.xor(borrow, y[i]);
        let r = b.and(p, q);
        borrow = b.xor(borrow, r);
    }
    borrow
}

pub fn gt(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Bit {
    lt(b, y, x)
}

pub fn ge(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Bit {
    let l = lt(b, x, y);
    b.not(l)
}

pub fn le(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Bit {
    let g = gt(b, x, y);
    b.not(g)
}

pub fn or_reduce(b: &mut Builder, x: &[Bit]) -> Bit {
    x.iter().fold(Bit::Zero, |acc, &v| b.or(acc, v))
}

pub fn and_reduce(b: &mut Builder, x: &[Bit]) -> Bit {
    x.iter().fold(Bit::One, |acc, &v| b.and(acc, v))
}

pub fn is_zero(b: &mut Builder, x: &[Bit]) -> Bit {
    let any = or_reduce(b, x);
    b.not(any)
}

pub fn eq(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Bit {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    let diff: Vec<Bit> = x.iter().zip(&y).map(|(&p, &q)| b.xor(p, q)).collect();
    is_zero(b, &diff)
}

/// `s ∧ x` bitwise.
pub fn gate_word(b: &mut Builder, s: Bit, x: &[Bit]) -> Word {
    x.iter().map(|&v| b.and(s, v)).collect()
}

/// `s ? x : y`.
pub fn mux(b: &mut Builder, s: Bit, x: &[Bit], y: &[Bit]) -> Word {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    x.iter()
        .zip(&y)
        .map(|(&p, &q)| {
            let d = b.xor(p, q);
            let t = b.and(s, d);
            b.xor(q, t)
        })
        .collect()
}

/// Conditional exchange: returns `(y, x)` when `s` is set, `(x, y)` otherwise.
pub fn swap(b: &mut Builder, s: Bit, x: &[Bit], y: &[Bit]) -> (Word, Word) {
    let n = x.len().max(y.len());
    let (x, y) = (resize(x, n), resize(y, n));
    let mut ox = Vec::with_capacity(n);
    let mut oy = Vec::with_capacity(n);
    for i in 0..n {
        let d = b.xor(x[i], y[i]);
        let t = b.and(s, d);
        ox.push(b.xor(x[i], t));
        oy.push(b.xor(y[i], t));
    }
    (ox, oy)
}

/// Schoolbook product, |x|+|y| bits.
pub fn mul(b: &mut Builder, x: &[Bit], y: &[Bit]) -> Word {
    let (x, y) = if trim(x).len() < trim(y).len() { (y, x) } else { (x, y) };
    let (x, y) = (trim(x), trim(y));
    let width = x.len() + y.len();
    let mut acc: Word = vec![Bit::Zero; width.max(1)];
    for (i, &yi) in y.iter().enumerate() {
        if yi == Bit::Zero {
            continue;
        }
        let pp = gate_word(b, yi, &x);
        let hi = (i + x.len()).min(acc.len());
        let (s, c) = add_carry(b, &acc[i..hi], &pp, Bit::Zero);
        acc[i..hi].copy_from_slice(&s);
        if hi < acc.len() {
            acc[hi] = c;
        }
    }
    acc.truncate(width);
    acc
}

/// Restoring long division. Returns (quotient, remainder) with |x| and |d| bits.
/// Division by zero yields an all-ones quotient and remainder `x` truncated.
pub fn divmod(b: &mut Builder, x: &[Bit], d: &[Bit]) -> (Word, Word) {
    let dw = d.len();
    let d_ext = resize(d, dw + 1);
    let mut rem: Word = vec![Bit::Zero; dw + 1];
    let mut q = vec![Bit::Zero; x.len()];
    for i in (0..x.len()).rev() {
        rem.pop();
        rem.insert(0, x[i]);
        let (diff, borrow) = sub(b, &rem, &d_ext);
        q[i] = b.not(borrow);
        rem = mux(b, borrow, &rem, &diff);
    }
    rem.truncate(dw);
    (q, rem)
}

/// Floor square root by the non-restoring bit-serial method.
pub fn isqrt(b: &mut Builder, x: &[Bit]) -> Word {
    let k = x.len().div_ceil(2);
    let x = resize(x, 2 * k);
    // signed remainder; |R| ≤ 2Q+1 < 2^(k+1)
    let rw = k + 3;
    let mut r: Word = vec![Bit::Zero; rw];
    let mut q: Word = Vec::with_capacity(k);
    // ¬sign(R): set when the last remainder was non-negative
    let mut nonneg = Bit::One;
    for i in (0..k).rev() {
        let mut shifted = vec![x[2 * i], x[2 * i + 1]];
        shifted.extend_from_slice(&r[..rw - 2]);
        // operand: R ≥ 0 ? ¬(Q‖01) (with carry 1) : (Q‖11)
        let sign = b.not(nonneg);
        let mut op = vec![sign, Bit::One];
        for j in 0..rw - 2 {
            let qb = if j < q.len() { q[q.len() - 1 - j] } else { Bit::Zero };
            op.push(b.xor(qb, nonneg));
        }
        let (next, _) = add_carry(b, &shifted, &op, nonneg);
        r = next;
        nonneg = b.not(r[rw - 1]);
        q.push(nonneg);
    }
    q.reverse();
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    Adder(usize),
    Subtractor(usize),
    Multiplier(usize),
    Comparator(usize),
    Mux(usize),
    Swap(usize),
    Isqrt(usize),
    Divider(usize),
}

impl GadgetKind {
    pub fn width(self) -> usize {
        match self {
            GadgetKind::Adder(w)
            | GadgetKind::Subtractor(w)
            | GadgetKind::Multiplier(w)
            | GadgetKind::Comparator(w)
            | GadgetKind::Mux(w)
            | GadgetKind::Swap(w)
            | GadgetKind::Isqrt(w)
            | GadgetKind::Divider(w) => w,
        }
    }
}

/// Builds a standalone gadget circuit.
///
/// Each operand is its own input group, in big-endian order: `a` then `b`
/// (mux and swap take the one-bit select first). All results go to group 0:
///
/// | gadget | output |
/// |---|---|
/// | adder | `a + b`, w+1 bits |
/// | subtractor | borrow bit, then `a − b mod 2^w` |
/// | multiplier | `a · b`, 2w bits |
/// | comparator | `a ≥ b` |
/// | mux | `sel ? a : b` |
/// | swap | `sel ? (b, a) : (a, b)` |
/// | isqrt | `⌊√a⌋`, ⌈w/2⌉ bits |
/// | divider | `⌊a / b⌋` then `a mod b`, w bits each |
pub fn build_gadget(kind: GadgetKind) -> Result<Circuit, CircuitError> {
    let w = kind.width();
    if w == 0 {
        return Err(CircuitError::GadgetWidth);
    }
    let mut b = Builder::new();
    let sel = match kind {
        GadgetKind::Mux(_) | GadgetKind::Swap(_) => Some(b.input_provider(1)[0]),
        _ => None,
    };
    let x = word_from_be(&b.input_provider(w));
    let unary = matches!(kind, GadgetKind::Isqrt(_));
    let y = if unary { Vec::new() } else { word_from_be(&b.input_provider(w)) };
    let out: Vec<Bit> = match kind {
        GadgetKind::Adder(_) => word_to_be(&add(&mut b, &x, &y)),
        GadgetKind::Subtractor(_) => {
            let (d, borrow) = sub(&mut b, &x, &y);
            let mut o = vec![borrow];
            o.extend(word_to_be(&d));
            o
        }
        GadgetKind::Multiplier(_) => word_to_be(&resize(&mul(&mut b, &x, &y), 2 * w)),
        GadgetKind::Comparator(_) => vec![ge(&mut b, &x, &y)],
        GadgetKind::Mux(_) => word_to_be(&mux(&mut b, sel.unwrap(), &x, &y)),
        GadgetKind::Swap(_) => {
            let (p, q) = swap(&mut b, sel.unwrap(), &x, &y);
            let mut o = word_to_be(&p);
            o.extend(word_to_be(&q));
            o
        }
        GadgetKind::Isqrt(_) => word_to_be(&isqrt(&mut b, &x)),
        GadgetKind::Divider(_) => {
            let (q, r) = divmod(&mut b, &x, &y);
            let mut o = word_to_be(&q);
            o.extend(word_to_be(&r));
            o
        }
    };
    b.set_outputs(0, &out);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{from_bits_be, to_bits_be};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn run(c: &Circuit, operands: &[(u128, usize)]) -> Vec<bool> {
        let inputs: Vec<Vec<bool>> = operands.iter().map(|&(v, w)| to_bits_be(v, w)).collect();
        c.eval_plain(&inputs).unwrap().remove(0)
    }

    fn brute_isqrt(v: u128) -> u128 {
        let mut r = 0u128;
        while (r + 1) * (r + 1) <= v {
            r += 1;
        }
        r
    }

    fn brute_div(a: u128, d: u128) -> (u128, u128) {
        let mut q = 0;
        let mut r = a;
        while r >= d {
            r -= d;
            q += 1;
        }
        (q, r)
    }

    #[test]
    fn zero_width_rejected() {
        assert_eq!(build_gadget(GadgetKind::Adder(0)), Err(CircuitError::GadgetWidth));
    }

    #[test]
    fn one_bit_adder_carries() {
        let c = build_gadget(GadgetKind::Adder(1)).unwrap();
        assert_eq!(run(&c, &[(1, 1), (1, 1)]), vec![true, false]);
    }

    #[test]
    fn spot_values() {
        let c = build_gadget(GadgetKind::Comparator(16)).unwrap();
        assert_eq!(run(&c, &[(5, 16), (3, 16)]), vec![true]);
        assert_eq!(run(&c, &[(3, 16), (5, 16)]), vec![false]);
        assert_eq!(run(&c, &[(7, 16), (7, 16)]), vec![true]);

        // floor(sqrt(170)) = 13 (13² = 169, 14² = 196)
        let c = build_gadget(GadgetKind::Isqrt(16)).unwrap();
        assert_eq!(brute_isqrt(170), 13);
        assert_eq!(from_bits_be(&run(&c, &[(170, 16)])), 13);

        let c = build_gadget(GadgetKind::Divider(16)).unwrap();
        assert_eq!(brute_div(100, 7), (14, 2));
        let out = run(&c, &[(100, 16), (7, 16)]);
        assert_eq!(from_bits_be(&out[..16]), 14);
        assert_eq!(from_bits_be(&out[16..]), 2);
    }

    #[test]
    fn isqrt_exhaustive_small_widths() {
        for w in 1..=12 {
            let c = build_gadget(GadgetKind::Isqrt(w)).unwrap();
            for v in 0..(1u128 << w) {
                assert_eq!(from_bits_be(&run(&c, &[(v, w)])), brute_isqrt(v), "w={w} v={v}");
            }
        }
    }

    #[test]
    fn divider_exhaustive_small_width() {
        let w = 6;
        let c = build_gadget(GadgetKind::Divider(w)).unwrap();
        for a in 0..64u128 {
            for d in 1..64u128 {
                let out = run(&c, &[(a, w), (d, w)]);
                assert_eq!((from_bits_be(&out[..w]), from_bits_be(&out[w..])), brute_div(a, d));
            }
        }
    }

    #[test]
    fn gadgets_match_integer_oracles() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        for w in [1usize, 3, 8, 16, 33] {
            let mask = (1u128 << w) - 1;
            let circuits = [
                GadgetKind::Adder(w),
                GadgetKind::Subtractor(w),
                GadgetKind::Multiplier(w),
                GadgetKind::Comparator(w),
                GadgetKind::Mux(w),
                GadgetKind::Swap(w),
                GadgetKind::Isqrt(w),
                GadgetKind::Divider(w),
            ]
            .map(|k| (k, build_gadget(k).unwrap()));
            for _ in 0..1000 {
                let a = rng.gen::<u128>() & mask;
                let d = rng.gen::<u128>() & mask;
                let s = rng.gen::<bool>();
                for (kind, c) in &circuits {
                    let got = match kind {
                        GadgetKind::Mux(_) | GadgetKind::Swap(_) => run(c, &[(s as u128, 1), (a, w), (d, w)]),
                        GadgetKind::Isqrt(_) => run(c, &[(a, w)]),
                        _ => run(c, &[(a, w), (d, w)]),
                    };
                    let expect: Vec<bool> = match kind {
                        GadgetKind::Adder(_) => to_bits_be(a + d, w + 1),
                        GadgetKind::Subtractor(_) => {
                            let mut e = vec![a < d];
                            e.extend(to_bits_be(a.wrapping_sub(d) & mask, w));
                            e
                        }
                        GadgetKind::Multiplier(_) => to_bits_be(a * d, 2 * w),
                        GadgetKind::Comparator(_) => vec![a >= d],
                        GadgetKind::Mux(_) => to_bits_be(if s { a } else { d }, w),
                        GadgetKind::Swap(_) => {
                            let (p, q) = if s { (d, a) } else { (a, d) };
                            let mut e = to_bits_be(p, w);
                            e.extend(to_bits_be(q, w));
                            e
                        }
                        GadgetKind::Isqrt(_) => to_bits_be(brute_isqrt_fast(a), w.div_ceil(2)),
                        GadgetKind::Divider(_) => {
                            if d == 0 {
                                continue;
                            }
                            let mut e = to_bits_be(a / d, w);
                            e.extend(to_bits_be(a % d, w));
                            e
                        }
                    };
                    assert_eq!(got, expect, "{kind:?} a={a} b={d} s={s}");
                }
            }
        }
    }

    /// Integer sqrt by bisection; independent of the circuit's digit recurrence.
    fn brute_isqrt_fast(v: u128) -> u128 {
        let (mut lo, mut hi) = (0u128, 1u128 << 64);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if mid.checked_mul(mid).is_some_and(|m| m <= v) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn comparisons_with_constants_fold() {
        let mut b = Builder::new();
        let x = word_from_be(&b.input_provider(8));
        let c = const_word(100, 8);
        let before = b.gate_count();
        let _ = le(&mut b, &x, &c);
        let used = b.gate_count() - before;
        assert!(used < 8 * 4, "constant comparison used {used} gates");
    }
}
