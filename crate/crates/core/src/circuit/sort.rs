//! Bitonic sorting network over bit records.

use super::gadgets::{self, const_word, word_from_be, word_to_be};
use super::{Bit, Builder, Circuit, Word};

/// A record travelling through the network. `dummy` records are padding whose
/// position is known when the circuit is built; they always sort last, so
/// comparisons involving them cost no gates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub bits: Word,
    pub dummy: bool,
}

impl Record {
    pub fn new(bits: Word) -> Self {
        Record { bits, dummy: false }
    }
}

fn exchange(b: &mut Builder, s: Bit, x: &mut Record, y: &mut Record) {
    match s {
        Bit::Zero => {}
        Bit::One => std::mem::swap(x, y),
        Bit::Wire(_) => {
            let (p, q) = gadgets::swap(b, s, &x.bits, &y.bits);
            x.bits = p;
            y.bits = q;
        }
    }
}

/// Sorts `records` so that for every adjacent pair `before(a, b)` or not
/// `before(b, a)` holds. `before` must be a strict order on the live records and
/// return 1 when `a` must precede `b`. The output has the input's length.
pub fn bitonic_sort<F>(b: &mut Builder, records: Vec<Record>, mut before: F) -> Vec<Record>
where
    F: FnMut(&mut Builder, &Record, &Record) -> Bit,
{
    let n = records.len();
    if n <= 1 {
        return records;
    }
    let width = records.iter().map(|r| r.bits.len()).max().unwrap_or(0);
    let size = n.next_power_of_two();
    let mut v = records;
    v.resize(size, Record { bits: vec![Bit::Zero; width], dummy: true });

    let mut cmp = |b: &mut Builder, x: &Record, y: &Record| match (x.dummy, y.dummy) {
        (false, false) => before(b, x, y),
        (false, true) => Bit::One,
        (true, _) => Bit::Zero,
    };

    let mut k = 2;
    while k <= size {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..size {
                let l = i ^ j;
                if l <= i {
                    continue;
                }
                let (lo, hi) = v.split_at_mut(l);
                let (x, y) = (&mut lo[i], &mut hi[0]);
                // blocks with bit k clear end up in final order, the others reversed
                let s = if i & k == 0 { cmp(b, y, x) } else { cmp(b, x, y) };
                exchange(b, s, x, y);
            }
            j /= 2;
        }
        k *= 2;
    }
    debug_assert!(v[n..].iter().all(|r| r.dummy));
    v.truncate(n);
    v
}

fn index_width(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize
}

/// Standalone network sorting `n` records descending by key, ties broken by
/// ascending original position.
///
/// Record `i` is input group `i`: key then payload, each big-endian. Group 0
/// receives the sorted records in the same layout.
pub fn build_sorting_network(n: usize, key_width: usize, payload_width: usize) -> Circuit {
    assert!(n >= 1, "sorting network needs at least one record");
    let iw = index_width(n);
    let mut b = Builder::new();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let inp = b.input_provider(key_width + payload_width);
        let key = word_from_be(&inp[..key_width]);
        let payload = word_from_be(&inp[key_width..]);
        // low bits: complemented index, so a smaller index compares larger
        let mut bits = const_word(!(i as u128), iw);
        bits.extend(key);
        bits.extend(payload);
        records.push(Record::new(bits));
    }
    let cw = iw + key_width;
    let sorted = bitonic_sort(&mut b, records, |b, x, y| gadgets::gt(b, &x.bits[..cw], &y.bits[..cw]));
    for r in sorted {
        b.set_outputs(0, &word_to_be(&r.bits[iw..cw]));
        b.set_outputs(0, &word_to_be(&r.bits[cw..]));
    }
    b.finish()
}
