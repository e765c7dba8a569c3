//! The auction as a data-oblivious circuit.
//!
//! Stages: per-bidder aggregates and ranking key, bitonic sort, greedy pass,
//! critical-bidder pass, payment pipeline, and a second sort back to input
//! order. The ranking key `⌊S² · 2^(2·wt) / T⌋` (with `T < 2^wt`) orders bidders
//! exactly as the cross-multiplied comparison does, since two distinct ratios
//! `S²/T` differ by more than `2^(−2·wt)`.

use super::{AuctionConfig, AuctionError};
use crate::circuit::gadgets::{
    add, and_reduce, const_word, divmod, gate_word, gt, isqrt, le, mul, mux, or_reduce, resize, word_from_be,
    word_to_be,
};
use crate::circuit::{bitonic_sort, Bit, Builder, Circuit, Record, Word};

fn index_width(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Slices of a sorted bidder record.
struct Layout {
    m: usize,
    w: usize,
    ws: usize,
    wt: usize,
    iw: usize,
    kw: usize,
}

impl Layout {
    fn k(&self, i: usize) -> std::ops::Range<usize> {
        i * self.w..(i + 1) * self.w
    }
    fn s(&self) -> std::ops::Range<usize> {
        let a = self.m * self.w;
        a..a + self.ws
    }
    fn t(&self) -> std::ops::Range<usize> {
        let a = self.s().end;
        a..a + self.wt
    }
    /// Comparison key: complemented index, ranking key, then the `T > 0` flag on top.
    fn cmp(&self) -> std::ops::Range<usize> {
        let a = self.t().end;
        a..a + self.iw + self.kw + 1
    }
    fn idx(&self) -> std::ops::Range<usize> {
        let a = self.t().end;
        a..a + self.iw
    }
    fn pos(&self) -> usize {
        self.cmp().end - 1
    }
}

/// One greedy step: whether the request fits on top of `used`, and the sums.
fn fits(b: &mut Builder, used: &[Word], ks: &[Word], caps: &[Word], pos: Bit) -> (Bit, Vec<Word>) {
    let mut sums = Vec::with_capacity(used.len());
    let mut ok = Vec::with_capacity(used.len() + 1);
    for i in 0..used.len() {
        let s = add(b, &used[i], &ks[i]);
        ok.push(le(b, &s, &caps[i]));
        sums.push(s);
    }
    ok.push(pos);
    (and_reduce(b, &ok), sums)
}

fn advance(b: &mut Builder, used: &[Word], sums: &[Word], take: Bit, w: usize) -> Vec<Word> {
    used.iter().zip(sums).map(|(u, s)| mux(b, take, &resize(s, w), u)).collect()
}

/// Builds the auction circuit for `n` bidders.
///
/// Bidder `j` is input group `j` with `(k^i, b^i)` per VM type, each `w` bits
/// big-endian. Group `n` is the cloud provider: no inputs. Bidder `j` receives
/// its allocation bit followed by its payment (big-endian, `payment` width from
/// [`AuctionConfig::widths`]); the cloud provider receives the same for every
/// bidder in order.
pub fn build_auction_circuit(cfg: &AuctionConfig, n: usize) -> Result<Circuit, AuctionError> {
    cfg.validate()?;
    if n == 0 {
        return Err(AuctionError::Config("at least one bidder".into()));
    }
    let wd = cfg.widths()?;
    let (m, w, f) = (cfg.vm_types(), cfg.width, cfg.frac_bits);
    let lay = Layout { m, w, ws: wd.sum, wt: wd.total, iw: index_width(n), kw: wd.key };
    let mut b = Builder::new();

    let mut records = Vec::with_capacity(n);
    for j in 0..n {
        let inp = b.input_provider(2 * m * w);
        let mut ks = Vec::with_capacity(m);
        let mut s: Word = Vec::new();
        let mut t: Word = Vec::new();
        for i in 0..m {
            let k = word_from_be(&inp[2 * i * w..(2 * i + 1) * w]);
            let p = word_from_be(&inp[(2 * i + 1) * w..(2 * i + 2) * w]);
            let kp = mul(&mut b, &k, &p);
            s = add(&mut b, &s, &kp);
            let kw = mul(&mut b, &k, &const_word(cfg.weights[i] as u128, w));
            t = add(&mut b, &t, &kw);
            ks.push(k);
        }
        let s = resize(&s, lay.ws);
        let t = resize(&t, lay.wt);
        let pos = or_reduce(&mut b, &t);
        let sq = mul(&mut b, &s, &s);
        let mut num = vec![Bit::Zero; 2 * lay.wt];
        num.extend(sq);
        let (key, _) = divmod(&mut b, &num, &t);

        let mut bits: Word = ks.concat();
        bits.extend(&s);
        bits.extend(&t);
        bits.extend(const_word(!(j as u128), lay.iw));
        bits.extend(resize(&key, lay.kw));
        bits.push(pos);
        records.push(Record::new(bits));
    }
    b.input_provider(0);

    let cr = lay.cmp();
    let sorted = bitonic_sort(&mut b, records, |b, x, y| gt(b, &x.bits[cr.clone()], &y.bits[cr.clone()]));

    let caps: Vec<Word> = cfg.capacities.iter().map(|&c| const_word(c as u128, w)).collect();
    let ks: Vec<Vec<Word>> = sorted.iter().map(|r| (0..m).map(|i| r.bits[lay.k(i)].to_vec()).collect()).collect();
    let pos: Vec<Bit> = sorted.iter().map(|r| r.bits[lay.pos()]).collect();

    // greedy allocation in ranked order
    let mut used: Vec<Word> = vec![vec![Bit::Zero; w]; m];
    let mut before = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for p in 0..n {
        before.push(used.clone());
        let (fit, sums) = fits(&mut b, &used, &ks[p], &caps, pos[p]);
        x.push(fit);
        if p + 1 < n {
            used = advance(&mut b, &used, &sums, fit, w);
        }
    }

    // critical bidder of each position, by re-running greedy without it
    let mut out_records = Vec::with_capacity(n);
    for p in 0..n {
        let mut state = before[p].clone();
        let mut found = Bit::Zero;
        let mut sc: Word = vec![Bit::Zero; lay.ws];
        let mut tc: Word = vec![Bit::Zero; lay.wt];
        for q in p + 1..n {
            let (fit, sums) = fits(&mut b, &state, &ks[q], &caps, pos[q]);
            let lost = b.not(x[q]);
            let cand = b.and(lost, fit);
            let fresh = b.not(found);
            let sel = b.and(cand, fresh);
            found = b.or(found, cand);
            let sq = gate_word(&mut b, sel, &sorted[q].bits[lay.s()]);
            let tq = gate_word(&mut b, sel, &sorted[q].bits[lay.t()]);
            sc = sc.iter().zip(&sq).map(|(&a, &c)| b.or(a, c)).collect();
            tc = tc.iter().zip(&tq).map(|(&a, &c)| b.or(a, c)).collect();
            if q + 1 < n {
                state = advance(&mut b, &state, &sums, fit, w);
            }
        }
        let mut num = vec![Bit::Zero; 2 * f];
        num.extend_from_slice(&sorted[p].bits[lay.t()]);
        let (ratio, _) = divmod(&mut b, &num, &tc);
        let root = isqrt(&mut b, &ratio);
        let pay = mul(&mut b, &sc, &root);
        let pays = b.and(x[p], found);
        let pay = gate_word(&mut b, pays, &resize(&pay, wd.payment));

        let mut bits = vec![x[p]];
        bits.extend(pay);
        bits.extend_from_slice(&sorted[p].bits[lay.idx()]);
        out_records.push(Record::new(bits));
    }

    // back to input order: complemented index descending
    let ir = 1 + wd.payment..1 + wd.payment + lay.iw;
    let back = bitonic_sort(&mut b, out_records, |b, x, y| gt(b, &x.bits[ir.clone()], &y.bits[ir.clone()]));
    let mut all = Vec::new();
    for (j, r) in back.iter().enumerate() {
        let mut o = vec![r.bits[0]];
        o.extend(word_to_be(&r.bits[1..1 + wd.payment]));
        b.set_outputs(j, &o);
        all.extend(o);
    }
    b.set_outputs(n, &all);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::super::{oracle_run, AuctionOutcome, Bid};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn run_circuit(c: &Circuit, cfg: &AuctionConfig, bids: &[Bid]) -> AuctionOutcome {
        let mut inputs: Vec<Vec<bool>> = bids.iter().map(|b| b.to_bits(cfg.width)).collect();
        inputs.push(Vec::new());
        let out = c.eval_plain(&inputs).unwrap();
        let n = bids.len();
        let got = AuctionOutcome::from_bidder_bits(&out[..n], cfg.frac_bits);
        let flat: Vec<bool> = out[..n].concat();
        assert_eq!(out[n], flat, "cloud provider output");
        got
    }

    #[test]
    fn two_bidder_example_through_circuit() {
        let cfg = AuctionConfig::uniform(1, 1);
        let c = build_auction_circuit(&cfg, 2).unwrap();
        let bids = [
            Bid { quantities: vec![1], prices: vec![10] },
            Bid { quantities: vec![1], prices: vec![6] },
        ];
        let got = run_circuit(&c, &cfg, &bids);
        assert_eq!(got.allocations, vec![true, false]);
        assert_eq!(got.payment_value(0), 6.0);
        assert_eq!(got.payments[1], 0);
    }

    #[test]
    fn circuit_matches_oracle_on_random_instances() {
        let mut r = ChaCha20Rng::seed_from_u64(11);
        let mut cache = std::collections::HashMap::new();
        for _ in 0..60 {
            let m = r.gen_range(1..=3);
            let n = r.gen_range(1..=6);
            let cap = r.gen_range(1..=6);
            let cfg = AuctionConfig::uniform(m, cap);
            let c = cache.entry((m, n, cap)).or_insert_with(|| build_auction_circuit(&cfg, n).unwrap());
            let bids: Vec<Bid> = (0..n).map(|_| Bid::random(m, 3, 100, &mut r)).collect();
            assert_eq!(run_circuit(c, &cfg, &bids), oracle_run(&cfg, &bids).unwrap(), "{bids:?}");
        }
    }

    #[test]
    fn weighted_types_and_ties() {
        let mut cfg = AuctionConfig::uniform(2, 3);
        cfg.weights = vec![2, 5];
        let c = build_auction_circuit(&cfg, 4).unwrap();
        let mut r = ChaCha20Rng::seed_from_u64(12);
        for _ in 0..40 {
            // few distinct values so ties and zero requests are common
            let bids: Vec<Bid> = (0..4).map(|_| Bid::random(2, 2, 3, &mut r)).collect();
            assert_eq!(run_circuit(&c, &cfg, &bids), oracle_run(&cfg, &bids).unwrap(), "{bids:?}");
        }
    }

    #[test]
    fn permuting_bidders_permutes_outputs() {
        let cfg = AuctionConfig::uniform(2, 4);
        let c = build_auction_circuit(&cfg, 5).unwrap();
        let mut r = ChaCha20Rng::seed_from_u64(13);
        let mut done = 0;
        while done < 10 {
            let bids: Vec<Bid> = (0..5).map(|_| Bid::random(2, 3, 100, &mut r)).collect();
            let agg = super::super::aggregates(&cfg, &bids);
            let mut ratios: Vec<(u128, u128)> = agg.iter().filter(|a| a.1 > 0).copied().collect();
            ratios.sort_by(|a, b| (a.0 * a.0 * b.1).cmp(&(b.0 * b.0 * a.1)));
            let distinct = ratios.windows(2).all(|w| w[0].0 * w[0].0 * w[1].1 != w[1].0 * w[1].0 * w[0].1);
            if !distinct || agg.iter().any(|a| a.1 == 0) {
                continue;
            }
            let perm = [3, 0, 4, 1, 2];
            let shuffled: Vec<Bid> = perm.iter().map(|&i| bids[i].clone()).collect();
            let a = run_circuit(&c, &cfg, &bids);
            let b = run_circuit(&c, &cfg, &shuffled);
            for (pos, &i) in perm.iter().enumerate() {
                assert_eq!(a.allocations[i], b.allocations[pos]);
                assert_eq!(a.payments[i], b.payments[pos]);
            }
            done += 1;
        }
    }

    #[test]
    fn gate_count_grows_quadratically() {
        let cfg = AuctionConfig::uniform(2, 10);
        let g: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| build_auction_circuit(&cfg, n).unwrap().gates().len() as f64)
            .collect();
        // doubling n should more than double the gates
        assert!(g[1] / g[0] > 2.0 && g[2] / g[1] > 2.0, "{g:?}");
        assert!(g[2] / g[1] < 4.5, "{g:?}");
    }
}
