//! Truthful cloud resource auction: a plaintext reference implementation and
//! an equivalent data-oblivious circuit.
//!
//! Bidder `j` asks for `k_j^i` instances of each VM type `i` at per-instance bid
//! `b_j^i`. With `S_j = Σ_i k_j^i b_j^i` and `T_j = Σ_i k_j^i ω_i`, bidders are
//! ranked by `S_j / √T_j`, allocated greedily against per-type capacities, and
//! each winner pays `S_c · √(T_j / T_c)` where `c` is its critical bidder.
//! Payments are fixed point: the integer `S_c · isqrt(⌊T_j · 4^f / T_c⌋)`
//! carries `f` fraction bits.

mod circuit;
mod files;

pub use circuit::build_auction_circuit;
pub use files::{parse_bids, parse_config, write_bids};

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuctionError {
    #[error("value {value} does not fit in {width} bits ({what})")]
    Width { what: String, value: u128, width: usize },
    #[error("arithmetic needs {bits} bits, more than the supported {limit}")]
    TooWide { bits: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionConfig {
    /// Instances available per VM type.
    pub capacities: Vec<u64>,
    /// Weight per VM type.
    pub weights: Vec<u64>,
    /// Bit width of every quantity, bid, capacity and weight.
    pub width: usize,
    /// Fraction bits of payments.
    pub frac_bits: usize,
    /// Commitment copies per input wire.
    pub copies: usize,
}

impl AuctionConfig {
    /// `m` VM types with `capacity` instances each and unit weights.
    pub fn uniform(m: usize, capacity: u64) -> Self {
        AuctionConfig { capacities: vec![capacity; m], weights: vec![1; m], width: 16, frac_bits: 8, copies: 10 }
    }

    pub fn vm_types(&self) -> usize {
        self.capacities.len()
    }

    pub fn validate(&self) -> Result<(), AuctionError> {
        let m = self.vm_types();
        if m == 0 || self.weights.len() != m {
            return Err(AuctionError::Config(format!(
                "{} capacities and {} weights; need the same positive count",
                m,
                self.weights.len()
            )));
        }
        if self.width == 0 || self.width > 32 {
            return Err(AuctionError::Config(format!("width {} outside 1..=32", self.width)));
        }
        if self.copies < 2 {
            return Err(AuctionError::Config("at least two copies per wire".into()));
        }
        for (what, vs) in [("capacity", &self.capacities), ("weight", &self.weights)] {
            for &v in vs {
                fits(what, v as u128, self.width)?;
            }
        }
        if self.weights.contains(&0) {
            return Err(AuctionError::Config("weights must be at least 1".into()));
        }
        self.widths().map(|_| ())
    }

    /// Derived bit widths of the intermediate values.
    pub fn widths(&self) -> Result<Widths, AuctionError> {
        let w = self.width;
        let max = (1u128 << w) - 1;
        let m = self.vm_types() as u128;
        let sum = bits(m * max * max);
        let weight_total: u128 = self.weights.iter().map(|&x| x as u128).sum();
        let total = bits(max * weight_total.max(1));
        let sqrt = (total + 2 * self.frac_bits).div_ceil(2);
        let wd = Widths {
            input: w,
            sum,
            total,
            key: 2 * sum + 2 * total,
            sqrt,
            payment: sum + sqrt,
        };
        // the reference implementation works in u128
        let need = (2 * sum + total).max(wd.payment).max(total + 2 * self.frac_bits);
        if need > 127 {
            return Err(AuctionError::TooWide { bits: need, limit: 127 });
        }
        Ok(wd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Widths {
    /// Quantities, bids, capacities and weights.
    pub input: usize,
    /// `S_j`.
    pub sum: usize,
    /// `T_j`.
    pub total: usize,
    /// `⌊S_j² · 2^(2·total) / T_j⌋`, the circuit's ranking key.
    pub key: usize,
    /// Square-root factor of the payment.
    pub sqrt: usize,
    /// Raw fixed-point payment.
    pub payment: usize,
}

pub fn bits(v: u128) -> usize {
    (128 - v.leading_zeros() as usize).max(1)
}

fn fits(what: &str, v: u128, width: usize) -> Result<(), AuctionError> {
    if width < 128 && v >> width != 0 {
        return Err(AuctionError::Width { what: what.into(), value: v, width });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bid {
    pub quantities: Vec<u64>,
    pub prices: Vec<u64>,
}

impl Bid {
    /// Random bid within the given inclusive ranges.
    pub fn random<R: Rng>(m: usize, max_quantity: u64, max_price: u64, rng: &mut R) -> Self {
        Bid {
            quantities: (0..m).map(|_| rng.gen_range(0..=max_quantity)).collect(),
            prices: (0..m).map(|_| rng.gen_range(0..=max_price)).collect(),
        }
    }

    /// The circuit input bits: `(k^i, b^i)` for each type, each big-endian.
    pub fn to_bits(&self, width: usize) -> Vec<bool> {
        let mut out = Vec::with_capacity(2 * width * self.quantities.len());
        for (&k, &b) in self.quantities.iter().zip(&self.prices) {
            out.extend(crate::circuit::to_bits_be(k as u128, width));
            out.extend(crate::circuit::to_bits_be(b as u128, width));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub allocations: Vec<bool>,
    /// Raw fixed-point payments.
    pub payments: Vec<u128>,
    pub frac_bits: usize,
}

impl AuctionOutcome {
    pub fn payment_value(&self, j: usize) -> f64 {
        self.payments[j] as f64 / (1u128 << self.frac_bits) as f64
    }

    /// Bits bidder `j` receives from the circuit: allocation, then payment big-endian.
    pub fn bidder_bits(&self, j: usize, payment_width: usize) -> Vec<bool> {
        let mut v = vec![self.allocations[j]];
        v.extend(crate::circuit::to_bits_be(self.payments[j], payment_width));
        v
    }

    /// Parses the outputs of the auction circuit for `n` bidders.
    pub fn from_bidder_bits(bits: &[Vec<bool>], frac_bits: usize) -> Self {
        AuctionOutcome {
            allocations: bits.iter().map(|b| b[0]).collect(),
            payments: bits.iter().map(|b| crate::circuit::from_bits_be(&b[1..])).collect(),
            frac_bits,
        }
    }
}

pub fn isqrt(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    // Newton iteration from an upper bound
    let mut x = 1u128 << bits(v).div_ceil(2);
    loop {
        let y = (x + v / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Per-bidder aggregates `(S_j, T_j)`.
pub fn aggregates(cfg: &AuctionConfig, bids: &[Bid]) -> Vec<(u128, u128)> {
    bids.iter()
        .map(|b| {
            let s = b.quantities.iter().zip(&b.prices).map(|(&k, &p)| k as u128 * p as u128).sum();
            let t = b.quantities.iter().zip(&cfg.weights).map(|(&k, &w)| k as u128 * w as u128).sum();
            (s, t)
        })
        .collect()
}

/// Ranking: bidders with `T > 0` by `S²/T` descending (compared as
/// `S_j²·T_t` vs `S_t²·T_j`), then lower index; bidders with `T = 0` last.
pub fn ranking(agg: &[(u128, u128)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..agg.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, ta) = agg[a];
        let (sb, tb) = agg[b];
        match (ta > 0, tb > 0) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => a.cmp(&b),
            (true, true) => (sb * sb * ta).cmp(&(sa * sa * tb)).then(a.cmp(&b)),
        }
    });
    order
}

/// Greedy allocation along `order`, skipping `skip`. Returns `x` by bidder.
fn greedy(cfg: &AuctionConfig, bids: &[Bid], agg: &[(u128, u128)], order: &[usize], skip: Option<usize>) -> Vec<bool> {
    let mut used = vec![0u64; cfg.vm_types()];
    let mut x = vec![false; bids.len()];
    for &j in order {
        if Some(j) == skip || agg[j].1 == 0 {
            continue;
        }
        let q = &bids[j].quantities;
        if (0..used.len()).all(|i| used[i] + q[i] <= cfg.capacities[i]) {
            for i in 0..used.len() {
                used[i] += q[i];
            }
            x[j] = true;
        }
    }
    x
}

pub fn check_bids(cfg: &AuctionConfig, bids: &[Bid]) -> Result<(), AuctionError> {
    cfg.validate()?;
    for (j, b) in bids.iter().enumerate() {
        if b.quantities.len() != cfg.vm_types() || b.prices.len() != cfg.vm_types() {
            return Err(AuctionError::Config(format!("bidder {j} does not bid on {} types", cfg.vm_types())));
        }
        for &v in b.quantities.iter().chain(&b.prices) {
            fits(&format!("bidder {j}"), v as u128, cfg.width)?;
        }
    }
    Ok(())
}

/// The reference auction.
pub fn oracle_run(cfg: &AuctionConfig, bids: &[Bid]) -> Result<AuctionOutcome, AuctionError> {
    check_bids(cfg, bids)?;
    let agg = aggregates(cfg, bids);
    let order = ranking(&agg);
    let x = greedy(cfg, bids, &agg, &order, None);
    let mut payments = vec![0u128; bids.len()];
    for (p, &j) in order.iter().enumerate() {
        if !x[j] {
            continue;
        }
        let without = greedy(cfg, bids, &agg, &order, Some(j));
        if let Some(&c) = order[p + 1..].iter().find(|&&q| !x[q] && without[q]) {
            let (sc, tc) = agg[c];
            let tj = agg[j].1;
            payments[j] = sc * isqrt((tj << (2 * cfg.frac_bits)) / tc);
        }
    }
    Ok(AuctionOutcome { allocations: x, payments, frac_bits: cfg.frac_bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bid(pairs: &[(u64, u64)]) -> Bid {
        Bid { quantities: pairs.iter().map(|p| p.0).collect(), prices: pairs.iter().map(|p| p.1).collect() }
    }

    #[test]
    fn two_bidder_example() {
        let cfg = AuctionConfig::uniform(1, 1);
        let out = oracle_run(&cfg, &[bid(&[(1, 10)]), bid(&[(1, 6)])]).unwrap();
        assert_eq!(out.allocations, vec![true, false]);
        assert_eq!(out.payment_value(0), 6.0);
        assert_eq!(out.payments, vec![6 * 256, 0]);
    }

    #[test]
    fn lone_bidder_pays_nothing() {
        let cfg = AuctionConfig::uniform(2, 5);
        let out = oracle_run(&cfg, &[bid(&[(2, 7), (1, 3)])]).unwrap();
        assert_eq!(out.allocations, vec![true]);
        assert_eq!(out.payments, vec![0]);
    }

    #[test]
    fn oversized_request_loses() {
        let cfg = AuctionConfig::uniform(2, 2);
        let out = oracle_run(&cfg, &[bid(&[(3, 90), (0, 0)]), bid(&[(1, 1), (1, 1)])]).unwrap();
        assert_eq!(out.allocations, vec![false, true]);
        assert_eq!(out.payments[0], 0);
    }

    #[test]
    fn zero_request_never_wins() {
        let cfg = AuctionConfig::uniform(1, 4);
        let out = oracle_run(&cfg, &[bid(&[(0, 50)]), bid(&[(1, 2)])]).unwrap();
        assert_eq!(out.allocations, vec![false, true]);
        assert_eq!(ranking(&aggregates(&cfg, &[bid(&[(0, 50)]), bid(&[(1, 2)])])), vec![1, 0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let cfg = AuctionConfig::uniform(1, 1);
        let out = oracle_run(&cfg, &[bid(&[(1, 5)]), bid(&[(1, 5)])]).unwrap();
        assert_eq!(out.allocations, vec![true, false]);
        assert_eq!(out.payments[0], 5 * 256);
    }

    #[test]
    fn width_errors() {
        let cfg = AuctionConfig::uniform(1, 1);
        assert!(matches!(oracle_run(&cfg, &[bid(&[(1, 70_000)])]), Err(AuctionError::Width { .. })));
        let mut big = AuctionConfig::uniform(1, 1);
        big.width = 32;
        assert!(matches!(big.validate(), Err(AuctionError::TooWide { .. })));
    }

    #[test]
    fn isqrt_matches_definition() {
        let mut r = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let v: u128 = r.gen::<u128>() >> r.gen_range(0..128);
            let s = isqrt(v);
            assert!(s * s <= v);
            assert!((s + 1).checked_mul(s + 1).is_none_or(|q| q > v));
        }
    }

    #[test]
    fn cross_products_fit_64_bits_at_experiment_ranges() {
        // quantities ≤ 3, bids ≤ 100, m ≤ 18, unit weights
        let s_max: u128 = 18 * 3 * 100;
        let t_max: u128 = 18 * 3;
        assert!(s_max * s_max * t_max < 1u128 << 64);
    }

    #[test]
    fn payments_within_bid_value() {
        let mut r = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..300 {
            let m = r.gen_range(1..=3);
            let cfg = AuctionConfig::uniform(m, r.gen_range(1..=6));
            let bids: Vec<Bid> = (0..r.gen_range(1..=8)).map(|_| Bid::random(m, 3, 100, &mut r)).collect();
            let out = oracle_run(&cfg, &bids).unwrap();
            let agg = aggregates(&cfg, &bids);
            for j in 0..bids.len() {
                if !out.allocations[j] {
                    assert_eq!(out.payments[j], 0);
                }
                assert!(out.payments[j] <= agg[j].0 << cfg.frac_bits);
            }
        }
    }

    #[test]
    fn raising_bids_keeps_winners_winning() {
        let mut r = ChaCha20Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 1000 {
            let m = r.gen_range(1..=3);
            let cfg = AuctionConfig::uniform(m, r.gen_range(1..=6));
            let mut bids: Vec<Bid> = (0..r.gen_range(2..=8)).map(|_| Bid::random(m, 3, 100, &mut r)).collect();
            let out = oracle_run(&cfg, &bids).unwrap();
            let Some(j) = (0..bids.len()).find(|&j| out.allocations[j]) else { continue };
            for p in bids[j].prices.iter_mut() {
                *p += r.gen_range(0..=20);
            }
            assert!(oracle_run(&cfg, &bids).unwrap().allocations[j]);
            checked += 1;
        }
    }
}
