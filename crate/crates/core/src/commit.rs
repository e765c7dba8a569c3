//! Hash-based commitments.
//!
//! A commitment to `message` under a 16-byte nonce `r` is `SHA-256(r ‖ message)`.
//! Every protocol call site prefixes its message with a one-byte [`Context`]
//! tag so that an opening produced for one purpose never verifies in another.

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

/// Length of the commitment nonce in bytes.
pub const NONCE_LEN: usize = 16;
/// Length of a commitment digest in bytes.
pub const DIGEST_LEN: usize = 32;

/// Domain-separation tags for committed messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Context {
    InputSet = 0x01,
    Position = 0x02,
    LabelHash = 0x03,
    OutputEncoding = 0x04,
    OutputLabel = 0x05,
    CoinToss = 0x06,
}

impl Context {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Context::InputSet,
            0x02 => Context::Position,
            0x03 => Context::LabelHash,
            0x04 => Context::OutputEncoding,
            0x05 => Context::OutputLabel,
            0x06 => Context::CoinToss,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commitment(pub [u8; DIGEST_LEN]);

impl std::fmt::Debug for Commitment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Commitment(")?;
        for b in &self.0[..6] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl Nonce {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut n = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut n);
        Nonce(n)
    }
}

/// Message and nonce that open a [`Commitment`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub message: Vec<u8>,
    pub randomness: Nonce,
}

impl Opening {
    /// The context tag carried in the first message byte, if any.
    pub fn context(&self) -> Option<Context> {
        self.message.first().and_then(|&b| Context::from_byte(b))
    }

    /// Message bytes after the context tag.
    pub fn payload(&self) -> &[u8] {
        self.message.get(1..).unwrap_or(&[])
    }
}

pub fn commit(message: &[u8], randomness: &Nonce) -> Commitment {
    let mut h = Sha256::new();
    h.update(randomness.0);
    h.update(message);
    Commitment(h.finalize().into())
}

pub fn verify(c: &Commitment, o: &Opening) -> bool {
    commit(&o.message, &o.randomness) == *c
}

/// Builds the tagged message `ctx ‖ payload`.
pub fn tagged(ctx: Context, payload: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(payload.len() + 1);
    m.push(ctx as u8);
    m.extend_from_slice(payload);
    m
}

/// Commits to `ctx ‖ payload` with a fresh nonce and returns both halves.
pub fn commit_tagged<R: RngCore + CryptoRng>(
    ctx: Context,
    payload: &[u8],
    rng: &mut R,
) -> (Commitment, Opening) {
    let randomness = Nonce::random(rng);
    let message = tagged(ctx, payload);
    (commit(&message, &randomness), Opening { message, randomness })
}

/// Verifies an opening and additionally requires the expected context tag.
pub fn verify_tagged(c: &Commitment, o: &Opening, ctx: Context) -> bool {
    o.context() == Some(ctx) && verify(c, o)
}

/// Plain SHA-256, used for label hashes and digests of message payloads.
pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    // SHA-256 of the 16 zero bytes, computed with coreutils `sha256sum`.
    const SHA256_ZERO16: &str = "374708fff7719dd5979ec875d56cd2286f6d3cf7ec317a3b25632aab28ec37bb";
    // SHA-256 of 16 bytes 0x00..0x0f followed by ASCII "abc", also from `sha256sum`.
    const SHA256_SEQ16_ABC: &str = "f9b234fe3638bdd7671503b81bda6e249f96aea7e0d8ca758c8f5ab13096de90";

    fn hex(d: &[u8]) -> String {
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    #[test]
    fn empty_message_is_hash_of_nonce() {
        let r = Nonce([0u8; 16]);
        assert_eq!(hex(&commit(&[], &r).0), SHA256_ZERO16);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let r = Nonce::random(&mut rng);
        assert_eq!(commit(&[], &r).0, sha256(&r.0));
    }

    #[test]
    fn matches_standalone_sha256_of_concatenation() {
        let mut r = [0u8; 16];
        for (i, b) in r.iter_mut().enumerate() {
            *b = i as u8;
        }
        let c = commit(b"abc", &Nonce(r));
        let mut cat = r.to_vec();
        cat.extend_from_slice(b"abc");
        assert_eq!(c.0, sha256(&cat));
        assert_eq!(hex(&c.0), SHA256_SEQ16_ABC);
    }

    #[test]
    fn distinct_nonces_give_distinct_digests() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let m = b"same message".to_vec();
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            let r = Nonce::random(&mut rng);
            assert!(seen.insert(commit(&m, &r)));
        }
    }

    #[test]
    fn verify_round_trip_and_binding() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (c, o) = commit_tagged(Context::Position, &[1], &mut rng);
        assert!(verify(&c, &o));
        assert!(verify_tagged(&c, &o, Context::Position));
        assert!(!verify_tagged(&c, &o, Context::InputSet));

        let mut wrong_msg = o.clone();
        wrong_msg.message[1] ^= 1;
        assert!(!verify(&c, &wrong_msg));

        let mut wrong_nonce = o.clone();
        wrong_nonce.randomness.0[0] ^= 0x80;
        assert!(!verify(&c, &wrong_nonce));
    }

    #[test]
    fn no_collisions_over_random_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut seen = HashSet::new();
        for _ in 0..100_000 {
            let mut m = [0u8; 8];
            rng.fill_bytes(&mut m);
            let r = Nonce::random(&mut rng);
            seen.insert(commit(&m, &r));
        }
        assert_eq!(seen.len(), 100_000);
    }

    #[test]
    fn digest_bits_look_uniform_for_constant_messages() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let trials = 10_000;
        for msg in [[0u8; 32], [0xffu8; 32]] {
            let mut ones = [0u32; 256];
            for _ in 0..trials {
                let c = commit(&msg, &Nonce::random(&mut rng));
                for (bit, count) in ones.iter_mut().enumerate() {
                    *count += ((c.0[bit / 8] >> (bit % 8)) & 1) as u32;
                }
            }
            for count in ones {
                let p = count as f64 / trials as f64;
                assert!((p - 0.5).abs() <= 0.05, "bit frequency {p}");
            }
        }
    }
}
