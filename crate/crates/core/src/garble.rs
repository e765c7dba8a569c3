//! Garbling and evaluation with externally supplied input encodings.
//!
//! Rows are encrypted as `SHA-256(K_a ‖ K_b ‖ gate ‖ row)[..18] ⊕ (K_out ‖ 0x0000)`
//! and placed by point-and-permute on the labels' least significant bits.
//! Garbler-chosen labels always have complementary select bits. Input labels come
//! from the data providers and may not, so every input wire first passes through a
//! translation pair: two 32-byte entries `SHA-256(K_b ‖ wire ‖ "translate") ⊕ (T_b ‖ 0^128)`
//! in random order, where `T_0, T_1` are garbler labels. The evaluator trial-decrypts
//! both and keeps the one whose 128-bit tail is zero.
//!
//! Wire format of [`GarbledTables`], all integers big-endian:
//!
//! ```text
//! circuit digest   32 bytes
//! input wires      u32
//! gates            u32
//! rows             u32   (4 per binary gate, 2 per NOT)
//! translations     input wires × 2 × 32 bytes, in circuit input order
//! rows             rows × 18 bytes, in gate order
//! ```

use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};
use crate::codec::{CodecError, Reader, Writer};

pub type Label = u128;

pub const LABEL_LEN: usize = 16;
pub const ROW_LEN: usize = 18;
pub const TRANSLATION_LEN: usize = 32;

pub type Row = [u8; ROW_LEN];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GarbleError {
    #[error("input encodings do not cover the circuit: {0}")]
    EncodingCoverage(String),
    #[error("no table row authenticates at {0}")]
    Evaluation(String),
    #[error("output label {index} matches neither label of its encoding")]
    Decode { index: usize },
    #[error("garbled tables do not match the circuit: {0}")]
    Mismatch(String),
    #[error("malformed garbled circuit: {0}")]
    Format(#[from] CodecError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Encoding {
    pub zero: Label,
    pub one: Label,
}

impl Encoding {
    /// Two independent uniform labels (re-drawn in the negligible event they agree).
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let zero = rng.gen();
        let mut one = rng.gen();
        while one == zero {
            one = rng.gen();
        }
        Encoding { zero, one }
    }

    pub fn label(&self, bit: bool) -> Label {
        if bit {
            self.one
        } else {
            self.zero
        }
    }

    pub fn decode(&self, label: Label) -> Option<bool> {
        if label == self.zero {
            Some(false)
        } else if label == self.one {
            Some(true)
        } else {
            None
        }
    }

    pub fn to_bytes(&self) -> [u8; 2 * LABEL_LEN] {
        let mut b = [0u8; 2 * LABEL_LEN];
        b[..16].copy_from_slice(&self.zero.to_be_bytes());
        b[16..].copy_from_slice(&self.one.to_be_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; 2 * LABEL_LEN]) -> Self {
        Encoding {
            zero: u128::from_be_bytes(b[..16].try_into().unwrap()),
            one: u128::from_be_bytes(b[16..].try_into().unwrap()),
        }
    }
}

fn select(l: Label) -> usize {
    (l & 1) as usize
}

/// Garbler-side labels with complementary select bits.
fn internal_pair(rng: &mut ChaCha20Rng) -> Encoding {
    let zero: u128 = rng.gen();
    let one = (rng.gen::<u128>() & !1) | ((zero & 1) ^ 1);
    Encoding { zero, one }
}

fn row_pad(ka: Label, kb: Option<Label>, gate: usize, row: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(ka.to_be_bytes());
    if let Some(kb) = kb {
        h.update(kb.to_be_bytes());
    }
    h.update((gate as u64).to_be_bytes());
    h.update([row as u8]);
    h.finalize().into()
}

fn translation_pad(k: Label, wire: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(k.to_be_bytes());
    h.update(wire.to_be_bytes());
    h.update(b"translate");
    h.finalize().into()
}

fn seal_row(pad: &[u8; 32], out: Label) -> Row {
    let mut row = [0u8; ROW_LEN];
    row[..16].copy_from_slice(&out.to_be_bytes());
    for (r, p) in row.iter_mut().zip(pad) {
        *r ^= p;
    }
    row
}

fn open_row(pad: &[u8; 32], row: &Row) -> Option<Label> {
    let mut plain = [0u8; ROW_LEN];
    for i in 0..ROW_LEN {
        plain[i] = row[i] ^ pad[i];
    }
    (plain[16] == 0 && plain[17] == 0).then(|| u128::from_be_bytes(plain[..16].try_into().unwrap()))
}

/// Everything the evaluator receives: translations and gate tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledTables {
    pub circuit_digest: [u8; 32],
    pub gate_count: u32,
    pub translations: Vec<[[u8; TRANSLATION_LEN]; 2]>,
    pub rows: Vec<Row>,
}

impl GarbledTables {
    pub fn byte_len(&self) -> usize {
        44 + self.translations.len() * 2 * TRANSLATION_LEN + self.rows.len() * ROW_LEN
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.byte_len());
        w.bytes(&self.circuit_digest)
            .u32(self.translations.len() as u32)
            .u32(self.gate_count)
            .u32(self.rows.len() as u32);
        for t in &self.translations {
            w.bytes(&t[0]).bytes(&t[1]);
        }
        for r in &self.rows {
            w.bytes(r);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GarbleError> {
        let mut r = Reader::new(bytes);
        let circuit_digest = r.array()?;
        let inputs = r.u32()? as usize;
        let gate_count = r.u32()?;
        let row_count = r.u32()? as usize;
        let need = inputs as u128 * 2 * TRANSLATION_LEN as u128 + row_count as u128 * ROW_LEN as u128;
        if need != r.remaining() as u128 {
            return Err(CodecError::Invalid(format!(
                "body is {} bytes, header implies {need}",
                r.remaining()
            ))
            .into());
        }
        let mut translations = Vec::with_capacity(inputs);
        for _ in 0..inputs {
            translations.push([r.array()?, r.array()?]);
        }
        let mut rows = Vec::with_capacity(row_count);
        for _ in 0..row_count {
            rows.push(r.array()?);
        }
        r.finish()?;
        Ok(GarbledTables { circuit_digest, gate_count, translations, rows })
    }

    /// Checks that these tables were produced for `c`.
    pub fn check_shape(&self, c: &Circuit) -> Result<(), GarbleError> {
        if self.circuit_digest != c.digest() {
            return Err(GarbleError::Mismatch("circuit digest differs".into()));
        }
        if self.gate_count as usize != c.gates().len()
            || self.rows.len() != c.table_rows()
            || self.translations.len() != c.input_count()
        {
            return Err(GarbleError::Mismatch("table sizes differ".into()));
        }
        Ok(())
    }

    /// Rows of gate `g`, given the starting offsets from [`row_offsets`].
    pub fn gate_rows<'a>(&'a self, c: &Circuit, offsets: &[usize], g: usize) -> &'a [Row] {
        let n = if c.gates()[g].kind == GateKind::Not { 2 } else { 4 };
        &self.rows[offsets[g]..offsets[g] + n]
    }
}

pub fn row_offsets(c: &Circuit) -> Vec<usize> {
    let mut at = 0;
    c.gates()
        .iter()
        .map(|g| {
            let o = at;
            at += if g.kind == GateKind::Not { 2 } else { 4 };
            o
        })
        .collect()
}

/// Garbler's view: the tables plus the output encodings it keeps.
#[derive(Clone, Debug)]
pub struct GarbledCircuit {
    pub tables: GarbledTables,
    /// Per provider, one encoding per output wire in output order.
    pub output_encodings: Vec<Vec<Encoding>>,
}

/// A deliberate fault: the truth table of `gate` is XORed with `mask`.
///
/// Bit `2·a + b` of the mask flips the output for inputs `(a, b)`; for a NOT
/// gate bit `a` flips the output for input `a`. Used to model a cheating garbler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateFault {
    pub gate: usize,
    pub mask: u8,
}

/// Garbles `c` using the given per-provider input encodings. Internal labels and
/// the translation order are drawn from `seed`; the result does not depend on
/// the number of worker threads.
pub fn garble(
    c: &Circuit,
    input_encodings: &[Vec<Encoding>],
    seed: [u8; 32],
) -> Result<GarbledCircuit, GarbleError> {
    garble_with_fault(c, input_encodings, seed, None)
}

/// [`garble`], with an optional corrupted gate. The tables still carry the
/// honest circuit digest, so the evaluator cannot tell from their shape.
pub fn garble_with_fault(
    c: &Circuit,
    input_encodings: &[Vec<Encoding>],
    seed: [u8; 32],
    fault: Option<GateFault>,
) -> Result<GarbledCircuit, GarbleError> {
    if input_encodings.len() != c.inputs().len() {
        return Err(GarbleError::EncodingCoverage(format!(
            "{} providers, circuit has {}",
            input_encodings.len(),
            c.inputs().len()
        )));
    }
    let mut provided: Vec<Option<Encoding>> = vec![None; c.wire_count()];
    for (u, (wires, encs)) in c.inputs().iter().zip(input_encodings).enumerate() {
        if wires.len() != encs.len() {
            return Err(GarbleError::EncodingCoverage(format!(
                "provider {u}: {} encodings for {} input wires",
                encs.len(),
                wires.len()
            )));
        }
        for (w, e) in wires.iter().zip(encs) {
            if e.zero == e.one {
                return Err(GarbleError::EncodingCoverage(format!("wire {}: identical labels", w.0)));
            }
            provided[w.index()] = Some(*e);
        }
    }

    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut labels: Vec<Encoding> = vec![Encoding { zero: 0, one: 0 }; c.wire_count()];
    let mut translations = Vec::with_capacity(c.input_count());
    for w in c.input_wires() {
        let t = internal_pair(&mut rng);
        labels[w.index()] = t;
        let e = provided[w.index()].expect("input wire covered");
        let mut entries = [false, true].map(|bit| {
            let pad = translation_pad(e.label(bit), w.0);
            let mut entry = pad;
            for (x, y) in entry[..16].iter_mut().zip(t.label(bit).to_be_bytes()) {
                *x ^= y;
            }
            entry
        });
        if rng.gen::<bool>() {
            entries.swap(0, 1);
        }
        translations.push(entries);
    }
    for g in c.gates() {
        labels[g.out.index()] = internal_pair(&mut rng);
    }

    let mut rows: Vec<Row> = vec![[0u8; ROW_LEN]; c.table_rows()];
    let mut chunks: Vec<&mut [Row]> = Vec::with_capacity(c.gates().len());
    let mut rest = rows.as_mut_slice();
    for g in c.gates() {
        let n = if g.kind == GateKind::Not { 2 } else { 4 };
        let (head, tail) = rest.split_at_mut(n);
        chunks.push(head);
        rest = tail;
    }
    chunks.into_par_iter().enumerate().for_each(|(gi, table)| {
        let g = c.gates()[gi];
        let (ea, eb, eo) = (labels[g.a.index()], labels[g.b.index()], labels[g.out.index()]);
        let mask = fault.filter(|f| f.gate == gi).map_or(0, |f| f.mask);
        let flip = |i: usize| (mask >> i) & 1 == 1;
        if g.kind == GateKind::Not {
            for va in [false, true] {
                let ka = ea.label(va);
                let pos = select(ka);
                table[pos] = seal_row(&row_pad(ka, None, gi, pos), eo.label(!va ^ flip(va as usize)));
            }
        } else {
            for va in [false, true] {
                for vb in [false, true] {
                    let (ka, kb) = (ea.label(va), eb.label(vb));
                    let pos = 2 * select(ka) + select(kb);
                    let v = g.kind.apply(va, vb) ^ flip(2 * va as usize + vb as usize);
                    table[pos] = seal_row(&row_pad(ka, Some(kb), gi, pos), eo.label(v));
                }
            }
        }
    });

    let output_encodings = c
        .outputs()
        .iter()
        .map(|ws| ws.iter().map(|w| provided[w.index()].unwrap_or(labels[w.index()])).collect())
        .collect();
    Ok(GarbledCircuit {
        tables: GarbledTables {
            circuit_digest: c.digest(),
            gate_count: c.gates().len() as u32,
            translations,
            rows,
        },
        output_encodings,
    })
}

/// Evaluates the garbled tables on one label per input wire (grouped by
/// provider) and returns one label per output wire (grouped by provider).
pub fn evaluate(
    c: &Circuit,
    tables: &GarbledTables,
    input_labels: &[Vec<Label>],
) -> Result<Vec<Vec<Label>>, GarbleError> {
    tables.check_shape(c)?;
    if input_labels.len() != c.inputs().len()
        || input_labels.iter().zip(c.inputs()).any(|(l, w)| l.len() != w.len())
    {
        return Err(GarbleError::EncodingCoverage("input labels do not match circuit inputs".into()));
    }
    let mut raw: Vec<Option<Label>> = vec![None; c.wire_count()];
    let mut wires: Vec<Label> = vec![0; c.wire_count()];
    let flat = c.inputs().iter().flatten().zip(input_labels.iter().flatten());
    for (i, (w, &k)) in flat.enumerate() {
        raw[w.index()] = Some(k);
        let t = tables.translations[i]
            .iter()
            .find_map(|entry| {
                let pad = translation_pad(k, w.0);
                let mut plain = [0u8; TRANSLATION_LEN];
                for j in 0..TRANSLATION_LEN {
                    plain[j] = entry[j] ^ pad[j];
                }
                plain[16..]
                    .iter()
                    .all(|&b| b == 0)
                    .then(|| u128::from_be_bytes(plain[..16].try_into().unwrap()))
            })
            .ok_or_else(|| GarbleError::Evaluation(format!("input wire {}", w.0)))?;
        wires[w.index()] = t;
    }
    let mut at = 0;
    for (gi, g) in c.gates().iter().enumerate() {
        let ka = wires[g.a.index()];
        let (kb, pos, n) = if g.kind == GateKind::Not {
            (None, select(ka), 2)
        } else {
            let kb = wires[g.b.index()];
            (Some(kb), 2 * select(ka) + select(kb), 4)
        };
        let row = &tables.rows[at + pos];
        at += n;
        wires[g.out.index()] = open_row(&row_pad(ka, kb, gi, pos), row)
            .ok_or_else(|| GarbleError::Evaluation(format!("gate {gi}")))?;
    }
    Ok(c.outputs()
        .iter()
        .map(|ws| ws.iter().map(|w| raw[w.index()].unwrap_or(wires[w.index()])).collect())
        .collect())
}

pub fn decode(labels: &[Label], encodings: &[Encoding]) -> Result<Vec<bool>, GarbleError> {
    if labels.len() != encodings.len() {
        return Err(GarbleError::Mismatch(format!(
            "{} labels for {} encodings",
            labels.len(),
            encodings.len()
        )));
    }
    labels
        .iter()
        .zip(encodings)
        .enumerate()
        .map(|(index, (&l, e))| e.decode(l).ok_or(GarbleError::Decode { index }))
        .collect()
}

/// Selects each wire's label for the given plaintext bits.
pub fn select_labels(encodings: &[Vec<Encoding>], bits: &[Vec<bool>]) -> Vec<Vec<Label>> {
    encodings
        .iter()
        .zip(bits)
        .map(|(es, bs)| es.iter().zip(bs).map(|(e, &b)| e.label(b)).collect())
        .collect()
}
