//! Message log and byte/time accounting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::message::{Phase, Tag};
use super::Role;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    /// Sender's phase when the message was sent.
    pub phase: Phase,
    pub sender: Role,
    pub receiver: Role,
    pub tag: Tag,
    /// Full frame size, length prefix included.
    pub bytes: usize,
    pub micros: u64,
    /// Per-sender sequence number.
    pub seq: u64,
    pub digest: [u8; 32],
}

/// A role entering a phase (or finishing, with `phase = None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMark {
    pub role: Role,
    pub phase: Option<Phase>,
    pub micros: u64,
}

/// Append-only log shared by every endpoint of one session.
#[derive(Debug)]
pub(crate) struct Recorder {
    start: Instant,
    entries: Mutex<Vec<Entry>>,
    marks: Mutex<Vec<PhaseMark>>,
}

impl Recorder {
    pub fn new() -> Self {
        Recorder { start: Instant::now(), entries: Mutex::default(), marks: Mutex::default() }
    }

    pub fn micros(&self) -> u64 {
        self.start.elapsed().as_micros() as u64
    }

    pub fn push(&self, e: Entry) {
        self.entries.lock().unwrap().push(e);
    }

    pub fn mark(&self, role: Role, phase: Option<Phase>) {
        let micros = self.micros();
        self.marks.lock().unwrap().push(PhaseMark { role, phase, micros });
    }

    pub fn finish(self) -> Transcript {
        let mut entries = self.entries.into_inner().unwrap();
        entries.sort_by_key(|e| (e.micros, e.sender, e.seq));
        let mut marks = self.marks.into_inner().unwrap();
        marks.sort_by_key(|m| (m.micros, m.role));
        Transcript { entries, marks }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    /// Messages in send-time order.
    pub entries: Vec<Entry>,
    pub marks: Vec<PhaseMark>,
}

/// Timing-free view of one message, for comparing runs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CanonicalEntry {
    pub sender: Role,
    pub seq: u64,
    pub receiver: Role,
    pub phase: Phase,
    pub tag: Tag,
    pub bytes: usize,
    pub digest: [u8; 32],
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub bytes_total: u64,
    pub messages: usize,
    pub bytes_by_phase: [u64; 3],
    pub wall_time_by_phase: [Duration; 3],
    /// Bytes sent, per role.
    pub bytes_by_role: BTreeMap<Role, u64>,
    /// Bytes sent, per role and phase.
    pub bytes_by_role_phase: BTreeMap<(Role, Phase), u64>,
}

impl Transcript {
    pub fn bytes_total(&self) -> u64 {
        self.entries.iter().map(|e| e.bytes as u64).sum()
    }

    /// Entries ordered by sender and sequence number, without timestamps.
    pub fn canonical(&self) -> Vec<CanonicalEntry> {
        let mut v: Vec<CanonicalEntry> = self
            .entries
            .iter()
            .map(|e| CanonicalEntry {
                sender: e.sender,
                seq: e.seq,
                receiver: e.receiver,
                phase: e.phase,
                tag: e.tag,
                bytes: e.bytes,
                digest: e.digest,
            })
            .collect();
        v.sort();
        v
    }

    /// `phase,sender,receiver,type,bytes,micros` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase,sender,receiver,type,bytes,micros\n");
        for e in &self.entries {
            writeln!(s, "{},{},{},{},{},{}", e.phase.name(), e.sender, e.receiver, e.tag.name(), e.bytes, e.micros)
                .unwrap();
        }
        s
    }
}

pub fn measure(t: &Transcript) -> Metrics {
    let mut m = Metrics { messages: t.entries.len(), ..Metrics::default() };
    for e in &t.entries {
        let b = e.bytes as u64;
        m.bytes_total += b;
        m.bytes_by_phase[e.phase.index()] += b;
        *m.bytes_by_role.entry(e.sender).or_default() += b;
        *m.bytes_by_role_phase.entry((e.sender, e.phase)).or_default() += b;
    }
    // a role stays in a phase until its next mark
    let mut by_role: BTreeMap<Role, Vec<&PhaseMark>> = BTreeMap::new();
    for mk in &t.marks {
        by_role.entry(mk.role).or_default().push(mk);
    }
    let mut span: [Option<(u64, u64)>; 3] = [None; 3];
    for marks in by_role.values() {
        for w in marks.windows(2) {
            if let Some(p) = w[0].phase {
                let s = span[p.index()].get_or_insert((w[0].micros, w[1].micros));
                s.0 = s.0.min(w[0].micros);
                s.1 = s.1.max(w[1].micros);
            }
        }
    }
    for (i, s) in span.iter().enumerate() {
        if let Some((a, b)) = s {
            m.wall_time_by_phase[i] = Duration::from_micros(b - a);
        }
    }
    m
}
