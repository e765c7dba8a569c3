//! Secure computation for many data providers with two non-colluding
//! computation parties, each garbling one copy of the circuit.

pub mod auction;
pub mod circuit;
pub mod cli;
pub mod codec;
pub mod commit;
pub mod garble;
pub mod input_consistency;
pub mod output_verification;
pub mod session;

use std::fmt;

/// One of the two computation parties. `P1` garbles circuit 1 and evaluates
/// circuit 2; `P2` the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    P1,
    P2,
}

impl Party {
    pub fn index(self) -> usize {
        match self {
            Party::P1 => 0,
            Party::P2 => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Party::P1
        } else {
            Party::P2
        }
    }

    pub fn other(self) -> Self {
        match self {
            Party::P1 => Party::P2,
            Party::P2 => Party::P1,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::P1 => write!(f, "P1"),
            Party::P2 => write!(f, "P2"),
        }
    }
}
