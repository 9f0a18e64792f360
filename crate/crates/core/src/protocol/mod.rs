//! Honest sender and receiver for the authenticated secure direct
//! communication protocol, plus the session runner that strings the steps
//! together.

mod bits;
mod chsh;
mod config;
mod ledger;
mod phases;
mod session;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseError;
use crate::qcore::QcoreError;

pub use bits::{
    decode_bell_to_bits, encode_two_bits, insert_check_bits, remove_check_bits, BitString, CheckedMessage, Identity,
    TwoBits,
};
pub use chsh::{
    chsh_round_one, chsh_round_two, chsh_threshold_check, estimate_chsh, measure_check_pair, sample_check_pairs,
    AliceSetting, BobSetting, ChshError, ChshEstimate, ChshSample, TSIRELSON_BOUND,
};
pub use config::{ProtocolConfig, MAX_EPSILON};
pub use ledger::{PairLedger, PairRecord, Role, RoleCounts};
pub use phases::{
    alice_encode_phase, alice_verify_bob, assign_roles, bob_authenticate, bob_decode_message, bob_verify_alice,
    expected_bob_outcome, verify_check_bits, AuthVerdict, CheckBitReport, ALICE_QUBIT, BOB_QUBIT,
};
pub use session::{run_protocol, run_protocol_with, ProtocolHooks, ProtocolOutcome, Status, SymbolTally};
pub use transcript::{Entry, EntryKind, HygieneViolation, Payload, Transcript, TranscriptParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn tag(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "alice" => Some(Party::Alice),
            "bob" => Some(Party::Bob),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
    #[error("{what}: expected length {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("message plus check bits must be even, got {0}")]
    OddLength(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Chsh(#[from] ChshError),
    #[error(transparent)]
    Quantum(#[from] QcoreError),
}

impl ProtocolError {
    /// True for errors caused by the configuration rather than by a run.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, ProtocolError::Chsh(_) | ProtocolError::Quantum(_))
    }
}
