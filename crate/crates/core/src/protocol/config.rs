use serde::{Deserialize, Serialize};

use super::bits::{BitString, Identity};
use super::ProtocolError;
use crate::noise::NoiseModel;

/// Largest admissible CHSH slack: `2(√2 − 1)`, where the threshold meets 2.
pub const MAX_EPSILON: f64 = 2.0 * (std::f64::consts::SQRT_2 - 1.0);

/// Session parameters. Message and identities are drawn from `seed` when
/// left unset, on generator streams separate from the protocol's own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// `n`: message length in bits.
    pub message_bits: usize,
    /// `c`: number of check bits; `n + c = 2N` must be even.
    pub check_bits: usize,
    /// `l`: pairs per identity (identities are `2l` bits).
    pub identity_pairs: usize,
    /// `d`: pairs consumed by each CHSH round.
    pub check_pairs: usize,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub auth_mismatch_tolerance: f64,
    pub checkbit_error_tolerance: f64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub message: Option<BitString>,
    pub id_a: Option<Identity>,
    pub id_b: Option<Identity>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            message_bits: 16,
            check_bits: 4,
            identity_pairs: 4,
            check_pairs: 1000,
            epsilon1: 0.5,
            epsilon2: 0.5,
            auth_mismatch_tolerance: 0.0,
            checkbit_error_tolerance: 0.1,
            noise: NoiseModel::noiseless(),
            seed: 0,
            message: None,
            id_a: None,
            id_b: None,
        }
    }
}

impl ProtocolConfig {
    /// `N`: number of message-carrying pairs.
    pub fn message_pairs(&self) -> usize {
        (self.message_bits + self.check_bits) / 2
    }

    /// `N + 2l + 2d`.
    pub fn total_pairs(&self) -> usize {
        self.message_pairs() + 2 * self.identity_pairs + 2 * self.check_pairs
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |reason: String| Err(ProtocolError::InvalidConfig(reason));
        if (self.message_bits + self.check_bits) % 2 != 0 {
            return Err(ProtocolError::OddLength(self.message_bits + self.check_bits));
        }
        if self.message_bits + self.check_bits == 0 {
            return invalid("message and check bits are both empty".into());
        }
        if self.check_pairs == 0 {
            return invalid("check_pairs (d) must be at least 1".into());
        }
        for (name, eps) in [("epsilon1", self.epsilon1), ("epsilon2", self.epsilon2)] {
            if !(eps > 0.0 && eps < MAX_EPSILON) {
                return invalid(format!("{name} = {eps} outside (0, 2(√2−1))"));
            }
        }
        if !(0.0..1.0).contains(&self.auth_mismatch_tolerance) {
            return invalid(format!(
                "auth_mismatch_tolerance = {} outside [0, 1)",
                self.auth_mismatch_tolerance
            ));
        }
        if !(0.0..=1.0).contains(&self.checkbit_error_tolerance) {
            return invalid(format!(
                "checkbit_error_tolerance = {} outside [0, 1]",
                self.checkbit_error_tolerance
            ));
        }
        self.noise.validate()?;
        if let Some(m) = &self.message {
            if m.len() != self.message_bits {
                return Err(ProtocolError::Length {
                    what: "message",
                    expected: self.message_bits,
                    actual: m.len(),
                });
            }
        }
        for (what, id) in [("id_a", &self.id_a), ("id_b", &self.id_b)] {
            if let Some(id) = id {
                if id.pairs() != self.identity_pairs {
                    return Err(ProtocolError::Length {
                        what,
                        expected: 2 * self.identity_pairs,
                        actual: id.bits().len(),
                    });
                }
            }
        }
        Ok(())
    }
}
