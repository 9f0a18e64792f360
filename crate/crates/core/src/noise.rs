//! Channel noise: `eta` identity gates, each followed by a Pauli error with
//! probability `p_gate`, plus an independent classical readout flip.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{BellState, Outcome, PauliOp, QcoreError, StateVector};

/// Median identity-gate error rate reported for the reference device.
pub const DEVICE_IDENTITY_ERROR_RATE: f64 = 2.41e-4;

/// Duration of one identity gate on the reference device.
pub const IDENTITY_GATE_TIME_NS: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("probability {name} = {value} outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("error mix ({px}, {py}, {pz}) must be non-negative and sum to 1")]
    ErrorMix { px: f64, py: f64, pz: f64 },
    #[error("gate time must be finite and non-negative, got {0}")]
    GateTime(f64),
}

/// Per-gate error rate fitted to the two reference accuracy anchors
/// (95% at 10 gates, 58% at 700) under the symmetric depolarizing mix with
/// [`CALIBRATED_P_READOUT`]. Regenerate with `qsdc calibrate`.
pub const CALIBRATED_P_GATE: f64 = 8.2132e-4;

/// Readout flip probability held fixed during calibration.
pub const CALIBRATED_P_READOUT: f64 = 0.02;

/// Conditional distribution of the Pauli error, given that one occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMix {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl ErrorMix {
    pub const DEPOLARIZING: ErrorMix = ErrorMix {
        px: 1.0 / 3.0,
        py: 1.0 / 3.0,
        pz: 1.0 / 3.0,
    };

    pub fn validate(&self) -> Result<(), NoiseError> {
        let ok = [self.px, self.py, self.pz].iter().all(|p| p.is_finite() && *p >= 0.0)
            && (self.px + self.py + self.pz - 1.0).abs() <= 1e-12;
        if ok {
            Ok(())
        } else {
            Err(NoiseError::ErrorMix {
                px: self.px,
                py: self.py,
                pz: self.pz,
            })
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliOp {
        let u: f64 = rng.gen();
        if u < self.px {
            PauliOp::X
        } else if u < self.px + self.py {
            PauliOp::IY
        } else {
            PauliOp::Z
        }
    }
}

impl Default for ErrorMix {
    fn default() -> Self {
        Self::DEPOLARIZING
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p_gate: f64,
    pub error_mix: ErrorMix,
    pub p_readout: f64,
    pub eta: u32,
    /// Metadata only; used for the time axis of sweeps.
    pub gate_time_ns: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p_gate: 0.0,
            error_mix: ErrorMix::DEPOLARIZING,
            p_readout: 0.0,
            eta: 0,
            gate_time_ns: IDENTITY_GATE_TIME_NS,
        }
    }

    /// Symmetric depolarizing channel of length `eta`.
    pub fn depolarizing(p_gate: f64, eta: u32) -> Self {
        Self {
            p_gate,
            eta,
            ..Self::noiseless()
        }
    }

    /// The calibrated hardware stand-in at channel length `eta`.
    pub fn calibrated(eta: u32) -> Self {
        Self::depolarizing(CALIBRATED_P_GATE, eta).with_readout(CALIBRATED_P_READOUT)
    }

    pub fn with_eta(&self, eta: u32) -> Self {
        Self { eta, ..self.clone() }
    }

    pub fn with_readout(&self, p_readout: f64) -> Self {
        Self {
            p_readout,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, value) in [("p_gate", self.p_gate), ("p_readout", self.p_readout)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::Probability { name, value });
            }
        }
        if !self.gate_time_ns.is_finite() || self.gate_time_ns < 0.0 {
            return Err(NoiseError::GateTime(self.gate_time_ns));
        }
        self.error_mix.validate()
    }

    pub fn is_noiseless(&self) -> bool {
        (self.eta == 0 || self.p_gate == 0.0) && self.p_readout == 0.0
    }

    /// `(1 − p_gate)^eta`.
    pub fn error_free_probability(&self) -> f64 {
        (1.0 - self.p_gate).powi(self.eta as i32)
    }

    pub fn channel_duration_ns(&self) -> f64 {
        self.eta as f64 * self.gate_time_ns
    }

    /// Probability that a dense-coded symbol survives the channel and the
    /// two readout bits, i.e. that Bob decodes exactly the bits Alice sent.
    ///
    /// The net error is an element of the Klein group `{I, X, iY, Z}` and the
    /// two decoded bits are its (x, z) coordinates, so the result follows from
    /// the group characters: each round contributes `1 − 2·p_gate·w` for the
    /// weight `w` of the errors anticommuting with the character, each readout
    /// bit `1 − 2·p_readout`.
    pub fn expected_symbol_accuracy(&self) -> f64 {
        let (parity, phase, both) = self.character_means();
        let r = 1.0 - 2.0 * self.p_readout;
        0.25 * (1.0 + parity * r + phase * r + both * r * r)
    }

    /// Derivative of [`expected_symbol_accuracy`](Self::expected_symbol_accuracy)
    /// with respect to `p_gate`.
    pub fn expected_symbol_accuracy_dp(&self) -> f64 {
        let m = &self.error_mix;
        let r = 1.0 - 2.0 * self.p_readout;
        let eta = self.eta as i32;
        let term = |w: f64, scale: f64| {
            if eta == 0 {
                0.0
            } else {
                scale * eta as f64 * (1.0 - 2.0 * self.p_gate * w).powi(eta - 1) * (-2.0 * w)
            }
        };
        0.25 * (term(m.px + m.py, r) + term(m.pz + m.py, r) + term(m.px + m.pz, r * r))
    }

    fn character_means(&self) -> (f64, f64, f64) {
        let m = &self.error_mix;
        let per_round = |w: f64| (1.0 - 2.0 * self.p_gate * w).powi(self.eta as i32);
        (per_round(m.px + m.py), per_round(m.pz + m.py), per_round(m.px + m.pz))
    }
}

/// Net Pauli error accumulated over the channel, composed modulo phase.
pub fn sample_channel_error<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> PauliOp {
    let mut net = PauliOp::I;
    for _ in 0..model.eta {
        let u: f64 = rng.gen();
        if u < model.p_gate {
            net = net.compose(model.error_mix.sample(rng));
        }
    }
    net
}

/// Sends `qubit` through the channel. The per-gate errors are composed and
/// applied once, which is exact because global phase is unobservable.
pub fn transmit<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<PauliOp, QcoreError> {
    let error = sample_channel_error(model, rng);
    state.apply_pauli(qubit, error)?;
    Ok(error)
}

pub fn noisy_readout<R: Rng + ?Sized>(outcome: Outcome, model: &NoiseModel, rng: &mut R) -> Outcome {
    let u: f64 = rng.gen();
    if u < model.p_readout {
        outcome.flipped()
    } else {
        outcome
    }
}

/// Readout of a Bell measurement: the two classical bits that identify the
/// Bell state (parity and phase) are each flipped with `p_readout`.
pub fn noisy_bell_readout<R: Rng + ?Sized>(bell: BellState, model: &NoiseModel, rng: &mut R) -> BellState {
    let (parity, phase) = crate::qcore::bell_to_pauli(bell).xz();
    let flip_parity = rng.gen::<f64>() < model.p_readout;
    let flip_phase = rng.gen::<f64>() < model.p_readout;
    crate::qcore::pauli_to_bell(PauliOp::from_xz(parity ^ flip_parity, phase ^ flip_phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{new_bell_pair, pauli_to_bell};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn error_free_probability_values() {
        assert_eq!(NoiseModel::depolarizing(DEVICE_IDENTITY_ERROR_RATE, 0).error_free_probability(), 1.0);
        let p10 = NoiseModel::depolarizing(DEVICE_IDENTITY_ERROR_RATE, 10).error_free_probability();
        assert!((p10 - 0.997_592_6).abs() < 1e-6, "{p10}");
        let p700 = NoiseModel::depolarizing(DEVICE_IDENTITY_ERROR_RATE, 700).error_free_probability();
        assert!((p700 - 0.8446).abs() < 1e-3, "{p700}");
    }

    #[test]
    fn noiseless_channel_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [NoiseModel::depolarizing(0.3, 0), NoiseModel::depolarizing(0.0, 50)] {
            let mut s = new_bell_pair();
            transmit(&mut s, 0, &model, &mut rng).unwrap();
            assert_eq!(s, new_bell_pair());
        }
    }

    #[test]
    fn deterministic_x_error_gives_psi_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = NoiseModel {
            p_gate: 1.0,
            error_mix: ErrorMix { px: 1.0, py: 0.0, pz: 0.0 },
            eta: 1,
            ..NoiseModel::noiseless()
        };
        let mut s = new_bell_pair();
        transmit(&mut s, 0, &model, &mut rng).unwrap();
        let probs = s.bell_probabilities(0, 1).unwrap();
        assert!((probs[BellState::PsiPlus.index()] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn readout_flip_extremes_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let clean = NoiseModel::noiseless();
        let always = NoiseModel::noiseless().with_readout(1.0);
        for _ in 0..100 {
            assert_eq!(noisy_readout(Outcome::Plus, &clean, &mut rng), Outcome::Plus);
            assert_eq!(noisy_readout(Outcome::Plus, &always, &mut rng), Outcome::Minus);
        }
        let half = NoiseModel::noiseless().with_readout(0.5);
        let flips = (0..10_000)
            .filter(|_| noisy_readout(Outcome::Minus, &half, &mut rng) == Outcome::Plus)
            .count();
        assert!((flips as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::noiseless().validate().is_ok());
        assert!(NoiseModel::depolarizing(1.5, 1).validate().is_err());
        assert!(NoiseModel::noiseless().with_readout(-0.1).validate().is_err());
        let skew = NoiseModel {
            error_mix: ErrorMix { px: 0.5, py: 0.5, pz: 0.1 },
            ..NoiseModel::noiseless()
        };
        assert!(matches!(skew.validate(), Err(NoiseError::ErrorMix { .. })));
    }

    /// Brute-force the Klein-group convolution the closed form summarizes.
    fn accuracy_by_enumeration(model: &NoiseModel) -> f64 {
        let m = &model.error_mix;
        let step = [1.0 - model.p_gate, model.p_gate * m.pz, model.p_gate * m.px, model.p_gate * m.py];
        // distribution over PauliOp::ALL = [I, Z, X, IY]
        let mut dist = [1.0, 0.0, 0.0, 0.0];
        for _ in 0..model.eta {
            let mut next = [0.0; 4];
            for (i, a) in PauliOp::ALL.iter().enumerate() {
                for (j, b) in PauliOp::ALL.iter().enumerate() {
                    next[a.compose(*b).index()] += dist[i] * step[j];
                }
            }
            dist = next;
        }
        let r = model.p_readout;
        let flip = [(1.0 - r) * (1.0 - r), r * (1.0 - r), r * (1.0 - r), r * r];
        let mut correct = 0.0;
        for (i, a) in PauliOp::ALL.iter().enumerate() {
            for (j, b) in PauliOp::ALL.iter().enumerate() {
                if a.compose(*b) == PauliOp::I {
                    correct += dist[i] * flip[j];
                }
            }
        }
        correct
    }

    #[test]
    fn closed_form_accuracy_matches_enumeration() {
        let models = [
            NoiseModel::depolarizing(1e-3, 700).with_readout(0.02),
            NoiseModel::depolarizing(0.05, 13),
            NoiseModel {
                p_gate: 0.01,
                error_mix: ErrorMix { px: 0.6, py: 0.1, pz: 0.3 },
                p_readout: 0.07,
                eta: 40,
                gate_time_ns: 60.0,
            },
            NoiseModel::noiseless(),
        ];
        for m in models {
            let a = m.expected_symbol_accuracy();
            let b = accuracy_by_enumeration(&m);
            assert!((a - b).abs() < 1e-12, "{m:?}: {a} vs {b}");
        }
    }

    #[test]
    fn accuracy_derivative_matches_finite_difference() {
        let m = NoiseModel::depolarizing(8e-4, 700).with_readout(0.02);
        let h = 1e-8;
        let up = NoiseModel { p_gate: m.p_gate + h, ..m.clone() }.expected_symbol_accuracy();
        let down = NoiseModel { p_gate: m.p_gate - h, ..m.clone() }.expected_symbol_accuracy();
        let fd = (up - down) / (2.0 * h);
        assert!((fd - m.expected_symbol_accuracy_dp()).abs() < 1e-4 * fd.abs());
    }

    #[test]
    fn bell_readout_flips_decoded_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let always = NoiseModel::noiseless().with_readout(1.0);
        // both bits flipped: Φ⁺ (00) → Ψ⁻ (11)
        assert_eq!(noisy_bell_readout(BellState::PhiPlus, &always, &mut rng), BellState::PsiMinus);
        assert_eq!(
            noisy_bell_readout(pauli_to_bell(PauliOp::X), &NoiseModel::noiseless(), &mut rng),
            BellState::PsiPlus
        );
    }
}
