//! CHSH security checks.
//!
//! Both parties measure in equatorial bases `(|0⟩ ± e^{iθ}|1⟩)/√2`. On
//! `|Φ⁺⟩` the correlation of two such measurements is `cos(θa + θb)`, so with
//! the published receiver labels `B₁ = π/4`, `B₂ = −π/4` the CHSH sum would
//! vanish. The receiver therefore measures at the negated label angle; labels
//! everywhere else (transcripts, reports) keep the published values.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transcript::{Entry, EntryKind, Payload};
use super::Party;
use crate::noise::{noisy_readout, NoiseModel};
use crate::qcore::{EquatorialBasis, Outcome, QcoreError, StateVector};

/// `2√2`, the quantum maximum.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AliceSetting {
    A0,
    A1,
    A2,
}

impl AliceSetting {
    pub const ALL: [AliceSetting; 3] = [AliceSetting::A0, AliceSetting::A1, AliceSetting::A2];

    pub fn angle(self) -> f64 {
        match self {
            AliceSetting::A0 => FRAC_PI_4,
            AliceSetting::A1 => 0.0,
            AliceSetting::A2 => FRAC_PI_2,
        }
    }

    pub fn basis(self) -> EquatorialBasis {
        EquatorialBasis::new(self.angle())
    }

    pub fn index(self) -> u8 {
        match self {
            AliceSetting::A0 => 0,
            AliceSetting::A1 => 1,
            AliceSetting::A2 => 2,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.gen_range(0..3)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BobSetting {
    B1,
    B2,
}

impl BobSetting {
    pub const ALL: [BobSetting; 2] = [BobSetting::B1, BobSetting::B2];

    /// Published label angle.
    pub fn label_angle(self) -> f64 {
        match self {
            BobSetting::B1 => FRAC_PI_4,
            BobSetting::B2 => -FRAC_PI_4,
        }
    }

    /// Basis actually measured: the label angle negated.
    pub fn basis(self) -> EquatorialBasis {
        EquatorialBasis::new(-self.label_angle())
    }

    pub fn index(self) -> u8 {
        match self {
            BobSetting::B1 => 1,
            BobSetting::B2 => 2,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.gen_range(0..2)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChshSample {
    pub alice: AliceSetting,
    pub bob: BobSetting,
    pub a: Outcome,
    pub b: Outcome,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChshError {
    #[error("no samples for setting pair (A{alice}, B{bob}); increase the number of check pairs d")]
    EmptyCell { alice: u8, bob: u8 },
    #[error(transparent)]
    Quantum(#[from] QcoreError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub s: f64,
    /// `sqrt(Σ (1 − E²)/n)` over the four cells.
    pub std_error: f64,
    /// `⟨a_j b_k⟩` indexed `[j−1][k−1]`.
    pub correlations: [[f64; 2]; 2],
    pub counts: [[usize; 2]; 2],
    /// `⟨a_0⟩, ⟨a_1⟩, ⟨a_2⟩`; NaN for a setting never chosen.
    pub alice_marginals: [f64; 3],
    /// `⟨b_1⟩, ⟨b_2⟩`.
    pub bob_marginals: [f64; 2],
    pub samples: usize,
}

/// `S = ⟨a₁b₁⟩ + ⟨a₁b₂⟩ + ⟨a₂b₁⟩ − ⟨a₂b₂⟩`; samples under `A₀` feed only
/// the marginals.
pub fn estimate_chsh(samples: &[ChshSample]) -> Result<ChshEstimate, ChshError> {
    let mut counts = [[0usize; 2]; 2];
    let mut agree = [[0i64; 2]; 2];
    let mut a_sum = [0i64; 3];
    let mut a_n = [0usize; 3];
    let mut b_sum = [0i64; 2];
    let mut b_n = [0usize; 2];

    for s in samples {
        let ai = s.alice.index() as usize;
        let bi = s.bob.index() as usize - 1;
        a_sum[ai] += s.a.value() as i64;
        a_n[ai] += 1;
        b_sum[bi] += s.b.value() as i64;
        b_n[bi] += 1;
        if ai > 0 {
            counts[ai - 1][bi] += 1;
            agree[ai - 1][bi] += (s.a.value() * s.b.value()) as i64;
        }
    }

    let mut correlations = [[0.0; 2]; 2];
    let mut variance = 0.0;
    for j in 0..2 {
        for k in 0..2 {
            if counts[j][k] == 0 {
                return Err(ChshError::EmptyCell {
                    alice: j as u8 + 1,
                    bob: k as u8 + 1,
                });
            }
            let e = agree[j][k] as f64 / counts[j][k] as f64;
            correlations[j][k] = e;
            variance += (1.0 - e * e) / counts[j][k] as f64;
        }
    }
    let c = &correlations;
    let mean = |sum: i64, n: usize| if n == 0 { f64::NAN } else { sum as f64 / n as f64 };
    Ok(ChshEstimate {
        s: c[0][0] + c[0][1] + c[1][0] - c[1][1],
        std_error: variance.sqrt(),
        correlations,
        counts,
        alice_marginals: [mean(a_sum[0], a_n[0]), mean(a_sum[1], a_n[1]), mean(a_sum[2], a_n[2])],
        bob_marginals: [mean(b_sum[0], b_n[0]), mean(b_sum[1], b_n[1])],
        samples: samples.len(),
    })
}

/// Continue iff `s > 2` and `s ≥ 2√2 − epsilon`.
pub fn chsh_threshold_check(s: f64, epsilon: f64) -> bool {
    s > 2.0 && s >= TSIRELSON_BOUND - epsilon
}

/// Measures one check pair: `alice_qubit` under `alice`, `bob_qubit` under
/// `bob`, each outcome then passing through readout noise.
pub fn measure_check_pair<R: Rng + ?Sized>(
    state: &mut StateVector,
    alice_qubit: usize,
    bob_qubit: usize,
    alice: AliceSetting,
    bob: BobSetting,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ChshSample, QcoreError> {
    let a = state.measure_equatorial(alice_qubit, alice.basis(), rng)?;
    let b = state.measure_equatorial(bob_qubit, bob.basis(), rng)?;
    Ok(ChshSample {
        alice,
        bob,
        a: noisy_readout(a, noise, rng),
        b: noisy_readout(b, noise, rng),
    })
}

/// Measures `pairs` with freshly drawn settings (sender set on qubit 0,
/// receiver set on qubit 1) and returns the raw samples.
pub fn sample_check_pairs<'a, R, I>(pairs: I, noise: &NoiseModel, rng: &mut R) -> Result<Vec<ChshSample>, QcoreError>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a mut StateVector>,
{
    pairs
        .into_iter()
        .map(|state| {
            let alice = AliceSetting::random(rng);
            let bob = BobSetting::random(rng);
            measure_check_pair(state, 0, 1, alice, bob, noise, rng)
        })
        .collect()
}

/// First round: Alice measures qubit 0 and Bob qubit 1 of every check pair,
/// then both publish settings and outcomes.
pub fn chsh_round_one<'a, R, I>(
    pairs: I,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(ChshEstimate, Vec<Entry>), ChshError>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a mut StateVector>,
{
    let samples = sample_check_pairs(pairs, noise, rng)?;
    let entries = vec![
        Entry::new(
            Party::Alice,
            EntryKind::Check1Bases,
            Payload::Settings(samples.iter().map(|s| s.alice.index()).collect()),
        ),
        Entry::new(
            Party::Bob,
            EntryKind::Check1Bases,
            Payload::Settings(samples.iter().map(|s| s.bob.index()).collect()),
        ),
        Entry::new(
            Party::Alice,
            EntryKind::Check1Outcomes,
            Payload::Outcomes(samples.iter().map(|s| s.a).collect()),
        ),
        Entry::new(
            Party::Bob,
            EntryKind::Check1Outcomes,
            Payload::Outcomes(samples.iter().map(|s| s.b).collect()),
        ),
    ];
    Ok((estimate_chsh(&samples)?, entries))
}

/// Second round: Bob alone measures both halves of each check pair. His
/// settings and outcomes stay private; only the verdict is published.
pub fn chsh_round_two<'a, R, I>(
    pairs: I,
    noise: &NoiseModel,
    epsilon: f64,
    rng: &mut R,
) -> Result<(ChshEstimate, Vec<Entry>), ChshError>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = &'a mut StateVector>,
{
    let samples = sample_check_pairs(pairs, noise, rng)?;
    let estimate = estimate_chsh(&samples)?;
    let verdict = Entry::new(
        Party::Bob,
        EntryKind::Chsh2Verdict,
        Payload::Verdict {
            accepted: chsh_threshold_check(estimate.s, epsilon),
            value: Some(estimate.s),
        },
    );
    Ok((estimate, vec![verdict]))
}
