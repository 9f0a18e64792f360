//! Eavesdropper models. An [`Eve`] sits on the quantum channel that carries
//! Alice's halves to Bob and may also stand in for either party during
//! authentication.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{EntryKind, Identity, Party, Transcript};
use crate::qcore::{gates, Outcome, PauliOp, QcoreError, QubitBasis, StateVector};

/// State Eve forwards in place of each intercepted qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substitute {
    /// `|0⟩` or `|1⟩`, equiprobably.
    RandomComputational,
    /// Haar-random pure state.
    RandomPure,
}

/// When the entangling attack reads out its ancilla.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AncillaTiming {
    #[default]
    AfterCoupling,
    AfterBob,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackStrategy {
    #[default]
    None,
    ImpersonateAlice,
    ImpersonateBob,
    /// Projective measurement in the basis whose `+` vector has Bloch angles
    /// `(theta, phi)`, then resend.
    InterceptResend { theta: f64, phi: f64 },
    ManInTheMiddle { substitute: Substitute },
    EntangleMeasure {
        #[serde(default)]
        timing: AncillaTiming,
    },
}

impl AttackStrategy {
    pub const NAMES: [&'static str; 6] = [
        "none",
        "impersonate-alice",
        "impersonate-bob",
        "intercept-resend",
        "man-in-the-middle",
        "entangle-measure",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::None => Self::NAMES[0],
            AttackStrategy::ImpersonateAlice => Self::NAMES[1],
            AttackStrategy::ImpersonateBob => Self::NAMES[2],
            AttackStrategy::InterceptResend { .. } => Self::NAMES[3],
            AttackStrategy::ManInTheMiddle { .. } => Self::NAMES[4],
            AttackStrategy::EntangleMeasure { .. } => Self::NAMES[5],
        }
    }

    /// Whether the strategy touches qubits in transit.
    pub fn is_channel_attack(&self) -> bool {
        matches!(
            self,
            AttackStrategy::InterceptResend { .. }
                | AttackStrategy::ManInTheMiddle { .. }
                | AttackStrategy::EntangleMeasure { .. }
        )
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackStrategy::InterceptResend { theta, phi } => write!(f, "intercept-resend(theta={theta},phi={phi})"),
            AttackStrategy::ManInTheMiddle { substitute } => {
                let s = match substitute {
                    Substitute::RandomComputational => "random-computational",
                    Substitute::RandomPure => "random-pure",
                };
                write!(f, "man-in-the-middle({s})")
            }
            AttackStrategy::EntangleMeasure { timing } => {
                let t = match timing {
                    AncillaTiming::AfterCoupling => "after-coupling",
                    AncillaTiming::AfterBob => "after-bob",
                };
                write!(f, "entangle-measure({t})")
            }
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown attack {0:?}; expected one of none, impersonate-alice, impersonate-bob, intercept-resend, man-in-the-middle, entangle-measure")]
pub struct UnknownAttack(pub String);

/// Parses a bare strategy name, using the computational basis, computational
/// substitutes and immediate ancilla readout as parameters.
impl FromStr for AttackStrategy {
    type Err = UnknownAttack;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "none" => AttackStrategy::None,
            "impersonate-alice" => AttackStrategy::ImpersonateAlice,
            "impersonate-bob" => AttackStrategy::ImpersonateBob,
            "intercept-resend" => AttackStrategy::InterceptResend { theta: 0.0, phi: 0.0 },
            "man-in-the-middle" | "mitm" => AttackStrategy::ManInTheMiddle {
                substitute: Substitute::RandomComputational,
            },
            "entangle-measure" => AttackStrategy::EntangleMeasure {
                timing: AncillaTiming::AfterCoupling,
            },
            other => return Err(UnknownAttack(other.to_string())),
        })
    }
}

/// Measures `qubit` in the Bloch basis `(theta, phi)` and leaves it collapsed.
pub fn intercept_resend<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    theta: f64,
    phi: f64,
    rng: &mut R,
) -> Result<Outcome, QcoreError> {
    state.measure_in_basis(qubit, &QubitBasis::bloch(theta, phi), rng)
}

pub fn substitute_state<R: Rng + ?Sized>(kind: Substitute, rng: &mut R) -> StateVector {
    let vector = match kind {
        Substitute::RandomComputational => {
            if rng.gen::<f64>() < 0.5 {
                QubitBasis::computational().plus
            } else {
                QubitBasis::computational().minus
            }
        }
        Substitute::RandomPure => {
            let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
            let phi = 2.0 * PI * rng.gen::<f64>();
            QubitBasis::bloch(theta, phi).plus
        }
    };
    StateVector::from_amplitudes(vector.to_vec()).expect("basis vectors are normalized")
}

/// Replaces `qubit` by a fresh substitute. The original is moved to a new
/// highest-index qubit, which Eve keeps.
pub fn substitute_qubit<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    kind: Substitute,
    rng: &mut R,
) -> Result<StateVector, QcoreError> {
    let mut joint = state.tensor(&substitute_state(kind, rng))?;
    let held = joint.num_qubits() - 1;
    joint.apply_two_qubit(qubit, held, &gates::swap())?;
    Ok(joint)
}

/// Man-in-the-middle over a whole sequence. Every register gains one qubit
/// holding Eve's copy of the original.
pub fn mitm_substitute<R: Rng + ?Sized>(
    states: &mut [StateVector],
    qubit: usize,
    kind: Substitute,
    rng: &mut R,
) -> Result<(), QcoreError> {
    for state in states.iter_mut() {
        *state = substitute_qubit(state, qubit, kind, rng)?;
    }
    Ok(())
}

/// Appends an ancilla in `|0⟩` and applies CNOT from `transit` onto it.
/// Returns the ancilla index.
pub fn entangle_ancilla(state: &mut StateVector, transit: usize) -> Result<usize, QcoreError> {
    let joint = state.tensor(&StateVector::zero(1)?)?;
    *state = joint;
    let ancilla = state.num_qubits() - 1;
    state.apply_two_qubit(transit, ancilla, &gates::cnot())?;
    Ok(ancilla)
}

/// Couples an ancilla to `transit` and, if `measure_now`, reads it out in
/// the computational basis.
pub fn entangle_measure<R: Rng + ?Sized>(
    state: &mut StateVector,
    transit: usize,
    measure_now: bool,
    rng: &mut R,
) -> Result<Option<Outcome>, QcoreError> {
    let ancilla = entangle_ancilla(state, transit)?;
    if measure_now {
        state.measure_in_basis(ancilla, &QubitBasis::computational(), rng).map(Some)
    } else {
        Ok(None)
    }
}

/// What Eve learned about one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub pair: usize,
    pub outcome: Outcome,
}

/// One run's eavesdropper. Mutable and owned by a single session.
#[derive(Clone, Debug, PartialEq)]
pub struct Eve {
    strategy: AttackStrategy,
    known_identity: Option<Identity>,
    record: Vec<Observation>,
    held: Vec<usize>,
}

impl Eve {
    pub fn new(strategy: AttackStrategy) -> Self {
        Self {
            strategy,
            known_identity: None,
            record: Vec::new(),
            held: Vec::new(),
        }
    }

    /// An impersonator who was handed the real identity; serves as the
    /// negative control for detection tests.
    pub fn with_known_identity(strategy: AttackStrategy, identity: Identity) -> Self {
        Self {
            known_identity: Some(identity),
            ..Self::new(strategy)
        }
    }

    pub fn strategy(&self) -> AttackStrategy {
        self.strategy
    }

    pub fn impersonates(&self, party: Party) -> bool {
        matches!(
            (self.strategy, party),
            (AttackStrategy::ImpersonateAlice, Party::Alice) | (AttackStrategy::ImpersonateBob, Party::Bob)
        )
    }

    /// Operations Eve encodes when posing as `party` over `pairs` identity
    /// pairs, or `None` if the real party acts.
    pub fn identity_ops<R: Rng + ?Sized>(&self, party: Party, pairs: usize, rng: &mut R) -> Option<Vec<PauliOp>> {
        if !self.impersonates(party) {
            return None;
        }
        Some(match &self.known_identity {
            Some(id) => id.encoding(),
            None => (0..pairs).map(|_| PauliOp::ALL[rng.gen_range(0..4)]).collect(),
        })
    }

    /// Acts on the transiting `qubit` of `pair`.
    pub fn on_transit<R: Rng + ?Sized>(
        &mut self,
        pair: usize,
        state: &mut StateVector,
        qubit: usize,
        rng: &mut R,
    ) -> Result<(), QcoreError> {
        match self.strategy {
            AttackStrategy::InterceptResend { theta, phi } => {
                let outcome = intercept_resend(state, qubit, theta, phi, rng)?;
                self.record.push(Observation { pair, outcome });
            }
            AttackStrategy::ManInTheMiddle { substitute } => {
                *state = substitute_qubit(state, qubit, substitute, rng)?;
                self.held.push(pair);
            }
            AttackStrategy::EntangleMeasure { timing } => {
                let now = timing == AncillaTiming::AfterCoupling;
                match entangle_measure(state, qubit, now, rng)? {
                    Some(outcome) => self.record.push(Observation { pair, outcome }),
                    None => self.held.push(pair),
                }
            }
            AttackStrategy::None | AttackStrategy::ImpersonateAlice | AttackStrategy::ImpersonateBob => {}
        }
        Ok(())
    }

    /// Reads out ancillas deferred until after Bob's measurements.
    pub fn finish<R: Rng + ?Sized>(&mut self, states: &mut [StateVector], rng: &mut R) -> Result<(), QcoreError> {
        if let AttackStrategy::EntangleMeasure {
            timing: AncillaTiming::AfterBob,
        } = self.strategy
        {
            for pair in std::mem::take(&mut self.held) {
                let state = &mut states[pair];
                let ancilla = state.num_qubits() - 1;
                let outcome = state.measure_in_basis(ancilla, &QubitBasis::computational(), rng)?;
                self.record.push(Observation { pair, outcome });
            }
        }
        Ok(())
    }

    pub fn record(&self) -> &[Observation] {
        &self.record
    }

    /// Pairs whose original qubit (or unmeasured ancilla) Eve still holds.
    pub fn held(&self) -> &[usize] {
        &self.held
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("leakage audit needs at least two transcripts, got {0}")]
    TooFewTranscripts(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy {
    pub transcript: usize,
    pub line: usize,
    pub kind: Option<EntryKind>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeakageVerdict {
    pub passed: bool,
    pub discrepancies: Vec<Discrepancy>,
    pub forbidden_entries: usize,
}

/// Compares transcripts of runs that differ only in the message. Any byte of
/// difference, or any message-outcome entry, fails the audit.
pub fn leakage_audit(transcripts: &[Transcript]) -> Result<LeakageVerdict, AuditError> {
    if transcripts.len() < 2 {
        return Err(AuditError::TooFewTranscripts(transcripts.len()));
    }
    let reference = transcripts[0].to_text();
    let ref_lines: Vec<&str> = reference.lines().collect();
    let mut discrepancies = Vec::new();
    for (t, transcript) in transcripts.iter().enumerate().skip(1) {
        let text = transcript.to_text();
        if text == reference {
            continue;
        }
        let lines: Vec<&str> = text.lines().collect();
        for line in 0..lines.len().max(ref_lines.len()) {
            if lines.get(line) != ref_lines.get(line) {
                let kind = transcript.entries().get(line).map(|e| e.kind);
                discrepancies.push(Discrepancy { transcript: t, line, kind });
            }
        }
    }
    let forbidden_entries = transcripts
        .iter()
        .flat_map(|t| t.entries())
        .filter(|e| e.kind == EntryKind::MessageOutcomes)
        .count();
    Ok(LeakageVerdict {
        passed: discrepancies.is_empty() && forbidden_entries == 0,
        discrepancies,
        forbidden_entries,
    })
}
