//! Exact state-vector simulation for registers of at most four qubits.
//!
//! A protocol trial holds one register per EPR pair: qubit 0 is the sender's
//! half, qubit 1 the receiver's half, and the remaining slots are free for an
//! eavesdropper's ancilla or a withheld original.

mod measure;
mod pauli;
mod state;

use num_complex::Complex64;
use thiserror::Error;

pub use measure::{EquatorialBasis, Outcome, QubitBasis};
pub use pauli::{bell_to_pauli, pauli_to_bell, BellState, PauliOp};
pub use state::{Matrix2, Matrix4, StateVector, MAX_QUBITS, NORM_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcoreError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("two-qubit operation needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("amplitude vector of length {0} is not a supported register")]
    InvalidLength(usize),
    #[error("registers of {0} qubits are not supported (1..=4)")]
    UnsupportedWidth(usize),
    #[error("amplitudes are not normalized (Σ|a|² = {0})")]
    NotNormalized(f64),
}

/// `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn new_bell_pair() -> StateVector {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let o = Complex64::new(0.0, 0.0);
    StateVector::from_amplitudes(vec![h, o, o, h]).expect("|Φ⁺⟩ is normalized")
}

/// Fixed two-qubit gates, written in `|q1 q2⟩` order.
pub mod gates {
    use super::Matrix4;
    use num_complex::Complex64;

    fn permutation(perm: [usize; 4]) -> Matrix4 {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (row, col) in perm.into_iter().enumerate() {
            m[row][col] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn identity4() -> Matrix4 {
        permutation([0, 1, 2, 3])
    }

    /// First qubit controls, second is the target.
    pub fn cnot() -> Matrix4 {
        permutation([0, 1, 3, 2])
    }

    pub fn swap() -> Matrix4 {
        permutation([0, 2, 1, 3])
    }
}
