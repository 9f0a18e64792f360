use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::Matrix2;

/// The four dense-coding unitaries `I, σz, σx, iσy`.
///
/// `IY` is the real matrix `iσy = [[0, 1], [-1, 0]]`. Composition is taken
/// modulo global phase, so the four variants form the Klein group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    Z,
    X,
    IY,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::Z, PauliOp::X, PauliOp::IY];

    /// (x, z) symplectic bits: X-part flips the computational value, Z-part the phase.
    pub fn xz(self) -> (bool, bool) {
        match self {
            PauliOp::I => (false, false),
            PauliOp::Z => (false, true),
            PauliOp::X => (true, false),
            PauliOp::IY => (true, true),
        }
    }

    pub fn from_xz(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliOp::I,
            (false, true) => PauliOp::Z,
            (true, false) => PauliOp::X,
            (true, true) => PauliOp::IY,
        }
    }

    pub fn matrix(self) -> Matrix2 {
        let o = Complex64::new(0.0, 0.0);
        let p = Complex64::new(1.0, 0.0);
        match self {
            PauliOp::I => [[p, o], [o, p]],
            PauliOp::Z => [[p, o], [o, -p]],
            PauliOp::X => [[o, p], [p, o]],
            PauliOp::IY => [[o, p], [-p, o]],
        }
    }

    /// Product `self · other` with the global phase dropped.
    pub fn compose(self, other: PauliOp) -> PauliOp {
        let (x1, z1) = self.xz();
        let (x2, z2) = other.xz();
        PauliOp::from_xz(x1 ^ x2, z1 ^ z2)
    }

    /// Phase class of the transpose. `Iᵀ = I`, `Xᵀ = X`, `Zᵀ = Z` and
    /// `(iσy)ᵀ = −iσy`, so every class maps to itself once the sign is absorbed.
    pub fn transpose_class(self) -> PauliOp {
        self
    }

    /// Index in `ALL`, for histogramming.
    pub fn index(self) -> usize {
        match self {
            PauliOp::I => 0,
            PauliOp::Z => 1,
            PauliOp::X => 2,
            PauliOp::IY => 3,
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliOp::I => "I",
            PauliOp::Z => "Z",
            PauliOp::X => "X",
            PauliOp::IY => "iY",
        })
    }
}

/// Bell basis outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes over the local basis `|ab⟩`, index `2a + b`, where `a` is
    /// the first qubit of the measured pair.
    pub fn local_amplitudes(self) -> [Complex64; 4] {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let o = Complex64::new(0.0, 0.0);
        match self {
            BellState::PhiPlus => [h, o, o, h],
            BellState::PhiMinus => [h, o, o, -h],
            BellState::PsiPlus => [o, h, h, o],
            BellState::PsiMinus => [o, h, -h, o],
        }
    }

    pub fn index(self) -> usize {
        match self {
            BellState::PhiPlus => 0,
            BellState::PhiMinus => 1,
            BellState::PsiPlus => 2,
            BellState::PsiMinus => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Short ASCII tag used in transcripts.
    pub fn tag(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.tag() == tag)
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `(op ⊗ I)|Φ⁺⟩` as a Bell label.
pub fn pauli_to_bell(op: PauliOp) -> BellState {
    match op {
        PauliOp::I => BellState::PhiPlus,
        PauliOp::Z => BellState::PhiMinus,
        PauliOp::X => BellState::PsiPlus,
        PauliOp::IY => BellState::PsiMinus,
    }
}

pub fn bell_to_pauli(bell: BellState) -> PauliOp {
    match bell {
        BellState::PhiPlus => PauliOp::I,
        BellState::PhiMinus => PauliOp::Z,
        BellState::PsiPlus => PauliOp::X,
        BellState::PsiMinus => PauliOp::IY,
    }
}
