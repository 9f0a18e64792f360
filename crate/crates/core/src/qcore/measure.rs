use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pauli::{BellState, PauliOp};
use super::state::{StateVector, NORM_TOLERANCE};
use super::QcoreError;

/// Binary measurement outcome, labeled ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Orthonormal single-qubit basis; `plus` is reported as +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitBasis {
    pub plus: [Complex64; 2],
    pub minus: [Complex64; 2],
}

impl QubitBasis {
    pub fn computational() -> Self {
        let o = Complex64::new(0.0, 0.0);
        let p = Complex64::new(1.0, 0.0);
        Self {
            plus: [p, o],
            minus: [o, p],
        }
    }

    /// Basis whose `plus` vector has Bloch polar angle `theta` and azimuth
    /// `phi`: `|u⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, `|v⟩ ⟂ |u⟩`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let phase = Complex64::from_polar(1.0, phi);
        Self {
            plus: [Complex64::new(c, 0.0), phase * s],
            minus: [Complex64::new(s, 0.0), -phase * c],
        }
    }
}

/// Equatorial basis `(|0⟩ ± e^{iθ}|1⟩)/√2`, i.e. the eigenbasis of
/// `cos θ σx + sin θ σy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorialBasis {
    pub angle: f64,
}

impl EquatorialBasis {
    pub fn new(angle: f64) -> Self {
        Self { angle }
    }

    pub fn qubit_basis(self) -> QubitBasis {
        QubitBasis::bloch(std::f64::consts::FRAC_PI_2, self.angle)
    }
}

impl StateVector {
    /// Projective measurement of one qubit; the qubit stays in the register,
    /// collapsed onto the observed basis vector.
    pub fn measure_in_basis<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: &QubitBasis,
        rng: &mut R,
    ) -> Result<Outcome, QcoreError> {
        self.check_qubit(qubit)?;
        let bit = 1 << qubit;
        let project = |v: &[Complex64; 2], a: Complex64, b: Complex64| v[0].conj() * a + v[1].conj() * b;

        let amps = self.amplitudes();
        let (mut p_plus, mut p_minus) = (0.0, 0.0);
        for i0 in (0..amps.len()).filter(|i| i & bit == 0) {
            let (a, b) = (amps[i0], amps[i0 | bit]);
            p_plus += project(&basis.plus, a, b).norm_sqr();
            p_minus += project(&basis.minus, a, b).norm_sqr();
        }
        debug_assert!((p_plus + p_minus - 1.0).abs() < NORM_TOLERANCE * 10.0);

        let u: f64 = rng.gen();
        let (outcome, vector, weight) = if u < p_plus {
            (Outcome::Plus, basis.plus, p_plus)
        } else {
            (Outcome::Minus, basis.minus, p_minus)
        };

        let amps = self.amplitudes_mut();
        for i0 in (0..amps.len()).filter(|i| i & bit == 0) {
            let i1 = i0 | bit;
            let c = project(&vector, amps[i0], amps[i1]);
            amps[i0] = vector[0] * c;
            amps[i1] = vector[1] * c;
        }
        self.renormalize(weight);
        Ok(outcome)
    }

    pub fn measure_equatorial<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: EquatorialBasis,
        rng: &mut R,
    ) -> Result<Outcome, QcoreError> {
        self.measure_in_basis(qubit, &basis.qubit_basis(), rng)
    }

    /// Born probabilities of the four Bell projectors on `(q1, q2)`, in
    /// [`BellState::ALL`] order.
    pub fn bell_probabilities(&self, q1: usize, q2: usize) -> Result<[f64; 4], QcoreError> {
        self.check_pair(q1, q2)?;
        let mut probs = [0.0; 4];
        for base in pair_bases(self.amplitudes().len(), q1, q2) {
            let local = local_amplitudes(self.amplitudes(), base, q1, q2);
            for (b, p) in BellState::ALL.iter().zip(probs.iter_mut()) {
                *p += bell_component(*b, &local).norm_sqr();
            }
        }
        Ok(probs)
    }

    /// Projects `(q1, q2)` onto one of the four Bell states.
    pub fn bell_measurement<R: Rng + ?Sized>(
        &mut self,
        q1: usize,
        q2: usize,
        rng: &mut R,
    ) -> Result<BellState, QcoreError> {
        let probs = self.bell_probabilities(q1, q2)?;
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < NORM_TOLERANCE * 10.0);

        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = 3;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        // Guard against rounding leaving u above the last partial sum.
        while probs[chosen] == 0.0 && chosen > 0 {
            chosen -= 1;
        }
        let bell = BellState::ALL[chosen];
        let target = bell.local_amplitudes();

        let bases: Vec<usize> = pair_bases(self.amplitudes().len(), q1, q2).collect();
        let amps = self.amplitudes_mut();
        for base in bases {
            let local = local_amplitudes(amps, base, q1, q2);
            let c = bell_component(bell, &local);
            for (k, idx) in local_indices(base, q1, q2).into_iter().enumerate() {
                amps[idx] = target[k] * c;
            }
        }
        self.renormalize(probs[chosen]);
        Ok(bell)
    }

    pub fn apply_pauli(&mut self, qubit: usize, op: PauliOp) -> Result<(), QcoreError> {
        self.check_qubit(qubit)?;
        if op != PauliOp::I {
            self.apply_matrix2(qubit, &op.matrix());
        }
        Ok(())
    }
}

fn pair_bases(len: usize, q1: usize, q2: usize) -> impl Iterator<Item = usize> {
    let mask = (1 << q1) | (1 << q2);
    (0..len).filter(move |i| i & mask == 0)
}

/// Register indices of `|00⟩, |01⟩, |10⟩, |11⟩` in the local `|q1 q2⟩` order.
fn local_indices(base: usize, q1: usize, q2: usize) -> [usize; 4] {
    let (b1, b2) = (1 << q1, 1 << q2);
    [base, base | b2, base | b1, base | b1 | b2]
}

fn local_amplitudes(amps: &[Complex64], base: usize, q1: usize, q2: usize) -> [Complex64; 4] {
    local_indices(base, q1, q2).map(|i| amps[i])
}

fn bell_component(bell: BellState, local: &[Complex64; 4]) -> Complex64 {
    bell.local_amplitudes()
        .iter()
        .zip(local)
        .map(|(b, a)| b.conj() * a)
        .sum()
}
