use num_complex::Complex64;

use super::QcoreError;

/// Largest register the simulator accepts: one Bell pair plus two spare slots.
pub const MAX_QUBITS: usize = 4;

/// Tolerance on Σ|a|² and on unitarity checks.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A 4×4 complex matrix acting on an ordered pair of qubits.
pub type Matrix4 = [[Complex64; 4]; 4];

/// A 2×2 complex matrix acting on one qubit.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Pure state of a register of 1 to 4 qubits.
///
/// Amplitudes are stored little-endian: bit `q` of an amplitude index is the
/// value of qubit `q`. For two qubits the order is therefore
/// `|q1 q0⟩ = |00⟩, |01⟩, |10⟩, |11⟩` read as indices 0..4, which for the
/// symmetric Bell states coincides with the textbook listing.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, QcoreError> {
        check_width(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, num_qubits })
    }

    /// Computational basis state with the given index.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, QcoreError> {
        let mut state = Self::zero(num_qubits)?;
        if index >= state.amplitudes.len() {
            return Err(QcoreError::InvalidLength(index));
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Builds a state from raw amplitudes, which must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QcoreError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QcoreError::InvalidLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_width(num_qubits)?;
        let norm: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QcoreError::NotNormalized(norm));
        }
        Ok(Self { amplitudes, num_qubits })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// |⟨self|other⟩|², the overlap between two registers of equal width.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        assert_eq!(self.num_qubits, other.num_qubits, "register widths differ");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Tensor product `other ⊗ self`: the qubits of `other` are appended at
    /// the next free (higher) indices.
    pub fn tensor(&self, other: &StateVector) -> Result<Self, QcoreError> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_width(num_qubits)?;
        let low = self.amplitudes.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); low * other.amplitudes.len()];
        for (hi, b) in other.amplitudes.iter().enumerate() {
            for (lo, a) in self.amplitudes.iter().enumerate() {
                amplitudes[hi * low + lo] = a * b;
            }
        }
        Ok(Self { amplitudes, num_qubits })
    }

    pub(crate) fn check_qubit(&self, qubit: usize) -> Result<(), QcoreError> {
        if qubit >= self.num_qubits {
            Err(QcoreError::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_pair(&self, q1: usize, q2: usize) -> Result<(), QcoreError> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(QcoreError::SameQubit(q1));
        }
        Ok(())
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Rescales to unit norm after a projection with Born weight `weight`.
    pub(crate) fn renormalize(&mut self, weight: f64) {
        let scale = 1.0 / weight.sqrt();
        for a in &mut self.amplitudes {
            *a *= scale;
        }
    }

    /// Applies a 2×2 matrix to one qubit. The matrix is not checked.
    pub(crate) fn apply_matrix2(&mut self, qubit: usize, m: &Matrix2) {
        let bit = 1 << qubit;
        for i0 in 0..self.amplitudes.len() {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            let (a, b) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = m[0][0] * a + m[0][1] * b;
            self.amplitudes[i1] = m[1][0] * a + m[1][1] * b;
        }
    }

    /// Applies a single-qubit unitary, rejecting matrices that are not unitary.
    pub fn apply_single(&mut self, qubit: usize, unitary: &Matrix2) -> Result<(), QcoreError> {
        self.check_qubit(qubit)?;
        let deviation = unitarity_deviation(unitary);
        if deviation > NORM_TOLERANCE {
            return Err(QcoreError::NotUnitary(deviation));
        }
        self.apply_matrix2(qubit, unitary);
        Ok(())
    }

    /// Applies a 4×4 unitary to the ordered pair `(q1, q2)`.
    ///
    /// The matrix is written in the textbook order `|q1 q2⟩`, i.e. its row and
    /// column index is `2·bit(q1) + bit(q2)`. With `q1` as control,
    /// [`gates::cnot`](super::gates::cnot) is the usual controlled-NOT.
    pub fn apply_two_qubit(
        &mut self,
        q1: usize,
        q2: usize,
        unitary: &Matrix4,
    ) -> Result<(), QcoreError> {
        self.check_pair(q1, q2)?;
        let deviation = unitarity_deviation(unitary);
        if deviation > NORM_TOLERANCE {
            return Err(QcoreError::NotUnitary(deviation));
        }
        let (b1, b2) = (1 << q1, 1 << q2);
        for base in 0..self.amplitudes.len() {
            if base & (b1 | b2) != 0 {
                continue;
            }
            let idx = [base, base | b2, base | b1, base | b1 | b2];
            let old = idx.map(|i| self.amplitudes[i]);
            for (row, &target) in idx.iter().enumerate() {
                self.amplitudes[target] = (0..4).map(|col| unitary[row][col] * old[col]).sum();
            }
        }
        Ok(())
    }
}

fn check_width(num_qubits: usize) -> Result<(), QcoreError> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        Err(QcoreError::UnsupportedWidth(num_qubits))
    } else {
        Ok(())
    }
}

/// max |(U†U − I)_ij| for a square matrix given as rows.
fn unitarity_deviation<const N: usize>(u: &[[Complex64; N]; N]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            let entry: Complex64 = (0..N).map(|k| u[k][i].conj() * u[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((entry - expected).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gates;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(matches!(StateVector::zero(0), Err(QcoreError::UnsupportedWidth(0))));
        assert!(matches!(StateVector::zero(5), Err(QcoreError::UnsupportedWidth(5))));
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0), c(1.0)]),
            Err(QcoreError::NotNormalized(_))
        ));
    }

    #[test]
    fn tensor_appends_high_qubits() {
        let one = StateVector::basis(1, 1).unwrap();
        let zero = StateVector::zero(1).unwrap();
        // qubit 0 = |1⟩, qubit 1 = |0⟩ → index 0b01
        let joint = one.tensor(&zero).unwrap();
        assert_eq!(joint.num_qubits(), 2);
        assert!((joint.probability(1) - 1.0).abs() < 1e-12);
        assert!(joint.tensor(&StateVector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn two_qubit_rejects_non_unitary_and_same_qubit() {
        let mut s = StateVector::zero(2).unwrap();
        let mut m = gates::identity4();
        m[0][0] = c(2.0);
        assert!(matches!(s.apply_two_qubit(0, 1, &m), Err(QcoreError::NotUnitary(_))));
        assert!(matches!(
            s.apply_two_qubit(1, 1, &gates::cnot()),
            Err(QcoreError::SameQubit(1))
        ));
        assert!(matches!(
            s.apply_two_qubit(0, 2, &gates::cnot()),
            Err(QcoreError::QubitOutOfRange { qubit: 2, .. })
        ));
    }

    #[test]
    fn cnot_on_zero_and_identity_are_no_ops() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_two_qubit(0, 1, &gates::cnot()).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());
        let bell = super::super::new_bell_pair();
        let mut t = bell.clone();
        t.apply_two_qubit(1, 0, &gates::identity4()).unwrap();
        assert!((t.fidelity(&bell) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnot_control_is_first_argument() {
        // qubit 0 set, qubit 1 clear: index 1. CNOT(0 → 1) flips qubit 1 → index 3.
        let mut s = StateVector::basis(2, 1).unwrap();
        s.apply_two_qubit(0, 1, &gates::cnot()).unwrap();
        assert!((s.probability(3) - 1.0).abs() < 1e-12);
        // CNOT(1 → 0) on the same input leaves it alone.
        let mut t = StateVector::basis(2, 1).unwrap();
        t.apply_two_qubit(1, 0, &gates::cnot()).unwrap();
        assert!((t.probability(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnot_on_bell_plus_ancilla_gives_ghz() {
        let pair = super::super::new_bell_pair();
        let mut s = pair.tensor(&StateVector::zero(1).unwrap()).unwrap();
        s.apply_two_qubit(0, 2, &gates::cnot()).unwrap();
        // Hand expansion: (|000⟩ + |111⟩)/√2 → indices 0 and 7.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut expected = vec![c(0.0); 8];
        expected[0] = c(h);
        expected[7] = c(h);
        let ghz = StateVector::from_amplitudes(expected).unwrap();
        assert!((s.fidelity(&ghz) - 1.0).abs() < 1e-12);
    }
}
