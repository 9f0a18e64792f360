//! Encoding, mutual authentication and decoding steps.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bits::{decode_bell_to_bits, encode_two_bits, BitString, CheckedMessage, Identity};
use super::ledger::{PairLedger, Role};
use super::transcript::{Entry, EntryKind, Payload};
use super::{Party, ProtocolError};
use crate::noise::{noisy_bell_readout, NoiseModel};
use crate::qcore::{pauli_to_bell, BellState, PauliOp, StateVector};

/// Qubit index of the sender's half of every pair register.
pub const ALICE_QUBIT: usize = 0;
/// Qubit index of the receiver's half.
pub const BOB_QUBIT: usize = 1;

/// Result of one identity comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthVerdict {
    pub accepted: bool,
    pub mismatches: usize,
    pub compared: usize,
}

impl AuthVerdict {
    fn from_mismatches(mismatches: usize, compared: usize, tolerance: f64) -> Self {
        let fraction = if compared == 0 {
            0.0
        } else {
            mismatches as f64 / compared as f64
        };
        Self {
            accepted: fraction <= tolerance,
            mismatches,
            compared,
        }
    }

    pub fn entry(&self, sender: Party, kind: EntryKind) -> Entry {
        Entry::new(
            sender,
            kind,
            Payload::Verdict {
                accepted: self.accepted,
                value: None,
            },
        )
    }
}

/// Partitions every still-unassigned pair uniformly into `d` Check2, `N`
/// Message, `l` AliceId and `l` BobId pairs.
pub fn assign_roles<R: Rng + ?Sized>(
    ledger: &mut PairLedger,
    check_pairs: usize,
    message_pairs: usize,
    identity_pairs: usize,
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let mut free = ledger.unassigned();
    let needed = check_pairs + message_pairs + 2 * identity_pairs;
    if free.len() != needed {
        return Err(ProtocolError::InvalidConfig(format!(
            "{} unassigned pairs for {needed} roles",
            free.len()
        )));
    }
    free.shuffle(rng);
    let mut it = free.into_iter();
    for (role, count) in [
        (Role::Check2, check_pairs),
        (Role::Message, message_pairs),
        (Role::AliceId, identity_pairs),
        (Role::BobId, identity_pairs),
    ] {
        for pair in it.by_ref().take(count) {
            ledger.assign(pair, role);
        }
    }
    Ok(())
}

/// Alice's encoding step: message dibits on Message pairs and her identity
/// operations on AliceId pairs (both in increasing pair order), plus a
/// uniformly random cover operation on every BobId pair. All act on Alice's
/// qubit. Roles must already be assigned.
///
/// `identity_ops` is normally `id_A.encoding()`; an impersonator supplies
/// guesses instead.
pub fn alice_encode_phase<R: Rng + ?Sized>(
    ledger: &mut PairLedger,
    states: &mut [StateVector],
    m_prime: &BitString,
    identity_ops: &[PauliOp],
    rng: &mut R,
) -> Result<(), ProtocolError> {
    let message = ledger.positions(Role::Message);
    let alice_id = ledger.positions(Role::AliceId);
    if m_prime.len() != 2 * message.len() {
        return Err(ProtocolError::Length {
            what: "m'",
            expected: 2 * message.len(),
            actual: m_prime.len(),
        });
    }
    if identity_ops.len() != alice_id.len() {
        return Err(ProtocolError::Length {
            what: "identity operations",
            expected: alice_id.len(),
            actual: identity_ops.len(),
        });
    }
    for (pair, dibit) in message.into_iter().zip(m_prime.dibits()) {
        let op = encode_two_bits(dibit);
        states[pair].apply_pauli(ALICE_QUBIT, op)?;
        ledger.record_mut(pair).alice_op = Some(op);
    }
    for (pair, &op) in alice_id.into_iter().zip(identity_ops) {
        states[pair].apply_pauli(ALICE_QUBIT, op)?;
        ledger.record_mut(pair).alice_op = Some(op);
    }
    for pair in ledger.positions(Role::BobId) {
        let cover = PauliOp::ALL[rng.gen_range(0..4)];
        states[pair].apply_pauli(ALICE_QUBIT, cover)?;
        ledger.record_mut(pair).cover_op = Some(cover);
    }
    Ok(())
}

/// Bob encodes `identity_ops` (normally `id_B.encoding()`) on his halves of
/// the BobId pairs, Bell-measures each pair and announces every outcome.
pub fn bob_authenticate<R: Rng + ?Sized>(
    ledger: &mut PairLedger,
    states: &mut [StateVector],
    identity_ops: &[PauliOp],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(Vec<BellState>, Entry), ProtocolError> {
    let positions = ledger.positions(Role::BobId);
    if identity_ops.len() != positions.len() {
        return Err(ProtocolError::Length {
            what: "identity operations",
            expected: positions.len(),
            actual: identity_ops.len(),
        });
    }
    let mut announced = Vec::with_capacity(positions.len());
    for (&pair, &op) in positions.iter().zip(identity_ops) {
        let state = &mut states[pair];
        state.apply_pauli(BOB_QUBIT, op)?;
        let bell = noisy_bell_readout(state.bell_measurement(ALICE_QUBIT, BOB_QUBIT, rng)?, noise, rng);
        let record = ledger.record_mut(pair);
        record.bob_op = Some(op);
        record.bell = Some(bell);
        announced.push(bell);
    }
    let entry = Entry::new(
        Party::Bob,
        EntryKind::BobIdOutcomes,
        Payload::Bell(positions.into_iter().zip(announced.iter().copied()).collect()),
    );
    Ok((announced, entry))
}

/// Bell outcome Alice expects on a BobId pair: `(C ⊗ Q)|Φ⁺⟩ = (C·Qᵀ ⊗ I)|Φ⁺⟩`.
pub fn expected_bob_outcome(cover: PauliOp, bob_op: PauliOp) -> BellState {
    pauli_to_bell(cover.compose(bob_op.transpose_class()))
}

/// Alice compares Bob's announcements against the outcomes her cover
/// operations and `id_B` predict.
pub fn alice_verify_bob(
    announced: &[BellState],
    cover_ops: &[PauliOp],
    id_b: &Identity,
    tolerance: f64,
) -> Result<AuthVerdict, ProtocolError> {
    let expected_ops = id_b.encoding();
    if announced.len() != cover_ops.len() || announced.len() != expected_ops.len() {
        return Err(ProtocolError::Length {
            what: "announced outcomes",
            expected: expected_ops.len(),
            actual: announced.len(),
        });
    }
    let mismatches = announced
        .iter()
        .zip(cover_ops.iter().zip(&expected_ops))
        .filter(|(&got, (&cover, &q))| got != expected_bob_outcome(cover, q))
        .count();
    Ok(AuthVerdict::from_mismatches(mismatches, announced.len(), tolerance))
}

/// Bob Bell-measures the AliceId pairs and checks the decoded dibits against
/// `id_A`. Outcomes are recorded in the ledger only, never published.
pub fn bob_verify_alice<R: Rng + ?Sized>(
    ledger: &mut PairLedger,
    states: &mut [StateVector],
    id_a: &Identity,
    tolerance: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<AuthVerdict, ProtocolError> {
    let positions = ledger.positions(Role::AliceId);
    let expected: Vec<_> = id_a.bits().dibits().collect();
    if expected.len() != positions.len() {
        return Err(ProtocolError::Length {
            what: "id_a",
            expected: 2 * positions.len(),
            actual: id_a.bits().len(),
        });
    }
    let mut mismatches = 0;
    for (&pair, want) in positions.iter().zip(expected) {
        let bell = noisy_bell_readout(states[pair].bell_measurement(ALICE_QUBIT, BOB_QUBIT, rng)?, noise, rng);
        ledger.record_mut(pair).bell = Some(bell);
        if decode_bell_to_bits(bell) != want {
            mismatches += 1;
        }
    }
    Ok(AuthVerdict::from_mismatches(mismatches, positions.len(), tolerance))
}

/// Bob Bell-measures every Message pair (increasing order) and decodes `m'`.
pub fn bob_decode_message<R: Rng + ?Sized>(
    ledger: &mut PairLedger,
    states: &mut [StateVector],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<BitString, ProtocolError> {
    let mut dibits = Vec::new();
    for pair in ledger.positions(Role::Message) {
        let bell = noisy_bell_readout(states[pair].bell_measurement(ALICE_QUBIT, BOB_QUBIT, rng)?, noise, rng);
        ledger.record_mut(pair).bell = Some(bell);
        dibits.push(decode_bell_to_bits(bell));
    }
    Ok(BitString::from_dibits(dibits))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckBitReport {
    pub errors: usize,
    pub checked: usize,
    pub qber: f64,
    pub accepted: bool,
}

/// Compares Bob's decoded bits at the announced check positions.
pub fn verify_check_bits(decoded: &BitString, sent: &CheckedMessage, tolerance: f64) -> CheckBitReport {
    let errors = sent
        .positions
        .iter()
        .zip(&sent.values)
        .filter(|(&p, &v)| decoded.bits()[p] != v)
        .count();
    let checked = sent.positions.len();
    let qber = if checked == 0 {
        0.0
    } else {
        errors as f64 / checked as f64
    };
    CheckBitReport {
        errors,
        checked,
        qber,
        accepted: qber <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::new_bell_pair;
    use crate::stats::chi_square_uniform_p;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n_pairs: usize, l: usize, rng: &mut ChaCha8Rng) -> (PairLedger, Vec<StateVector>) {
        let mut ledger = PairLedger::new(n_pairs + 2 * l + 2);
        ledger.assign(0, Role::Check1);
        assign_roles(&mut ledger, 1, n_pairs, l, rng).unwrap();
        let states = (0..ledger.len()).map(|_| new_bell_pair()).collect();
        (ledger, states)
    }

    #[test]
    fn role_counts_after_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (ledger, _) = setup(5, 3, &mut rng);
        let c = ledger.counts();
        assert_eq!((c.check1, c.check2, c.message, c.alice_id, c.bob_id, c.unassigned), (1, 1, 5, 3, 3, 0));
    }

    #[test]
    fn all_zero_message_uses_identity_paulis() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut ledger, mut states) = setup(4, 2, &mut rng);
        let id_a: Identity = "0110".parse().unwrap();
        alice_encode_phase(&mut ledger, &mut states, &BitString::zeros(8), &id_a.encoding(), &mut rng).unwrap();
        for p in ledger.positions(Role::Message) {
            assert_eq!(ledger.record(p).alice_op, Some(PauliOp::I));
        }
        let ops: Vec<_> = ledger.positions(Role::AliceId).iter().map(|&p| ledger.record(p).alice_op.unwrap()).collect();
        assert_eq!(ops, vec![PauliOp::Z, PauliOp::X]);
        assert!(ledger.cover_ops_consistent());
    }

    #[test]
    fn cover_ops_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u64; 4];
        let l = 50;
        for _ in 0..200 {
            let (mut ledger, mut states) = setup(1, l, &mut rng);
            alice_encode_phase(&mut ledger, &mut states, &BitString::zeros(2), &vec![PauliOp::I; l], &mut rng).unwrap();
            for p in ledger.positions(Role::BobId) {
                counts[ledger.record(p).cover_op.unwrap().index()] += 1;
            }
        }
        assert_eq!(counts.iter().sum::<u64>(), 10_000);
        let p = chi_square_uniform_p(&counts).unwrap();
        assert!(p > 0.01, "{counts:?} p={p}");
    }

    #[test]
    fn bob_announcement_follows_cover_operation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (cover, expected) in [(PauliOp::I, BellState::PhiPlus), (PauliOp::X, BellState::PsiPlus)] {
            let mut ledger = PairLedger::new(1);
            ledger.assign(0, Role::BobId);
            ledger.record_mut(0).cover_op = Some(cover);
            let mut states = vec![new_bell_pair()];
            states[0].apply_pauli(ALICE_QUBIT, cover).unwrap();
            let (announced, entry) =
                bob_authenticate(&mut ledger, &mut states, &[PauliOp::I], &NoiseModel::noiseless(), &mut rng).unwrap();
            assert_eq!(announced, vec![expected]);
            assert_eq!(entry.payload, Payload::Bell(vec![(0, expected)]));
        }
    }

    #[test]
    fn expected_outcome_rule_matches_simulation_for_all_sixteen() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for cover in PauliOp::ALL {
            for q in PauliOp::ALL {
                let mut s = new_bell_pair();
                s.apply_pauli(ALICE_QUBIT, cover).unwrap();
                s.apply_pauli(BOB_QUBIT, q).unwrap();
                assert_eq!(s.bell_measurement(0, 1, &mut rng).unwrap(), expected_bob_outcome(cover, q));
            }
        }
    }

    #[test]
    fn verification_counts_mismatches_against_tolerance() {
        let id_b: Identity = "0011".parse().unwrap();
        let covers = [PauliOp::X, PauliOp::Z];
        let right = [expected_bob_outcome(PauliOp::X, PauliOp::I), expected_bob_outcome(PauliOp::Z, PauliOp::IY)];
        let v = alice_verify_bob(&right, &covers, &id_b, 0.0).unwrap();
        assert_eq!((v.accepted, v.mismatches), (true, 0));
        let wrong = [right[0], BellState::PhiPlus];
        let v = alice_verify_bob(&wrong, &covers, &id_b, 0.0).unwrap();
        assert_eq!((v.accepted, v.mismatches, v.compared), (false, 1, 2));
        assert!(alice_verify_bob(&wrong, &covers, &id_b, 0.5).unwrap().accepted);
        assert!(alice_verify_bob(&wrong[..1], &covers, &id_b, 0.0).is_err());
    }

    #[test]
    fn honest_alice_is_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut ledger, mut states) = setup(2, 4, &mut rng);
        let id_a = Identity::random(4, &mut rng);
        alice_encode_phase(&mut ledger, &mut states, &BitString::ones(4), &id_a.encoding(), &mut rng).unwrap();
        let v = bob_verify_alice(&mut ledger, &mut states, &id_a, 0.0, &NoiseModel::noiseless(), &mut rng).unwrap();
        assert!(v.accepted && v.mismatches == 0 && v.compared == 4);
    }

    #[test]
    fn decoding_recovers_each_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut ledger, mut states) = setup(4, 1, &mut rng);
        let m: BitString = "00011011".parse().unwrap();
        let id: Identity = "00".parse().unwrap();
        alice_encode_phase(&mut ledger, &mut states, &m, &id.encoding(), &mut rng).unwrap();
        let decoded = bob_decode_message(&mut ledger, &mut states, &NoiseModel::noiseless(), &mut rng).unwrap();
        assert_eq!(decoded, m);
        let bells: Vec<_> = ledger.positions(Role::Message).iter().map(|&p| ledger.record(p).bell.unwrap()).collect();
        assert_eq!(bells, BellState::ALL.to_vec());
    }

    #[test]
    fn check_bit_report() {
        let sent = CheckedMessage {
            bits: "1010".parse().unwrap(),
            positions: vec![1, 2],
            values: vec![false, true],
        };
        let r = verify_check_bits(&"1110".parse().unwrap(), &sent, 0.1);
        assert_eq!((r.errors, r.checked, r.accepted), (1, 2, false));
        assert!((r.qber - 0.5).abs() < 1e-12);
        let none = CheckedMessage { bits: "10".parse().unwrap(), positions: vec![], values: vec![] };
        assert!(verify_check_bits(&"01".parse().unwrap(), &none, 0.0).accepted);
    }
}
