use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bits::{insert_check_bits, remove_check_bits, BitString, Identity};
use super::chsh::{chsh_round_one, chsh_round_two, chsh_threshold_check, ChshEstimate};
use super::config::ProtocolConfig;
use super::ledger::{PairLedger, Role};
use super::phases::{
    alice_encode_phase, alice_verify_bob, assign_roles, bob_authenticate, bob_decode_message, bob_verify_alice,
    verify_check_bits, AuthVerdict, ALICE_QUBIT, BOB_QUBIT,
};
use super::transcript::{Entry, EntryKind, Payload, Transcript};
use super::{Party, ProtocolError};
use crate::adversary::{AttackStrategy, Eve, Observation};
use crate::noise::{transmit, NoiseModel};
use crate::qcore::{new_bell_pair, StateVector};

// Generator streams derived from the session seed.
const STREAM_PROTOCOL: u64 = 0;
const STREAM_MESSAGE: u64 = 1;
const STREAM_IDENTITY: u64 = 2;
const STREAM_CHECK_BITS: u64 = 3;
const STREAM_EVE: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Delivered,
    AbortChsh1,
    AbortChsh2,
    AbortAuthBob,
    AbortAuthAlice,
    AbortCheckBits,
}

impl Status {
    pub const ALL: [Status; 6] = [
        Status::Delivered,
        Status::AbortChsh1,
        Status::AbortChsh2,
        Status::AbortAuthBob,
        Status::AbortAuthAlice,
        Status::AbortCheckBits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Status::Delivered => "delivered",
            Status::AbortChsh1 => "abort-chsh1",
            Status::AbortChsh2 => "abort-chsh2",
            Status::AbortAuthBob => "abort-auth-bob",
            Status::AbortAuthAlice => "abort-auth-alice",
            Status::AbortCheckBits => "abort-check-bits",
        }
    }

    pub fn is_abort(self) -> bool {
        self != Status::Delivered
    }
}

/// Two-bit symbols Bob decoded correctly out of those he decoded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTally {
    pub correct: usize,
    pub total: usize,
}

impl SymbolTally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome {
    pub status: Status,
    /// Present iff `status == Delivered`.
    pub delivered_message: Option<BitString>,
    pub sent_message: BitString,
    pub s1: Option<ChshEstimate>,
    pub s2: Option<ChshEstimate>,
    pub qber: Option<f64>,
    pub bob_auth: Option<AuthVerdict>,
    pub alice_auth: Option<AuthVerdict>,
    pub symbols: Option<SymbolTally>,
    pub transcript: Transcript,
    pub ledger: PairLedger,
    pub eve_record: Vec<Observation>,
}

impl ProtocolOutcome {
    /// All CHSH estimates produced by the run.
    pub fn chsh_estimates(&self) -> impl Iterator<Item = &ChshEstimate> {
        self.s1.iter().chain(self.s2.iter())
    }
}

/// Optional deviations from the plain protocol.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProtocolHooks {
    /// Extra noise applied to Bob's stored halves once the first check round
    /// is complete.
    pub storage_noise: Option<NoiseModel>,
    /// Fault injection: Bob publishes his Message-pair Bell outcomes.
    pub leak_message_outcomes: bool,
}

/// Runs one session with the given attack.
pub fn run_protocol(config: &ProtocolConfig, attack: AttackStrategy) -> Result<ProtocolOutcome, ProtocolError> {
    run_protocol_with(config, &mut Eve::new(attack), &ProtocolHooks::default())
}

fn select<'a>(states: &'a mut [StateVector], ledger: &PairLedger, role: Role) -> impl Iterator<Item = &'a mut StateVector> + 'a {
    let mask: Vec<bool> = (0..states.len()).map(|i| ledger.role(i) == Some(role)).collect();
    states.iter_mut().zip(mask).filter_map(|(s, keep)| keep.then_some(s))
}

fn verdict(sender: Party, kind: EntryKind, accepted: bool, value: Option<f64>) -> Entry {
    Entry::new(sender, kind, Payload::Verdict { accepted, value })
}

pub fn run_protocol_with(
    config: &ProtocolConfig,
    eve: &mut Eve,
    hooks: &ProtocolHooks,
) -> Result<ProtocolOutcome, ProtocolError> {
    config.validate()?;
    let noise = &config.noise;
    let (n, l, d) = (config.message_bits, config.identity_pairs, config.check_pairs);
    let message_pairs = config.message_pairs();
    let total = config.total_pairs();

    let mut rng = stream(config.seed, STREAM_PROTOCOL);
    let mut eve_rng = stream(config.seed, STREAM_EVE);
    let message = match &config.message {
        Some(m) => m.clone(),
        None => BitString::random(n, &mut stream(config.seed, STREAM_MESSAGE)),
    };
    let mut id_rng = stream(config.seed, STREAM_IDENTITY);
    let id_a = config.id_a.clone().unwrap_or_else(|| Identity::random(l, &mut id_rng));
    let id_b = config.id_b.clone().unwrap_or_else(|| Identity::random(l, &mut id_rng));
    let checked = insert_check_bits(&message, config.check_bits, &mut stream(config.seed, STREAM_CHECK_BITS))?;

    let mut states = vec![new_bell_pair(); total];
    let mut ledger = PairLedger::new(total);
    let mut transcript = Transcript::new();
    let mut out = ProtocolOutcome {
        status: Status::Delivered,
        delivered_message: None,
        sent_message: message,
        s1: None,
        s2: None,
        qber: None,
        bob_auth: None,
        alice_auth: None,
        symbols: None,
        transcript: Transcript::new(),
        ledger: PairLedger::new(0),
        eve_record: Vec::new(),
    };

    let status = 'run: {
        // Bob holds his halves; the first check round uses d of them.
        let mut check1 = index::sample(&mut rng, total, d).into_vec();
        check1.sort_unstable();
        for &p in &check1 {
            ledger.assign(p, Role::Check1);
        }
        transcript.record(Party::Alice, EntryKind::Check1Positions, Payload::Positions(check1));
        let (s1, entries) = chsh_round_one(select(&mut states, &ledger, Role::Check1), noise, &mut rng)?;
        transcript.extend(entries);
        let pass = chsh_threshold_check(s1.s, config.epsilon1);
        transcript.push(verdict(Party::Alice, EntryKind::Chsh1Verdict, pass, Some(s1.s)));
        out.s1 = Some(s1);
        if !pass {
            break 'run Status::AbortChsh1;
        }

        if let Some(storage) = &hooks.storage_noise {
            for p in ledger.unassigned() {
                transmit(&mut states[p], BOB_QUBIT, storage, &mut rng)?;
            }
        }

        // Encoding, then Alice's halves cross the channel.
        assign_roles(&mut ledger, d, message_pairs, l, &mut rng)?;
        let alice_ops = eve
            .identity_ops(Party::Alice, l, &mut eve_rng)
            .unwrap_or_else(|| id_a.encoding());
        alice_encode_phase(&mut ledger, &mut states, &checked.bits, &alice_ops, &mut rng)?;
        for (pair, state) in states.iter_mut().enumerate() {
            if ledger.role(pair) == Some(Role::Check1) {
                continue;
            }
            eve.on_transit(pair, state, ALICE_QUBIT, &mut eve_rng)?;
            transmit(state, ALICE_QUBIT, noise, &mut rng)?;
        }

        // Bob authenticates to Alice.
        transcript.record(
            Party::Alice,
            EntryKind::BobIdPositions,
            Payload::Positions(ledger.positions(Role::BobId)),
        );
        let bob_ops = eve.identity_ops(Party::Bob, l, &mut eve_rng).unwrap_or_else(|| id_b.encoding());
        let (announced, entry) = bob_authenticate(&mut ledger, &mut states, &bob_ops, noise, &mut rng)?;
        transcript.push(entry);
        let covers: Vec<_> = ledger
            .positions(Role::BobId)
            .iter()
            .map(|&p| ledger.record(p).cover_op.expect("BobId pairs carry a cover operation"))
            .collect();
        let bob_auth = alice_verify_bob(&announced, &covers, &id_b, config.auth_mismatch_tolerance)?;
        transcript.push(bob_auth.entry(Party::Alice, EntryKind::BobAuthVerdict));
        out.bob_auth = Some(bob_auth);
        if !bob_auth.accepted {
            break 'run Status::AbortAuthBob;
        }

        // Alice authenticates to Bob.
        transcript.record(
            Party::Alice,
            EntryKind::AliceIdPositions,
            Payload::Positions(ledger.positions(Role::AliceId)),
        );
        let alice_auth = bob_verify_alice(
            &mut ledger,
            &mut states,
            &id_a,
            config.auth_mismatch_tolerance,
            noise,
            &mut rng,
        )?;
        transcript.push(alice_auth.entry(Party::Bob, EntryKind::AliceAuthVerdict));
        out.alice_auth = Some(alice_auth);
        if !alice_auth.accepted {
            break 'run Status::AbortAuthAlice;
        }

        // Second check round, by Bob alone.
        transcript.record(
            Party::Alice,
            EntryKind::Check2Positions,
            Payload::Positions(ledger.positions(Role::Check2)),
        );
        let (s2, entries) = chsh_round_two(
            select(&mut states, &ledger, Role::Check2),
            noise,
            config.epsilon2,
            &mut rng,
        )?;
        transcript.extend(entries);
        let pass = chsh_threshold_check(s2.s, config.epsilon2);
        out.s2 = Some(s2);
        if !pass {
            break 'run Status::AbortChsh2;
        }

        // Decoding and public check-bit comparison.
        let decoded = bob_decode_message(&mut ledger, &mut states, noise, &mut rng)?;
        if hooks.leak_message_outcomes {
            let leaked = ledger
                .positions(Role::Message)
                .into_iter()
                .map(|p| (p, ledger.record(p).bell.expect("message pairs were measured")))
                .collect();
            transcript.record(Party::Bob, EntryKind::MessageOutcomes, Payload::Bell(leaked));
        }
        let correct = decoded.dibits().zip(checked.bits.dibits()).filter(|(a, b)| a == b).count();
        out.symbols = Some(SymbolTally {
            correct,
            total: message_pairs,
        });
        transcript.record(
            Party::Alice,
            EntryKind::CheckBitPositions,
            Payload::Positions(checked.positions.clone()),
        );
        transcript.record(Party::Alice, EntryKind::CheckBitValues, Payload::Bits(checked.values.clone()));
        let report = verify_check_bits(&decoded, &checked, config.checkbit_error_tolerance);
        transcript.push(verdict(Party::Bob, EntryKind::CheckBitVerdict, report.accepted, Some(report.qber)));
        out.qber = Some(report.qber);
        if !report.accepted {
            break 'run Status::AbortCheckBits;
        }
        out.delivered_message = Some(remove_check_bits(&decoded, &checked.positions));
        Status::Delivered
    };

    eve.finish(&mut states, &mut eve_rng)?;
    out.status = status;
    out.transcript = transcript;
    out.ledger = ledger;
    out.eve_record = eve.record().to_vec();
    Ok(out)
}
