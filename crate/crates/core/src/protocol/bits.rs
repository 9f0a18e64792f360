use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ProtocolError;
use crate::qcore::{bell_to_pauli, BellState, PauliOp};

/// Ordered classical bits, written as a string of `0`/`1`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Consecutive bit pairs, left to right. Panics on odd length.
    pub fn dibits(&self) -> impl Iterator<Item = TwoBits> + '_ {
        assert!(self.0.len() % 2 == 0, "bit string of odd length {}", self.0.len());
        self.0.chunks_exact(2).map(|c| TwoBits::new(c[0], c[1]))
    }

    pub fn from_dibits<I: IntoIterator<Item = TwoBits>>(dibits: I) -> Self {
        Self(dibits.into_iter().flat_map(|d| [d.high(), d.low()]).collect())
    }

    /// Number of positions where the two strings differ; lengths must match.
    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl FromStr for BitString {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ProtocolError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A two-bit symbol `b1 b2`, carried by one EPR pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TwoBits(u8);

impl TwoBits {
    pub const ALL: [TwoBits; 4] = [TwoBits(0), TwoBits(1), TwoBits(2), TwoBits(3)];

    pub fn new(high: bool, low: bool) -> Self {
        Self(((high as u8) << 1) | low as u8)
    }

    pub fn from_value(value: u8) -> Option<Self> {
        (value < 4).then_some(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn high(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn low(self) -> bool {
        self.0 & 1 != 0
    }
}

impl fmt::Display for TwoBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.high() as u8, self.low() as u8)
    }
}

impl FromStr for TwoBits {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: BitString = s.parse()?;
        match bits.bits() {
            [h, l] => Ok(TwoBits::new(*h, *l)),
            _ => Err(ProtocolError::Length {
                what: "two-bit symbol",
                expected: 2,
                actual: bits.len(),
            }),
        }
    }
}

/// `00 → I`, `01 → σz`, `10 → σx`, `11 → iσy`.
pub fn encode_two_bits(bits: TwoBits) -> PauliOp {
    match bits.value() {
        0 => PauliOp::I,
        1 => PauliOp::Z,
        2 => PauliOp::X,
        _ => PauliOp::IY,
    }
}

/// `Φ⁺ → 00`, `Φ⁻ → 01`, `Ψ⁺ → 10`, `Ψ⁻ → 11`.
pub fn decode_bell_to_bits(outcome: BellState) -> TwoBits {
    match bell_to_pauli(outcome) {
        PauliOp::I => TwoBits(0),
        PauliOp::Z => TwoBits(1),
        PauliOp::X => TwoBits(2),
        PauliOp::IY => TwoBits(3),
    }
}

/// A pre-shared secret identity of `2l` bits.
///
/// Deliberately has no `Display`; `Debug` prints only the length.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Identity(BitString);

impl Identity {
    pub fn new(bits: BitString) -> Result<Self, ProtocolError> {
        if bits.len() % 2 != 0 {
            return Err(ProtocolError::Length {
                what: "identity",
                expected: bits.len() + 1,
                actual: bits.len(),
            });
        }
        Ok(Self(bits))
    }

    pub fn random<R: Rng + ?Sized>(pairs: usize, rng: &mut R) -> Self {
        Self(BitString::random(2 * pairs, rng))
    }

    /// Number of EPR pairs (`l`) the identity occupies.
    pub fn pairs(&self) -> usize {
        self.0.len() / 2
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn encoding(&self) -> Vec<PauliOp> {
        self.0.dibits().map(encode_two_bits).collect()
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Identity(<{} bits>)", self.0.len())
    }
}

impl FromStr for Identity {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Identity::new(s.parse()?)
    }
}

/// Message with check bits mixed in at secret positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedMessage {
    pub bits: BitString,
    /// Increasing indices into `bits`.
    pub positions: Vec<usize>,
    pub values: Vec<bool>,
}

/// Inserts `count` uniformly random check bits at uniformly random positions.
pub fn insert_check_bits<R: Rng + ?Sized>(
    message: &BitString,
    count: usize,
    rng: &mut R,
) -> Result<CheckedMessage, ProtocolError> {
    let total = message.len() + count;
    if total % 2 != 0 {
        return Err(ProtocolError::OddLength(total));
    }
    let mut positions = if count == 0 {
        Vec::new()
    } else {
        index::sample(rng, total, count).into_vec()
    };
    positions.sort_unstable();
    let values: Vec<bool> = (0..count).map(|_| rng.gen()).collect();

    let mut bits = Vec::with_capacity(total);
    let (mut next_check, mut next_msg) = (0, 0);
    for i in 0..total {
        if positions.get(next_check) == Some(&i) {
            bits.push(values[next_check]);
            next_check += 1;
        } else {
            bits.push(message.bits()[next_msg]);
            next_msg += 1;
        }
    }
    Ok(CheckedMessage {
        bits: BitString(bits),
        positions,
        values,
    })
}

/// Deletes the bits at `positions` (any order, no duplicates).
pub fn remove_check_bits(m_prime: &BitString, positions: &[usize]) -> BitString {
    let mut drop = vec![false; m_prime.len()];
    for &p in positions {
        drop[p] = true;
    }
    BitString(
        m_prime
            .bits()
            .iter()
            .zip(drop)
            .filter_map(|(&b, d)| (!d).then_some(b))
            .collect(),
    )
}
