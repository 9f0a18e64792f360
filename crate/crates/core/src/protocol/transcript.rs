//! Public classical-channel record.
//!
//! Text form, one entry per line, tab separated:
//!
//! ```text
//! <sender>\t<kind>\t<payload>
//! ```
//!
//! `sender` is `alice` or `bob`; `kind` is one of the tags in [`EntryKind`].
//! Payload syntax depends on the variant of [`Payload`]: positions are
//! comma-separated indices, settings a digit string, outcomes a `+`/`-`
//! string, Bell outcomes `pos:tag` pairs, bits a `0`/`1` string and verdicts
//! `accept` or `abort`, optionally followed by ` <value>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ledger::{PairLedger, Role};
use super::Party;
use crate::qcore::{BellState, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryKind {
    Check1Positions,
    Check1Bases,
    Check1Outcomes,
    Chsh1Verdict,
    BobIdPositions,
    BobIdOutcomes,
    BobAuthVerdict,
    AliceIdPositions,
    AliceAuthVerdict,
    Check2Positions,
    Chsh2Verdict,
    CheckBitPositions,
    CheckBitValues,
    CheckBitVerdict,
    /// Never produced by the honest protocol; exists so the fault-injected
    /// variant is representable and detectable.
    MessageOutcomes,
}

impl EntryKind {
    const TAGS: [(EntryKind, &'static str); 15] = [
        (EntryKind::Check1Positions, "check1-positions"),
        (EntryKind::Check1Bases, "check1-bases"),
        (EntryKind::Check1Outcomes, "check1-outcomes"),
        (EntryKind::Chsh1Verdict, "chsh1-verdict"),
        (EntryKind::BobIdPositions, "bob-id-positions"),
        (EntryKind::BobIdOutcomes, "bob-id-outcomes"),
        (EntryKind::BobAuthVerdict, "bob-auth-verdict"),
        (EntryKind::AliceIdPositions, "alice-id-positions"),
        (EntryKind::AliceAuthVerdict, "alice-auth-verdict"),
        (EntryKind::Check2Positions, "check2-positions"),
        (EntryKind::Chsh2Verdict, "chsh2-verdict"),
        (EntryKind::CheckBitPositions, "checkbit-positions"),
        (EntryKind::CheckBitValues, "checkbit-values"),
        (EntryKind::CheckBitVerdict, "checkbit-verdict"),
        (EntryKind::MessageOutcomes, "message-outcomes"),
    ];

    pub fn tag(self) -> &'static str {
        Self::TAGS.iter().find(|(k, _)| *k == self).map(|(_, t)| *t).unwrap()
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::TAGS.iter().find(|(_, t)| *t == tag).map(|(k, _)| *k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Positions(Vec<usize>),
    /// Basis indices (0..=2 for the sender's set, 1..=2 for the receiver's).
    Settings(Vec<u8>),
    Outcomes(Vec<Outcome>),
    Bell(Vec<(usize, BellState)>),
    Bits(Vec<bool>),
    Verdict { accepted: bool, value: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub sender: Party,
    pub kind: EntryKind,
    pub payload: Payload,
}

impl Entry {
    pub fn new(sender: Party, kind: EntryKind, payload: Payload) -> Self {
        Self { sender, kind, payload }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<Entry>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptParseError {
    #[error("line {line}: expected three tab-separated fields")]
    Fields { line: usize },
    #[error("line {line}: unknown sender {value:?}")]
    Sender { line: usize, value: String },
    #[error("line {line}: unknown kind {value:?}")]
    Kind { line: usize, value: String },
    #[error("line {line}: malformed payload {value:?}")]
    Payload { line: usize, value: String },
}

/// A transcript entry that breaks the public-record rules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HygieneViolation {
    #[error("entry {entry}: {kind:?} must never appear on the public channel")]
    ForbiddenKind { entry: usize, kind: EntryKind },
    #[error("entry {entry}: Bell outcome announced for pair {pair} with role {role:?}")]
    SecretOutcome { entry: usize, pair: usize, role: Option<Role> },
    #[error("entry {entry}: ±1 outcomes are only public for first-round check pairs")]
    OutcomesOutsideCheck1 { entry: usize },
    #[error("entry {entry}: raw bits are only public as check-bit values")]
    BitsOutsideCheckValues { entry: usize },
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn record(&mut self, sender: Party, kind: EntryKind, payload: Payload) {
        self.push(Entry::new(sender, kind, payload));
    }

    pub fn extend<I: IntoIterator<Item = Entry>>(&mut self, entries: I) {
        self.entries.extend(entries);
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, kind: EntryKind) -> Option<&Entry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Checks that nothing secret reached the public channel: no Bell outcome
    /// of a message or sender-identity pair, no ±1 outcomes outside the first
    /// check round and no raw bits except check-bit values. Identity bits have
    /// no entry kind at all, so they cannot appear in the clear.
    pub fn audit_hygiene(&self, ledger: &PairLedger) -> Result<(), HygieneViolation> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.kind == EntryKind::MessageOutcomes {
                return Err(HygieneViolation::ForbiddenKind { entry: i, kind: e.kind });
            }
            match &e.payload {
                Payload::Bell(outcomes) => {
                    for &(pair, _) in outcomes {
                        let role = ledger.role(pair);
                        if role != Some(Role::BobId) {
                            return Err(HygieneViolation::SecretOutcome { entry: i, pair, role });
                        }
                    }
                }
                Payload::Outcomes(_) if e.kind != EntryKind::Check1Outcomes => {
                    return Err(HygieneViolation::OutcomesOutsideCheck1 { entry: i });
                }
                Payload::Bits(_) if e.kind != EntryKind::CheckBitValues => {
                    return Err(HygieneViolation::BitsOutsideCheckValues { entry: i });
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|t| t.to_string()).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Positions(p) => f.write_str(&join(p, ",")),
            Payload::Settings(s) => f.write_str(&join(s, "")),
            Payload::Outcomes(o) => f.write_str(&join(o, "")),
            Payload::Bell(b) => f.write_str(&join(b.iter().map(|(p, s)| format!("{p}:{s}")), ",")),
            Payload::Bits(b) => f.write_str(&join(b.iter().map(|&x| x as u8), "")),
            Payload::Verdict { accepted, value } => {
                f.write_str(if *accepted { "accept" } else { "abort" })?;
                if let Some(v) = value {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{}\t{}\t{}", e.sender.tag(), e.kind.tag(), e.payload)?;
        }
        Ok(())
    }
}

impl Payload {
    fn parse(kind: EntryKind, text: &str) -> Option<Payload> {
        use EntryKind::*;
        let digits = |t: &str| t.chars().map(|c| c.to_digit(10).map(|d| d as u8)).collect::<Option<Vec<_>>>();
        Some(match kind {
            Check1Positions | BobIdPositions | AliceIdPositions | Check2Positions | CheckBitPositions => {
                if text.is_empty() {
                    Payload::Positions(Vec::new())
                } else {
                    Payload::Positions(text.split(',').map(|p| p.parse().ok()).collect::<Option<_>>()?)
                }
            }
            Check1Bases => Payload::Settings(digits(text)?),
            Check1Outcomes => Payload::Outcomes(
                text.chars()
                    .map(|c| match c {
                        '+' => Some(Outcome::Plus),
                        '-' => Some(Outcome::Minus),
                        _ => None,
                    })
                    .collect::<Option<_>>()?,
            ),
            BobIdOutcomes | MessageOutcomes => {
                if text.is_empty() {
                    Payload::Bell(Vec::new())
                } else {
                    Payload::Bell(
                        text.split(',')
                            .map(|item| {
                                let (p, t) = item.split_once(':')?;
                                Some((p.parse().ok()?, BellState::from_tag(t)?))
                            })
                            .collect::<Option<_>>()?,
                    )
                }
            }
            CheckBitValues => Payload::Bits(digits(text)?.into_iter().map(|d| (d < 2).then_some(d == 1)).collect::<Option<_>>()?),
            Chsh1Verdict | BobAuthVerdict | AliceAuthVerdict | Chsh2Verdict | CheckBitVerdict => {
                let (word, value) = match text.split_once(' ') {
                    Some((w, v)) => (w, Some(v.parse().ok()?)),
                    None => (text, None),
                };
                let accepted = match word {
                    "accept" => true,
                    "abort" => false,
                    _ => return None,
                };
                Payload::Verdict { accepted, value }
            }
        })
    }
}

impl FromStr for Transcript {
    type Err = TranscriptParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut t = Transcript::new();
        for (i, line) in s.lines().enumerate() {
            let line_no = i + 1;
            let mut fields = line.splitn(3, '\t');
            let (Some(sender), Some(kind), Some(payload)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(TranscriptParseError::Fields { line: line_no });
            };
            let sender = Party::from_tag(sender).ok_or_else(|| TranscriptParseError::Sender {
                line: line_no,
                value: sender.into(),
            })?;
            let kind = EntryKind::from_tag(kind).ok_or_else(|| TranscriptParseError::Kind {
                line: line_no,
                value: kind.into(),
            })?;
            let payload = Payload::parse(kind, payload).ok_or_else(|| TranscriptParseError::Payload {
                line: line_no,
                value: payload.into(),
            })?;
            t.record(sender, kind, payload);
        }
        Ok(t)
    }
}
