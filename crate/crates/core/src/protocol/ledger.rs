use serde::{Deserialize, Serialize};

use crate::qcore::{BellState, PauliOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Check1,
    Check2,
    Message,
    AliceId,
    BobId,
}

/// What happened to one EPR pair over the session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub role: Option<Role>,
    /// Alice's encoding Pauli on Message and AliceId pairs.
    pub alice_op: Option<PauliOp>,
    /// Alice's cover operation; present iff `role == Some(BobId)`.
    pub cover_op: Option<PauliOp>,
    /// Bob's identity encoding on BobId pairs.
    pub bob_op: Option<PauliOp>,
    pub bell: Option<BellState>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairLedger {
    pairs: Vec<PairRecord>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoleCounts {
    pub check1: usize,
    pub check2: usize,
    pub message: usize,
    pub alice_id: usize,
    pub bob_id: usize,
    pub unassigned: usize,
}

impl PairLedger {
    pub fn new(total_pairs: usize) -> Self {
        Self {
            pairs: vec![PairRecord::default(); total_pairs],
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn role(&self, pair: usize) -> Option<Role> {
        self.pairs.get(pair).and_then(|p| p.role)
    }

    pub fn record(&self, pair: usize) -> &PairRecord {
        &self.pairs[pair]
    }

    pub fn record_mut(&mut self, pair: usize) -> &mut PairRecord {
        &mut self.pairs[pair]
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.pairs
    }

    pub fn assign(&mut self, pair: usize, role: Role) {
        self.pairs[pair].role = Some(role);
    }

    /// Increasing indices of all pairs holding `role`.
    pub fn positions(&self, role: Role) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| (p.role == Some(role)).then_some(i))
            .collect()
    }

    pub fn unassigned(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.role.is_none().then_some(i))
            .collect()
    }

    pub fn counts(&self) -> RoleCounts {
        let mut c = RoleCounts::default();
        for p in &self.pairs {
            match p.role {
                Some(Role::Check1) => c.check1 += 1,
                Some(Role::Check2) => c.check2 += 1,
                Some(Role::Message) => c.message += 1,
                Some(Role::AliceId) => c.alice_id += 1,
                Some(Role::BobId) => c.bob_id += 1,
                None => c.unassigned += 1,
            }
        }
        c
    }

    /// Cover operations are recorded exactly on BobId pairs.
    pub fn cover_ops_consistent(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.cover_op.is_some() == (p.role == Some(Role::BobId)))
    }
}
