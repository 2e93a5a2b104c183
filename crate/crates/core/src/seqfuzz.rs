//! Demand-driven transaction-sequence fuzzing.
//!
//! Sequences only grow for functions where fuzzing the persistent state
//! directly (aggressive mode) reached a path that plain inputs could not.
//! Growth draws on two pools of transactions and sequences that both found
//! a new path and left the storage in a state not seen before.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fuzzcore::TestCase;
use crate::minivm::{Contract, PathId, StateDigest, StorageState, Transaction, DEPLOYER};

pub const DEFAULT_POOL_CAP: usize = 256;
pub const DEFAULT_MAX_SEQ_LEN: usize = 8;

/// Per-function record of paths that only aggressive mode has reached.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DemandState {
    targets: BTreeMap<String, BTreeSet<PathId>>,
}

impl DemandState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn needs_sequences(&self, function: &str) -> bool {
        self.targets.get(function).is_some_and(|t| !t.is_empty())
    }

    pub fn target_pids(&self, function: &str) -> impl Iterator<Item = PathId> + '_ {
        self.targets.get(function).into_iter().flatten().copied()
    }

    pub fn is_target(&self, function: &str, pid: PathId) -> bool {
        self.targets.get(function).is_some_and(|t| t.contains(&pid))
    }

    /// Records a path found in aggressive mode. Returns true when this sets
    /// the function's flag.
    pub fn record_discovery(&mut self, function: &str, pid: PathId) -> bool {
        let was = self.needs_sequences(function);
        self.targets.entry(function.to_owned()).or_default().insert(pid);
        !was
    }

    /// Notes that regular mode covered `pid`. Returns true when this clears
    /// the function's flag.
    pub fn update_demand(&mut self, function: &str, pid: PathId) -> bool {
        let Some(t) = self.targets.get_mut(function) else {
            return false;
        };
        t.remove(&pid) && t.is_empty()
    }
}

/// Which pool an admission went to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Tx,
    Seq,
}

/// Transactions and sequences that reached new paths and new states.
#[derive(Debug, Clone)]
pub struct Pools {
    txs: VecDeque<(Transaction, StateDigest)>,
    seqs: VecDeque<(Vec<Transaction>, StateDigest)>,
    tx_seen: HashSet<StateDigest>,
    seq_seen: HashSet<StateDigest>,
    cap: usize,
}

impl Default for Pools {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_POOL_CAP)
    }
}

impl Pools {
    pub fn with_capacity(cap: usize) -> Self {
        Self {
            txs: VecDeque::new(),
            seqs: VecDeque::new(),
            tx_seen: HashSet::new(),
            seq_seen: HashSet::new(),
            cap: cap.max(1),
        }
    }

    pub fn txs(&self) -> impl Iterator<Item = &(Transaction, StateDigest)> {
        self.txs.iter()
    }

    pub fn seqs(&self) -> impl Iterator<Item = &(Vec<Transaction>, StateDigest)> {
        self.seqs.iter()
    }

    pub fn tx_len(&self) -> usize {
        self.txs.len()
    }

    pub fn seq_len(&self) -> usize {
        self.seqs.len()
    }

    /// Offers a test that just produced a new corpus path and left the
    /// storage in `post`. Returns the pools it entered.
    pub fn admit(&mut self, test: &TestCase, post: &StorageState) -> Vec<PoolKind> {
        let digest = post.digest();
        let mut out = Vec::new();
        if self.tx_seen.insert(digest) {
            if self.txs.len() == self.cap {
                self.txs.pop_front();
            }
            self.txs.push_back((test.focus().clone(), digest));
            out.push(PoolKind::Tx);
        }
        if self.seq_seen.insert(digest) {
            if self.seqs.len() == self.cap {
                self.seqs.pop_front();
            }
            self.seqs.push_back((test.sequence.clone(), digest));
            out.push(PoolKind::Seq);
        }
        out
    }
}

/// Outcome of choosing a sequence-level mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqMutation {
    /// Operation 1: fuzz a single scalar of the sequence.
    FuzzScalar,
    /// Operation 2: a transaction was inserted before the focus.
    Insert(TestCase),
    /// Operation 3: the prefix was replaced by a pooled sequence.
    ReplacePrefix(TestCase),
}

/// Policy knobs for sequence mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqPolicy {
    pub max_len: usize,
    /// Sequence operations are available regardless of demand.
    pub unconditional: bool,
}

impl Default for SeqPolicy {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_SEQ_LEN,
            unconditional: false,
        }
    }
}

fn fresh_tx(contract: &Contract, rng: &mut impl Rng) -> Option<Transaction> {
    let f = contract.functions.choose(rng)?;
    Some(Transaction::new(f.name.clone(), vec![0; f.arity()], DEPLOYER))
}

/// Chooses among the three sequence operations for a regular-mode test.
pub fn mutate_sequence(
    contract: &Contract,
    test: &TestCase,
    pools: &Pools,
    demand: &DemandState,
    policy: SeqPolicy,
    rng: &mut impl Rng,
) -> SeqMutation {
    if !policy.unconditional && !demand.needs_sequences(&test.focus().function) {
        return SeqMutation::FuzzScalar;
    }
    match rng.gen_range(0..4) {
        0 | 1 => SeqMutation::FuzzScalar,
        2 => {
            if test.len() >= policy.max_len {
                return SeqMutation::FuzzScalar;
            }
            let tx = if !pools.txs.is_empty() && rng.gen_bool(0.5) {
                pools.txs[rng.gen_range(0..pools.txs.len())].0.clone()
            } else {
                match fresh_tx(contract, rng) {
                    Some(tx) => tx,
                    None => return SeqMutation::FuzzScalar,
                }
            };
            let mut t = test.clone();
            t.sequence.insert(t.focus_index(), tx);
            SeqMutation::Insert(t)
        }
        _ => {
            if pools.seqs.is_empty() {
                return SeqMutation::FuzzScalar;
            }
            let prefix = &pools.seqs[rng.gen_range(0..pools.seqs.len())].0;
            if prefix.len() + 1 > policy.max_len {
                return SeqMutation::FuzzScalar;
            }
            let mut seq = prefix.clone();
            seq.push(test.focus().clone());
            SeqMutation::ReplacePrefix(TestCase::new(seq))
        }
    }
}

/// The aggressive-mode twin of `test`: every fuzzable slot is overridden
/// with the value it holds before the focus runs, so the twin behaves
/// exactly like `test` until one override is mutated.
pub fn materialize(contract: &Contract, test: &TestCase, pre_focus: &StorageState) -> TestCase {
    let overrides = contract
        .fuzzable_slots()
        .into_iter()
        .map(|s| (s, pre_focus.get(s)))
        .collect();
    test.aggressive(overrides)
}
