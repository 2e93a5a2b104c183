use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::minivm::{Transaction, Value, ACCOUNTS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mode {
    #[default]
    Regular,
    /// The focus transaction runs on a state whose scalar slots are fuzzed
    /// directly. Such runs never enter the corpus or the bug report.
    Aggressive,
}

/// One mutable integer of a test case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScalarRef {
    Arg {
        tx: usize,
        index: usize,
    },
    /// Index into the sender accounts.
    Sender {
        tx: usize,
    },
    /// A storage slot override (aggressive mode).
    Slot {
        slot: u64,
    },
}

impl fmt::Display for ScalarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarRef::Arg { tx, index } => write!(f, "tx{tx}.arg{index}"),
            ScalarRef::Sender { tx } => write!(f, "tx{tx}.sender"),
            ScalarRef::Slot { slot } => write!(f, "slot{slot:#x}"),
        }
    }
}

/// A transaction sequence to execute, the last transaction being the focus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub sequence: Vec<Transaction>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<u64, Value>,
}

impl TestCase {
    pub fn new(sequence: Vec<Transaction>) -> Self {
        assert!(!sequence.is_empty(), "a test case needs a focus transaction");
        Self {
            sequence,
            mode: Mode::Regular,
            overrides: BTreeMap::new(),
        }
    }

    pub fn single(tx: Transaction) -> Self {
        Self::new(vec![tx])
    }

    pub fn focus_index(&self) -> usize {
        self.sequence.len() - 1
    }

    pub fn focus(&self) -> &Transaction {
        &self.sequence[self.focus_index()]
    }

    pub fn prefix(&self) -> &[Transaction] {
        &self.sequence[..self.focus_index()]
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// The same sequence in aggressive mode with the given slot overrides.
    pub fn aggressive(&self, overrides: BTreeMap<u64, Value>) -> Self {
        Self {
            sequence: self.sequence.clone(),
            mode: Mode::Aggressive,
            overrides,
        }
    }

    /// Every fuzzable scalar, in a stable order.
    pub fn scalars(&self) -> Vec<ScalarRef> {
        let mut out = Vec::new();
        for (tx, t) in self.sequence.iter().enumerate() {
            out.extend((0..t.args.len()).map(|index| ScalarRef::Arg { tx, index }));
            out.push(ScalarRef::Sender { tx });
        }
        if self.mode == Mode::Aggressive {
            out.extend(self.overrides.keys().map(|&slot| ScalarRef::Slot { slot }));
        }
        out
    }

    pub fn get(&self, s: ScalarRef) -> Option<Value> {
        match s {
            ScalarRef::Arg { tx, index } => self.sequence.get(tx)?.args.get(index).copied(),
            ScalarRef::Sender { tx } => self.sequence.get(tx).map(|t| t.sender as Value),
            ScalarRef::Slot { slot } => self.overrides.get(&slot).copied(),
        }
    }

    /// A copy with `s` set to `v`, or `None` if `s` does not exist or `v` is
    /// not a valid sender index.
    pub fn with(&self, s: ScalarRef, v: Value) -> Option<TestCase> {
        let mut t = self.clone();
        match s {
            ScalarRef::Arg { tx, index } => *t.sequence.get_mut(tx)?.args.get_mut(index)? = v,
            ScalarRef::Sender { tx } => {
                let idx = u8::try_from(v).ok().filter(|&i| (i as usize) < ACCOUNTS.len())?;
                t.sequence.get_mut(tx)?.sender = idx;
            }
            ScalarRef::Slot { slot } => *t.overrides.get_mut(&slot)? = v,
        }
        Some(t)
    }

    /// The single scalar in which `other` differs from `self`, if the two
    /// have the same shape and differ in exactly one place.
    pub fn single_delta(&self, other: &TestCase) -> Option<ScalarRef> {
        if self.mode != other.mode
            || self.sequence.len() != other.sequence.len()
            || !self.overrides.keys().eq(other.overrides.keys())
            || self
                .sequence
                .iter()
                .zip(&other.sequence)
                .any(|(a, b)| a.function != b.function || a.args.len() != b.args.len())
        {
            return None;
        }
        let mut diff = self.scalars().into_iter().filter(|&s| self.get(s) != other.get(s));
        let first = diff.next()?;
        diff.next().is_none().then_some(first)
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.sequence.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{t}")?;
        }
        if self.mode == Mode::Aggressive {
            write!(f, " [aggressive")?;
            for (s, v) in &self.overrides {
                write!(f, " {s:#x}={v}")?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}
