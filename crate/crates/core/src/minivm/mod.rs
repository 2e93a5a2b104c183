//! A small deterministic contract VM.
//!
//! Contracts are parsed from a compact language (see `parse_contract`),
//! deployed into a slot-addressed storage, and driven by transactions. Every
//! execution yields the branch trace, the cost vector observed at
//! comparison and store sites, the executed locations and the persistent
//! stores it performed.

pub mod ast;
mod interp;
mod lexer;
mod parser;
mod path;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use ast::{Contract, Decl, DeclKind, FunctionDef, SourceLoc};
pub use interp::{deploy, execute_tx, run_sequence, run_sequence_from, SequenceError};
pub use parser::parse_contract;
pub use path::{path_id, PathId, PathScope};

use crate::metrics::{CostVector, MergePolicy};

/// The single value domain: 64-bit two's complement, wrapping arithmetic.
pub type Value = i64;

/// Addresses of the fixed sender accounts; account 0 deploys.
pub const ACCOUNTS: [Value; 4] = [0x1000, 0x2000, 0x3000, 0x4000];

pub const DEPLOYER: u8 = 0;

/// Interpreted statements allowed per transaction.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

pub fn account_address(index: u8) -> Option<Value> {
    ACCOUNTS.get(index as usize).copied()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {loc}: {message}")]
    Syntax { loc: SourceLoc, message: String },
    #[error("duplicate declaration of `{name}` at {loc}")]
    Duplicate { name: String, loc: SourceLoc },
    #[error("scope error at {loc}: {message}")]
    Scope { loc: SourceLoc, message: String },
}

impl ParseError {
    pub(crate) fn syntax(loc: SourceLoc, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            loc,
            message: message.into(),
        }
    }

    pub(crate) fn scope(loc: SourceLoc, message: impl Into<String>) -> Self {
        ParseError::Scope {
            loc,
            message: message.into(),
        }
    }
}

/// A transaction that does not fit the contract it is sent to.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TxError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{function}` takes {expected} arguments, got {got}")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
    },
    #[error("sender index {0} out of range")]
    Sender(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeployError {
    #[error("constructor terminated with {0}")]
    Constructor(Termination),
}

/// Persistent storage: slot address to value, absent meaning zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct StorageState {
    slots: BTreeMap<u64, Value>,
}

impl StorageState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, slot: u64) -> Value {
        self.slots.get(&slot).copied().unwrap_or(0)
    }

    pub fn set(&mut self, slot: u64, value: Value) {
        if value == 0 {
            self.slots.remove(&slot);
        } else {
            self.slots.insert(slot, value);
        }
    }

    /// Non-zero slots in ascending slot order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Value)> + '_ {
        self.slots.iter().map(|(k, v)| (*k, *v))
    }

    pub fn digest(&self) -> StateDigest {
        let mut h = Sha256::new();
        for (slot, value) in self.iter() {
            h.update(slot.to_le_bytes());
            h.update(value.to_le_bytes());
        }
        let out = h.finalize();
        StateDigest(u64::from_le_bytes(out[..8].try_into().unwrap()))
    }
}

impl FromIterator<(u64, Value)> for StorageState {
    fn from_iter<T: IntoIterator<Item = (u64, Value)>>(iter: T) -> Self {
        let mut s = StorageState::new();
        for (k, v) in iter {
            s.set(k, v);
        }
        s
    }
}

/// Digest of a zero-normalized storage state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateDigest(pub u64);

impl std::fmt::Display for StateDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    pub function: String,
    pub args: Vec<Value>,
    pub sender: u8,
}

impl Transaction {
    pub fn new(function: impl Into<String>, args: Vec<Value>, sender: u8) -> Self {
        Self {
            function: function.into(),
            args,
            sender,
        }
    }

    pub fn validate<'c>(&self, contract: &'c Contract) -> Result<&'c FunctionDef, TxError> {
        let f = contract
            .function(&self.function)
            .ok_or_else(|| TxError::UnknownFunction(self.function.clone()))?;
        if f.arity() != self.args.len() {
            return Err(TxError::Arity {
                function: self.function.clone(),
                expected: f.arity(),
                got: self.args.len(),
            });
        }
        if account_address(self.sender).is_none() {
            return Err(TxError::Sender(self.sender));
        }
        Ok(f)
    }
}

impl std::fmt::Display for Transaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(", self.function)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")@{}", self.sender)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CheckedErrorKind {
    DivisionByZero,
    ModuloByZero,
    StepBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Termination {
    Normal { returned: Option<Value> },
    RequireFailed { loc: SourceLoc },
    AssertFailed { loc: SourceLoc },
    CheckedError { loc: SourceLoc, error: CheckedErrorKind },
    Halted,
}

impl Termination {
    /// Whether the transaction's state changes are discarded.
    pub fn aborts(&self) -> bool {
        matches!(
            self,
            Termination::RequireFailed { .. } | Termination::AssertFailed { .. } | Termination::CheckedError { .. }
        )
    }

    /// Stable small code for the termination kind (locations excluded).
    pub fn kind_code(&self) -> u8 {
        match self {
            Termination::Normal { .. } => 0,
            Termination::RequireFailed { .. } => 1,
            Termination::AssertFailed { .. } => 2,
            Termination::CheckedError { .. } => 3,
            Termination::Halted => 4,
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Normal { returned: Some(v) } => write!(f, "return {v}"),
            Termination::Normal { returned: None } => write!(f, "normal"),
            Termination::RequireFailed { loc } => write!(f, "require failed at {loc}"),
            Termination::AssertFailed { loc } => write!(f, "assert failed at {loc}"),
            Termination::CheckedError { loc, error } => {
                write!(f, "checked error {error:?} at {loc}")
            }
            Termination::Halted => write!(f, "halt"),
        }
    }
}

/// Runtime hooks applied during execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instrumentation {
    /// Slot compared against every persistent store; `None` disables the
    /// store-distance metric.
    pub attack_slot: Option<u64>,
    pub step_budget: u64,
    pub merge: MergePolicy,
}

impl Default for Instrumentation {
    fn default() -> Self {
        Self {
            attack_slot: None,
            step_budget: DEFAULT_STEP_BUDGET,
            merge: MergePolicy::Min,
        }
    }
}

impl Instrumentation {
    pub fn with_attack_slot(attack_slot: u64) -> Self {
        Self {
            attack_slot: Some(attack_slot),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub function: String,
    pub post_state: StorageState,
    pub branch_trace: Vec<(SourceLoc, bool)>,
    pub cost_vector: CostVector,
    pub executed_locs: BTreeSet<SourceLoc>,
    pub termination: Termination,
    pub store_events: Vec<(SourceLoc, u64)>,
}
