//! Vulnerability oracles for assertion violations and arbitrary storage
//! writes, with per-location deduplication.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::minivm::{CheckedErrorKind, ExecResult, SourceLoc, Termination, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SwcKind {
    /// Assertion violation, including checked arithmetic errors.
    #[serde(rename = "SWC-110")]
    Swc110,
    /// Write to an arbitrary storage location.
    #[serde(rename = "SWC-124")]
    Swc124,
}

impl fmt::Display for SwcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwcKind::Swc110 => "SWC-110",
            SwcKind::Swc124 => "SWC-124",
        })
    }
}

impl FromStr for SwcKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SWC-110" => Ok(SwcKind::Swc110),
            "SWC-124" => Ok(SwcKind::Swc124),
            _ => Err(format!("unknown weakness kind {s:?}")),
        }
    }
}

/// A weakness observed in one transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub kind: SwcKind,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub attack_slot: Option<u64>,
    /// Report running out of steps as an assertion-class bug.
    pub step_budget_is_bug: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            attack_slot: None,
            step_budget_is_bug: true,
        }
    }
}

/// Inspects one regular-mode transaction result.
pub fn check(result: &ExecResult, opts: &OracleOptions) -> Vec<Finding> {
    let mut out = Vec::new();
    match result.termination {
        Termination::AssertFailed { loc } => out.push(Finding {
            kind: SwcKind::Swc110,
            loc,
        }),
        Termination::CheckedError { loc, error }
            if error != CheckedErrorKind::StepBudget || opts.step_budget_is_bug =>
        {
            out.push(Finding {
                kind: SwcKind::Swc110,
                loc,
            })
        }
        _ => {}
    }
    if let Some(attack) = opts.attack_slot {
        out.extend(
            result
                .store_events
                .iter()
                .filter(|(_, slot)| *slot == attack)
                .map(|(loc, _)| Finding {
                    kind: SwcKind::Swc124,
                    loc: *loc,
                }),
        );
    }
    out
}

/// A deduplicated bug with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BugFinding {
    pub kind: SwcKind,
    pub loc: SourceLoc,
    pub witness: Vec<Transaction>,
    pub seed: u64,
    pub exec_index: u64,
    pub wall_ms: u64,
}

/// Remembers which (kind, location) pairs have been reported.
#[derive(Debug, Clone, Default)]
pub struct BugLedger {
    seen: HashSet<(SwcKind, SourceLoc)>,
    bugs: Vec<BugFinding>,
}

impl BugLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// True if `f` has not been seen before; marks it seen.
    pub fn dedup(&mut self, f: Finding) -> bool {
        self.seen.insert((f.kind, f.loc))
    }

    /// Records `bug` if new; returns whether it was.
    pub fn report(&mut self, bug: BugFinding) -> bool {
        let new = self.dedup(Finding {
            kind: bug.kind,
            loc: bug.loc,
        });
        if new {
            self.bugs.push(bug);
        }
        new
    }

    pub fn bugs(&self) -> &[BugFinding] {
        &self.bugs
    }

    pub fn into_bugs(self) -> Vec<BugFinding> {
        self.bugs
    }
}
