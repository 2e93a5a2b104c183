//! Cost functions and per-execution cost vectors.
//!
//! Every comparison site carries two metrics: the distance to making the
//! condition false and the distance to making it true. Exactly one of the
//! two is zero at any evaluation. Every persistent store carries a third
//! metric, the ring distance between the written slot and the campaign's
//! attack slot.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::minivm::{SourceLoc, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signedness {
    Signed,
    Unsigned,
}

fn widen(v: Value, s: Signedness) -> i128 {
    match s {
        Signedness::Signed => v as i128,
        Signedness::Unsigned => v as u64 as i128,
    }
}

pub fn evaluate(op: CmpOp, l: Value, r: Value, s: Signedness) -> bool {
    let (l, r) = (widen(l, s), widen(r, s));
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Gt => l > r,
        CmpOp::Ge => l >= r,
    }
}

fn sat(v: i128) -> u64 {
    debug_assert!(v >= 0);
    u64::try_from(v).unwrap_or(u64::MAX)
}

// (C_eq, C_not_eq)
fn eq_costs(l: i128, r: i128) -> (u64, u64) {
    if l == r {
        (1, 0)
    } else {
        (0, sat((l - r).abs()))
    }
}

// (C_lt, C_not_lt)
fn lt_costs(l: i128, r: i128) -> (u64, u64) {
    if l < r {
        (sat(r - l), 0)
    } else {
        (0, sat(l - r + 1))
    }
}

// (C_le, C_not_le)
fn le_costs(l: i128, r: i128) -> (u64, u64) {
    if l <= r {
        (sat(r - l + 1), 0)
    } else {
        (0, sat(l - r))
    }
}

/// Returns `(cost_to_make_false, cost_to_make_true)` for `l op r`.
///
/// The first component is non-zero exactly when the condition holds, the
/// second exactly when it does not. Intermediates are 128-bit so no
/// difference of two 64-bit operands wraps; the single unrepresentable
/// value 2^64 saturates to `u64::MAX`.
pub fn branch_costs(op: CmpOp, l: Value, r: Value, s: Signedness) -> (u64, u64) {
    let (l, r) = (widen(l, s), widen(r, s));
    match op {
        CmpOp::Eq => eq_costs(l, r),
        CmpOp::Ne => {
            let (a, b) = eq_costs(l, r);
            (b, a)
        }
        CmpOp::Lt => lt_costs(l, r),
        CmpOp::Le => le_costs(l, r),
        CmpOp::Gt => lt_costs(r, l),
        CmpOp::Ge => le_costs(r, l),
    }
}

/// Distance between a store target and the attack slot on the 2^64 ring.
pub fn store_cost(target: u64, attack: u64) -> u64 {
    target.wrapping_sub(attack).min(attack.wrapping_sub(target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MetricKind {
    FlipToFalse,
    FlipToTrue,
    StoreDistance,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::FlipToFalse => "flipToFalse",
            MetricKind::FlipToTrue => "flipToTrue",
            MetricKind::StoreDistance => "storeDistance",
        }
    }
}

/// Identity of a cost metric: an instrumentation site plus what it measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricId {
    pub loc: SourceLoc,
    pub kind: MetricKind,
}

impl MetricId {
    pub const fn new(loc: SourceLoc, kind: MetricKind) -> Self {
        Self { loc, kind }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.loc, self.kind.name())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (loc, kind) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected line:col:kind, got {s:?}"))?;
        let kind = match kind {
            "flipToFalse" => MetricKind::FlipToFalse,
            "flipToTrue" => MetricKind::FlipToTrue,
            "storeDistance" => MetricKind::StoreDistance,
            other => return Err(format!("unknown metric kind {other:?}")),
        };
        Ok(MetricId::new(loc.parse()?, kind))
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What to keep when a metric is hit more than once in one execution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MergePolicy {
    /// Closest approach.
    #[default]
    Min,
    /// First observation.
    First,
}

/// Costs observed during one execution. Absent metrics were not reached.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostVector {
    entries: BTreeMap<MetricId, u64>,
}

impl CostVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Min-merge record.
    pub fn record(&mut self, id: MetricId, cost: u64) {
        self.record_with(id, cost, MergePolicy::Min);
    }

    pub fn record_with(&mut self, id: MetricId, cost: u64, policy: MergePolicy) {
        match self.entries.entry(id) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(cost);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if policy == MergePolicy::Min && cost < *o.get() {
                    o.insert(cost);
                }
            }
        }
    }

    pub fn get(&self, id: MetricId) -> Option<u64> {
        self.entries.get(&id).copied()
    }

    pub fn contains(&self, id: MetricId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, u64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Entries with a non-zero cost.
    pub fn nonzero(&self) -> impl Iterator<Item = (MetricId, u64)> + '_ {
        self.iter().filter(|(_, c)| *c > 0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(MetricId, u64)> for CostVector {
    fn from_iter<T: IntoIterator<Item = (MetricId, u64)>>(iter: T) -> Self {
        let mut v = CostVector::new();
        for (id, c) in iter {
            v.record(id, c);
        }
        v
    }
}
