use serde::{Deserialize, Serialize};

use super::testcase::ScalarRef;
use crate::metrics::MetricId;
use crate::minivm::{PathId, SourceLoc, StateDigest, Transaction, Value};
use crate::oracles::SwcKind;

/// One record of the campaign's statistics stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsEvent {
    /// Position in the stream, strictly increasing.
    pub seq: u64,
    /// Number of executions performed when the event was produced.
    pub exec_index: u64,
    pub wall_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PoolName {
    Tx,
    Seq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum EventKind {
    #[serde(rename_all = "camelCase")]
    NewPath {
        pid: PathId,
        function: String,
        seq_len: usize,
    },
    /// The set of executed source locations grew to `locs` entries.
    #[serde(rename_all = "camelCase")]
    Coverage { locs: usize },
    #[serde(rename_all = "camelCase")]
    Bug {
        swc: SwcKind,
        loc: SourceLoc,
        witness: Vec<Transaction>,
    },
    #[serde(rename_all = "camelCase")]
    PredictionAttempt {
        metric: MetricId,
        scalar: ScalarRef,
        value: Value,
        step: u32,
    },
    #[serde(rename_all = "camelCase")]
    PredictionSuccess { metric: MetricId, step: u32 },
    #[serde(rename_all = "camelCase")]
    DemandFlagSet { function: String, pid: PathId },
    #[serde(rename_all = "camelCase")]
    DemandFlagCleared { function: String, pid: PathId },
    #[serde(rename_all = "camelCase")]
    PoolAdmit {
        pool: PoolName,
        function: String,
        digest: StateDigest,
    },
    #[serde(rename_all = "camelCase")]
    CampaignEnd { executions: u64 },
}
