use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExecResult;

/// Digest of one or more branch-decision traces; the corpus key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathId(pub u64);

impl std::fmt::Display for PathId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PathScope {
    /// Only the final transaction identifies the path.
    LastTx,
    /// The path spans every transaction of the sequence.
    WholeSequence,
}

fn feed(h: &mut Sha256, r: &ExecResult) {
    h.update((r.function.len() as u32).to_le_bytes());
    h.update(r.function.as_bytes());
    h.update((r.branch_trace.len() as u64).to_le_bytes());
    for (loc, taken) in &r.branch_trace {
        h.update(loc.line.to_le_bytes());
        h.update(loc.col.to_le_bytes());
        h.update([*taken as u8]);
    }
    h.update([r.termination.kind_code()]);
}

/// Computes the path identifier of an executed (non-empty) sequence.
pub fn path_id(results: &[ExecResult], scope: PathScope) -> PathId {
    let last = results.last().expect("path_id of an empty sequence");
    let mut h = Sha256::new();
    match scope {
        PathScope::LastTx => feed(&mut h, last),
        PathScope::WholeSequence => results.iter().for_each(|r| feed(&mut h, r)),
    }
    let out = h.finalize();
    PathId(u64::from_le_bytes(out[..8].try_into().unwrap()))
}
