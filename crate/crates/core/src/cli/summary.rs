//! Campaign summaries, recomputed from the statistics stream alone.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fuzzcore::{EventKind, StatsEvent};
use crate::minivm::SourceLoc;
use crate::oracles::SwcKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BugSummary {
    pub swc: SwcKind,
    pub loc: SourceLoc,
    pub witness_len: usize,
    /// Executions performed when the bug was first reported.
    pub exec_index: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub executions: u64,
    pub paths: usize,
    pub covered_locs: usize,
    pub bugs: Vec<BugSummary>,
    pub prediction_attempts: u64,
    pub prediction_successes: u64,
    /// First-step attempts and successes.
    pub one_shot_attempts: u64,
    pub one_shot_successes: u64,
    pub max_sequence_len: usize,
}

impl Summary {
    pub fn from_events(events: &[StatsEvent]) -> Self {
        let mut s = Summary::default();
        for e in events {
            s.executions = s.executions.max(e.exec_index);
            match &e.kind {
                EventKind::NewPath { seq_len, .. } => {
                    s.paths += 1;
                    s.max_sequence_len = s.max_sequence_len.max(*seq_len);
                }
                EventKind::Coverage { locs } => s.covered_locs = s.covered_locs.max(*locs),
                EventKind::Bug { swc, loc, witness } => s.bugs.push(BugSummary {
                    swc: *swc,
                    loc: *loc,
                    witness_len: witness.len(),
                    exec_index: e.exec_index,
                    wall_ms: e.wall_ms,
                }),
                EventKind::PredictionAttempt { step, .. } => {
                    s.prediction_attempts += 1;
                    s.one_shot_attempts += u64::from(*step == 1);
                }
                EventKind::PredictionSuccess { step, .. } => {
                    s.prediction_successes += 1;
                    s.one_shot_successes += u64::from(*step == 1);
                }
                EventKind::CampaignEnd { executions } => s.executions = *executions,
                _ => {}
            }
        }
        s
    }

    /// `None` when no first-step prediction was attempted.
    pub fn one_shot_rate(&self) -> Option<f64> {
        (self.one_shot_attempts > 0).then(|| self.one_shot_successes as f64 / self.one_shot_attempts as f64)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "executions:    {}", self.executions)?;
        writeln!(f, "paths:         {}", self.paths)?;
        writeln!(f, "covered locs:  {}", self.covered_locs)?;
        match self.one_shot_rate() {
            Some(r) => writeln!(
                f,
                "one-shot rate: {:.3} ({}/{})",
                r, self.one_shot_successes, self.one_shot_attempts
            )?,
            None => writeln!(f, "one-shot rate: n/a")?,
        }
        writeln!(f, "bugs:          {}", self.bugs.len())?;
        for b in &self.bugs {
            writeln!(
                f,
                "  {} at {} after {} execs ({} ms), witness of {} tx",
                b.swc, b.loc, b.exec_index, b.wall_ms, b.witness_len
            )?;
        }
        Ok(())
    }
}
