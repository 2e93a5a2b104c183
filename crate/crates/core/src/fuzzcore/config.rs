use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::corpus::EnergySchedule;
use super::mutate::MutationWeights;
use crate::metrics::MergePolicy;
use crate::minivm::{PathScope, DEFAULT_STEP_BUDGET};
use crate::seqfuzz::{SeqPolicy, DEFAULT_MAX_SEQ_LEN};

/// The four fuzzer configurations compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    /// Plain greybox fuzzing with demand-driven sequences, no prediction.
    A,
    /// A plus iterative input prediction.
    B,
    /// B limited to a single Secant step per prediction.
    C,
    /// A with sequence growth always on and whole-sequence path ids.
    D,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Configuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Configuration::A),
            "B" => Ok(Configuration::B),
            "C" => Ok(Configuration::C),
            "D" => Ok(Configuration::D),
            _ => Err(format!("unknown configuration {s:?} (expected A, B, C or D)")),
        }
    }
}

/// Default attack slot for the arbitrary-write oracle.
pub const DEFAULT_ATTACK_SLOT: u64 = 0xffca_ffee;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignConfig {
    pub configuration: Configuration,
    pub seed: u64,
    pub max_execs: Option<u64>,
    pub max_duration: Option<Duration>,
    pub max_seq_len: usize,
    pub aggressive_prob: f64,
    /// Master switch for aggressive mode (and hence demand-driven growth).
    pub aggressive: bool,
    pub attack_slot: u64,
    pub literal_harvest: bool,
    pub secant_iters: u32,
    #[serde(skip)]
    pub energy: EnergySchedule,
    #[serde(skip)]
    pub weights: MutationWeights,
    pub step_budget: u64,
    pub step_budget_is_bug: bool,
    pub merge: MergePolicy,
    /// Report zero wall time in events so streams are byte-reproducible.
    pub logical_clock: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            configuration: Configuration::B,
            seed: 0,
            max_execs: Some(100_000),
            max_duration: None,
            max_seq_len: DEFAULT_MAX_SEQ_LEN,
            aggressive_prob: 0.125,
            aggressive: true,
            attack_slot: DEFAULT_ATTACK_SLOT,
            literal_harvest: true,
            secant_iters: 5,
            energy: EnergySchedule::default(),
            weights: MutationWeights::default(),
            step_budget: DEFAULT_STEP_BUDGET,
            step_budget_is_bug: true,
            merge: MergePolicy::Min,
            logical_clock: false,
        }
    }
}

impl CampaignConfig {
    pub fn new(configuration: Configuration, seed: u64, max_execs: u64) -> Self {
        Self {
            configuration,
            seed,
            max_execs: Some(max_execs),
            ..Self::default()
        }
    }

    pub fn prediction_enabled(&self) -> bool {
        matches!(self.configuration, Configuration::B | Configuration::C)
    }

    /// Secant steps allowed per prediction, the first included.
    pub fn effective_secant_iters(&self) -> u32 {
        match self.configuration {
            Configuration::C => 1,
            _ => self.secant_iters.max(1),
        }
    }

    pub fn path_scope(&self) -> PathScope {
        match self.configuration {
            Configuration::D => PathScope::WholeSequence,
            _ => PathScope::LastTx,
        }
    }

    pub fn aggressive_enabled(&self) -> bool {
        self.aggressive && self.configuration != Configuration::D && self.aggressive_prob > 0.0
    }

    pub fn seq_policy(&self) -> SeqPolicy {
        SeqPolicy {
            max_len: self.max_seq_len.max(1),
            unconditional: self.configuration == Configuration::D,
        }
    }
}
