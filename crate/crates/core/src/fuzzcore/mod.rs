//! The greybox fuzzing loop with input prediction.
//!
//! A corpus keyed by path id is repeatedly sampled; each picked input is
//! mutated one scalar at a time for a number of rounds given by its energy.
//! Whenever a mutant and its parent differ in a cost metric in a usable
//! way, a predicted input is queued and always executed, even after the
//! energy has run out.

mod campaign;
mod config;
mod corpus;
mod events;
mod mutate;
mod testcase;

pub use campaign::{default_seeds, Campaign, CampaignResult, ExecRecord, Execution, Executor, Hooks, NoHooks, Origin};
pub use config::{CampaignConfig, Configuration, DEFAULT_ATTACK_SLOT};
pub use corpus::{Corpus, CorpusEntry, EnergySchedule};
pub use events::{EventKind, PoolName, StatsEvent};
pub use mutate::{MutationWeights, Mutator, ValueMutation};
pub use testcase::{Mode, ScalarRef, TestCase};
