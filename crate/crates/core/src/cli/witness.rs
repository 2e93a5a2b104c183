//! Self-contained bug witnesses and their replay.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fuzzcore::CampaignConfig;
use crate::minivm::{parse_contract, run_sequence, Instrumentation, SequenceError, SourceLoc, Transaction};
use crate::oracles::{self, BugFinding, Finding, OracleOptions, SwcKind};

use super::CliError;

/// Version written into witnesses; replay refuses any other.
pub const WITNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of a contract's source text.
pub fn contract_digest(source: &str) -> String {
    Sha256::digest(source.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Witness {
    pub version: String,
    pub contract_digest: String,
    /// The full contract source, so the file replays on its own.
    pub contract: String,
    pub config: CampaignConfig,
    pub swc: SwcKind,
    pub loc: SourceLoc,
    pub attack_slot: u64,
    pub sequence: Vec<Transaction>,
}

impl Witness {
    pub fn new(source: &str, config: &CampaignConfig, bug: &BugFinding) -> Self {
        Self {
            version: WITNESS_VERSION.to_owned(),
            contract_digest: contract_digest(source),
            contract: source.to_owned(),
            config: config.clone(),
            swc: bug.kind,
            loc: bug.loc,
            attack_slot: config.attack_slot,
            sequence: bug.witness.clone(),
        }
    }

    /// File name used inside a witness directory, e.g. `swc-110-14-7.json`.
    pub fn file_name(&self) -> String {
        format!(
            "{}-{}-{}.json",
            self.swc.to_string().to_ascii_lowercase(),
            self.loc.line,
            self.loc.col
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save_in(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Witness(format!("{}: {e}", path.display())))
    }
}

/// What a replay observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub reproduced: bool,
    /// Every oracle finding raised while re-executing the sequence.
    pub findings: Vec<Finding>,
}

/// Re-executes the witness sequence on a fresh deployment and checks that
/// the recorded finding is raised again.
pub fn replay(w: &Witness) -> Result<ReplayReport, CliError> {
    if w.version != WITNESS_VERSION {
        return Err(CliError::VersionMismatch {
            found: w.version.clone(),
            expected: WITNESS_VERSION.to_owned(),
        });
    }
    if contract_digest(&w.contract) != w.contract_digest {
        return Err(CliError::Witness(
            "contract digest does not match the embedded source".into(),
        ));
    }
    let contract = parse_contract(&w.contract)?;
    let instr = Instrumentation {
        attack_slot: Some(w.attack_slot),
        step_budget: w.config.step_budget,
        merge: w.config.merge,
    };
    let results = run_sequence(&contract, &w.sequence, &instr).map_err(|e| match e {
        SequenceError::Deploy(d) => CliError::Deploy(d),
        SequenceError::Tx(t) => CliError::Witness(format!("invalid transaction: {t}")),
    })?;
    let opts = OracleOptions {
        attack_slot: Some(w.attack_slot),
        step_budget_is_bug: w.config.step_budget_is_bug,
    };
    let findings: Vec<Finding> = results.iter().flat_map(|r| oracles::check(r, &opts)).collect();
    let reproduced = findings.iter().any(|f| f.kind == w.swc && f.loc == w.loc);
    Ok(ReplayReport { reproduced, findings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::bench;
    use crate::fuzzcore::Configuration;

    fn foo_witness() -> Witness {
        let bug = BugFinding {
            kind: SwcKind::Swc110,
            loc: SourceLoc::new(14, 7),
            witness: vec![
                Transaction::new("SetY", vec![42], 0),
                Transaction::new("CopyY", vec![], 0),
                Transaction::new("Bar", vec![], 0),
            ],
            seed: 0,
            exec_index: 10,
            wall_ms: 0,
        };
        Witness::new(bench::FOO, &CampaignConfig::new(Configuration::B, 0, 10), &bug)
    }

    #[test]
    fn foo_witness_reproduces_and_round_trips() {
        let w = foo_witness();
        assert!(replay(&w).unwrap().reproduced);
        assert_eq!(Witness::from_json(&w.to_json()).unwrap(), w);
        assert_eq!(w.file_name(), "swc-110-14-7.json");
    }

    #[test]
    fn tampered_arguments_do_not_reproduce() {
        let mut w = foo_witness();
        w.sequence[0].args[0] = 41;
        let r = replay(&w).unwrap();
        assert!(!r.reproduced);
        assert!(r.findings.is_empty());
    }

    #[test]
    fn version_and_digest_are_checked() {
        let mut w = foo_witness();
        w.version = "0.0.0-other".into();
        assert!(matches!(replay(&w), Err(CliError::VersionMismatch { .. })));
        let mut w = foo_witness();
        w.contract.push(' ');
        assert!(matches!(replay(&w), Err(CliError::Witness(_))));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            contract_digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
