use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::testcase::TestCase;
use crate::metrics::CostVector;
use crate::minivm::PathId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusEntry {
    pub pid: PathId,
    pub test: TestCase,
    /// Cost vector observed when the entry was admitted.
    pub cost: CostVector,
    pub times_selected: u64,
    /// Executions that have followed this path, the admitting one included.
    pub path_frequency: u64,
    /// Execution index at which the entry was admitted.
    pub found_at: u64,
}

/// Path-keyed store of interesting test cases.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
    index: HashMap<PathId, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, pid: PathId) -> bool {
        self.index.contains_key(&pid)
    }

    pub fn get(&self, pid: PathId) -> Option<&CorpusEntry> {
        self.index.get(&pid).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &CorpusEntry {
        &self.entries[i]
    }

    /// Adds an entry for a new path; returns false if the path is known.
    pub fn add(&mut self, pid: PathId, test: TestCase, cost: CostVector, found_at: u64) -> bool {
        if self.contains(pid) {
            return false;
        }
        self.index.insert(pid, self.entries.len());
        self.entries.push(CorpusEntry {
            pid,
            test,
            cost,
            times_selected: 0,
            path_frequency: 1,
            found_at,
        });
        true
    }

    /// Counts one more execution of a known path.
    pub fn hit(&mut self, pid: PathId) {
        if let Some(&i) = self.index.get(&pid) {
            self.entries[i].path_frequency += 1;
        }
    }

    /// Marks entry `i` as selected for fuzzing.
    pub fn select(&mut self, i: usize) -> &CorpusEntry {
        self.entries[i].times_selected += 1;
        &self.entries[i]
    }

    /// Samples an entry index with weight `1 / (1 + path_frequency)`.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        assert!(!self.entries.is_empty(), "sampling an empty corpus");
        let weights: Vec<f64> = self
            .entries
            .iter()
            .map(|e| 1.0 / (1.0 + e.path_frequency as f64))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                return i;
            }
            r -= w;
        }
        self.entries.len() - 1
    }

    /// Samples an entry and marks it selected.
    pub fn pick_input(&mut self, rng: &mut impl Rng) -> usize {
        let i = self.sample(rng);
        self.select(i);
        i
    }
}

/// Parameters of the power schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergySchedule {
    pub base: u64,
    pub cap: u64,
}

impl Default for EnergySchedule {
    fn default() -> Self {
        Self { base: 8, cap: 1024 }
    }
}

impl EnergySchedule {
    /// `min(base * 2^times_selected / max(1, path_frequency), cap)`, at least 1.
    pub fn assign_energy(&self, entry: &CorpusEntry) -> u64 {
        let cap = self.cap.max(1);
        let grown = if entry.times_selected >= 64 {
            u128::MAX
        } else {
            (self.base as u128).saturating_mul(1u128 << entry.times_selected)
        };
        let e = grown / entry.path_frequency.max(1) as u128;
        e.min(cap as u128).max(1) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minivm::Transaction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entry(times_selected: u64, path_frequency: u64) -> CorpusEntry {
        CorpusEntry {
            pid: PathId(0),
            test: TestCase::single(Transaction::new("f", vec![], 0)),
            cost: CostVector::new(),
            times_selected,
            path_frequency,
            found_at: 0,
        }
    }

    #[test]
    fn energy_schedule() {
        let s = EnergySchedule::default();
        assert_eq!(s.assign_energy(&entry(1, 1)), 16);
        assert_eq!(s.assign_energy(&entry(1, 512)), 1);
        assert_eq!(s.assign_energy(&entry(20, 1)), 1024);
        assert_eq!(s.assign_energy(&entry(200, 0)), 1024);
        assert_eq!(s.assign_energy(&entry(0, 3)), 2);
    }

    #[test]
    fn duplicate_paths_are_not_added() {
        let mut c = Corpus::new();
        let t = TestCase::single(Transaction::new("f", vec![], 0));
        assert!(c.add(PathId(1), t.clone(), CostVector::new(), 0));
        assert!(!c.add(PathId(1), t, CostVector::new(), 1));
        assert_eq!(c.len(), 1);
        c.hit(PathId(1));
        assert_eq!(c.get(PathId(1)).unwrap().path_frequency, 2);
    }

    #[test]
    fn selection_favours_rare_paths() {
        let mut c = Corpus::new();
        let t = TestCase::single(Transaction::new("f", vec![], 0));
        c.add(PathId(1), t.clone(), CostVector::new(), 0);
        c.add(PathId(2), t, CostVector::new(), 0);
        // path frequencies 0 and 99: weights 1 and 1/100
        c.entries[0].path_frequency = 0;
        c.entries[1].path_frequency = 99;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let rare = (0..n).filter(|_| c.sample(&mut rng) == 0).count();
        let ratio = rare as f64 / (n - rare) as f64;
        assert!((80.0..=120.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pick_input_is_reproducible_and_counts_selections() {
        let build = || {
            let mut c = Corpus::new();
            for i in 0..5 {
                let t = TestCase::single(Transaction::new("f", vec![i], 0));
                c.add(PathId(i as u64), t, CostVector::new(), 0);
            }
            c
        };
        let (mut a, mut b) = (build(), build());
        let mut ra = ChaCha8Rng::seed_from_u64(11);
        let mut rb = ChaCha8Rng::seed_from_u64(11);
        let sa: Vec<_> = (0..50).map(|_| a.pick_input(&mut ra)).collect();
        let sb: Vec<_> = (0..50).map(|_| b.pick_input(&mut rb)).collect();
        assert_eq!(sa, sb);
        let total: u64 = a.entries().iter().map(|e| e.times_selected).sum();
        assert_eq!(total, 50);
    }
}
