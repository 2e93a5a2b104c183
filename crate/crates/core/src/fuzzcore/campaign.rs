use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::CampaignConfig;
use super::corpus::{Corpus, CorpusEntry};
use super::events::{EventKind, PoolName, StatsEvent};
use super::mutate::Mutator;
use super::testcase::{Mode, ScalarRef, TestCase};
use crate::metrics::{CostVector, MetricId};
use crate::minivm::{
    deploy, execute_tx, path_id, run_sequence_from, Contract, DeployError, ExecResult, Instrumentation, PathId,
    PathScope, SourceLoc, StorageState, Transaction, Value, DEPLOYER,
};
use crate::oracles::{check, BugFinding, BugLedger, OracleOptions};
use crate::predictor::{advance_goal, predict, GoalStep, PredictionGoal};
use crate::seqfuzz::{materialize, mutate_sequence, DemandState, PoolKind, Pools, SeqMutation};

/// Everything observed when running one test case.
#[derive(Debug, Clone)]
pub struct Execution {
    pub results: Vec<ExecResult>,
    /// Costs of all transactions, merged.
    pub cost: CostVector,
    pub pid: PathId,
}

impl Execution {
    /// Storage right before the focus transaction ran.
    fn pre_focus(&self, deployed: &StorageState) -> StorageState {
        match self.results.len() {
            0 | 1 => deployed.clone(),
            n => self.results[n - 2].post_state.clone(),
        }
    }

    pub fn post_state(&self) -> &StorageState {
        &self.results.last().expect("non-empty").post_state
    }
}

/// Runs test cases against a deployed contract.
#[derive(Debug, Clone)]
pub struct Executor {
    contract: Contract,
    deployed: StorageState,
    instr: Instrumentation,
    scope: PathScope,
}

impl Executor {
    pub fn new(contract: Contract, instr: Instrumentation, scope: PathScope) -> Result<Self, DeployError> {
        let deployed = deploy(&contract, DEPLOYER)?;
        Ok(Self {
            contract,
            deployed,
            instr,
            scope,
        })
    }

    pub fn contract(&self) -> &Contract {
        &self.contract
    }

    pub fn deployed(&self) -> &StorageState {
        &self.deployed
    }

    /// Executes `test`. Aggressive tests run the prefix normally, then the
    /// focus on the prefix's state with the overrides applied.
    pub fn execute(&self, test: &TestCase) -> Execution {
        let results = match test.mode {
            Mode::Regular => run_sequence_from(&self.contract, &self.deployed, &test.sequence, &self.instr)
                .expect("test cases are valid for their contract"),
            Mode::Aggressive => {
                let mut results = run_sequence_from(&self.contract, &self.deployed, test.prefix(), &self.instr)
                    .expect("test cases are valid for their contract");
                let mut state = results
                    .last()
                    .map_or_else(|| self.deployed.clone(), |r| r.post_state.clone());
                for (&slot, &v) in &test.overrides {
                    state.set(slot, v);
                }
                let focus = execute_tx(&self.contract, &state, test.focus(), &self.instr)
                    .expect("test cases are valid for their contract");
                results.push(focus);
                results
            }
        };
        let mut cost = CostVector::new();
        for r in &results {
            for (m, c) in r.cost_vector.iter() {
                cost.record_with(m, c, self.instr.merge);
            }
        }
        let pid = match test.mode {
            Mode::Regular => path_id(&results, self.scope),
            Mode::Aggressive => path_id(&results[results.len() - 1..], PathScope::LastTx),
        };
        Execution { results, cost, pid }
    }
}

/// How a candidate came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Seed,
    Fuzzed,
    Aggressive,
    Predicted,
    Sequence,
}

/// Per-execution record handed to [`Hooks::on_execution`].
#[derive(Debug, Clone)]
pub struct ExecRecord<'a> {
    pub index: u64,
    pub origin: Origin,
    /// Corpus position of the picked input (`None` for seeds).
    pub picked: Option<usize>,
    pub test: &'a TestCase,
    pub cost: &'a CostVector,
    pub pid: PathId,
    pub new_path: bool,
    /// Energy of the picked input when the candidate ran.
    pub energy: u64,
    /// Prediction issued right after this execution, if any.
    pub prediction: Option<(ScalarRef, Value, MetricId)>,
}

/// Overrides for the campaign's random choices. Every method defaults to
/// "no override".
pub trait Hooks {
    fn pick_input(&mut self, _corpus: &Corpus) -> Option<usize> {
        None
    }
    fn assign_energy(&mut self, _entry: &CorpusEntry) -> Option<u64> {
        None
    }
    /// Replaces the scalar mutation of `base`. The returned test must
    /// differ from `base` in exactly one scalar.
    fn fuzz_input(&mut self, _base: &TestCase) -> Option<TestCase> {
        None
    }
    fn choose_metric(&mut self, _eligible: &[MetricId]) -> Option<usize> {
        None
    }
    fn on_execution(&mut self, _record: &ExecRecord<'_>) {}
}

/// Hooks that override nothing.
#[derive(Debug, Default)]
pub struct NoHooks;

impl Hooks for NoHooks {}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub events: Vec<StatsEvent>,
    pub bugs: Vec<BugFinding>,
    pub corpus: Vec<CorpusEntry>,
    pub executions: u64,
    pub covered_locs: BTreeSet<SourceLoc>,
}

impl CampaignResult {
    pub fn paths(&self) -> usize {
        self.corpus.len()
    }

    /// (first-step successes, first-step attempts).
    pub fn one_shot(&self) -> (u64, u64) {
        let mut s = 0;
        let mut a = 0;
        for e in &self.events {
            match e.kind {
                EventKind::PredictionAttempt { step: 1, .. } => a += 1,
                EventKind::PredictionSuccess { step: 1, .. } => s += 1,
                _ => {}
            }
        }
        (s, a)
    }

    pub fn max_sequence_len(&self) -> usize {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::NewPath { seq_len, .. } => Some(seq_len),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

struct Pending {
    test: TestCase,
    /// The input the prediction was derived from.
    pair_base: TestCase,
    pair_cost: CostVector,
}

/// What the inner loop is currently mutating.
struct Base {
    test: TestCase,
    cost: CostVector,
    exec: Option<Execution>,
}

/// One fuzzing campaign over one contract.
pub struct Campaign<H: Hooks = NoHooks> {
    config: CampaignConfig,
    exec: Executor,
    mutator: Mutator,
    rng: ChaCha8Rng,
    hooks: H,
    seeds: Vec<TestCase>,
    corpus: Corpus,
    pools: Pools,
    demand: DemandState,
    bugs: BugLedger,
    oracle: OracleOptions,
    covered: BTreeSet<SourceLoc>,
    events: Vec<StatsEvent>,
    executions: u64,
    started: Instant,
}

/// One all-zero, sender-0 transaction per public function.
pub fn default_seeds(contract: &Contract) -> Vec<TestCase> {
    contract
        .functions
        .iter()
        .map(|f| TestCase::single(Transaction::new(f.name.clone(), vec![0; f.arity()], DEPLOYER)))
        .collect()
}

impl Campaign<NoHooks> {
    pub fn new(contract: Contract, config: CampaignConfig) -> Result<Self, DeployError> {
        Campaign::with_hooks(contract, config, NoHooks)
    }
}

impl<H: Hooks> Campaign<H> {
    pub fn with_hooks(contract: Contract, config: CampaignConfig, hooks: H) -> Result<Self, DeployError> {
        let instr = Instrumentation {
            attack_slot: Some(config.attack_slot),
            step_budget: config.step_budget,
            merge: config.merge,
        };
        let mut mutator = Mutator::new(&contract.literals, config.literal_harvest);
        mutator.weights = config.weights;
        let seeds = default_seeds(&contract);
        let exec = Executor::new(contract, instr, config.path_scope())?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            oracle: OracleOptions {
                attack_slot: Some(config.attack_slot),
                step_budget_is_bug: config.step_budget_is_bug,
            },
            config,
            exec,
            mutator,
            hooks,
            seeds,
            corpus: Corpus::new(),
            pools: Pools::default(),
            demand: DemandState::new(),
            bugs: BugLedger::new(),
            covered: BTreeSet::new(),
            events: Vec::new(),
            executions: 0,
            started: Instant::now(),
        })
    }

    /// Replaces the default seeds.
    pub fn with_seeds(mut self, seeds: Vec<TestCase>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn hooks(&self) -> &H {
        &self.hooks
    }

    fn interrupted(&self) -> bool {
        if self.config.max_execs.is_some_and(|m| self.executions >= m) {
            return true;
        }
        self.config.max_duration.is_some_and(|d| self.started.elapsed() >= d)
    }

    fn emit(&mut self, kind: EventKind) {
        let wall_ms = if self.config.logical_clock {
            0
        } else {
            self.started.elapsed().as_millis() as u64
        };
        self.events.push(StatsEvent {
            seq: self.events.len() as u64,
            exec_index: self.executions,
            wall_ms,
            kind,
        });
    }

    /// Executes a candidate and updates corpus, coverage, bugs, pools and
    /// demand. Returns the execution and whether its path was new.
    fn run_candidate(&mut self, test: &TestCase) -> (Execution, bool) {
        let ex = self.exec.execute(test);
        self.executions += 1;
        let focus_fn = test.focus().function.clone();
        if test.mode == Mode::Aggressive {
            if !self.corpus.contains(ex.pid)
                && !self.demand.is_target(&focus_fn, ex.pid)
                && self.demand.record_discovery(&focus_fn, ex.pid)
            {
                self.emit(EventKind::DemandFlagSet {
                    function: focus_fn,
                    pid: ex.pid,
                });
            }
            return (ex, false);
        }

        for r in &ex.results {
            for f in check(r, &self.oracle) {
                let bug = BugFinding {
                    kind: f.kind,
                    loc: f.loc,
                    witness: test.sequence.clone(),
                    seed: self.config.seed,
                    exec_index: self.executions,
                    wall_ms: self.started.elapsed().as_millis() as u64,
                };
                if self.bugs.report(bug) {
                    self.emit(EventKind::Bug {
                        swc: f.kind,
                        loc: f.loc,
                        witness: test.sequence.clone(),
                    });
                }
            }
        }

        let before = self.covered.len();
        for r in &ex.results {
            self.covered.extend(r.executed_locs.iter().copied());
        }
        if self.covered.len() > before {
            self.emit(EventKind::Coverage {
                locs: self.covered.len(),
            });
        }

        let new = self.corpus.add(ex.pid, test.clone(), ex.cost.clone(), self.executions);
        if new {
            self.emit(EventKind::NewPath {
                pid: ex.pid,
                function: focus_fn.clone(),
                seq_len: test.len(),
            });
            for pool in self.pools.admit(test, ex.post_state()) {
                let pool = match pool {
                    PoolKind::Tx => PoolName::Tx,
                    PoolKind::Seq => PoolName::Seq,
                };
                self.emit(EventKind::PoolAdmit {
                    pool,
                    function: focus_fn.clone(),
                    digest: ex.post_state().digest(),
                });
            }
            if self.demand.update_demand(&focus_fn, ex.pid) {
                self.emit(EventKind::DemandFlagCleared {
                    function: focus_fn,
                    pid: ex.pid,
                });
            }
        } else {
            self.corpus.hit(ex.pid);
        }
        (ex, new)
    }

    fn choose_metric(&mut self, eligible: &[MetricId]) -> usize {
        match self.hooks.choose_metric(eligible) {
            Some(i) if i < eligible.len() => i,
            _ => self.rng.gen_range(0..eligible.len()),
        }
    }

    /// Predict over a single-scalar pair. Starts a goal on success.
    fn try_predict(
        &mut self,
        base: &TestCase,
        base_cost: &CostVector,
        cand: &TestCase,
        cand_cost: &CostVector,
    ) -> Option<(Pending, PredictionGoal<ScalarRef>)> {
        let scalar = base.single_delta(cand);
        assert!(scalar.is_some(), "prediction pair must differ in exactly one scalar");
        let scalar = scalar?;
        let v0 = base.get(scalar)?;
        let v1 = cand.get(scalar)?;
        let eligible = crate::predictor::eligible_metrics(base_cost, cand_cost);
        if eligible.is_empty() {
            return None;
        }
        let pick = self.choose_metric(&eligible);
        let p = predict(scalar, (v0, base_cost), (v1, cand_cost), |_| pick)?;
        let test = base.with(scalar, p.value)?;
        let goal = PredictionGoal::start(&p, self.config.effective_secant_iters());
        self.emit(EventKind::PredictionAttempt {
            metric: p.metric,
            scalar,
            value: p.value,
            step: 1,
        });
        Some((
            Pending {
                test,
                pair_base: base.clone(),
                pair_cost: base_cost.clone(),
            },
            goal,
        ))
    }

    fn run_seeds(&mut self) {
        let seeds = std::mem::take(&mut self.seeds);
        for s in &seeds {
            if self.interrupted() {
                break;
            }
            let (ex, new) = self.run_candidate(s);
            self.hooks.on_execution(&ExecRecord {
                index: self.executions,
                origin: Origin::Seed,
                picked: None,
                test: s,
                cost: &ex.cost,
                pid: ex.pid,
                new_path: new,
                energy: 0,
                prediction: None,
            });
        }
        self.seeds = seeds;
    }

    /// Runs the campaign to budget exhaustion.
    pub fn run(self) -> CampaignResult {
        self.run_returning_hooks().0
    }

    /// Like [`Campaign::run`], handing the hooks back.
    pub fn run_returning_hooks(mut self) -> (CampaignResult, H) {
        self.started = Instant::now();
        self.run_seeds();
        while !self.interrupted() && !self.corpus.is_empty() {
            self.fuzz_one();
        }
        self.emit(EventKind::CampaignEnd {
            executions: self.executions,
        });
        let result = CampaignResult {
            config: self.config,
            events: self.events,
            bugs: self.bugs.into_bugs(),
            corpus: self.corpus.entries().to_vec(),
            executions: self.executions,
            covered_locs: self.covered,
        };
        (result, self.hooks)
    }

    /// One outer-loop iteration: pick an input and spend its energy.
    fn fuzz_one(&mut self) {
        let picked = match self.hooks.pick_input(&self.corpus) {
            Some(i) if i < self.corpus.len() => {
                self.corpus.select(i);
                i
            }
            _ => self.corpus.pick_input(&mut self.rng),
        };
        let entry = self.corpus.entry(picked).clone();
        let max_energy = self
            .hooks
            .assign_energy(&entry)
            .unwrap_or_else(|| self.config.energy.assign_energy(&entry));
        let mut base = Base {
            test: entry.test,
            cost: entry.cost,
            exec: None,
        };
        let mut energy = 0u64;
        let mut pending: Option<Pending> = None;
        let mut goal: Option<PredictionGoal<ScalarRef>> = None;
        let predicting = self.config.prediction_enabled();

        while energy < max_energy || pending.is_some() {
            if self.interrupted() {
                return;
            }
            // (candidate, origin, pair base + its cost for single-scalar pairs)
            let (cand, origin, pair) = match pending.take() {
                Some(p) => (p.test, Origin::Predicted, Some((p.pair_base, p.pair_cost))),
                None => self.next_candidate(&mut base),
            };
            let (ex, new) = self.run_candidate(&cand);
            let can_predict = predicting && energy < max_energy && !self.interrupted();

            if origin == Origin::Predicted {
                if let Some(g) = goal.take() {
                    match advance_goal(g, ex.cost.get(g.metric)) {
                        GoalStep::Satisfied => self.emit(EventKind::PredictionSuccess {
                            metric: g.metric,
                            step: g.step,
                        }),
                        GoalStep::Abandoned => {}
                        GoalStep::Next(g2) => {
                            let (pb, pc) = pair.clone().expect("predicted inputs carry their pair");
                            if let Some(t) = pb.with(g2.scalar, g2.pending).filter(|t| *t != pb) {
                                self.emit(EventKind::PredictionAttempt {
                                    metric: g2.metric,
                                    scalar: g2.scalar,
                                    value: g2.pending,
                                    step: g2.step,
                                });
                                pending = Some(Pending {
                                    test: t,
                                    pair_base: pb,
                                    pair_cost: pc,
                                });
                                goal = Some(g2);
                            }
                        }
                    }
                }
            }

            if pending.is_none() && can_predict {
                if let Some((pb, pc)) = &pair {
                    if let Some((p, g)) = self.try_predict(pb, pc, &cand, &ex.cost) {
                        pending = Some(p);
                        goal = Some(g);
                    }
                }
            }

            let prediction = match (&pending, &goal) {
                (Some(p), Some(g)) => Some((g.scalar, p.test.get(g.scalar).unwrap_or(g.pending), g.metric)),
                _ => None,
            };
            self.hooks.on_execution(&ExecRecord {
                index: self.executions,
                origin,
                picked: Some(picked),
                test: &cand,
                cost: &ex.cost,
                pid: ex.pid,
                new_path: new,
                energy,
                prediction,
            });

            if origin == Origin::Sequence {
                base = Base {
                    test: cand,
                    cost: ex.cost.clone(),
                    exec: Some(ex),
                };
            }
            energy += 1;
        }
    }

    /// Produces the next mutated candidate of `base`.
    fn next_candidate(&mut self, base: &mut Base) -> (TestCase, Origin, Option<(TestCase, CostVector)>) {
        if let Some(t) = self.hooks.fuzz_input(&base.test) {
            return (t, Origin::Fuzzed, Some((base.test.clone(), base.cost.clone())));
        }
        if self.config.aggressive_enabled() && self.rng.gen_bool(self.config.aggressive_prob.min(1.0)) {
            if base.exec.is_none() {
                base.exec = Some(self.exec.execute(&base.test));
            }
            let pre = base
                .exec
                .as_ref()
                .expect("just computed")
                .pre_focus(self.exec.deployed());
            let twin = materialize(self.exec.contract(), &base.test, &pre);
            let (cand, _) = self.mutator.fuzz_input(&twin, &mut self.rng);
            return (cand, Origin::Aggressive, Some((twin, base.cost.clone())));
        }
        match mutate_sequence(
            self.exec.contract(),
            &base.test,
            &self.pools,
            &self.demand,
            self.config.seq_policy(),
            &mut self.rng,
        ) {
            SeqMutation::FuzzScalar => {
                let (cand, _) = self.mutator.fuzz_input(&base.test, &mut self.rng);
                (cand, Origin::Fuzzed, Some((base.test.clone(), base.cost.clone())))
            }
            SeqMutation::Insert(t) | SeqMutation::ReplacePrefix(t) => (t, Origin::Sequence, None),
        }
    }
}
