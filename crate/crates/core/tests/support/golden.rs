//! The eight-test worked example on `baz`, replayed with scripted choices.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use predfuzz::fuzzcore::{
    Campaign, CampaignConfig, Configuration, Corpus, CorpusEntry, ExecRecord, Hooks, Origin, ScalarRef, TestCase,
};
use predfuzz::metrics::{MetricId, MetricKind};
use predfuzz::minivm::{parse_contract, run_sequence, Instrumentation, SourceLoc, Termination, Transaction};

const BAZ: &str = include_str!("../../benchmarks/baz.mvc");

/// Location of the comparison operator `op` on the first line containing `needle`.
fn op_loc(needle: &str, op: &str) -> SourceLoc {
    for (i, line) in BAZ.lines().enumerate() {
        if let Some(start) = line.find(needle) {
            let col = start + needle.find(op).unwrap();
            return SourceLoc::new(i as u32 + 1, col as u32 + 1);
        }
    }
    panic!("{needle} not in source");
}

/// Names of the metrics as numbered in the worked example.
fn metric_names() -> Vec<(&'static str, MetricId)> {
    let d = op_loc("d < 1", "<");
    let b = op_loc("b < 3", "<");
    let a = op_loc("a == 42", "==");
    let c = op_loc("c < 42", "<");
    vec![
        ("C4", MetricId::new(d, MetricKind::FlipToFalse)),
        ("C5", MetricId::new(d, MetricKind::FlipToTrue)),
        ("C7", MetricId::new(b, MetricKind::FlipToFalse)),
        ("C8", MetricId::new(b, MetricKind::FlipToTrue)),
        ("C12", MetricId::new(a, MetricKind::FlipToFalse)),
        ("C13", MetricId::new(a, MetricKind::FlipToTrue)),
        ("C19", MetricId::new(c, MetricKind::FlipToFalse)),
        ("C20", MetricId::new(c, MetricKind::FlipToTrue)),
    ]
}

fn name_of(m: MetricId) -> &'static str {
    metric_names()
        .into_iter()
        .find(|(_, id)| *id == m)
        .map(|(n, _)| n)
        .unwrap_or_else(|| panic!("unexpected metric {m}"))
}

fn baz_tx(a: i64, b: i64, c: i64) -> TestCase {
    TestCase::single(Transaction::new("baz", vec![a, b, c], 0))
}

fn returned(test: &TestCase) -> i64 {
    let c = parse_contract(BAZ).unwrap();
    let r = run_sequence(&c, &test.sequence, &Instrumentation::default()).unwrap();
    match r[0].termination {
        Termination::Normal { returned: Some(v) } => v,
        t => panic!("unexpected termination {t}"),
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Row {
    test: usize,
    from: Option<usize>,
    input: (i64, i64, i64),
    costs: Vec<(&'static str, u64)>,
    path: i64,
    new_path: bool,
    prediction: Option<(&'static str, char, i64)>,
    energy: Option<u64>,
}

struct Script {
    picks: VecDeque<usize>,
    mutations: VecDeque<(usize, i64)>,
    metrics: VecDeque<&'static str>,
    rows: Vec<Row>,
    corpus_to_test: Vec<usize>,
}

impl Hooks for Script {
    fn pick_input(&mut self, _corpus: &Corpus) -> Option<usize> {
        self.picks.pop_front()
    }

    fn assign_energy(&mut self, _entry: &CorpusEntry) -> Option<u64> {
        Some(2)
    }

    fn fuzz_input(&mut self, base: &TestCase) -> Option<TestCase> {
        let (index, v) = self.mutations.pop_front()?;
        base.with(ScalarRef::Arg { tx: 0, index }, v)
    }

    fn choose_metric(&mut self, eligible: &[MetricId]) -> Option<usize> {
        let want = self.metrics.pop_front().expect("unscripted metric choice");
        eligible.iter().position(|m| name_of(*m) == want)
    }

    fn on_execution(&mut self, r: &ExecRecord<'_>) {
        let test = self.rows.len() + 1;
        if r.new_path {
            self.corpus_to_test.push(test);
        }
        let args = &r.test.focus().args;
        let mut costs: Vec<_> = r.cost.nonzero().map(|(m, c)| (name_of(m), c)).collect();
        costs.sort_by_key(|(n, _)| n[1..].parse::<u32>().unwrap());
        let prediction = r.prediction.map(|(s, v, m)| {
            let ScalarRef::Arg { index, .. } = s else {
                panic!("baz predictions target arguments")
            };
            (name_of(m), ['a', 'b', 'c'][index], v)
        });
        self.rows.push(Row {
            test,
            from: r.picked.map(|i| self.corpus_to_test[i]),
            input: (args[0], args[1], args[2]),
            costs,
            path: returned(r.test),
            new_path: r.new_path,
            prediction,
            energy: (r.origin != Origin::Seed).then_some(r.energy),
        });
    }
}

fn expected() -> Vec<Row> {
    let row = |test, from, input, costs: &[(&'static str, u64)], path, new_path, prediction, energy| Row {
        test,
        from,
        input,
        costs: costs.to_vec(),
        path,
        new_path,
        prediction,
        energy,
    };
    vec![
        row(1, None, (-1, 0, -5), &[("C4", 6), ("C7", 3)], 1, true, None, None),
        row(
            2,
            Some(1),
            (-1, -3, -5),
            &[("C4", 9), ("C7", 6)],
            1,
            false,
            Some(("C7", 'b', 3)),
            Some(0),
        ),
        row(
            3,
            Some(1),
            (-1, 3, -5),
            &[("C4", 3), ("C8", 1), ("C13", 43)],
            3,
            true,
            Some(("C4", 'b', 6)),
            Some(1),
        ),
        row(
            4,
            Some(1),
            (-1, 6, -5),
            &[("C5", 1), ("C19", 47)],
            4,
            true,
            None,
            Some(2),
        ),
        row(
            5,
            Some(3),
            (7, 3, -5),
            &[("C4", 3), ("C8", 1), ("C13", 35)],
            3,
            false,
            Some(("C13", 'a', 42)),
            Some(0),
        ),
        row(
            6,
            Some(3),
            (42, 3, -5),
            &[("C4", 3), ("C8", 1), ("C12", 1)],
            2,
            true,
            None,
            Some(1),
        ),
        row(
            7,
            Some(4),
            (-1, 6, 0),
            &[("C5", 6), ("C19", 42)],
            4,
            false,
            Some(("C19", 'c', 42)),
            Some(0),
        ),
        row(
            8,
            Some(4),
            (-1, 6, 42),
            &[("C5", 48), ("C20", 1)],
            5,
            true,
            None,
            Some(1),
        ),
    ]
}

/// Runs the scripted campaign and compares every row. Returns the elapsed
/// time on success and a description of the first mismatch otherwise.
pub fn check() -> Result<Duration, String> {
    let started = Instant::now();
    let contract = parse_contract(BAZ).unwrap();
    let config = CampaignConfig {
        aggressive: false,
        ..CampaignConfig::new(Configuration::B, 0, 8)
    };
    let script = Script {
        // corpus positions: test 1 -> 0, test 3 -> 1, test 4 -> 2
        picks: [0, 1, 2].into(),
        mutations: [(1, -3), (0, 7), (2, 0)].into(),
        // test #2 may use C4 or C7 and test #7 C5 or C19; the others have one choice
        metrics: ["C7", "C4", "C13", "C19"].into(),
        rows: Vec::new(),
        corpus_to_test: Vec::new(),
    };
    let campaign = Campaign::with_hooks(contract, config, script)
        .unwrap()
        .with_seeds(vec![baz_tx(-1, 0, -5)]);
    let (result, script) = campaign.run_returning_hooks();
    let elapsed = started.elapsed();
    let want = expected();
    for (got, want) in script.rows.iter().zip(&want) {
        if got != want {
            return Err(format!("test #{}: got {got:?}, want {want:?}", want.test));
        }
    }
    if script.rows.len() != want.len() {
        return Err(format!("{} rows, want {}", script.rows.len(), want.len()));
    }
    if result.paths() != 5 || result.executions != 8 {
        return Err(format!(
            "{} paths after {} executions",
            result.paths(),
            result.executions
        ));
    }
    Ok(elapsed)
}
