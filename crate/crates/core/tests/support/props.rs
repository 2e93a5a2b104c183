//! Large randomized checks of the cost functions, the Secant step,
//! determinism of whole campaigns and soundness of reported witnesses.
//! Each check returns a short description on success.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use predfuzz::cli::bench;
use predfuzz::cli::stats::events_to_string;
use predfuzz::cli::witness::{replay, Witness};
use predfuzz::fuzzcore::{Campaign, CampaignConfig, CampaignResult, Configuration};
use predfuzz::metrics::{branch_costs, evaluate, store_cost, CmpOp, Signedness};
use predfuzz::minivm::parse_contract;
use predfuzz::predictor::{secant_root, DataPoint};

const BOUNDARIES: [i64; 9] = [i64::MIN, i64::MIN + 1, -2, -1, 0, 1, 2, i64::MAX - 1, i64::MAX];

fn check_pair(l: i64, r: i64) -> Result<(), String> {
    for s in [Signedness::Signed, Signedness::Unsigned] {
        for op in CmpOp::ALL {
            let holds = evaluate(op, l, r, s);
            let (to_false, to_true) = branch_costs(op, l, r, s);
            if (to_false == 0) == holds || (to_true == 0) != holds {
                return Err(format!("{op:?} {s:?} l={l} r={r}: costs ({to_false}, {to_true})"));
            }
        }
    }
    Ok(())
}

pub fn branch_costs_zero_iff_flip(pairs: u32) -> Result<String, String> {
    for &l in &BOUNDARIES {
        for &r in &BOUNDARIES {
            check_pair(l, r)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..pairs {
        let (l, r) = match i % 4 {
            0 => (rng.gen(), rng.gen()),
            1 => {
                let l: i64 = rng.gen_range(-50..50);
                (l, l + rng.gen_range(-2..=2))
            }
            2 => {
                let l: i64 = rng.gen();
                (l, l.wrapping_add(rng.gen_range(-2..=2)))
            }
            _ => (BOUNDARIES[rng.gen_range(0..BOUNDARIES.len())], rng.gen()),
        };
        check_pair(l, r)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..pairs / 10 {
        let (t, a): (u64, u64) = (rng.gen(), rng.gen());
        for (t, a) in [(t, a), (a, a), (t, t.wrapping_add(1))] {
            if (store_cost(t, a) == 0) != (t == a) || store_cost(t, a) != store_cost(a, t) {
                return Err(format!("store cost of ({t}, {a})"));
            }
        }
    }
    Ok(format!(
        "{pairs} random pairs plus boundaries, 6 operators, both signednesses"
    ))
}

pub fn secant_exact_on_affine(cases: u32) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..cases {
        let root: i64 = rng.gen_range(-1_000_000_000..=1_000_000_000);
        let mut m: i64 = rng.gen_range(-1000..=1000);
        if m == 0 {
            m = 1;
        }
        // stay on the side where m * (i - root) is positive
        let side = m.signum();
        let d0: i64 = rng.gen_range(1..=1_000_000);
        let mut d1: i64 = rng.gen_range(1..=1_000_000);
        if d1 == d0 {
            d1 += 1;
        }
        let (i0, i1) = (root + side * d0, root + side * d1);
        let cost = |i: i64| (m * (i - root)) as u64;
        let p0 = DataPoint {
            input: i0,
            cost: cost(i0),
        };
        let p1 = DataPoint {
            input: i1,
            cost: cost(i1),
        };
        let got = secant_root(p0, p1);
        if got != Some(root) {
            return Err(format!("m={m} root={root} i0={i0} i1={i1}: got {got:?}"));
        }
    }
    Ok(format!("{cases} affine relations"))
}

pub fn campaigns_deterministic(seeds: u64) -> Result<String, String> {
    let contract = parse_contract(bench::FOO).unwrap();
    for seed in 0..seeds {
        let config = CampaignConfig {
            logical_clock: true,
            ..CampaignConfig::new(Configuration::B, seed, 20_000)
        };
        let run = || events_to_string(&Campaign::new(contract.clone(), config.clone()).unwrap().run().events);
        let a = run();
        if a.is_empty() || a != run() {
            return Err(format!("seed {seed}: streams differ"));
        }
    }
    Ok(format!("{seeds} seeds x 2 runs byte-identical"))
}

/// Checks that the bugs of one campaign are unique by (kind, location) and
/// that each witness reproduces. Returns the number of witnesses replayed.
pub fn witnesses_sound(source: &str, result: &CampaignResult) -> Result<usize, String> {
    let mut seen = HashSet::new();
    for bug in &result.bugs {
        if !seen.insert((bug.kind, bug.loc)) {
            return Err(format!("duplicate report {} at {}", bug.kind, bug.loc));
        }
        let w = Witness::new(source, &result.config, bug);
        match replay(&w) {
            Ok(r) if r.reproduced => {}
            other => return Err(format!("{} at {} did not replay: {other:?}", bug.kind, bug.loc)),
        }
    }
    Ok(result.bugs.len())
}
