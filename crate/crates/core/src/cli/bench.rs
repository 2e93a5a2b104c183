//! Benchmark contracts shipped with the tool.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BAZ: &str = include_str!("../../benchmarks/baz.mvc");
pub const FOO: &str = include_str!("../../benchmarks/foo.mvc");
pub const WALLET: &str = include_str!("../../benchmarks/wallet.mvc");
pub const NONLINEAR: &str = include_str!("../../benchmarks/nonlinear.mvc");

/// Number of generated linear-condition contracts.
pub const LINEAR_COUNT: usize = 10;

/// Looks up a built-in contract by name: `baz`, `foo`, `wallet`,
/// `nonlinear` or `linearN` for N in `0..LINEAR_COUNT`.
pub fn builtin(name: &str) -> Option<String> {
    match name {
        "baz" => Some(BAZ.to_owned()),
        "foo" => Some(FOO.to_owned()),
        "wallet" => Some(WALLET.to_owned()),
        "nonlinear" => Some(NONLINEAR.to_owned()),
        _ => {
            let n: usize = name.strip_prefix("linear")?.parse().ok()?;
            (n < LINEAR_COUNT).then(|| linear_contract(n))
        }
    }
}

pub fn builtin_names() -> Vec<String> {
    let mut v: Vec<String> = ["baz", "foo", "wallet", "nonlinear"].map(String::from).to_vec();
    v.extend((0..LINEAR_COUNT).map(|i| format!("linear{i}")));
    v
}

const OPS: [&str; 6] = ["==", "!=", "<", "<=", ">", ">="];
const COEFFS: [i64; 6] = [1, 1, 2, 3, -1, -4];
const UNIT_COEFFS: [i64; 2] = [1, -1];
const PARAMS: [&str; 3] = ["a", "b", "c"];

/// A condition `m * p + k OP t` whose flip points, on both sides, sit at
/// integer values of the parameter `p`. Ordered comparisons therefore use
/// unit coefficients.
fn condition(rng: &mut ChaCha8Rng) -> String {
    let p = PARAMS.choose(rng).unwrap();
    let op = *OPS.choose(rng).unwrap();
    let m = if op == "==" || op == "!=" {
        *COEFFS.choose(rng).unwrap()
    } else {
        *UNIT_COEFFS.choose(rng).unwrap()
    };
    let root: i64 = rng.gen_range(-5_000..=5_000);
    let k: i64 = rng.gen_range(-1_000..=1_000);
    let t = m * root + k;
    let lhs = match (m, k) {
        (1, 0) => p.to_string(),
        (1, k) => format!("{p} + {k}"),
        (m, 0) => format!("{m} * {p}"),
        (m, k) => format!("{m} * {p} + {k}"),
    };
    format!("{lhs} {op} {t}")
}

fn block(rng: &mut ChaCha8Rng, depth: usize, next_ret: &mut i64, out: &mut String) {
    let indent = "  ".repeat(depth + 2);
    let branches = if depth == 0 { 3 } else { rng.gen_range(1..=2) };
    for _ in 0..branches {
        writeln!(out, "{indent}if ({}) {{", condition(rng)).unwrap();
        if depth < 2 && rng.gen_bool(0.5) {
            block(rng, depth + 1, next_ret, out);
        }
        *next_ret += 1;
        writeln!(out, "{indent}  return {next_ret};").unwrap();
        writeln!(out, "{indent}}}").unwrap();
    }
}

/// The `n`-th generated contract: one function over three parameters with
/// nested branches whose conditions are affine in a single parameter.
pub fn linear_contract(n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11ea_0000 + n as u64);
    let mut body = String::new();
    let mut ret = 0;
    block(&mut rng, 0, &mut ret, &mut body);
    format!("contract Linear{n} {{\n  fn f(a, b, c) {{\n{body}    return 0;\n  }}\n}}\n")
}
