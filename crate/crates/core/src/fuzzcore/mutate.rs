use rand::seq::SliceRandom;
use rand::Rng;

use super::testcase::{ScalarRef, TestCase};
use crate::minivm::{Value, ACCOUNTS};

/// Value-level mutation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMutation {
    /// Add or subtract a small amount in `[1, 32]`.
    Delta,
    BitFlip,
    Interesting,
    Random,
}

/// Relative weights of the value mutations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationWeights {
    pub delta: u32,
    pub bit_flip: u32,
    pub interesting: u32,
    pub random: u32,
}

impl Default for MutationWeights {
    fn default() -> Self {
        Self {
            delta: 90,
            bit_flip: 3,
            interesting: 5,
            random: 2,
        }
    }
}

/// Mutates single scalars of test cases.
#[derive(Debug, Clone)]
pub struct Mutator {
    pub weights: MutationWeights,
    interesting: Vec<Value>,
}

fn builtin_interesting() -> Vec<Value> {
    let mut v = vec![0, 1, -1, Value::MIN, Value::MAX];
    for k in 1..63 {
        v.push(1 << k);
        v.push(-(1 << k));
    }
    v
}

impl Mutator {
    /// A mutator whose interesting values include `literals` (and their
    /// neighbours) when `harvest` is set.
    pub fn new(literals: &[Value], harvest: bool) -> Self {
        let mut interesting = builtin_interesting();
        if harvest {
            for &l in literals {
                interesting.extend([l, l.wrapping_add(1), l.wrapping_sub(1)]);
            }
        }
        interesting.sort_unstable();
        interesting.dedup();
        Self {
            weights: MutationWeights::default(),
            interesting,
        }
    }

    pub fn interesting_values(&self) -> &[Value] {
        &self.interesting
    }

    fn pick_mutation(&self, rng: &mut impl Rng) -> ValueMutation {
        let w = self.weights;
        let total = w.delta + w.bit_flip + w.interesting + w.random;
        let mut r = rng.gen_range(0..total.max(1));
        for (weight, m) in [
            (w.delta, ValueMutation::Delta),
            (w.bit_flip, ValueMutation::BitFlip),
            (w.interesting, ValueMutation::Interesting),
        ] {
            if r < weight {
                return m;
            }
            r -= weight;
        }
        ValueMutation::Random
    }

    /// Applies one mutation to `v`; the result always differs from `v`.
    pub fn mutate_value(&self, v: Value, rng: &mut impl Rng) -> Value {
        for _ in 0..4 {
            let out = match self.pick_mutation(rng) {
                ValueMutation::Delta => {
                    let d = rng.gen_range(1..=32);
                    if rng.gen() {
                        v.wrapping_add(d)
                    } else {
                        v.wrapping_sub(d)
                    }
                }
                ValueMutation::BitFlip => v ^ (1 << rng.gen_range(0..64)),
                ValueMutation::Interesting => *self.interesting.choose(rng).expect("non-empty"),
                ValueMutation::Random => rng.gen(),
            };
            if out != v {
                return out;
            }
        }
        v.wrapping_add(1)
    }

    /// Mutates exactly one scalar of `test`, chosen uniformly.
    pub fn fuzz_input(&self, test: &TestCase, rng: &mut impl Rng) -> (TestCase, ScalarRef) {
        let scalars = test.scalars();
        let s = *scalars.choose(rng).expect("every test case has a sender scalar");
        let new = match s {
            ScalarRef::Sender { .. } => {
                let cur = test.get(s).unwrap_or(0);
                let others: Vec<Value> = (0..ACCOUNTS.len() as Value).filter(|&i| i != cur).collect();
                *others.choose(rng).expect("more than one account")
            }
            _ => self.mutate_value(test.get(s).unwrap_or(0), rng),
        };
        let out = test.with(s, new).expect("scalar exists and value is valid");
        (out, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minivm::Transaction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mutated_value_always_changes() {
        let m = Mutator::new(&[42], true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in [0, 1, -1, 42, Value::MIN, Value::MAX] {
            for _ in 0..2000 {
                assert_ne!(m.mutate_value(v, &mut rng), v);
            }
        }
    }

    #[test]
    fn harvested_literals_are_interesting_only_when_enabled() {
        assert!(Mutator::new(&[42], true).interesting_values().contains(&42));
        assert!(!Mutator::new(&[42], false).interesting_values().contains(&42));
    }

    #[test]
    fn each_operator_is_exercised() {
        let m = Mutator::new(&[], false);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut small, mut large) = (0, 0);
        for _ in 0..1000 {
            let d = m.mutate_value(0, &mut rng);
            if d.unsigned_abs() <= 32 {
                small += 1;
            } else {
                large += 1;
            }
        }
        assert!(small > 400 && large > 100, "{small} {large}");
    }

    #[test]
    fn fuzz_input_changes_exactly_one_scalar() {
        let m = Mutator::new(&[], false);
        let t = TestCase::new(vec![
            Transaction::new("f", vec![1, 2, 3], 0),
            Transaction::new("g", vec![4], 2),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (u, s) = m.fuzz_input(&t, &mut rng);
            assert_eq!(t.single_delta(&u), Some(s));
            assert!(u.sequence.iter().all(|tx| (tx.sender as usize) < ACCOUNTS.len()));
        }
    }
}
