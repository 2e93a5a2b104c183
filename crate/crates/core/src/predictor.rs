//! Secant-based input prediction.
//!
//! Two executions that differ in a single scalar give two points on the
//! curve "cost of metric m as a function of that scalar". Fitting a line
//! through them and solving for zero proposes a value that should flip the
//! branch (or hit the attack slot). The prediction can then be refined by
//! repeating the step with the newest two points.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::metrics::{CostVector, MetricId};
use crate::minivm::Value;

/// One observation: the value of the varied scalar and the cost it produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataPoint {
    pub input: Value,
    pub cost: u64,
}

impl DataPoint {
    pub const fn new(input: Value, cost: u64) -> Self {
        Self { input, cost }
    }
}

/// Root of the line through `p0` and `p1`, rounded half away from zero.
///
/// Returns `None` when the line is flat or when the root rounds to one of
/// the two inputs already tried.
pub fn secant_root(p0: DataPoint, p1: DataPoint) -> Option<Value> {
    if p0.cost == p1.cost || p0.input == p1.input {
        return None;
    }
    let (i0, i1) = (BigInt::from(p0.input), BigInt::from(p1.input));
    let (c0, c1) = (BigInt::from(p0.cost), BigInt::from(p1.cost));
    // i1 - c1 (i1 - i0) / (c1 - c0) == (c1 i0 - c0 i1) / (c1 - c0)
    let num = &c1 * &i0 - &c0 * &i1;
    let den = &c1 - &c0;
    let q = (BigInt::from(2) * num.abs() + den.abs()) / (BigInt::from(2) * den.abs());
    let q = if num.is_negative() != den.is_negative() && !num.is_zero() {
        -q
    } else {
        q
    };
    let root = q
        .to_i64()
        .unwrap_or(if q.is_negative() { Value::MIN } else { Value::MAX });
    (root != p0.input && root != p1.input).then_some(root)
}

/// Metrics usable for a prediction: reached in both runs, non-zero in both,
/// and different.
pub fn eligible_metrics(cost: &CostVector, cost2: &CostVector) -> Vec<MetricId> {
    cost.iter()
        .filter_map(|(m, c)| {
            let c2 = cost2.get(m)?;
            (c > 0 && c2 > 0 && c != c2).then_some(m)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction<S> {
    pub scalar: S,
    pub value: Value,
    pub metric: MetricId,
    pub points: [DataPoint; 2],
}

/// Proposes a new value for `scalar` from two runs that differ only there.
///
/// `choose` picks one of the eligible metrics by index; it is only called
/// when at least one metric is eligible.
pub fn predict<S: Copy>(
    scalar: S,
    (v0, cost0): (Value, &CostVector),
    (v1, cost1): (Value, &CostVector),
    choose: impl FnOnce(&[MetricId]) -> usize,
) -> Option<Prediction<S>> {
    let eligible = eligible_metrics(cost0, cost1);
    if eligible.is_empty() {
        return None;
    }
    let metric = eligible[choose(&eligible)];
    let points = [
        DataPoint::new(v0, cost0.get(metric)?),
        DataPoint::new(v1, cost1.get(metric)?),
    ];
    let value = secant_root(points[0], points[1])?;
    Some(Prediction {
        scalar,
        value,
        metric,
        points,
    })
}

/// An in-flight prediction that may be refined by further Secant steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionGoal<S> {
    pub scalar: S,
    pub metric: MetricId,
    pub points: [DataPoint; 2],
    /// The value currently being tried.
    pub pending: Value,
    pub iterations_left: u32,
    /// 1 for the first shot, incremented on every refinement.
    pub step: u32,
}

impl<S: Copy> PredictionGoal<S> {
    /// Starts a goal for a fresh prediction allowed `max_iterations` Secant
    /// steps in total (the initial one included).
    pub fn start(p: &Prediction<S>, max_iterations: u32) -> Self {
        Self {
            scalar: p.scalar,
            metric: p.metric,
            points: p.points,
            pending: p.value,
            iterations_left: max_iterations.saturating_sub(1),
            step: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalStep<S> {
    /// The pending value drove the metric to zero.
    Satisfied,
    /// Out of iterations, unreachable metric, or no further root.
    Abandoned,
    Next(PredictionGoal<S>),
}

/// Feeds the cost observed for the goal's pending value back into the goal.
///
/// `observed` is `None` when the run no longer reached the metric.
pub fn advance_goal<S: Copy>(goal: PredictionGoal<S>, observed: Option<u64>) -> GoalStep<S> {
    let Some(cost) = observed else {
        return GoalStep::Abandoned;
    };
    if cost == 0 {
        return GoalStep::Satisfied;
    }
    if goal.iterations_left == 0 {
        return GoalStep::Abandoned;
    }
    let points = [goal.points[1], DataPoint::new(goal.pending, cost)];
    match secant_root(points[0], points[1]) {
        Some(value) => GoalStep::Next(PredictionGoal {
            points,
            pending: value,
            iterations_left: goal.iterations_left - 1,
            step: goal.step + 1,
            ..goal
        }),
        None => GoalStep::Abandoned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricKind;
    use crate::minivm::SourceLoc;
    use proptest::prelude::*;

    fn m(line: u32) -> MetricId {
        MetricId::new(SourceLoc::new(line, 1), MetricKind::FlipToTrue)
    }

    fn dp(i: Value, c: u64) -> DataPoint {
        DataPoint::new(i, c)
    }

    #[test]
    fn equality_root() {
        assert_eq!(secant_root(dp(-1, 43), dp(7, 35)), Some(42));
    }

    #[test]
    fn less_than_root() {
        assert_eq!(secant_root(dp(0, 3), dp(-3, 6)), Some(3));
    }

    #[test]
    fn flat_line_has_no_root() {
        assert_eq!(secant_root(dp(5, 4), dp(9, 4)), None);
    }

    #[test]
    fn root_equal_to_a_tried_input_is_declined() {
        // c = 2i, points (0,0) is already the root
        assert_eq!(secant_root(dp(0, 0), dp(3, 6)), None);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(secant_root(dp(0, 2), dp(1, 1)), Some(2));
        // slope -2, through (0,5): root 2.5 -> 3
        assert_eq!(secant_root(dp(0, 5), dp(1, 3)), Some(3));
        // mirrored: through (0,5), (-1,3): root -2.5 -> -3
        assert_eq!(secant_root(dp(0, 5), dp(-1, 3)), Some(-3));
        // root 2.4 -> 2 (slope -5, through (0,12))
        assert_eq!(secant_root(dp(0, 12), dp(1, 7)), Some(2));
    }

    #[test]
    fn far_roots_clamp_to_the_value_domain() {
        assert_eq!(secant_root(dp(0, u64::MAX), dp(1, u64::MAX - 1)), Some(Value::MAX));
        assert_eq!(secant_root(dp(0, u64::MAX), dp(-1, u64::MAX - 1)), Some(Value::MIN));
    }

    #[test]
    fn quartic_converges_by_iteration() {
        let k: i128 = 123i128.pow(4) + 123i128.pow(2);
        let cost = |a: Value| ((a as i128).pow(4) + (a as i128).pow(2) - k).unsigned_abs() as u64;
        let first = predict(0u8, (0, &cv(1, cost(0))), (128, &cv(1, cost(128))), |_| 0).unwrap();
        assert_ne!(cost(first.value), 0);
        let mut goal = PredictionGoal::start(&first, 5);
        let mut tried = vec![goal.pending];
        loop {
            match advance_goal(goal, Some(cost(goal.pending))) {
                GoalStep::Satisfied => break,
                GoalStep::Next(g) => {
                    goal = g;
                    tried.push(g.pending);
                }
                GoalStep::Abandoned => panic!("abandoned after {tried:?}"),
            }
        }
        assert_eq!(goal.pending, 123);
        assert!(goal.step > 1);
        // with a single permitted step the goal gives up immediately
        let one = PredictionGoal::start(&first, 1);
        assert_eq!(advance_goal(one, Some(cost(one.pending))), GoalStep::Abandoned);
    }

    fn cv(line: u32, c: u64) -> CostVector {
        std::iter::once((m(line), c)).collect()
    }

    #[test]
    fn eligibility_rules() {
        let a: CostVector = [(m(4), 6), (m(7), 3), (m(8), 0)].into_iter().collect();
        let b: CostVector = [(m(4), 3), (m(7), 0), (m(8), 1), (m(13), 43)].into_iter().collect();
        assert_eq!(eligible_metrics(&a, &b), vec![m(4)]);
        assert!(eligible_metrics(&a, &a).is_empty());
        let p = predict('b', (0, &a), (3, &b), |e| {
            assert_eq!(e.len(), 1);
            0
        })
        .unwrap();
        assert_eq!((p.scalar, p.value, p.metric), ('b', 6, m(4)));
    }

    #[test]
    fn satisfied_and_unreached_goals_end() {
        let p = predict(0u8, (-1, &cv(1, 43)), (7, &cv(1, 35)), |_| 0).unwrap();
        let g = PredictionGoal::start(&p, 5);
        assert_eq!(advance_goal(g, Some(0)), GoalStep::Satisfied);
        assert_eq!(advance_goal(g, None), GoalStep::Abandoned);
    }

    proptest! {
        #[test]
        fn affine_relations_are_solved_in_one_step(
            slope in (1i64..1000).prop_flat_map(|s| prop_oneof![Just(s), Just(-s)]),
            root in -1_000_000i64..1_000_000,
            i0 in -1_000_000i64..1_000_000,
            d in 1i64..1000,
        ) {
            let c = |i: i64| (slope * (i - root)).unsigned_abs();
            // both points on the same side so the absolute value is affine
            let (a, b) = if i0 > root { (i0, i0 + d) } else { (i0, i0 - d) };
            prop_assume!(a != root);
            let got = secant_root(dp(a, c(a)), dp(b, c(b)));
            prop_assert_eq!(got, Some(root));
        }

        #[test]
        fn never_returns_a_tried_input(i0 in any::<i64>(), c0 in any::<u64>(), i1 in any::<i64>(), c1 in any::<u64>()) {
            prop_assume!(i0 != i1);
            if let Some(r) = secant_root(dp(i0, c0), dp(i1, c1)) {
                prop_assert!(r != i0 && r != i1);
            }
        }
    }
}
