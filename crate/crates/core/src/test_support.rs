//! Shared fixtures and random-instance generators for the test suite.
//! Hidden from docs; not part of the public API surface.

use crate::model::{DecisionProblem, Experiment, JointExperiment, ProductSpace, Strategy};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

/// Two-asset portfolio instance: actions none / invest-1 / invest-2 /
/// invest-both with prior-weighted payoffs (0,0), (2,-1), (-1,2), (1,1),
/// and two conditionally binary sources, one informative about each state.
pub fn portfolio_instance() -> (DecisionProblem, Vec<Experiment>) {
    let problem = DecisionProblem::new(
        vec!["theta1".into(), "theta2".into()],
        vec![0.5, 0.5],
        vec![
            "none".into(),
            "invest-1".into(),
            "invest-2".into(),
            "invest-both".into(),
        ],
        vec![
            vec![0.0, 4.0, -2.0, 2.0],
            vec![0.0, -2.0, 4.0, 2.0],
        ],
    )
    .unwrap();
    let p1 = Experiment::new(
        "P1",
        vec!["1".into(), "0".into()],
        vec![vec![0.9, 0.1], vec![0.5, 0.5]],
    )
    .unwrap();
    let p2 = Experiment::new(
        "P2",
        vec!["1".into(), "0".into()],
        vec![vec![0.5, 0.5], vec![0.9, 0.1]],
    )
    .unwrap();
    (problem, vec![p1, p2])
}

/// Binary-action problem for asset 1 alone: invest pays (2, -1), skip pays 0.
pub fn asset1_problem() -> DecisionProblem {
    DecisionProblem::from_weighted(
        vec!["theta1".into(), "theta2".into()],
        vec!["skip".into(), "invest".into()],
        vec![vec![0.0, 2.0], vec![0.0, -1.0]],
    )
    .unwrap()
}

/// Three-action problem with payoffs (-1,2), (1,1), (2,-1); its canonical
/// increments are (2,-1) and (1,-2).
pub fn three_action_problem() -> DecisionProblem {
    DecisionProblem::from_weighted(
        vec!["theta1".into(), "theta2".into()],
        vec!["a1".into(), "a2".into(), "a3".into()],
        vec![vec![-1.0, 1.0, 2.0], vec![2.0, 1.0, -1.0]],
    )
    .unwrap()
}

/// Three-state instance: P_X separates theta3 from the rest, P_Y separates
/// theta1 from the rest. Acting pays (-2, 2, -2), passing pays 0, so either
/// source alone is worthless while the pair identifies theta2 exactly.
pub fn three_state_instance() -> (DecisionProblem, Vec<Experiment>) {
    let problem = DecisionProblem::new(
        vec!["theta1".into(), "theta2".into(), "theta3".into()],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec!["0".into(), "1".into()],
        vec![
            vec![0.0, -6.0],
            vec![0.0, 6.0],
            vec![0.0, -6.0],
        ],
    )
    .unwrap();
    let px = Experiment::new(
        "PX",
        vec!["x1".into(), "x2".into()],
        vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .unwrap();
    let py = Experiment::new(
        "PY",
        vec!["y1".into(), "y2".into()],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
    )
    .unwrap();
    (problem, vec![px, py])
}

/// The robust 2x2 table for the portfolio instance: invest in each asset iff
/// its own source reads high. Coupling-independent at value 2.6.
pub fn portfolio_table_strategy() -> Strategy {
    let space = ProductSpace::new(vec![2, 2]);
    Strategy::pure(space, vec![0, 1], 4, |coords| match (coords[0], coords[1]) {
        (0, 0) => 3,
        (0, 1) => 1,
        (1, 0) => 2,
        (1, 1) => 0,
        _ => unreachable!(),
    })
    .unwrap()
}

/// Seed-deterministic sample of couplings with the given marginals; the
/// first element is always the independent product.
pub fn sample_couplings(
    experiments: &[Experiment],
    count: usize,
    seed: u64,
) -> Vec<JointExperiment> {
    crate::oracle::sample_couplings(experiments, count, seed).unwrap()
}

/// Random row-stochastic kernel with no zero entries.
pub fn random_experiment(rng: &mut impl Rng, states: usize, signals: usize) -> Experiment {
    let between = Uniform::new(0.05f64, 1.0);
    let kernel = (0..states)
        .map(|_| {
            let mut row: Vec<f64> = (0..signals).map(|_| between.sample(rng)).collect();
            let sum: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= sum;
            }
            // Pin the row sum to exactly 1 so input validation is exact.
            let tail: f64 = row[..signals - 1].iter().sum();
            row[signals - 1] = 1.0 - tail;
            row
        })
        .collect();
    let labels = (0..signals).map(|y| format!("s{y}")).collect();
    Experiment::new(format!("R{}", rng.gen::<u16>()), labels, kernel).unwrap()
}

/// Random binary-state instance: a problem with `actions` actions and
/// utilities in [-3, 3], plus `m` random experiments of `signals` signals.
pub fn random_binary_instance(
    rng: &mut impl Rng,
    m: usize,
    actions: usize,
    signals: usize,
) -> (DecisionProblem, Vec<Experiment>) {
    let between = Uniform::new(-3.0f64, 3.0);
    let weighted: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..actions).map(|_| between.sample(rng)).collect())
        .collect();
    let labels = (0..actions).map(|a| format!("a{a}")).collect();
    let problem = DecisionProblem::from_weighted(
        vec!["theta1".into(), "theta2".into()],
        labels,
        weighted,
    )
    .unwrap();
    let experiments = (0..m)
        .map(|_| random_experiment(rng, 2, signals))
        .collect();
    (problem, experiments)
}
