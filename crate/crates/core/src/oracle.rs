//! Independent brute-force verifiers: a structurally distinct max-form
//! solver, a deterministic-strategy lower bound, and a sampled-coupling
//! upper bound. Used to cross-validate the production solvers.

use crate::decompose::{weak_decomposition, Provenance};
use crate::error::{Error, Result};
use crate::model::{
    bayes_value, composite_label, validate_instance, DecisionProblem, Experiment,
    JointExperiment, ProductSpace, Strategy,
};
use crate::robust::{nature_best_response, robust_value};
use crate::VALUE_TOL;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_CELL_CAP: usize = 4096;
const ENUMERATION_CAP: u128 = 4096;

/// Result of running the oracle suite against one instance.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub instance: String,
    pub main_value: f64,
    pub oracle_value: f64,
    pub gap: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub pass: bool,
}

/// Maxmin value via the joint strategy/potential LP (max-form), structurally
/// distinct from the min-form worst-case-joint route.
pub fn oracle_value(experiments: &[Experiment], problem: &DecisionProblem) -> Result<f64> {
    let d = weak_decomposition(experiments, problem, ORACLE_CELL_CAP)?;
    let Provenance::Weak { dual_objective, .. } = d.provenance else {
        unreachable!();
    };
    Ok(dual_objective)
}

// One coupling per state: greedy transportation fill over the product cells
// in the given order. Any single pass exhausts the marginal mass.
fn greedy_coupling(
    experiments: &[Experiment],
    space: &ProductSpace,
    order: &[usize],
) -> Vec<Vec<f64>> {
    let states = experiments[0].state_count();
    let mut kernel = vec![vec![0.0; space.cells()]; states];
    for theta in 0..states {
        let mut remaining: Vec<Vec<f64>> = experiments
            .iter()
            .map(|e| e.row(theta).to_vec())
            .collect();
        for &cell in order {
            let coords = space.unrank(cell);
            let mass = coords
                .iter()
                .enumerate()
                .map(|(j, &y)| remaining[j][y])
                .fold(f64::INFINITY, f64::min);
            if mass <= 0.0 {
                continue;
            }
            kernel[theta][cell] = mass;
            for (j, &y) in coords.iter().enumerate() {
                remaining[j][y] -= mass;
            }
        }
    }
    kernel
}

fn independent_product(experiments: &[Experiment], space: &ProductSpace) -> Vec<Vec<f64>> {
    let states = experiments[0].state_count();
    (0..states)
        .map(|theta| {
            space
                .iter()
                .map(|coords| {
                    coords
                        .iter()
                        .enumerate()
                        .map(|(j, &y)| experiments[j].prob(theta, y))
                        .product()
                })
                .collect()
        })
        .collect()
}

/// Seed-deterministic sample of couplings with the given marginals. The
/// first element is the independent product, the second the aligned greedy
/// coupling (the diagonal when the marginals are identical), the rest
/// greedy fills over random cell orders.
pub fn sample_couplings(
    experiments: &[Experiment],
    count: usize,
    seed: u64,
) -> Result<Vec<JointExperiment>> {
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    let space = ProductSpace::from_experiments(experiments);
    let labels: Vec<String> = space
        .iter()
        .map(|coords| composite_label(experiments, &coords))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joints = Vec::with_capacity(count);
    for sample in 0..count {
        let kernel = match sample {
            0 => independent_product(experiments, &space),
            1 => {
                // Aligned order: cells with equal coordinates first.
                let mut order: Vec<usize> = (0..space.cells()).collect();
                order.sort_by_key(|&cell| {
                    let coords = space.unrank(cell);
                    let spread = coords.iter().max().unwrap() - coords.iter().min().unwrap();
                    (spread, cell)
                });
                greedy_coupling(experiments, &space, &order)
            }
            _ => {
                let mut order: Vec<usize> = (0..space.cells()).collect();
                order.shuffle(&mut rng);
                greedy_coupling(experiments, &space, &order)
            }
        };
        let joint = Experiment::from_computed(format!("coupling-{sample}"), labels.clone(), kernel)?;
        joints.push(JointExperiment::new(experiments.to_vec(), joint)?);
    }
    Ok(joints)
}

/// Upper bound on the maxmin: the smallest Bayes value over sampled
/// couplings (Nature restricted to a finite menu can only do worse).
pub fn sampled_coupling_bound(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for joint in sample_couplings(experiments, samples.max(1), seed)? {
        best = best.min(bayes_value(&joint.joint, problem)?);
    }
    Ok(best)
}

fn pure_strategy_value(
    choice: &[usize],
    space: &ProductSpace,
    experiments: &[Experiment],
    problem: &DecisionProblem,
) -> Result<f64> {
    let strategy = Strategy::pure(space.clone(), (0..experiments.len()).collect(),
        problem.action_count(), |coords| choice[space.index(coords)])?;
    let (_, v) = nature_best_response(&strategy, experiments, problem, ORACLE_CELL_CAP)?;
    Ok(v)
}

/// Lower bound on the maxmin: the best worst-case value over deterministic
/// strategies — enumerated exhaustively when the strategy space is small,
/// otherwise a seeded sample of best responses to sampled couplings plus
/// random tables.
pub fn deterministic_bound(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let space = ProductSpace::from_experiments(experiments);
    let cells = space.cells();
    if cells > 1024 {
        return Err(Error::InstanceTooLarge { cells, cap: 1024 });
    }
    let n = problem.action_count();
    let total = (n as u128).checked_pow(cells as u32);
    let mut best = f64::NEG_INFINITY;
    match total {
        Some(total) if total <= ENUMERATION_CAP => {
            let mut choice = vec![0usize; cells];
            for mut code in 0..total {
                for slot in choice.iter_mut() {
                    *slot = (code % n as u128) as usize;
                    code /= n as u128;
                }
                best = best.max(pure_strategy_value(&choice, &space, experiments, problem)?);
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let couplings = sample_couplings(experiments, samples.max(2), seed ^ 0x9e37)?;
            for (i, joint) in couplings.iter().enumerate().take(samples.max(2)) {
                // Best response to a fixed coupling, per cell.
                let choice: Vec<usize> = (0..cells)
                    .map(|cell| {
                        let mut best_a = 0;
                        let mut best_score = f64::NEG_INFINITY;
                        for a in 0..n {
                            let score: f64 = (0..problem.state_count())
                                .map(|t| joint.joint.prob(t, cell) * problem.u(t, a))
                                .sum();
                            if score > best_score + 1e-12 {
                                best_a = a;
                                best_score = score;
                            }
                        }
                        best_a
                    })
                    .collect();
                best = best.max(pure_strategy_value(&choice, &space, experiments, problem)?);
                if i + 1 >= samples {
                    break;
                }
            }
            for _ in 0..samples {
                let choice: Vec<usize> = (0..cells).map(|_| rng.gen_range(0..n)).collect();
                best = best.max(pure_strategy_value(&choice, &space, experiments, problem)?);
            }
        }
    }
    Ok(best)
}

/// Full oracle suite against one instance.
pub fn run_checks(
    instance: impl Into<String>,
    experiments: &[Experiment],
    problem: &DecisionProblem,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<OracleReport> {
    validate_instance(problem, experiments)?;
    let main_value = robust_value(experiments, problem, cap)?;
    let oracle = oracle_value(experiments, problem)?;
    let lower = deterministic_bound(experiments, problem, samples, seed)?;
    let upper = sampled_coupling_bound(experiments, problem, samples, seed)?;
    let gap = (main_value - oracle).abs();
    let pass =
        gap <= VALUE_TOL && lower <= main_value + VALUE_TOL && upper >= main_value - VALUE_TOL;
    Ok(OracleReport {
        instance: instance.into(),
        main_value,
        oracle_value: oracle,
        gap,
        lower_bound: lower,
        upper_bound: upper,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::*;
    use crate::DEFAULT_CELL_CAP;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn oracle_values_match_the_fixtures() {
        let (problem, experiments) = portfolio_instance();
        assert!((oracle_value(&experiments, &problem).unwrap() - 2.6).abs() < VALUE_TOL);
        let single = oracle_value(&experiments[..1], &problem).unwrap();
        assert!((single - 2.3).abs() < VALUE_TOL);

        let (problem3, experiments3) = three_state_instance();
        assert!((oracle_value(&experiments3, &problem3).unwrap() - 2.0).abs() < VALUE_TOL);
    }

    #[test]
    fn sampled_couplings_have_exact_marginals() {
        let (_, experiments) = portfolio_instance();
        for joint in super::sample_couplings(&experiments, 30, 101).unwrap() {
            assert!(joint.max_marginal_error <= 1e-8);
        }
    }

    #[test]
    fn aligned_sample_is_the_diagonal_for_identical_marginals() {
        let (problem, experiments) = portfolio_instance();
        let p = experiments[0].clone();
        let pair = vec![p.clone(), p.clone()];
        let joints = super::sample_couplings(&pair, 2, 5).unwrap();
        let diagonal = &joints[1];
        let space = diagonal.space();
        for theta in 0..2 {
            for (cell, coords) in space.iter().enumerate() {
                let want = if coords[0] == coords[1] {
                    p.prob(theta, coords[0])
                } else {
                    0.0
                };
                assert!((diagonal.joint.prob(theta, cell) - want).abs() < 1e-12);
            }
        }
        // The diagonal coupling attains the single-source value.
        let bound = sampled_coupling_bound(&pair, &problem, 2, 5).unwrap();
        let single = crate::model::bayes_value(&p, &problem).unwrap();
        assert!(bound <= single + VALUE_TOL);
    }

    #[test]
    fn portfolio_bounds_bracket_the_value() {
        let (problem, experiments) = portfolio_instance();
        let upper = sampled_coupling_bound(&experiments, &problem, 200, 7).unwrap();
        assert!(upper >= 2.6 - VALUE_TOL);
        let lower = deterministic_bound(&experiments, &problem, 16, 7).unwrap();
        assert!((lower - 2.6).abs() < VALUE_TOL);
    }

    #[test]
    fn single_source_bounds_collapse_to_the_bayes_value() {
        let (problem, experiments) = portfolio_instance();
        let single = &experiments[..1];
        let upper = sampled_coupling_bound(single, &problem, 10, 3).unwrap();
        assert!((upper - 2.3).abs() < VALUE_TOL);
        let uninformative = [crate::model::Experiment::uninformative("u", 2)];
        let lower = deterministic_bound(&uninformative, &problem, 8, 3).unwrap();
        assert!((lower - problem.no_information_value()).abs() < VALUE_TOL);
    }

    #[test]
    fn report_passes_on_fixtures_and_random_instances() {
        let (problem, experiments) = portfolio_instance();
        let report =
            run_checks("portfolio", &experiments, &problem, 32, 11, DEFAULT_CELL_CAP).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.gap <= VALUE_TOL);

        let (problem3, experiments3) = three_state_instance();
        let report3 =
            run_checks("three-state", &experiments3, &problem3, 32, 11, DEFAULT_CELL_CAP).unwrap();
        assert!(report3.pass, "{report3:?}");

        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for trial in 0..20 {
            let (problem, experiments) = random_binary_instance(&mut rng, 2, 3, 3);
            let report = run_checks(
                format!("random-{trial}"),
                &experiments,
                &problem,
                16,
                trial as u64,
                DEFAULT_CELL_CAP,
            )
            .unwrap();
            assert!(report.pass, "{report:?}");
        }
    }

    #[test]
    fn oracle_and_min_form_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for trial in 0..50 {
            let (problem, experiments) = random_binary_instance(&mut rng, 2, 4, 3);
            let min_form = robust_value(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
            let max_form = oracle_value(&experiments, &problem).unwrap();
            assert!(
                (min_form - max_form).abs() <= VALUE_TOL,
                "trial {trial}: {min_form} vs {max_form}"
            );
        }
    }
}
