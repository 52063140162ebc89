//! Top-level maxmin value and strategy synthesis, with worst-case
//! certificates computed by an independent best-response LP.
//!
//! Three production paths, dispatched on the instance shape:
//! binary state + binary action (follow the single best source), binary
//! state (canonical decomposition and threshold assembly), and general
//! finite states (the joint strategy/potential LP).

use crate::blackwell::{blackwell_supremum, worst_case_joint};
use crate::decompose::{
    canonical_decomposition, dominating_mixed_action, Decomposition, Provenance,
};
use crate::error::{Error, Result};
use crate::linprog::{self, LpProblem, LpStatus};
use crate::model::{
    bayes_strategy_weighted, bayes_value, bayes_value_weighted, validate_instance,
    DecisionProblem, Experiment, JointExperiment, ProductSpace, Strategy,
};
use crate::{decompose::weak_decomposition, VALUE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BinaryAction,
    CanonicalAssembly,
    DualLp,
}

/// A robustly optimal strategy together with its value and the value of
/// Nature's best response to it.
#[derive(Debug, Clone)]
pub struct RobustSolution {
    pub value: f64,
    pub strategy: Strategy,
    pub certificate_value: f64,
    pub method: Method,
    pub decomposition: Option<Decomposition>,
    pub worst_case: JointExperiment,
}

/// Maxmin value over the coupling polytope, via the worst-case-joint LP.
/// For binary states the value is cross-checked against the Blackwell
/// supremum envelope.
pub fn robust_value(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    cap: usize,
) -> Result<f64> {
    validate_instance(problem, experiments)?;
    let (_, value) = worst_case_joint(experiments, problem, cap)?;
    if problem.state_count() == 2 {
        let env = envelope_value(experiments, problem)?;
        if (env - value).abs() > VALUE_TOL {
            return Err(Error::Numerical(format!(
                "worst-case LP value {value} disagrees with envelope value {env}"
            )));
        }
    }
    Ok(value)
}

/// Fast maxmin value for binary states: the Bayes value of the Blackwell
/// supremum. Equal to [`robust_value`] but avoids the product-space LP.
pub fn envelope_value(experiments: &[Experiment], problem: &DecisionProblem) -> Result<f64> {
    let sup = blackwell_supremum(experiments)?;
    bayes_value(&sup, problem)
}

/// `argmax_j bayes_value(P_j, problem)`, ties to the lowest index.
pub fn best_single_source(
    experiments: &[Experiment],
    problem: &DecisionProblem,
) -> Result<(usize, f64)> {
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    validate_instance(problem, experiments)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (j, e) in experiments.iter().enumerate() {
        let v = bayes_value(e, problem)?;
        if v > best.1 + 1e-12 {
            best = (j, v);
        }
    }
    Ok(best)
}

/// Nature's best response to a fixed strategy: the coupling minimizing the
/// strategy's expected payoff, found by LP over the marginal constraints.
pub fn nature_best_response(
    strategy: &Strategy,
    experiments: &[Experiment],
    problem: &DecisionProblem,
    cap: usize,
) -> Result<(JointExperiment, f64)> {
    let space = ProductSpace::from_experiments(experiments);
    if space != strategy.space {
        return Err(Error::DimensionMismatch(
            "strategy is not defined on the experiments' product space".into(),
        ));
    }
    let cells = space.cells();
    if cells > cap {
        return Err(Error::InstanceTooLarge { cells, cap });
    }
    let states = problem.state_count();
    let p_var = |theta: usize, cell: usize| theta * cells + cell;
    let mut objective = vec![0.0; states * cells];
    for theta in 0..states {
        for cell in 0..cells {
            objective[p_var(theta, cell)] = strategy
                .row(cell)
                .iter()
                .enumerate()
                .map(|(a, w)| w * problem.u(theta, a))
                .sum();
        }
    }
    let mut lp = LpProblem::minimize(objective);
    for (j, e) in experiments.iter().enumerate() {
        for theta in 0..states {
            for y in 0..e.signal_count() {
                let mut row = vec![0.0; states * cells];
                for cell in 0..cells {
                    if space.unrank(cell)[j] == y {
                        row[p_var(theta, cell)] = 1.0;
                    }
                }
                lp.add_eq(row, e.prob(theta, y));
            }
        }
    }
    let sol = linprog::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "best-response LP finished with status {:?}",
            sol.status
        )));
    }
    let labels: Vec<String> = space
        .iter()
        .map(|coords| crate::model::composite_label(experiments, &coords))
        .collect();
    let kernel: Vec<Vec<f64>> = (0..states)
        .map(|theta| (0..cells).map(|c| sol.primal[p_var(theta, c)]).collect())
        .collect();
    let joint = Experiment::from_computed("best-response", labels, kernel)?;
    let joint = JointExperiment::new(experiments.to_vec(), joint)?;
    Ok((joint, sol.objective))
}

// Per-subproblem winners of the canonical decomposition: for each increment
// problem, the best source index, its value, and its take/leave rule per
// signal of that source.
struct CanonicalPlan {
    decomposition: Decomposition,
    winners: Vec<usize>,
    take: Vec<Vec<bool>>,
    value: f64,
}

fn canonical_plan(experiments: &[Experiment], problem: &DecisionProblem) -> Result<CanonicalPlan> {
    let decomposition = canonical_decomposition(problem)?;
    let Provenance::Canonical { base, .. } = &decomposition.provenance else {
        unreachable!();
    };
    let shift_sum: f64 = base.shift.iter().sum();
    let mut winners = Vec::new();
    let mut winner_values = Vec::new();
    let mut take = Vec::new();
    for sub in &decomposition.subproblems {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, e) in experiments.iter().enumerate() {
            let v = bayes_value_weighted(e, &sub.utilities);
            if v > best.1 + 1e-12 {
                best = (j, v);
            }
        }
        let choice = bayes_strategy_weighted(&experiments[best.0], &sub.utilities);
        take.push(choice.into_iter().map(|a| a == 1).collect());
        winners.push(best.0);
        winner_values.push(best.1);
    }
    let value = shift_sum + winner_values.iter().sum::<f64>();
    Ok(CanonicalPlan {
        decomposition,
        winners,
        take,
        value,
    })
}

// Action assignment for one composite cell of the canonical assembly: a
// (possibly mixed) action whose payoff dominates the accumulated target.
// Pure actions are preferred, with minimal total slack and ties to the
// lowest index, so polytope vertices map back to the original action.
fn dominating_row(problem: &DecisionProblem, target: &[f64]) -> Result<Vec<f64>> {
    let n = problem.action_count();
    let states = problem.state_count();
    let mut best: Option<(f64, usize)> = None;
    for a in 0..n {
        let payoff = problem.payoff(a);
        if (0..states).all(|t| payoff[t] >= target[t] - 1e-9) {
            let slack: f64 = (0..states).map(|t| payoff[t] - target[t]).sum();
            if best.map_or(true, |(s, _)| slack < s - 1e-12) {
                best = Some((slack, a));
            }
        }
    }
    if let Some((_, a)) = best {
        let mut row = vec![0.0; n];
        row[a] = 1.0;
        return Ok(row);
    }
    dominating_mixed_action(problem, target)
}

/// Robustly optimal strategy, value, and certificate.
pub fn robust_strategy(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    cap: usize,
) -> Result<RobustSolution> {
    validate_instance(problem, experiments)?;
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    let space = ProductSpace::from_experiments(experiments);
    let binary_state = problem.state_count() == 2;

    let (strategy, method, decomposition, value) = if binary_state
        && problem.action_count() == 2
    {
        // Single best source, best-responded signal by signal.
        let (j, v) = best_single_source(experiments, problem)?;
        let choice = bayes_strategy_weighted(&experiments[j], problem.weighted());
        let strategy = Strategy::pure(space, vec![j], 2, |coords| choice[coords[j]])?;
        (strategy, Method::BinaryAction, None, v)
    } else if binary_state {
        // Canonical assembly: per-subproblem threshold rules summed into a
        // target payoff, dominated cell by cell.
        let plan = canonical_plan(experiments, problem)?;
        let Provenance::Canonical { base, increments } = &plan.decomposition.provenance else {
            unreachable!();
        };
        let mut sources: Vec<usize> = plan.winners.clone();
        sources.sort_unstable();
        sources.dedup();
        let mut table = Vec::with_capacity(space.cells());
        for coords in space.iter() {
            let mut target = base.shift;
            for (l, inc) in increments.iter().enumerate() {
                if plan.take[l][coords[plan.winners[l]]] {
                    target[0] += inc[0];
                    target[1] += inc[1];
                }
            }
            table.push(dominating_row(problem, &target)?);
        }
        let strategy = Strategy::new(space, sources, problem.action_count(), table)?;
        (
            strategy,
            Method::CanonicalAssembly,
            Some(plan.decomposition),
            plan.value,
        )
    } else {
        let d = weak_decomposition(experiments, problem, cap)?;
        let Provenance::Weak {
            strategy,
            dual_objective,
            ..
        } = &d.provenance
        else {
            unreachable!();
        };
        let (strategy, value) = (strategy.clone(), *dual_objective);
        (strategy, Method::DualLp, Some(d), value)
    };

    let (worst_case, certificate_value) =
        nature_best_response(&strategy, experiments, problem, cap)?;
    if (certificate_value - value).abs() > VALUE_TOL {
        return Err(Error::Numerical(format!(
            "certificate {certificate_value} deviates from claimed value {value}"
        )));
    }
    Ok(RobustSolution {
        value,
        strategy,
        certificate_value,
        method,
        decomposition,
        worst_case,
    })
}

/// `V(all sources) - V(all sources except j)`, with the canonical
/// subproblems in which source `j` strictly beats every other source.
pub fn marginal_contribution(
    j: usize,
    experiments: &[Experiment],
    problem: &DecisionProblem,
) -> Result<(f64, Vec<usize>)> {
    if problem.state_count() != 2 {
        return Err(Error::NotBinaryState(problem.state_count()));
    }
    if j >= experiments.len() {
        return Err(Error::DimensionMismatch(format!(
            "source index {j} out of range for {} experiments",
            experiments.len()
        )));
    }
    validate_instance(problem, experiments)?;
    let rest: Vec<Experiment> = experiments
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, e)| e.clone())
        .collect();
    let fallback = [Experiment::uninformative("null", problem.state_count())];
    let rest_ref: &[Experiment] = if rest.is_empty() { &fallback } else { &rest };

    let all = canonical_plan(experiments, problem)?;
    let without = canonical_plan(rest_ref, problem)?;
    let contribution = all.value - without.value;

    let mut wins = Vec::new();
    for (l, sub) in all.decomposition.subproblems.iter().enumerate() {
        let own = bayes_value_weighted(&experiments[j], &sub.utilities);
        let others = rest_ref
            .iter()
            .map(|e| bayes_value_weighted(e, &sub.utilities))
            .fold(f64::NEG_INFINITY, f64::max);
        if own > others + 1e-9 {
            wins.push(l);
        }
    }
    Ok((contribution, wins))
}

/// Support selection: the set of sources winning some canonical subproblem.
/// At most `n - 1` sources, and the robust value restricted to the set
/// equals the robust value on all sources.
pub fn select_support(experiments: &[Experiment], problem: &DecisionProblem) -> Result<Vec<usize>> {
    if problem.state_count() != 2 {
        return Err(Error::NotBinaryState(problem.state_count()));
    }
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    validate_instance(problem, experiments)?;
    let plan = canonical_plan(experiments, problem)?;
    let mut support = plan.winners;
    if support.is_empty() {
        // Single-action problems need no information; keep the first source.
        support.push(0);
    }
    support.sort_unstable();
    support.dedup();
    Ok(support)
}
