//! Composition and decomposition algebra on decision problems: dominance
//! pruning, the canonical decomposition into binary-action increment
//! problems (binary states), payoff-polyhedron queries, and the dual-based
//! weak decomposition for general finite state spaces.

use crate::error::{Error, Result};
use crate::linprog::{self, LpProblem, LpStatus};
use crate::model::{DecisionProblem, Experiment, ProductSpace, Strategy};

/// A binary-state problem with weakly*-dominated actions removed, actions
/// ordered so `u(theta1, .)` strictly increases and `u(theta2, .)` strictly
/// decreases, and utilities shifted so the first action sits at `(0, 0)`.
#[derive(Debug, Clone)]
pub struct NormalizedProblem {
    /// Index into the original action list for each retained action.
    pub original_actions: Vec<usize>,
    /// Shifted prior-weighted payoff vectors, one per retained action.
    pub utilities: Vec<[f64; 2]>,
    /// Constant vector subtracted from every payoff.
    pub shift: [f64; 2],
}

impl NormalizedProblem {
    pub fn action_count(&self) -> usize {
        self.original_actions.len()
    }
}

/// One subproblem of a decomposition: an action set with a prior-weighted
/// utility matrix `u[theta][a]`.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub actions: Vec<String>,
    pub utilities: Vec<Vec<f64>>,
}

impl Subproblem {
    pub fn binary(increment: &[f64]) -> Self {
        Self {
            actions: vec!["0".into(), "1".into()],
            utilities: increment.iter().map(|&d| vec![0.0, d]).collect(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.utilities.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionKind {
    Canonical,
    Weak,
}

/// Where a decomposition came from.
#[derive(Debug, Clone)]
pub enum Provenance {
    /// Canonical increments `u*_l(1) = u(., a_{l+1}) - u(., a_l)`.
    Canonical {
        base: NormalizedProblem,
        increments: Vec<[f64; 2]>,
    },
    /// Dual potentials `phi_j[theta][y_j]` from the Kantorovich dual, with
    /// the accompanying maxmin strategy and the dual objective.
    Weak {
        potentials: Vec<Vec<Vec<f64>>>,
        strategy: Strategy,
        dual_objective: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub subproblems: Vec<Subproblem>,
    pub provenance: Provenance,
}

/// Composition of decision problems: product action space with
/// `u(theta, a) = sum_l u_l(theta, a_l)`. Action labels are tuples.
pub fn compose(states: &[String], subproblems: &[Subproblem]) -> Result<DecisionProblem> {
    if subproblems.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (l, sub) in subproblems.iter().enumerate() {
        if sub.state_count() != states.len() {
            return Err(Error::DimensionMismatch(format!(
                "subproblem {l} has {} states, expected {}",
                sub.state_count(),
                states.len()
            )));
        }
    }
    let space = ProductSpace::new(subproblems.iter().map(|s| s.actions.len()).collect());
    let mut actions = Vec::with_capacity(space.cells());
    let mut weighted = vec![vec![0.0; space.cells()]; states.len()];
    for (cell, coords) in space.iter().enumerate() {
        let labels: Vec<&str> = subproblems
            .iter()
            .zip(&coords)
            .map(|(s, &a)| s.actions[a].as_str())
            .collect();
        actions.push(format!("({})", labels.join(",")));
        for theta in 0..states.len() {
            weighted[theta][cell] = subproblems
                .iter()
                .zip(&coords)
                .map(|(s, &a)| s.utilities[theta][a])
                .sum();
        }
    }
    DecisionProblem::from_weighted(states.to_vec(), actions, weighted)
}

// Feasibility of a mixture over `pool` weakly dominating `target` pointwise.
fn dominated_by_mixture(u: &[Vec<f64>], pool: &[usize], target: &[f64]) -> Result<bool> {
    if pool.is_empty() {
        return Ok(false);
    }
    let mut lp = LpProblem::minimize(vec![0.0; pool.len()]);
    lp.add_eq(vec![1.0; pool.len()], 1.0);
    for (theta, &t) in target.iter().enumerate() {
        let coeffs: Vec<f64> = pool.iter().map(|&a| -u[theta][a]).collect();
        lp.add_ub(coeffs, -t);
    }
    Ok(linprog::solve(&lp)?.status == LpStatus::Optimal)
}

/// Removes all weakly*-dominated actions from a binary-state problem
/// (duplicates keep the lowest index), orders the survivors, and applies the
/// `(0, 0)` normalization shift.
pub fn remove_dominated(problem: &DecisionProblem) -> Result<NormalizedProblem> {
    if problem.state_count() != 2 {
        return Err(Error::NotBinaryState(problem.state_count()));
    }
    let u = problem.weighted();
    let n = problem.action_count();

    // Exact duplicates first, keeping the earliest copy.
    let mut alive: Vec<usize> = Vec::new();
    for a in 0..n {
        let dup = alive
            .iter()
            .any(|&b| (u[0][a] - u[0][b]).abs() <= 1e-12 && (u[1][a] - u[1][b]).abs() <= 1e-12);
        if !dup {
            alive.push(a);
        }
    }
    // Then mixture dominance against the other survivors.
    let mut removed = vec![false; n];
    for idx in 0..alive.len() {
        let a = alive[idx];
        let pool: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&b| b != a && !removed[b])
            .collect();
        let target = [u[0][a], u[1][a]];
        if dominated_by_mixture(u, &pool, &target)? {
            removed[a] = true;
        }
    }
    let mut survivors: Vec<usize> = alive.into_iter().filter(|&a| !removed[a]).collect();
    survivors.sort_by(|&a, &b| u[0][a].partial_cmp(&u[0][b]).unwrap());

    let shift = [u[0][survivors[0]], u[1][survivors[0]]];
    let utilities: Vec<[f64; 2]> = survivors
        .iter()
        .map(|&a| [u[0][a] - shift[0], u[1][a] - shift[1]])
        .collect();
    for w in utilities.windows(2) {
        if w[1][0] <= w[0][0] + 1e-12 || w[1][1] >= w[0][1] - 1e-12 {
            return Err(Error::Numerical(
                "retained actions are not strictly ordered after pruning".into(),
            ));
        }
    }
    Ok(NormalizedProblem {
        original_actions: survivors,
        utilities,
        shift,
    })
}

/// Canonical decomposition of a binary-state problem into `n - 1`
/// binary-action increment problems.
pub fn canonical_decomposition(problem: &DecisionProblem) -> Result<Decomposition> {
    let base = remove_dominated(problem)?;
    let increments: Vec<[f64; 2]> = base
        .utilities
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .collect();
    let subproblems = increments.iter().map(|inc| Subproblem::binary(inc)).collect();
    Ok(Decomposition {
        kind: DecompositionKind::Canonical,
        subproblems,
        provenance: Provenance::Canonical { base, increments },
    })
}

/// Whether `point` is achievable or weakly dominated by some mixed action:
/// membership in the payoff polyhedron `H(A, u)`.
pub fn polyhedron_contains(problem: &DecisionProblem, point: &[f64]) -> Result<bool> {
    if point.len() != problem.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates for {} states",
            point.len(),
            problem.state_count()
        )));
    }
    let pool: Vec<usize> = (0..problem.action_count()).collect();
    dominated_by_mixture(problem.weighted(), &pool, point)
}

/// Two problems are equivalent when each one's action payoffs lie in the
/// other's payoff polyhedron (finite vertex sets make this exact).
pub fn equivalent(a: &DecisionProblem, b: &DecisionProblem) -> Result<bool> {
    if a.state_count() != b.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "problems have {} and {} states",
            a.state_count(),
            b.state_count()
        )));
    }
    let one_way = |from: &DecisionProblem, to: &DecisionProblem| -> Result<bool> {
        for action in 0..from.action_count() {
            // Relax by 1e-9 so boundary vertices are not lost to LP noise.
            let point: Vec<f64> = from.payoff(action).iter().map(|v| v - 1e-9).collect();
            if !polyhedron_contains(to, &point)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    Ok(one_way(a, b)? && one_way(b, a)?)
}

/// A mixed action `alpha` with `u(alpha) >= target` componentwise, chosen by
/// maximizing total slack and then refined toward low-index support.
pub fn dominating_mixed_action(problem: &DecisionProblem, target: &[f64]) -> Result<Vec<f64>> {
    if !polyhedron_contains(problem, target)? {
        return Err(Error::TargetOutsidePolyhedron);
    }
    let u = problem.weighted();
    let n = problem.action_count();
    let states = problem.state_count();

    let slack_obj: Vec<f64> = (0..n).map(|a| (0..states).map(|t| u[t][a]).sum()).collect();
    let mut lp = LpProblem::maximize(slack_obj.clone());
    lp.add_eq(vec![1.0; n], 1.0);
    for theta in 0..states {
        let coeffs: Vec<f64> = (0..n).map(|a| -u[theta][a]).collect();
        lp.add_ub(coeffs, -target[theta]);
    }
    let sol = linprog::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical("slack LP failed on a contained target".into()));
    }
    let best_slack = sol.objective;

    // Lexicographic refinement: pin the slack, then squeeze out high-index
    // weight so ties resolve to the lowest-index support.
    let mut pinned = lp.clone();
    pinned.add_ub(slack_obj.iter().map(|c| -c).collect(), -(best_slack - 1e-9));
    let mut alpha = sol.primal;
    for i in (1..n).rev() {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        pinned.sense = crate::linprog::Sense::Minimize;
        pinned.objective = c.clone();
        let s = linprog::solve(&pinned)?;
        if s.status != LpStatus::Optimal {
            break;
        }
        alpha = s.primal.clone();
        pinned.add_ub(c, s.objective + 1e-9);
    }
    for v in alpha.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = alpha.iter().sum();
    for v in alpha.iter_mut() {
        *v /= total;
    }
    Ok(alpha)
}

/// Solves the joint maxmin LP over strategies and per-source potentials
/// (the Kantorovich dual of Nature's coupling minimization) and emits the
/// resulting weak decomposition: one subproblem per source with `A_j = Y_j`
/// and `u_j = phi_j`, plus the maxmin strategy.
pub fn weak_decomposition(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    cap: usize,
) -> Result<Decomposition> {
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    let space = ProductSpace::from_experiments(experiments);
    let cells = space.cells();
    if cells > cap {
        return Err(Error::InstanceTooLarge { cells, cap });
    }
    let states = problem.state_count();
    let n_actions = problem.action_count();
    let m = experiments.len();

    // Variable layout: sigma[cell][a], then phi[j][theta][y_j] (free).
    let n_sigma = cells * n_actions;
    let mut phi_offsets = Vec::with_capacity(m);
    let mut nv = n_sigma;
    for e in experiments {
        phi_offsets.push(nv);
        nv += states * e.signal_count();
    }
    let phi_var =
        |j: usize, theta: usize, y: usize| phi_offsets[j] + theta * experiments[j].signal_count() + y;

    let mut objective = vec![0.0; nv];
    for (j, e) in experiments.iter().enumerate() {
        for theta in 0..states {
            for y in 0..e.signal_count() {
                objective[phi_var(j, theta, y)] = e.prob(theta, y);
            }
        }
    }
    let mut lp = LpProblem::maximize(objective);
    for j in 0..m {
        for theta in 0..states {
            for y in 0..experiments[j].signal_count() {
                lp.set_free(phi_var(j, theta, y));
            }
        }
    }
    for cell in 0..cells {
        let mut row = vec![0.0; nv];
        for a in 0..n_actions {
            row[cell * n_actions + a] = 1.0;
        }
        lp.add_eq(row, 1.0);
    }
    for theta in 0..states {
        for cell in 0..cells {
            let coords = space.unrank(cell);
            let mut row = vec![0.0; nv];
            for (j, &y) in coords.iter().enumerate() {
                row[phi_var(j, theta, y)] = 1.0;
            }
            for a in 0..n_actions {
                row[cell * n_actions + a] = -problem.u(theta, a);
            }
            lp.add_ub(row, 0.0);
        }
    }
    let sol = linprog::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "maxmin LP finished with status {:?}",
            sol.status
        )));
    }

    let mut potentials = Vec::with_capacity(m);
    let mut subproblems = Vec::with_capacity(m);
    for (j, e) in experiments.iter().enumerate() {
        let phi: Vec<Vec<f64>> = (0..states)
            .map(|theta| {
                (0..e.signal_count())
                    .map(|y| sol.primal[phi_var(j, theta, y)])
                    .collect()
            })
            .collect();
        subproblems.push(Subproblem {
            actions: e.signals.clone(),
            utilities: phi.clone(),
        });
        potentials.push(phi);
    }
    let table: Vec<Vec<f64>> = (0..cells)
        .map(|cell| {
            let mut row: Vec<f64> =
                sol.primal[cell * n_actions..(cell + 1) * n_actions].to_vec();
            for v in row.iter_mut() {
                *v = v.max(0.0);
            }
            let total: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= total;
            }
            row
        })
        .collect();
    let strategy = Strategy::new(space, (0..m).collect(), n_actions, table)?;
    Ok(Decomposition {
        kind: DecompositionKind::Weak,
        subproblems,
        provenance: Provenance::Weak {
            potentials,
            strategy,
            dual_objective: sol.objective,
        },
    })
}
