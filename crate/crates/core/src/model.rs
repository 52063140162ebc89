//! Domain types: experiments, decision problems, strategies, and joint
//! experiments, together with single-experiment Bayesian values.
//!
//! An [`Experiment`] is a finite-state, finite-signal stochastic kernel. A
//! [`DecisionProblem`] carries raw utilities together with the prior-weighted
//! utility matrix `u(theta, a) = prior(theta) * raw(theta, a)` that every
//! downstream computation consumes. All types are immutable after
//! construction and every operation here is a pure function.

use crate::error::{Error, Result};
use crate::{COMPUTED_TOL, INPUT_TOL};

/// A finite-state, finite-signal stochastic kernel: one row per state, one
/// column per signal, rows summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub signals: Vec<String>,
    kernel: Vec<Vec<f64>>,
}

impl Experiment {
    /// Builds an experiment from user input, validating at the input
    /// tolerance (1e-12).
    pub fn new(
        name: impl Into<String>,
        signals: Vec<String>,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::build(name.into(), signals, kernel, INPUT_TOL, false)
    }

    /// Builds an experiment from computed quantities (LP output, envelope
    /// edges). Rows are validated at 1e-8, tiny negative entries clamped,
    /// and each row renormalized to sum exactly to 1.
    pub fn from_computed(
        name: impl Into<String>,
        signals: Vec<String>,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::build(name.into(), signals, kernel, COMPUTED_TOL, true)
    }

    fn build(
        name: String,
        signals: Vec<String>,
        mut kernel: Vec<Vec<f64>>,
        tol: f64,
        clean: bool,
    ) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "experiment '{name}': signal list is empty"
            )));
        }
        for (i, row) in kernel.iter_mut().enumerate() {
            if row.len() != signals.len() {
                return Err(Error::DimensionMismatch(format!(
                    "experiment '{name}': row {i} has {} entries, expected {}",
                    row.len(),
                    signals.len()
                )));
            }
            for (j, p) in row.iter_mut().enumerate() {
                if !p.is_finite() || *p < -tol || *p > 1.0 + tol {
                    return Err(Error::NonStochasticRow {
                        experiment: format!("{name} (entry [{i}][{j}] = {p})"),
                        row: i,
                        sum: *p,
                    });
                }
                if clean {
                    *p = p.clamp(0.0, 1.0);
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NonStochasticRow {
                    experiment: name,
                    row: i,
                    sum,
                });
            }
            if clean && sum > 0.0 {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(Self {
            name,
            signals,
            kernel,
        })
    }

    /// Single-signal experiment carrying no information.
    pub fn uninformative(name: impl Into<String>, states: usize) -> Self {
        Self {
            name: name.into(),
            signals: vec!["*".to_string()],
            kernel: vec![vec![1.0]; states],
        }
    }

    pub fn state_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn signal_count(&self) -> usize {
        self.signals.len()
    }

    pub fn prob(&self, state: usize, signal: usize) -> f64 {
        self.kernel[state][signal]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.kernel[state]
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }
}

/// A finite decision problem. `weighted_utility` is derived once at
/// construction and is the matrix every optimization works with.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProblem {
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    pub actions: Vec<String>,
    pub raw_utility: Vec<Vec<f64>>,
    weighted_utility: Vec<Vec<f64>>,
}

impl DecisionProblem {
    pub fn new(
        states: Vec<String>,
        prior: Vec<f64>,
        actions: Vec<String>,
        raw_utility: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "problem needs at least 2 states, got {}",
                states.len()
            )));
        }
        if actions.is_empty() {
            return Err(Error::DimensionMismatch(
                "problem needs at least 1 action".into(),
            ));
        }
        if prior.len() != states.len() {
            return Err(Error::BadPrior(format!(
                "prior has {} entries for {} states",
                prior.len(),
                states.len()
            )));
        }
        for (i, p) in prior.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::BadPrior(format!("prior[{i}] = {p} is negative")));
            }
        }
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > INPUT_TOL {
            return Err(Error::BadPrior(format!("prior sums to {sum}, expected 1")));
        }
        if raw_utility.len() != states.len() {
            return Err(Error::DimensionMismatch(format!(
                "raw_utility has {} rows for {} states",
                raw_utility.len(),
                states.len()
            )));
        }
        for (i, row) in raw_utility.iter().enumerate() {
            if row.len() != actions.len() {
                return Err(Error::DimensionMismatch(format!(
                    "raw_utility row {i} has {} entries for {} actions",
                    row.len(),
                    actions.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::DimensionMismatch(format!(
                    "raw_utility row {i} has a non-finite entry"
                )));
            }
        }
        let weighted_utility = raw_utility
            .iter()
            .zip(&prior)
            .map(|(row, nu)| row.iter().map(|r| nu * r).collect())
            .collect();
        Ok(Self {
            states,
            prior,
            actions,
            raw_utility,
            weighted_utility,
        })
    }

    /// Builds a problem directly from a prior-weighted utility matrix, using
    /// a uniform prior. Used for subproblems whose utilities (canonical
    /// increments, dual potentials) are already prior-weighted.
    pub fn from_weighted(
        states: Vec<String>,
        actions: Vec<String>,
        weighted: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = states.len() as f64;
        let raw = weighted
            .iter()
            .map(|row| row.iter().map(|u| u * n).collect())
            .collect();
        let prior = vec![1.0 / n; states.len()];
        Self::new(states, prior, actions, raw)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    /// Prior-weighted utility `u(theta, a)`.
    pub fn u(&self, state: usize, action: usize) -> f64 {
        self.weighted_utility[state][action]
    }

    pub fn weighted(&self) -> &[Vec<f64>] {
        &self.weighted_utility
    }

    /// Payoff vector of one action across states.
    pub fn payoff(&self, action: usize) -> Vec<f64> {
        (0..self.state_count()).map(|t| self.u(t, action)).collect()
    }

    /// Value of deciding with no information: `max_a sum_theta u(theta, a)`.
    pub fn no_information_value(&self) -> f64 {
        (0..self.action_count())
            .map(|a| (0..self.state_count()).map(|t| self.u(t, a)).sum())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One realization of the product signal space: per-source signal indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeSignal(pub Vec<usize>);

/// Row-major indexing of the product signal space `Y_1 x ... x Y_m`
/// (source 0 is the most significant coordinate).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSpace {
    pub dims: Vec<usize>,
}

impl ProductSpace {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn from_experiments(experiments: &[Experiment]) -> Self {
        Self {
            dims: experiments.iter().map(|e| e.signal_count()).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&c, &d)| acc * d + c)
    }

    pub fn unrank(&self, mut cell: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dims.len()];
        for j in (0..self.dims.len()).rev() {
            coords[j] = cell % self.dims[j];
            cell /= self.dims[j];
        }
        coords
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.cells()).map(|c| self.unrank(c))
    }
}

/// A mapping from composite signals to distributions over actions,
/// measurable with respect to the declared subset of sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub space: ProductSpace,
    pub sources_used: Vec<usize>,
    pub action_count: usize,
    table: Vec<Vec<f64>>,
}

impl Strategy {
    pub fn new(
        space: ProductSpace,
        sources_used: Vec<usize>,
        action_count: usize,
        table: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if table.len() != space.cells() {
            return Err(Error::DimensionMismatch(format!(
                "strategy table covers {} cells, product space has {}",
                table.len(),
                space.cells()
            )));
        }
        for (cell, row) in table.iter().enumerate() {
            if row.len() != action_count {
                return Err(Error::DimensionMismatch(format!(
                    "strategy row {cell} has {} entries for {action_count} actions",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > COMPUTED_TOL || row.iter().any(|p| *p < -COMPUTED_TOL) {
                return Err(Error::DimensionMismatch(format!(
                    "strategy row {cell} is not a probability vector (sum {sum})"
                )));
            }
        }
        let strategy = Self {
            space,
            sources_used,
            action_count,
            table,
        };
        strategy.check_measurability()?;
        Ok(strategy)
    }

    /// Deterministic strategy from a cell -> action map.
    pub fn pure(
        space: ProductSpace,
        sources_used: Vec<usize>,
        action_count: usize,
        choose: impl Fn(&[usize]) -> usize,
    ) -> Result<Self> {
        let table = (0..space.cells())
            .map(|cell| {
                let coords = space.unrank(cell);
                let mut row = vec![0.0; action_count];
                row[choose(&coords)] = 1.0;
                row
            })
            .collect();
        Self::new(space, sources_used, action_count, table)
    }

    fn check_measurability(&self) -> Result<()> {
        use std::collections::HashMap;
        let mut seen: HashMap<Vec<usize>, &Vec<f64>> = HashMap::new();
        for cell in 0..self.space.cells() {
            let coords = self.space.unrank(cell);
            let key: Vec<usize> = self.sources_used.iter().map(|&j| coords[j]).collect();
            match seen.get(&key) {
                Some(prev) => {
                    let diff = prev
                        .iter()
                        .zip(&self.table[cell])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if diff > INPUT_TOL {
                        return Err(Error::DimensionMismatch(format!(
                            "strategy row at cell {cell} varies with a source outside sources_used"
                        )));
                    }
                }
                None => {
                    seen.insert(key, &self.table[cell]);
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.table[cell]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }
}

/// An experiment over the composite signal space together with its
/// marginal-consistency certificate.
#[derive(Debug, Clone)]
pub struct JointExperiment {
    pub marginals: Vec<Experiment>,
    pub joint: Experiment,
    pub max_marginal_error: f64,
}

impl JointExperiment {
    pub fn new(marginals: Vec<Experiment>, joint: Experiment) -> Result<Self> {
        let space = ProductSpace::from_experiments(&marginals);
        if joint.signal_count() != space.cells() {
            return Err(Error::DimensionMismatch(format!(
                "joint has {} signals, product space has {} cells",
                joint.signal_count(),
                space.cells()
            )));
        }
        let states = joint.state_count();
        let mut max_err: f64 = 0.0;
        for (j, marginal) in marginals.iter().enumerate() {
            if marginal.state_count() != states {
                return Err(Error::DimensionMismatch(format!(
                    "marginal '{}' has {} states, joint has {states}",
                    marginal.name,
                    marginal.state_count()
                )));
            }
            for theta in 0..states {
                let mut sums = vec![0.0; marginal.signal_count()];
                for cell in 0..space.cells() {
                    let coords = space.unrank(cell);
                    sums[coords[j]] += joint.prob(theta, cell);
                }
                for (y, s) in sums.iter().enumerate() {
                    max_err = max_err.max((s - marginal.prob(theta, y)).abs());
                }
            }
        }
        if max_err > COMPUTED_TOL {
            return Err(Error::DimensionMismatch(format!(
                "joint deviates from its marginals by {max_err:e}"
            )));
        }
        Ok(Self {
            marginals,
            joint,
            max_marginal_error: max_err,
        })
    }

    pub fn space(&self) -> ProductSpace {
        ProductSpace::from_experiments(&self.marginals)
    }
}

/// Checks that the problem and all experiments are mutually consistent.
pub fn validate_instance(problem: &DecisionProblem, experiments: &[Experiment]) -> Result<()> {
    for e in experiments {
        if e.state_count() != problem.state_count() {
            return Err(Error::DimensionMismatch(format!(
                "experiment '{}' has {} states, problem has {}",
                e.name,
                e.state_count(),
                problem.state_count()
            )));
        }
    }
    Ok(())
}

/// Classical value of a single Blackwell experiment:
/// `sum_y max_a sum_theta P(y|theta) u(theta, a)`.
pub fn bayes_value(experiment: &Experiment, problem: &DecisionProblem) -> Result<f64> {
    if experiment.state_count() != problem.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "experiment '{}' has {} states, problem has {}",
            experiment.name,
            experiment.state_count(),
            problem.state_count()
        )));
    }
    Ok(bayes_value_weighted(experiment, problem.weighted()))
}

/// Same as [`bayes_value`] but directly against a prior-weighted utility
/// matrix `u[theta][a]`. Subproblem utilities (canonical increments, dual
/// potentials) are already prior-weighted, so they are scored this way.
pub fn bayes_value_weighted(experiment: &Experiment, u: &[Vec<f64>]) -> f64 {
    let actions = u[0].len();
    (0..experiment.signal_count())
        .map(|y| {
            (0..actions)
                .map(|a| {
                    (0..experiment.state_count())
                        .map(|t| experiment.prob(t, y) * u[t][a])
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

/// Bayes-optimal pure strategy for a weighted utility matrix, one action per
/// signal, ties broken toward the lowest action index.
pub fn bayes_strategy_weighted(experiment: &Experiment, u: &[Vec<f64>]) -> Vec<usize> {
    let actions = u[0].len();
    (0..experiment.signal_count())
        .map(|y| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for a in 0..actions {
                let score: f64 = (0..experiment.state_count())
                    .map(|t| experiment.prob(t, y) * u[t][a])
                    .sum();
                if score > best_score + 1e-12 {
                    best = a;
                    best_score = score;
                }
            }
            best
        })
        .collect()
}

/// Expected payoff of a (possibly mixed) strategy against a fixed joint
/// experiment: `sum_theta sum_y joint(y|theta) u(theta, sigma(y))`.
pub fn evaluate_strategy(
    strategy: &Strategy,
    joint: &JointExperiment,
    problem: &DecisionProblem,
) -> Result<f64> {
    if joint.joint.state_count() != problem.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "joint has {} states, problem has {}",
            joint.joint.state_count(),
            problem.state_count()
        )));
    }
    if strategy.action_count != problem.action_count() {
        return Err(Error::DimensionMismatch(format!(
            "strategy has {} actions, problem has {}",
            strategy.action_count,
            problem.action_count()
        )));
    }
    if strategy.space != joint.space() {
        return Err(Error::DimensionMismatch(
            "strategy and joint are defined on different product spaces".into(),
        ));
    }
    let mut total = 0.0;
    for theta in 0..problem.state_count() {
        for cell in 0..strategy.space.cells() {
            let p = joint.joint.prob(theta, cell);
            if p == 0.0 {
                continue;
            }
            let payoff: f64 = strategy
                .row(cell)
                .iter()
                .enumerate()
                .map(|(a, w)| w * problem.u(theta, a))
                .sum();
            total += p * payoff;
        }
    }
    Ok(total)
}

/// Label for one cell of the product signal space, e.g. `(1,0)`.
pub fn composite_label(experiments: &[Experiment], coords: &[usize]) -> String {
    let parts: Vec<&str> = experiments
        .iter()
        .zip(coords)
        .map(|(e, &y)| e.signals[y].as_str())
        .collect();
    format!("({})", parts.join(","))
}
