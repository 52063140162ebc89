//! Blackwell-order calculus: feasible-set zonotopes, garbling tests,
//! Blackwell suprema for binary states via the concave upper envelope, and
//! worst-case joint experiments for general finite state spaces.

use crate::error::{Error, Result};
use crate::linprog::{self, LpProblem, LpStatus};
use crate::model::{
    composite_label, DecisionProblem, Experiment, JointExperiment, ProductSpace,
};
use crate::COMPUTED_TOL;

const RATIO_TOL: f64 = 1e-10;

/// Binary-state feasible set of an experiment, represented by its concave
/// upper path from `(0,0)` to `(1,1)` and the ratio-sorted generators
/// (likelihood vectors) whose cumulative sums trace that path.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope2 {
    pub upper_path: Vec<[f64; 2]>,
    pub generators: Vec<[f64; 2]>,
}

impl Zonotope2 {
    /// Height of the upper path at abscissa `x` (piecewise linear).
    pub fn upper_envelope_at(&self, x: f64) -> f64 {
        for w in self.upper_path.windows(2) {
            let [x0, y0] = w[0];
            let [x1, y1] = w[1];
            if x <= x1 + RATIO_TOL {
                if (x1 - x0).abs() < RATIO_TOL {
                    return y1;
                }
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        1.0
    }

    /// Whether this zonotope contains `other` (all of `other`'s vertices lie
    /// on or below this upper path).
    pub fn contains(&self, other: &Zonotope2) -> bool {
        other
            .upper_path
            .iter()
            .all(|&[x, y]| y <= self.upper_envelope_at(x) + 1e-9)
    }
}

// a steeper than b: a_y / a_x > b_y / b_x, with ratio infinity first.
fn steeper(a: [f64; 2], b: [f64; 2]) -> std::cmp::Ordering {
    let cross = a[1] * b[0] - b[1] * a[0];
    cross.partial_cmp(&0.0).unwrap().reverse()
}

/// Feasible-set zonotope of a binary-state experiment. Signals with equal
/// likelihood ratio are merged; zero-probability signals are dropped.
pub fn feasible_zonotope(experiment: &Experiment) -> Result<Zonotope2> {
    if experiment.state_count() != 2 {
        return Err(Error::NotBinaryState(experiment.state_count()));
    }
    let mut gens: Vec<[f64; 2]> = (0..experiment.signal_count())
        .map(|y| [experiment.prob(0, y), experiment.prob(1, y)])
        .filter(|g| g[0] > RATIO_TOL || g[1] > RATIO_TOL)
        .collect();
    gens.sort_by(|a, b| steeper(*a, *b));
    let mut merged: Vec<[f64; 2]> = Vec::new();
    for g in gens {
        match merged.last_mut() {
            // Equal likelihood ratios up to a relative tolerance, so tiny
            // generators with genuinely different ratios stay separate.
            Some(last)
                if (last[1] * g[0] - g[1] * last[0]).abs()
                    <= RATIO_TOL * (last[1] * g[0]).abs().max((g[1] * last[0]).abs()) =>
            {
                last[0] += g[0];
                last[1] += g[1];
            }
            _ => merged.push(g),
        }
    }
    let mut path = vec![[0.0, 0.0]];
    let (mut x, mut y) = (0.0, 0.0);
    for g in &merged {
        x += g[0];
        y += g[1];
        path.push([x, y]);
    }
    Ok(Zonotope2 {
        upper_path: path,
        generators: merged,
    })
}

fn upper_concave_hull(mut points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for p in points {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]);
            // Pop left turns and collinear points: keeps a strictly
            // concave chain and fuses collinear edges. The collinearity
            // margin scales with the segment lengths so short edges with
            // real curvature survive.
            let scale = ((a[0] - o[0]).abs() + (a[1] - o[1]).abs())
                * ((p[0] - o[0]).abs() + (p[1] - o[1]).abs());
            if cross >= -RATIO_TOL * scale.max(1e-300) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Blackwell supremum of binary-state experiments: the experiment whose
/// feasible set is the convex hull of the union of the inputs' feasible
/// sets, realized by the concave upper envelope of all zonotope vertices.
pub fn blackwell_supremum(experiments: &[Experiment]) -> Result<Experiment> {
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut points = Vec::new();
    for e in experiments {
        points.extend(feasible_zonotope(e)?.upper_path);
    }
    let hull = upper_concave_hull(points);
    let edges: Vec<[f64; 2]> = hull
        .windows(2)
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .collect();
    let signals: Vec<String> = (0..edges.len()).map(|i| format!("z{i}")).collect();
    let kernel = vec![
        edges.iter().map(|e| e[0]).collect(),
        edges.iter().map(|e| e[1]).collect(),
    ];
    Experiment::from_computed("supremum", signals, kernel)
}

/// A row-stochastic matrix `g(z|y)` certifying that the target experiment is
/// a garbling of the source.
#[derive(Debug, Clone)]
pub struct GarblingMatrix {
    pub matrix: Vec<Vec<f64>>,
}

impl GarblingMatrix {
    pub fn prob(&self, source_signal: usize, target_signal: usize) -> f64 {
        self.matrix[source_signal][target_signal]
    }
}

/// Searches for a garbling `g` with `sum_y g(z|y) source(y|theta) =
/// target(z|theta)`. Solved as an elastic LP: the garbling exists iff the
/// minimal total constraint violation is at most 1e-8.
pub fn is_garbling(target: &Experiment, source: &Experiment) -> Result<Option<GarblingMatrix>> {
    let states = source.state_count();
    if target.state_count() != states {
        return Err(Error::DimensionMismatch(format!(
            "experiments have {} and {} states",
            target.state_count(),
            states
        )));
    }
    let ny = source.signal_count();
    let nz = target.signal_count();
    let n_g = ny * nz;
    let n_elastic = nz * states * 2;
    let mut objective = vec![0.0; n_g + n_elastic];
    for v in objective[n_g..].iter_mut() {
        *v = 1.0;
    }
    let mut lp = LpProblem::minimize(objective);
    for y in 0..ny {
        let mut row = vec![0.0; n_g + n_elastic];
        for z in 0..nz {
            row[y * nz + z] = 1.0;
        }
        lp.add_eq(row, 1.0);
    }
    for z in 0..nz {
        for theta in 0..states {
            let mut row = vec![0.0; n_g + n_elastic];
            for y in 0..ny {
                row[y * nz + z] = source.prob(theta, y);
            }
            let e = n_g + (z * states + theta) * 2;
            row[e] = 1.0;
            row[e + 1] = -1.0;
            lp.add_eq(row, target.prob(theta, z));
        }
    }
    let sol = linprog::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical("elastic garbling LP did not solve".into()));
    }
    if sol.objective > COMPUTED_TOL {
        return Ok(None);
    }
    let mut matrix = vec![vec![0.0; nz]; ny];
    for y in 0..ny {
        let mut sum = 0.0;
        for z in 0..nz {
            matrix[y][z] = sol.primal[y * nz + z].max(0.0);
            sum += matrix[y][z];
        }
        for v in matrix[y].iter_mut() {
            *v /= sum;
        }
    }
    Ok(Some(GarblingMatrix { matrix }))
}

/// Realizes the Blackwell supremum as an element of the coupling polytope:
/// `P~(y_1..y_m | theta) = sum_z prod_j g_j(y_j|z) P-bar(z|theta)` with
/// `g_j` the garbling from the supremum onto marginal `j`.
pub fn supremum_joint(experiments: &[Experiment]) -> Result<JointExperiment> {
    let sup = blackwell_supremum(experiments)?;
    let mut garblings = Vec::with_capacity(experiments.len());
    for e in experiments {
        let g = is_garbling(e, &sup)?.ok_or_else(|| {
            Error::Numerical(format!(
                "supremum does not garble onto marginal '{}'",
                e.name
            ))
        })?;
        garblings.push(g);
    }
    let space = ProductSpace::from_experiments(experiments);
    let states = sup.state_count();
    let mut kernel = vec![vec![0.0; space.cells()]; states];
    let mut labels = Vec::with_capacity(space.cells());
    for (cell, coords) in space.iter().enumerate() {
        labels.push(composite_label(experiments, &coords));
        for theta in 0..states {
            let mut total = 0.0;
            for z in 0..sup.signal_count() {
                let mut w = sup.prob(theta, z);
                for (g, &y) in garblings.iter().zip(&coords) {
                    w *= g.prob(z, y);
                }
                total += w;
            }
            kernel[theta][cell] = total;
        }
    }
    let joint = Experiment::from_computed("supremum-joint", labels, kernel)?;
    JointExperiment::new(experiments.to_vec(), joint)
}

/// Nature's epigraph LP: minimizes `sum_y max_a sum_theta P(y|theta)
/// u(theta, a)` over the coupling polytope, returning the minimizing joint
/// experiment and the value.
pub fn worst_case_joint(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    cap: usize,
) -> Result<(JointExperiment, f64)> {
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    let space = ProductSpace::from_experiments(experiments);
    let cells = space.cells();
    if cells > cap {
        return Err(Error::InstanceTooLarge { cells, cap });
    }
    let states = problem.state_count();
    let n_p = states * cells;
    let nv = n_p + cells; // p[theta][cell], then epigraph t[cell] (free)
    let p_var = |theta: usize, cell: usize| theta * cells + cell;

    let mut objective = vec![0.0; nv];
    for v in objective[n_p..].iter_mut() {
        *v = 1.0;
    }
    let mut lp = LpProblem::minimize(objective);
    for t in n_p..nv {
        lp.set_free(t);
    }
    for (j, e) in experiments.iter().enumerate() {
        for theta in 0..states {
            for y in 0..e.signal_count() {
                let mut row = vec![0.0; nv];
                for cell in 0..cells {
                    if space.unrank(cell)[j] == y {
                        row[p_var(theta, cell)] = 1.0;
                    }
                }
                lp.add_eq(row, e.prob(theta, y));
            }
        }
    }
    for cell in 0..cells {
        for a in 0..problem.action_count() {
            let mut row = vec![0.0; nv];
            for theta in 0..states {
                row[p_var(theta, cell)] = problem.u(theta, a);
            }
            row[n_p + cell] = -1.0;
            lp.add_ub(row, 0.0);
        }
    }
    let sol = linprog::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "Nature's epigraph LP finished with status {:?}",
            sol.status
        )));
    }
    let labels: Vec<String> = space
        .iter()
        .map(|coords| composite_label(experiments, &coords))
        .collect();
    let kernel: Vec<Vec<f64>> = (0..states)
        .map(|theta| (0..cells).map(|c| sol.primal[p_var(theta, c)]).collect())
        .collect();
    let joint = Experiment::from_computed("worst-case", labels, kernel)?;
    let joint = JointExperiment::new(experiments.to_vec(), joint)?;
    Ok((joint, sol.objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bayes_value;
    use crate::test_support::*;
    use crate::DEFAULT_CELL_CAP;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zonotope_of_p1() {
        let (_, experiments) = portfolio_instance();
        let z = feasible_zonotope(&experiments[0]).unwrap();
        assert_eq!(z.upper_path, vec![[0.0, 0.0], [0.1, 0.5], [1.0, 1.0]]);
    }

    #[test]
    fn zonotope_of_p2() {
        let (_, experiments) = portfolio_instance();
        let z = feasible_zonotope(&experiments[1]).unwrap();
        assert_eq!(z.upper_path, vec![[0.0, 0.0], [0.5, 0.9], [1.0, 1.0]]);
    }

    #[test]
    fn zonotope_of_uninformative_is_the_diagonal() {
        let z = feasible_zonotope(&Experiment::uninformative("u", 2)).unwrap();
        assert_eq!(z.upper_path, vec![[0.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn supremum_of_portfolio_experiments() {
        let (_, experiments) = portfolio_instance();
        let sup = blackwell_supremum(&experiments).unwrap();
        assert_eq!(sup.signal_count(), 3);
        let row0: Vec<f64> = sup.row(0).to_vec();
        let row1: Vec<f64> = sup.row(1).to_vec();
        for (got, want) in row0.iter().zip([0.1, 0.4, 0.5]) {
            assert!((got - want).abs() < 1e-9);
        }
        for (got, want) in row1.iter().zip([0.5, 0.4, 0.1]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn supremum_is_idempotent_and_absorbs_uninformative() {
        let (_, experiments) = portfolio_instance();
        let p = &experiments[0];
        let same = blackwell_supremum(&[p.clone(), p.clone()]).unwrap();
        assert_eq!(
            feasible_zonotope(&same).unwrap().upper_path,
            feasible_zonotope(p).unwrap().upper_path
        );
        let with_null =
            blackwell_supremum(&[p.clone(), Experiment::uninformative("u", 2)]).unwrap();
        assert_eq!(
            feasible_zonotope(&with_null).unwrap().upper_path,
            feasible_zonotope(p).unwrap().upper_path
        );
    }

    #[test]
    fn garbling_identity_and_impossibility() {
        let (_, experiments) = portfolio_instance();
        let p = &experiments[0];
        let g = is_garbling(p, p).unwrap().expect("self garbling");
        for (y, row) in g.matrix.iter().enumerate() {
            assert!((row[y] - 1.0).abs() < 1e-7);
        }
        let revealing = Experiment::new(
            "full",
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let none = is_garbling(&revealing, &Experiment::uninformative("u", 2)).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn supremum_garbles_onto_every_input() {
        let (_, experiments) = portfolio_instance();
        let sup = blackwell_supremum(&experiments).unwrap();
        for e in &experiments {
            assert!(is_garbling(e, &sup).unwrap().is_some());
        }
        assert!(is_garbling(&experiments[0], &sup).unwrap().is_some());
    }

    #[test]
    fn supremum_joint_matches_marginals_and_value() {
        let (problem, experiments) = portfolio_instance();
        let joint = supremum_joint(&experiments).unwrap();
        assert!(joint.max_marginal_error <= 1e-8);
        let v = bayes_value(&joint.joint, &problem).unwrap();
        assert!((v - 2.6).abs() < 1e-8);
    }

    #[test]
    fn supremum_joint_of_identical_marginals_is_diagonal() {
        let (_, experiments) = portfolio_instance();
        let p = experiments[0].clone();
        let joint = supremum_joint(&[p.clone(), p.clone()]).unwrap();
        let space = joint.space();
        for theta in 0..2 {
            for (cell, coords) in space.iter().enumerate() {
                let want = if coords[0] == coords[1] {
                    p.prob(theta, coords[0])
                } else {
                    0.0
                };
                assert!((joint.joint.prob(theta, cell) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn worst_case_joint_on_examples() {
        let (problem, experiments) = portfolio_instance();
        let (joint, v) = worst_case_joint(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
        assert!((v - 2.6).abs() < 1e-8);
        assert!(joint.max_marginal_error <= 1e-8);

        let (problem3, experiments3) = three_state_instance();
        let (_, v3) = worst_case_joint(&experiments3, &problem3, DEFAULT_CELL_CAP).unwrap();
        assert!((v3 - 2.0).abs() < 1e-8);

        let (_, v1) = worst_case_joint(&experiments[..1], &problem, DEFAULT_CELL_CAP).unwrap();
        assert!((v1 - 2.3).abs() < 1e-8);
    }

    #[test]
    fn envelope_and_lp_values_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..25 {
            let (problem, experiments) = random_binary_instance(&mut rng, 3, 3, 4);
            let (_, lp_value) =
                worst_case_joint(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
            let sup = blackwell_supremum(&experiments).unwrap();
            let env_value = bayes_value(&sup, &problem).unwrap();
            assert!(
                (lp_value - env_value).abs() <= 1e-6,
                "trial {trial}: {lp_value} vs {env_value}"
            );
        }
    }

    #[test]
    fn containment_iff_garbling_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..60 {
            let p = random_experiment(&mut rng, 2, 4);
            let q = random_experiment(&mut rng, 2, 4);
            let zp = feasible_zonotope(&p).unwrap();
            let zq = feasible_zonotope(&q).unwrap();
            let garbled = is_garbling(&q, &p).unwrap().is_some();
            assert_eq!(zp.contains(&zq), garbled, "trial {trial}");
        }
    }

    #[test]
    fn appending_an_experiment_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..15 {
            let (problem, mut experiments) = random_binary_instance(&mut rng, 2, 3, 3);
            let (_, before) = worst_case_joint(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
            experiments.push(random_experiment(&mut rng, 2, 3));
            let (_, after) = worst_case_joint(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
            assert!(after >= before - 1e-8);
        }
    }

    #[test]
    fn rejects_non_binary_state_for_envelope_ops() {
        let (_, experiments3) = three_state_instance();
        assert!(matches!(
            feasible_zonotope(&experiments3[0]).unwrap_err(),
            Error::NotBinaryState(3)
        ));
        assert!(matches!(
            blackwell_supremum(&experiments3).unwrap_err(),
            Error::NotBinaryState(3)
        ));
    }
}
