//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_fusion::asymptotics::{chernoff_index, dominance_threshold, power_values};
use robust_fusion::blackwell::{blackwell_supremum, supremum_joint, worst_case_joint};
use robust_fusion::decompose::{canonical_decomposition, weak_decomposition, Provenance};
use robust_fusion::model::{
    bayes_value, bayes_value_weighted, DecisionProblem, Experiment, ProductSpace,
};
use robust_fusion::oracle::{deterministic_bound, oracle_value, sampled_coupling_bound};
use robust_fusion::robust::{best_single_source, marginal_contribution, robust_strategy,
    robust_value, select_support};
use robust_fusion::test_support::{
    portfolio_table_strategy, portfolio_instance, random_binary_instance, random_experiment,
    three_state_instance,
};
use robust_fusion::{DEFAULT_CELL_CAP, VALUE_TOL};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;

fn report(n: u32, name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(cause) => {
            println!("criterion {n} ({name}): FAIL");
            std::panic::resume_unwind(cause);
        }
    }
}

type Instance = (DecisionProblem, Vec<Experiment>);

// Suite 3: binary state, binary action, m <= 3, up to 4 signals.
fn suite3() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    (0..200)
        .map(|i| random_binary_instance(&mut rng, 1 + i % 3, 2, 2 + i % 3))
        .collect()
}

// Suite 4/5: binary state, up to 6 actions.
fn suite45() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    (0..100)
        .map(|i| random_binary_instance(&mut rng, 1 + i % 3, 2 + i % 5, 2 + i % 3))
        .collect()
}

// Suite 6: three or four states.
fn suite6() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    (0..50)
        .map(|i| {
            let states = 3 + i % 2;
            let actions = 2 + i % 3;
            let labels: Vec<String> = (0..states).map(|s| format!("s{s}")).collect();
            let weighted: Vec<Vec<f64>> = (0..states)
                .map(|_| (0..actions).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let problem = DecisionProblem::from_weighted(
                labels,
                (0..actions).map(|a| format!("a{a}")).collect(),
                weighted,
            )
            .unwrap();
            let m = 1 + i % 2;
            let experiments = (0..=m)
                .map(|_| random_experiment(&mut rng, states, 2 + i % 2))
                .collect();
            (problem, experiments)
        })
        .collect()
}

#[test]
fn criterion_01_portfolio_reproduction() {
    report(1, "portfolio value, single source, and table", || {
        let (problem, experiments) = portfolio_instance();
        let v = robust_value(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
        assert!((v - 2.6).abs() <= VALUE_TOL);
        let (_, single) = best_single_source(&experiments, &problem).unwrap();
        assert!((single - 2.3).abs() <= VALUE_TOL);
        let sol = robust_strategy(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
        assert_eq!(sol.strategy.table(), portfolio_table_strategy().table());
    });
}

#[test]
fn criterion_02_three_state_reproduction() {
    report(2, "three-state value with worthless single sources", || {
        let (problem, experiments) = three_state_instance();
        let v = robust_value(&experiments, &problem, DEFAULT_CELL_CAP).unwrap();
        assert!((v - 2.0).abs() <= VALUE_TOL);
        for e in &experiments {
            let single = bayes_value(e, &problem).unwrap();
            assert!(single.abs() <= VALUE_TOL, "{}: {single}", e.name);
        }
    });
}

#[test]
fn criterion_03_binary_action_single_source() {
    report(3, "single source optimal for binary actions", || {
        for (i, (problem, experiments)) in suite3().iter().enumerate() {
            let v = robust_value(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let (_, single) = best_single_source(experiments, problem).unwrap();
            assert!((v - single).abs() <= VALUE_TOL, "instance {i}: {v} vs {single}");
        }
    });
}

#[test]
fn criterion_04_supremum_agreement() {
    report(4, "worst-case LP equals supremum envelope", || {
        for (i, (problem, experiments)) in suite45().iter().enumerate() {
            let (_, lp) = worst_case_joint(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let sup = blackwell_supremum(experiments).unwrap();
            let env = bayes_value(&sup, problem).unwrap();
            assert!((lp - env).abs() <= VALUE_TOL, "instance {i}: {lp} vs {env}");
            let joint = supremum_joint(experiments).unwrap();
            assert!(joint.max_marginal_error <= 1e-8, "instance {i}");
            let via_joint = bayes_value(&joint.joint, problem).unwrap();
            assert!((via_joint - lp).abs() <= VALUE_TOL, "instance {i}");
        }
    });
}

#[test]
fn criterion_05_canonical_decomposition() {
    report(5, "decomposition sum and strategy certificate", || {
        for (i, (problem, experiments)) in suite45().iter().enumerate() {
            let v = robust_value(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let d = canonical_decomposition(problem).unwrap();
            let Provenance::Canonical { base, .. } = &d.provenance else {
                unreachable!();
            };
            let total: f64 = base.shift.iter().sum::<f64>()
                + d.subproblems
                    .iter()
                    .map(|sub| {
                        experiments
                            .iter()
                            .map(|e| bayes_value_weighted(e, &sub.utilities))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .sum::<f64>();
            assert!((v - total).abs() <= VALUE_TOL, "instance {i}: {v} vs {total}");
            let sol = robust_strategy(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            assert!((sol.certificate_value - sol.value).abs() <= VALUE_TOL, "instance {i}");
        }
        let three_action = robust_fusion::test_support::three_action_problem();
        let d = canonical_decomposition(&three_action).unwrap();
        let Provenance::Canonical { increments, .. } = &d.provenance else {
            unreachable!();
        };
        assert_eq!(increments, &vec![[2.0, -1.0], [1.0, -2.0]]);
    });
}

#[test]
fn criterion_06_weak_decomposition() {
    report(6, "dual potentials feasible, identity and bound hold", || {
        for (i, (problem, experiments)) in suite6().iter().enumerate() {
            let v = robust_value(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let d = weak_decomposition(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let Provenance::Weak { potentials, .. } = &d.provenance else {
                unreachable!();
            };
            // Pointwise feasibility of the potentials against pure actions.
            let space = ProductSpace::from_experiments(experiments);
            for theta in 0..problem.state_count() {
                for coords in space.iter() {
                    let lhs: f64 = potentials
                        .iter()
                        .zip(&coords)
                        .map(|(phi, &y)| phi[theta][y])
                        .sum();
                    let rhs = (0..problem.action_count())
                        .map(|a| problem.u(theta, a))
                        .fold(f64::NEG_INFINITY, f64::max);
                    assert!(lhs <= rhs + 1e-8, "instance {i}");
                }
            }
            // Decomposition identity: per-source subproblems, best source.
            let total: f64 = d
                .subproblems
                .iter()
                .map(|sub| {
                    experiments
                        .iter()
                        .map(|e| bayes_value_weighted(e, &sub.utilities))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum();
            assert!((total - v).abs() <= VALUE_TOL, "instance {i}: {total} vs {v}");
            // Robust value of each subproblem cannot add up past the whole.
            let sum_robust: f64 = d
                .subproblems
                .iter()
                .map(|sub| {
                    let sub_problem = DecisionProblem::from_weighted(
                        problem.states.clone(),
                        sub.actions.clone(),
                        sub.utilities.clone(),
                    )
                    .unwrap();
                    let (_, value) =
                        worst_case_joint(experiments, &sub_problem, DEFAULT_CELL_CAP).unwrap();
                    value
                })
                .sum();
            assert!(v >= sum_robust - VALUE_TOL, "instance {i}: {v} < {sum_robust}");
        }
    });
}

#[test]
fn criterion_07_oracle_agreement() {
    report(7, "min/max forms agree and bounds bracket", || {
        let mut all = suite3();
        all.extend(suite45());
        all.extend(suite6());
        for (i, (problem, experiments)) in all.iter().enumerate() {
            let v = robust_value(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let max_form = oracle_value(experiments, problem).unwrap();
            assert!((v - max_form).abs() <= VALUE_TOL, "instance {i}: {v} vs {max_form}");
            let lower = deterministic_bound(experiments, problem, 4, 17 + i as u64).unwrap();
            assert!(lower <= v + VALUE_TOL, "instance {i}: lower {lower} > {v}");
            let upper = sampled_coupling_bound(experiments, problem, 8, 19 + i as u64).unwrap();
            assert!(upper >= v - VALUE_TOL, "instance {i}: upper {upper} < {v}");
        }
    });
}

#[test]
fn criterion_08_corollaries() {
    report(8, "marginal contributions and support selection", || {
        for (i, (problem, experiments)) in suite45().iter().enumerate() {
            for j in 0..experiments.len() {
                let (c, wins) = marginal_contribution(j, experiments, problem).unwrap();
                if wins.is_empty() {
                    assert!(c.abs() <= VALUE_TOL, "instance {i} source {j}: {c}");
                } else {
                    assert!(c > 1e-10, "instance {i} source {j}: {c}");
                }
            }
            let support = select_support(experiments, problem).unwrap();
            assert!(support.len() + 1 <= problem.action_count().max(2), "instance {i}");
            if problem.action_count() == 2 {
                assert_eq!(support.len(), 1, "instance {i}");
            }
            let restricted: Vec<Experiment> =
                support.iter().map(|&j| experiments[j].clone()).collect();
            let v_all = robust_value(experiments, problem, DEFAULT_CELL_CAP).unwrap();
            let v_sub = robust_value(&restricted, problem, DEFAULT_CELL_CAP).unwrap();
            assert!((v_all - v_sub).abs() <= VALUE_TOL, "instance {i}");
        }
    });
}

#[test]
fn criterion_09_asymptotics() {
    report(9, "Chernoff index and large-sample dominance", || {
        let sym9 = Experiment::new(
            "sym9",
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        )
        .unwrap();
        let c = chernoff_index(&sym9).unwrap();
        assert!((c - 0.5108).abs() <= 1e-4);
        // Simplex-grid oracle for min over distributions of the larger KL.
        let mut grid_best = f64::INFINITY;
        for i in 0..=200_000u32 {
            let q = f64::from(i) / 200_000.0;
            let kl = |p: f64| -> f64 {
                let mut s = 0.0;
                if q > 0.0 {
                    s += q * (q / p).ln();
                }
                if q < 1.0 {
                    s += (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
                }
                s
            };
            grid_best = grid_best.min(kl(0.9).max(kl(0.1)));
        }
        assert!((c - grid_best).abs() <= 1e-4);

        let sym7 = Experiment::new(
            "sym7",
            vec!["0".into(), "1".into()],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap();
        let (problem, _) = portfolio_instance();
        let pair = vec![sym9, sym7];
        let t_star = dominance_threshold(&pair, &problem, 16).unwrap().unwrap();
        assert!(t_star <= 16);
        for t in t_star..=32 {
            let (joint, singles) = power_values(&pair, &problem, t).unwrap();
            assert!((joint - singles[0]).abs() <= VALUE_TOL, "t = {t}");
        }
    });
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_robust-fusion"))
        .args(args)
        .output()
        .expect("binary runs");
    (output.status.code().unwrap_or(-1), output.stdout)
}

#[test]
fn criterion_10_cli_round_trip() {
    report(10, "CLI fixtures, byte stability, exit codes", || {
        for name in [
            "portfolio.json",
            "three-state.json",
            "three-action.json",
            "covid-binary.json",
        ] {
            let path = fixture(name);
            let path = path.to_str().unwrap();
            for sub in ["value", "strategy"] {
                let (code_a, out_a) = run_cli(&[sub, path, "--format", "machine"]);
                let (code_b, out_b) = run_cli(&[sub, path, "--format", "machine"]);
                assert_eq!(code_a, 0, "{name} {sub}");
                assert_eq!(code_b, 0, "{name} {sub}");
                assert_eq!(out_a, out_b, "{name} {sub} not byte-stable");
                assert!(!out_a.is_empty());
            }
            let (code, _) = run_cli(&[
                "check", path, "--format", "machine", "--seed", "1",
            ]);
            assert_eq!(code, 0, "{name} check");
        }

        let dir = tempfile::tempdir().unwrap();
        let garbled = dir.path().join("garbled.json");
        std::fs::write(&garbled, b"{ not json").unwrap();
        let (code, _) = run_cli(&["value", garbled.to_str().unwrap()]);
        assert_eq!(code, 2);

        let bad_rows = dir.path().join("bad-rows.json");
        let source = std::fs::read_to_string(fixture("portfolio.json")).unwrap();
        std::fs::write(&bad_rows, source.replace("\"9/10\", \"1/10\"", "\"9/10\", \"2/10\""))
            .unwrap();
        let (code, _) = run_cli(&["value", bad_rows.to_str().unwrap()]);
        assert_eq!(code, 3);

        let missing = dir.path().join("does-not-exist.json");
        let (code, _) = run_cli(&["value", missing.to_str().unwrap()]);
        assert_eq!(code, 7);
    });
}
