//! Large-sample analysis: count-statistic reductions of i.i.d. repeated
//! experiments, the Chernoff index, and the sample size at which the
//! highest-index source dominates every other source outright.

use crate::decompose::canonical_decomposition;
use crate::error::{Error, Result};
use crate::model::{bayes_value_weighted, DecisionProblem, Experiment};
use crate::robust::envelope_value;

/// Hard cap on the signal count of a power experiment.
pub const POWER_SIGNAL_CAP: usize = 100_000;

fn reduced_signal_count(t: usize, k: usize) -> Option<usize> {
    // C(t + k - 1, k - 1), bailing out on overflow.
    let mut n: usize = 1;
    for i in 1..k {
        n = n.checked_mul(t + i)?;
        n /= i;
    }
    Some(n)
}

fn count_vectors(t: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=remaining).rev() {
            prefix.push(c);
            rec(remaining - c, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(t, k, &mut Vec::new(), &mut out);
    out
}

/// Count-statistic reduction of `t` i.i.d. draws from `base`: one signal per
/// count vector, with multinomial probabilities accumulated in log domain.
/// Blackwell-equivalent to the full `t`-fold product by exchangeability.
pub fn iid_power(base: &Experiment, t: usize) -> Result<Experiment> {
    if t == 0 {
        return Err(Error::DimensionMismatch("power requires t >= 1".into()));
    }
    if t == 1 {
        return Ok(base.clone());
    }
    let k = base.signal_count();
    let signals = reduced_signal_count(t, k).unwrap_or(usize::MAX);
    if signals > POWER_SIGNAL_CAP {
        return Err(Error::TOverflow {
            signals,
            cap: POWER_SIGNAL_CAP,
        });
    }
    let mut log_fact = vec![0.0f64; t + 1];
    for i in 1..=t {
        log_fact[i] = log_fact[i - 1] + (i as f64).ln();
    }
    let counts = count_vectors(t, k);
    let labels: Vec<String> = counts
        .iter()
        .map(|c| {
            let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let states = base.state_count();
    let mut kernel = vec![vec![0.0; counts.len()]; states];
    for theta in 0..states {
        for (col, c) in counts.iter().enumerate() {
            let mut log_p = log_fact[t];
            let mut zero = false;
            for (y, &cy) in c.iter().enumerate() {
                if cy == 0 {
                    continue;
                }
                let p = base.prob(theta, y);
                if p == 0.0 {
                    zero = true;
                    break;
                }
                log_p += cy as f64 * p.ln() - log_fact[cy];
            }
            kernel[theta][col] = if zero { 0.0 } else { log_p.exp() };
        }
    }
    Experiment::from_computed(format!("{}^{}", base.name, t), labels, kernel)
}

/// Chernoff index of a binary-state experiment:
/// `-min_{s in [0,1]} log sum_y P_0(y)^{1-s} P_1(y)^s`, found by
/// golden-section search; `+inf` when the rows have disjoint support.
pub fn chernoff_index(experiment: &Experiment) -> Result<f64> {
    if experiment.state_count() != 2 {
        return Err(Error::NotBinaryState(experiment.state_count()));
    }
    let pairs: Vec<(f64, f64)> = (0..experiment.signal_count())
        .map(|y| (experiment.prob(0, y), experiment.prob(1, y)))
        .filter(|&(p, q)| p > 0.0 && q > 0.0)
        .collect();
    if pairs.is_empty() {
        return Ok(f64::INFINITY);
    }
    let f = |s: f64| -> f64 {
        pairs
            .iter()
            .map(|&(p, q)| p.powf(1.0 - s) * q.powf(s))
            .sum::<f64>()
            .ln()
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    Ok(-f(0.5 * (a + b)))
}

/// Smallest `t <= t_max` at which source 0 strictly wins every canonical
/// subproblem against every rival at the `t`-fold power, which makes the
/// joint robust value collapse to source 0's own value. Requires source 0 to
/// have the strictly largest Chernoff index.
pub fn dominance_threshold(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    t_max: usize,
) -> Result<Option<usize>> {
    if problem.state_count() != 2 {
        return Err(Error::NotBinaryState(problem.state_count()));
    }
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    if experiments.len() == 1 {
        return Ok(Some(1));
    }
    let leader = chernoff_index(&experiments[0])?;
    for rival in &experiments[1..] {
        if !(leader > chernoff_index(rival)?) {
            return Err(Error::NoStrictLeader);
        }
    }
    let decomposition = canonical_decomposition(problem)?;
    for t in 1..=t_max {
        let powers: Vec<Experiment> = experiments
            .iter()
            .map(|e| iid_power(e, t))
            .collect::<Result<_>>()?;
        let all_won = decomposition.subproblems.iter().all(|sub| {
            let own = bayes_value_weighted(&powers[0], &sub.utilities);
            let best_rival = powers[1..]
                .iter()
                .map(|e| bayes_value_weighted(e, &sub.utilities))
                .fold(f64::NEG_INFINITY, f64::max);
            own > best_rival + 1e-9
        });
        if all_won {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Joint and per-source values at the `t`-fold powers, for sweep output:
/// `(V(P_1^t,…,P_m^t), [V(P_1^t), …, V(P_m^t)])`. Binary states only; uses
/// the supremum-envelope value, so the product space never materializes.
pub fn power_values(
    experiments: &[Experiment],
    problem: &DecisionProblem,
    t: usize,
) -> Result<(f64, Vec<f64>)> {
    let powers: Vec<Experiment> = experiments
        .iter()
        .map(|e| iid_power(e, t))
        .collect::<Result<_>>()?;
    let joint = envelope_value(&powers, problem)?;
    let singles = powers
        .iter()
        .map(|e| crate::model::bayes_value(e, problem))
        .collect::<Result<_>>()?;
    Ok((joint, singles))
}
