//! Command-line interface: instance files, report emission, and the
//! subcommand implementations behind the `robust-fusion` binary.
//!
//! Exit codes: 0 success (for `check`, also requires the pass flag),
//! 1 failed check, 2 parse error, 3 validation error, 4 size cap exceeded,
//! 5 no strict leader, 6 numerical failure, 7 I/O error.

use crate::asymptotics::{dominance_threshold, power_values};
use crate::decompose::{canonical_decomposition, weak_decomposition, Provenance};
use crate::error::{Error, Result};
use crate::model::{
    bayes_value_weighted, composite_label, validate_instance, DecisionProblem,
    Experiment,
};
use crate::oracle::run_checks;
use crate::robust::{best_single_source, robust_strategy, robust_value};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "robust-fusion",
    about = "Robust evaluation of multiple information sources under unknown correlation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Tolerance for value comparisons in reports.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Cap on the product signal space (overrides ROBUST_FUSION_CAP).
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for sampled oracles.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Robust value, best single source, and the fusion gap.
    Value { instance: PathBuf },
    /// Robustly optimal strategy with its worst-case certificate.
    Strategy { instance: PathBuf },
    /// Canonical or weak decomposition with per-subproblem winners.
    Decompose {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Canonical)]
        mode: Mode,
    },
    /// Values of t-fold i.i.d. powers, as CSV rows for plotting.
    Sweep {
        instance: PathBuf,
        #[arg(long, default_value_t = 16)]
        t_max: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate the instance against the oracle suite.
    Check { instance: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Canonical,
    Weak,
}

// Probabilities and utilities may be decimals or exact fraction strings.
#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum Num {
    Real(f64),
    Fraction(String),
}

impl Num {
    fn value(&self) -> Result<f64> {
        match self {
            Num::Real(v) => Ok(*v),
            Num::Fraction(s) => {
                let (a, b) = s
                    .split_once('/')
                    .ok_or_else(|| Error::Parse(format!("expected \"a/b\", got \"{s}\"")))?;
                let a: i64 = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad numerator in \"{s}\"")))?;
                let b: i64 = b
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad denominator in \"{s}\"")))?;
                if b == 0 {
                    return Err(Error::Parse(format!("zero denominator in \"{s}\"")));
                }
                Ok(a as f64 / b as f64)
            }
        }
    }
}

fn matrix(rows: &[Vec<Num>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| r.iter().map(Num::value).collect())
        .collect()
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemBlock {
    states: Vec<String>,
    prior: Vec<Num>,
    actions: Vec<String>,
    utilities: Vec<Vec<Num>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ExperimentBlock {
    name: String,
    signals: Vec<String>,
    kernel: Vec<Vec<Num>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    problem: ProblemBlock,
    experiments: Vec<ExperimentBlock>,
}

/// Parses and validates an instance document.
pub fn parse_instance(json: &str) -> Result<(DecisionProblem, Vec<Experiment>)> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let prior: Vec<f64> = file.problem.prior.iter().map(Num::value).collect::<Result<_>>()?;
    let problem = DecisionProblem::new(
        file.problem.states,
        prior,
        file.problem.actions,
        matrix(&file.problem.utilities)?,
    )?;
    let experiments: Vec<Experiment> = file
        .experiments
        .iter()
        .map(|e| Experiment::new(e.name.clone(), e.signals.clone(), matrix(&e.kernel)?))
        .collect::<Result<_>>()?;
    if experiments.is_empty() {
        return Err(Error::EmptyInput);
    }
    validate_instance(&problem, &experiments)?;
    Ok((problem, experiments))
}

/// Parses and validates an instance file, returning its SHA-256 digest too.
pub fn load_instance(path: &std::path::Path) -> Result<(DecisionProblem, Vec<Experiment>, String)> {
    let bytes = std::fs::read(path)?;
    let digest = hex(&Sha256::digest(&bytes));
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Parse(format!("{}: not UTF-8: {e}", path.display())))?;
    let (problem, experiments) = parse_instance(text)
        .map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
    Ok((problem, experiments, digest))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn effective_cap(cli: &Cli) -> usize {
    cli.cap
        .or_else(|| {
            std::env::var("ROBUST_FUSION_CAP")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(crate::DEFAULT_CELL_CAP)
}

pub fn error_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => 2,
        Error::DimensionMismatch(_)
        | Error::NonStochasticRow { .. }
        | Error::BadPrior(_)
        | Error::NotBinaryState(_)
        | Error::EmptyInput => 3,
        Error::InstanceTooLarge { .. } | Error::TOverflow { .. } => 4,
        Error::NoStrictLeader => 5,
        Error::TargetOutsidePolyhedron | Error::Numerical(_) => 6,
        Error::Io(_) => 7,
    }
}

struct Report {
    machine: Value,
    text: String,
}

fn emit(cli: &Cli, report: Report, started: Instant) {
    match cli.format {
        Format::Machine => println!("{}", serde_json::to_string(&report.machine).unwrap()),
        Format::Text => {
            print!("{}", report.text);
            println!("wall: {} ms", started.elapsed().as_millis());
        }
    }
}

fn cmd_value(cli: &Cli, path: &std::path::Path) -> Result<Report> {
    let (problem, experiments, digest) = load_instance(path)?;
    let cap = effective_cap(cli);
    let v = robust_value(&experiments, &problem, cap)?;
    let (j, single) = best_single_source(&experiments, &problem)?;
    let gap = v - single;
    let machine = json!({
        "command": "value",
        "instance": path.display().to_string(),
        "digest": digest,
        "robust_value": v,
        "best_single_index": j,
        "best_single_name": experiments[j].name,
        "best_single_value": single,
        "gap": gap,
    });
    let text = format!(
        "instance: {} (sha256 {})\nV           = {v:.6}\nbest single = {} (index {j}), value {single:.6}\ngap         = {gap:.6}\n",
        path.display(),
        &digest[..12],
        experiments[j].name,
    );
    Ok(Report { machine, text })
}

fn cmd_strategy(cli: &Cli, path: &std::path::Path) -> Result<Report> {
    let (problem, experiments, digest) = load_instance(path)?;
    let cap = effective_cap(cli);
    let sol = robust_strategy(&experiments, &problem, cap)?;
    let space = sol.strategy.space.clone();
    let mut rows_machine = Vec::new();
    let mut rows_text = String::new();
    for (cell, coords) in space.iter().enumerate() {
        let label = composite_label(&experiments, &coords);
        let row = sol.strategy.row(cell);
        let mut parts = Vec::new();
        for (a, &w) in row.iter().enumerate() {
            if w > 1e-9 {
                parts.push(if (w - 1.0).abs() < 1e-9 {
                    problem.actions[a].clone()
                } else {
                    format!("{}:{w:.6}", problem.actions[a])
                });
            }
        }
        rows_text.push_str(&format!("  {label} -> {}\n", parts.join(", ")));
        rows_machine.push(json!({ "signal": label, "distribution": row }));
    }
    let method = match sol.method {
        crate::robust::Method::BinaryAction => "binary_action",
        crate::robust::Method::CanonicalAssembly => "canonical_assembly",
        crate::robust::Method::DualLp => "dual_lp",
    };
    let machine = json!({
        "command": "strategy",
        "instance": path.display().to_string(),
        "digest": digest,
        "method": method,
        "value": sol.value,
        "certificate_value": sol.certificate_value,
        "certificate_gap": (sol.value - sol.certificate_value).abs(),
        "sources_used": sol.strategy.sources_used,
        "table": rows_machine,
    });
    let text = format!(
        "instance: {} (sha256 {})\nmethod: {method}\nvalue       = {:.6}\ncertificate = {:.6}\nstrategy:\n{rows_text}",
        path.display(),
        &digest[..12],
        sol.value,
        sol.certificate_value,
    );
    Ok(Report { machine, text })
}

fn cmd_decompose(cli: &Cli, path: &std::path::Path, mode: Mode) -> Result<Report> {
    let (problem, experiments, digest) = load_instance(path)?;
    let cap = effective_cap(cli);
    let d = match mode {
        Mode::Canonical => canonical_decomposition(&problem)?,
        Mode::Weak => weak_decomposition(&experiments, &problem, cap)?,
    };
    let mut winners = Vec::new();
    for sub in &d.subproblems {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (j, e) in experiments.iter().enumerate() {
            let v = bayes_value_weighted(e, &sub.utilities);
            if v > best.1 + 1e-12 {
                best = (j, v);
            }
        }
        winners.push(best);
    }
    let mut subs_machine = Vec::new();
    let mut subs_text = String::new();
    for (l, (sub, &(j, v))) in d.subproblems.iter().zip(&winners).enumerate() {
        subs_machine.push(json!({
            "index": l,
            "actions": sub.actions,
            "utilities": sub.utilities,
            "winner_index": j,
            "winner_name": experiments[j].name,
            "winner_value": v,
        }));
        let utils: Vec<String> = sub
            .utilities
            .iter()
            .map(|row| {
                let entries: Vec<String> = row.iter().map(|u| format!("{u:.6}")).collect();
                format!("({})", entries.join(","))
            })
            .collect();
        subs_text.push_str(&format!(
            "  subproblem {l}: u = [{}], winner {} (value {v:.6})\n",
            utils.join(" "),
            experiments[j].name
        ));
    }
    let total: f64 = winners.iter().map(|&(_, v)| v).sum();
    let (mode_name, extra_machine, extra_text) = match (&mode, &d.provenance) {
        (Mode::Canonical, Provenance::Canonical { base, increments }) => {
            let shift_sum: f64 = base.shift.iter().sum();
            (
                "canonical",
                json!({ "shift": base.shift.to_vec(), "increments": increments
                    .iter().map(|i| i.to_vec()).collect::<Vec<_>>(),
                    "total_value": total + shift_sum }),
                format!(
                    "shift = ({:.6},{:.6})\ntotal value = {:.6}\n",
                    base.shift[0],
                    base.shift[1],
                    total + shift_sum
                ),
            )
        }
        (Mode::Weak, Provenance::Weak { dual_objective, .. }) => (
            "weak",
            json!({ "dual_objective": dual_objective, "total_value": total }),
            format!("dual objective = {dual_objective:.6}\ntotal value = {total:.6}\n"),
        ),
        _ => unreachable!(),
    };
    let machine = json!({
        "command": "decompose",
        "instance": path.display().to_string(),
        "digest": digest,
        "mode": mode_name,
        "subproblems": subs_machine,
        "summary": extra_machine,
    });
    let text = format!(
        "instance: {} (sha256 {})\nmode: {mode_name}\n{subs_text}{extra_text}",
        path.display(),
        &digest[..12],
    );
    Ok(Report { machine, text })
}

fn cmd_sweep(
    _cli: &Cli,
    path: &std::path::Path,
    t_max: usize,
    out: Option<&std::path::Path>,
) -> Result<Report> {
    let (problem, experiments, digest) = load_instance(path)?;
    let mut csv = String::new();
    let names: Vec<String> = (1..=experiments.len()).map(|j| format!("V_{j}")).collect();
    csv.push_str(&format!("t,V_joint,{}\n", names.join(",")));
    let mut rows_machine = Vec::new();
    for t in 1..=t_max {
        let (joint, singles) = power_values(&experiments, &problem, t)?;
        let cols: Vec<String> = singles.iter().map(|v| format!("{v}")).collect();
        csv.push_str(&format!("{t},{joint},{}\n", cols.join(",")));
        rows_machine.push(json!({ "t": t, "V_joint": joint, "V_singles": singles }));
    }
    let t_star = match dominance_threshold(&experiments, &problem, t_max) {
        Ok(t) => json!(t),
        Err(Error::NoStrictLeader) => json!("no-strict-leader"),
        Err(e) => return Err(e),
    };
    if let Some(out_path) = out {
        std::fs::write(out_path, &csv)?;
    }
    let machine = json!({
        "command": "sweep",
        "instance": path.display().to_string(),
        "digest": digest,
        "t_max": t_max,
        "t_star": t_star,
        "rows": rows_machine,
    });
    let text = format!(
        "instance: {} (sha256 {})\nt* = {t_star}\n{}",
        path.display(),
        &digest[..12],
        if out.is_some() { String::new() } else { csv },
    );
    Ok(Report { machine, text })
}

fn cmd_check(cli: &Cli, path: &std::path::Path) -> Result<(Report, bool)> {
    let (problem, experiments, digest) = load_instance(path)?;
    let cap = effective_cap(cli);
    let report = run_checks(
        path.display().to_string(),
        &experiments,
        &problem,
        64,
        cli.seed,
        cap,
    )?;
    let machine = json!({
        "command": "check",
        "instance": report.instance,
        "digest": digest,
        "seed": cli.seed,
        "main_value": report.main_value,
        "oracle_value": report.oracle_value,
        "gap": report.gap,
        "lower_bound": report.lower_bound,
        "upper_bound": report.upper_bound,
        "pass": report.pass,
    });
    let text = format!(
        "instance: {} (sha256 {})\nmain   = {:.6}\noracle = {:.6} (gap {:.2e})\nbounds = [{:.6}, {:.6}]\nresult: {}\n",
        path.display(),
        &digest[..12],
        report.main_value,
        report.oracle_value,
        report.gap,
        report.lower_bound,
        report.upper_bound,
        if report.pass { "PASS" } else { "FAIL" },
    );
    Ok((Report { machine, text }, report.pass))
}

/// Runs the CLI and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let started = Instant::now();
    let outcome: Result<(Report, bool)> = match &cli.command {
        Command::Value { instance } => cmd_value(&cli, instance).map(|r| (r, true)),
        Command::Strategy { instance } => cmd_strategy(&cli, instance).map(|r| (r, true)),
        Command::Decompose { instance, mode } => {
            cmd_decompose(&cli, instance, *mode).map(|r| (r, true))
        }
        Command::Sweep {
            instance,
            t_max,
            out,
        } => cmd_sweep(&cli, instance, *t_max, out.as_deref()).map(|r| (r, true)),
        Command::Check { instance } => cmd_check(&cli, instance),
    };
    match outcome {
        Ok((report, pass)) => {
            emit(&cli, report, started);
            if pass {
                0
            } else {
                1
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            error_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const PORTFOLIO: &str = r#"{
      "problem": {
        "states": ["theta1", "theta2"],
        "prior": ["1/2", "1/2"],
        "actions": ["none", "invest-1", "invest-2", "invest-both"],
        "utilities": [[0, 4, -2, 2], [0, -2, 4, 2]]
      },
      "experiments": [
        {"name": "P1", "signals": ["1", "0"], "kernel": [[0.9, 0.1], [0.5, 0.5]]},
        {"name": "P2", "signals": ["1", "0"], "kernel": [["1/2", "1/2"], ["9/10", "1/10"]]}
      ]
    }"#;

    #[test]
    fn parses_decimals_and_fractions() {
        let f = write_temp(PORTFOLIO);
        let (problem, experiments, digest) = load_instance(f.path()).unwrap();
        assert_eq!(problem.action_count(), 4);
        assert_eq!(experiments.len(), 2);
        assert_eq!(experiments[1].prob(1, 0), 0.9);
        assert_eq!(digest.len(), 64);
        assert!((problem.u(0, 1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_fractions() {
        let f = write_temp(r#"{"problem": {}, "experiments": [], "extra": 1}"#);
        assert!(matches!(load_instance(f.path()).unwrap_err(), Error::Parse(_)));
        let f = write_temp(&PORTFOLIO.replace("\"1/2\", \"1/2\"", "\"1/0\", \"1/1\""));
        assert!(matches!(load_instance(f.path()).unwrap_err(), Error::Parse(_)));
    }

    #[test]
    fn rejects_invalid_rows_with_validation_code() {
        let f = write_temp(&PORTFOLIO.replace("[0.9, 0.1]", "[0.9, 0.3]"));
        let err = load_instance(f.path()).unwrap_err();
        assert_eq!(error_code(&err), 3);
    }

    #[test]
    fn fraction_parsing_is_exact() {
        assert_eq!(Num::Fraction("9/10".into()).value().unwrap(), 0.9);
        assert_eq!(Num::Fraction("-1/2".into()).value().unwrap(), -0.5);
        assert!(Num::Fraction("x/2".into()).value().is_err());
    }
}
