use clap::{Args, ValueEnum};
use hbac_core::spectrum::{
    log_space, sampled_analytic_solution, sigma_large_n, solve_stationarity, sweep_sigma_vs_lambda, SpectrumProblem,
    SpectrumSolution, RESIDUAL_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Cell, CliError, Run, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMode {
    /// Sigma** against lambda for several machine sizes.
    Lambda,
    /// Numeric optimum against the sampled large-N spectrum over N.
    Modes,
    /// One (N, lambda) cell.
    Single,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Sweep shape [default: lambda].
    #[arg(long, value_enum)]
    pub mode: Option<SpectrumMode>,
    /// System occupation fixing g0 = ln(1 + 1/n0) [default: 10].
    #[arg(long)]
    pub n0: Option<f64>,
    /// Frequency ratio omega_N / omega_0 for `modes` and `single` [default: 120.8].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lower end of the lambda sweep [default: 1.05].
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Upper end of the lambda sweep [default: 20].
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Log-spaced lambda points [default: 60].
    #[arg(long)]
    pub lambda_count: Option<usize>,
    /// Machine sizes, comma separated [default: 1,2,4 or 1,2,5,10,20,50,100].
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
}

const COLUMNS_HEAD: [&str; 3] = ["N", "lambda", "method"];
const COLUMNS_TAIL: [&str; 5] =
    ["sigma_star_star", "residual", "hessian_min_eigenvalue", "iterations", "sigma_large_n"];

fn columns(max_n: usize) -> Vec<String> {
    let mut cols: Vec<String> = COLUMNS_HEAD.iter().map(|s| s.to_string()).collect();
    cols.extend((0..=max_n).map(|j| format!("g_{j}")));
    cols.extend(COLUMNS_TAIL.iter().map(|s| s.to_string()));
    cols
}

fn row(problem: &SpectrumProblem, sol: &SpectrumSolution, max_n: usize) -> Vec<Cell> {
    let mut r: Vec<Cell> = vec![problem.modes().into(), problem.lambda().into(), sol.method.as_str().into()];
    r.extend((0..=max_n).map(|j| sol.g.get(j).copied().into()));
    r.extend([
        sol.sigma.into(),
        sol.residual.into(),
        sol.hessian_min_eigenvalue.into(),
        sol.iterations.into(),
        sigma_large_n(problem).into(),
    ]);
    r
}

fn failed_row(n: usize, lambda: f64, err: &hbac_core::Error, max_n: usize) -> Vec<Cell> {
    let residual = match err {
        hbac_core::Error::NonConvergence { residual, .. } => Cell::from(*residual),
        _ => Cell::Empty,
    };
    let mut r = vec![n.into(), lambda.into(), "failed".into()];
    r.resize(COLUMNS_HEAD.len() + max_n + 1, Cell::Empty);
    r.extend([Cell::Empty, residual]);
    r
}

/// Convergence certificate for a numeric solution.
fn certify(sol: &SpectrumSolution, failures: &mut Vec<String>, n: usize, lambda: f64) {
    if !(sol.residual < RESIDUAL_TOL) {
        failures.push(format!("N={n} lambda={lambda}: stationarity residual {:e}", sol.residual));
    }
    if let Some(h) = sol.hessian_min_eigenvalue {
        if !(h > 0.0) {
            failures.push(format!("N={n} lambda={lambda}: Hessian not positive definite (min eigenvalue {h:e})"));
        }
    }
}

pub fn run(args: &SpectrumArgs) -> Result<Run, CliError> {
    let mode = args.mode.unwrap_or(SpectrumMode::Lambda);
    let n0 = args.n0.unwrap_or(10.0);
    let mut run = Run::default();
    let mut problems: Vec<(SpectrumProblem, Result<SpectrumSolution, hbac_core::Error>)> = Vec::new();
    let mut extra: Vec<(SpectrumProblem, SpectrumSolution)> = Vec::new();

    match mode {
        SpectrumMode::Lambda => {
            let lambdas = log_space(
                args.lambda_min.unwrap_or(1.05),
                args.lambda_max.unwrap_or(20.0),
                args.lambda_count.unwrap_or(60),
            );
            let ns = args.ns.clone().unwrap_or_else(|| vec![1, 2, 4]);
            for cell in sweep_sigma_vs_lambda(n0, &lambdas, &ns) {
                problems.push((SpectrumProblem::from_occupation(n0, cell.lambda, cell.n)?, cell.result));
            }
        }
        SpectrumMode::Modes | SpectrumMode::Single => {
            let lambda = args.lambda.unwrap_or(120.8);
            let default_ns = if mode == SpectrumMode::Modes { vec![1, 2, 5, 10, 20, 50, 100] } else { vec![4] };
            let mut ns = args.ns.clone().unwrap_or(default_ns);
            ns.sort_unstable();
            ns.dedup();
            let solved: Vec<_> = ns
                .par_iter()
                .map(|&n| {
                    let p = SpectrumProblem::from_occupation(n0, lambda, n)?;
                    let s = solve_stationarity(&p);
                    Ok::<_, hbac_core::Error>((p, s))
                })
                .collect::<Result<_, _>>()?;
            for (p, s) in solved {
                if mode == SpectrumMode::Modes {
                    extra.push((p, sampled_analytic_solution(&p)));
                }
                problems.push((p, s));
            }
        }
    }

    let max_n = problems.iter().map(|(p, _)| p.modes()).max().unwrap_or(1);
    let mut table = Table::new(&columns(max_n));
    table.meta("mode", format!("{mode:?}").to_lowercase());
    table.meta("n0", n0);
    table.meta("assumption", "sigma_large_n = (1/2N) [ln(tanh(gN/4)/tanh(g0/4))]^2, the thermodynamic-length form");
    for (i, (p, s)) in problems.iter().enumerate() {
        match s {
            Ok(sol) => {
                certify(sol, &mut run.failures, p.modes(), p.lambda());
                table.push(row(p, sol, max_n));
            }
            Err(e) => {
                run.failures.push(format!("N={} lambda={}: {e}", p.modes(), p.lambda()));
                table.push(failed_row(p.modes(), p.lambda(), e, max_n));
            }
        }
        if let Some((pa, sa)) = extra.get(i) {
            table.push(row(pa, sa, max_n));
        }
    }
    run.table = table;
    Ok(run)
}
