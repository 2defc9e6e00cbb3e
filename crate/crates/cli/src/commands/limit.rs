use clap::Args;
use hbac_core::hbac::{build_swap_chain, entropy_production_star, gaussian_cooling_limit, run_protocol, MachineSpec};
use serde::{Deserialize, Serialize};

use super::required;
use crate::{Cell, CliError, Run, Table};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitArgs {
    /// Reservoir inverse temperature [default: 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// System frequency [default: 1].
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Machine frequencies in ascending order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
}

pub fn spec_from(beta: Option<f64>, omega0: Option<f64>, omegas: Option<Vec<f64>>) -> Result<MachineSpec, CliError> {
    Ok(MachineSpec::new(beta.unwrap_or(1.0), omega0.unwrap_or(1.0), required(omegas, "omegas")?)?)
}

pub fn run(args: &LimitArgs) -> Result<Run, CliError> {
    let spec = spec_from(args.beta, args.omega0, args.omegas.clone())?;
    let limit = gaussian_cooling_limit(&spec);
    let chain = build_swap_chain(&spec);
    let trace = run_protocol(&spec, &chain.unitary, 1)?;
    let after = trace.last();
    let star = entropy_production_star(&spec);

    let mut run = Run::default();
    let gap = (after.nth - limit.nth_limit).abs();
    if gap > 1e-10 * limit.nth_limit + 1e-16 {
        run.failures
            .push(format!("one swap-chain round reached nth = {:e}, limit is {:e}", after.nth, limit.nth_limit));
    }
    if (after.sigma - star.value).abs() > 1e-9 {
        run.failures.push(format!("traced entropy production {:e} differs from {:e}", after.sigma, star.value));
    }
    if !limit.cooling_possible {
        run.warnings.push("no machine mode is above the system frequency; cooling is not possible".into());
    }

    let mut table = Table::new(&[
        "beta",
        "omega0",
        "omega_max",
        "lambda",
        "beta_star",
        "nth_limit",
        "cooling_possible",
        "nth_one_round",
        "beta_eff_one_round",
        "sigma_star",
        "sigma_one_round",
    ]);
    table.meta("recharger", "swap chain, one round");
    table.push(vec![
        spec.beta().into(),
        spec.omega0().into(),
        spec.omega_max().into(),
        limit.lambda.into(),
        limit.beta_star.into(),
        limit.nth_limit.into(),
        limit.cooling_possible.into(),
        after.nth.into(),
        Cell::from(after.beta_eff),
        star.value.into(),
        after.sigma.into(),
    ]);
    run.table = table;
    Ok(run)
}
