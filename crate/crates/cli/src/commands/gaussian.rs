use clap::{Args, ValueEnum};
use hbac_core::gaussian::{make_beam_splitter, random_gaussian_unitary, GaussianUnitary};
use hbac_core::hbac::{build_swap_chain, gaussian_cooling_limit, run_protocol, SIGMA_PRECISION};
use hbac_core::linalg::{c, CMatrix, CVector};
use serde::{Deserialize, Serialize};

use super::limit::spec_from;
use crate::{Cell, CliError, Context, Run, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recharger {
    SwapChain,
    Identity,
    /// Beam splitter between the system and the top machine mode.
    BeamSplitter,
    /// Haar passive, squeezers, Haar passive; drawn from the seed.
    Random,
    /// `C` and `S` read from the config keys `c_re`, `c_im`, `s_re`, `s_im`.
    Custom,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Machine frequencies in ascending order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// [default: swap-chain]
    #[arg(long, value_enum)]
    pub recharger: Option<Recharger>,
    /// [default: 10]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Beam-splitter angle [default: pi/4].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Largest squeezing of a random recharger [default: 1].
    #[arg(long)]
    pub max_squeeze: Option<f64>,
    /// Row-major real part of C for a custom recharger.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c_re: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c_im: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s_re: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s_im: Option<Vec<f64>>,
}

fn complex_matrix(re: Option<&Vec<f64>>, im: Option<&Vec<f64>>, n: usize, name: &str) -> Result<CMatrix, CliError> {
    let zeros = vec![0.0; n * n];
    let re = re.unwrap_or(&zeros);
    let im = im.unwrap_or(&zeros);
    if re.len() != n * n || im.len() != n * n {
        return Err(CliError::Usage(format!("{name} needs {} row-major entries for {n} modes", n * n)));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(re[i * n + j], im[i * n + j])))
}

fn custom(args: &GaussianArgs, modes: usize) -> Result<GaussianUnitary, CliError> {
    if args.c_re.is_none() && args.c_im.is_none() {
        return Err(CliError::Usage("a custom recharger needs c_re and/or c_im".into()));
    }
    let cm = complex_matrix(args.c_re.as_ref(), args.c_im.as_ref(), modes, "C")?;
    let sm = complex_matrix(args.s_re.as_ref(), args.s_im.as_ref(), modes, "S")?;
    GaussianUnitary::new(CVector::zeros(modes), cm, sm)
        .map_err(|e| CliError::Usage(format!("custom recharger rejected: {e}")))
}

pub fn run(args: &GaussianArgs, ctx: &Context) -> Result<Run, CliError> {
    let spec = spec_from(args.beta, args.omega0, args.omegas.clone())?;
    let modes = spec.machine_modes() + 1;
    let kind = args.recharger.unwrap_or(Recharger::SwapChain);
    let recharger = match kind {
        Recharger::SwapChain => build_swap_chain(&spec).unitary,
        Recharger::Identity => GaussianUnitary::identity(modes),
        Recharger::BeamSplitter => {
            make_beam_splitter(0, modes - 1, modes, args.theta.unwrap_or(std::f64::consts::FRAC_PI_4))?
        }
        Recharger::Random => random_gaussian_unitary(modes, ctx.seed, args.max_squeeze.unwrap_or(1.0)),
        Recharger::Custom => custom(args, modes)?,
    };
    let rounds = args.rounds.unwrap_or(10);
    let trace = run_protocol(&spec, &recharger, rounds)?;
    let limit = gaussian_cooling_limit(&spec);

    let mut run = Run::default();
    for r in &trace.records {
        if r.nth < limit.nth_limit - 1e-9 {
            run.failures.push(format!("round {}: nth {:e} below the limit {:e}", r.round, r.nth, limit.nth_limit));
        }
        if r.sigma < -SIGMA_PRECISION {
            run.failures.push(format!("round {}: negative entropy production {:e}", r.round, r.sigma));
        }
    }

    let mut table = Table::new(&["round", "nth", "beta_eff", "Q", "Sigma", "D_machine", "I_SM"]);
    table.meta("recharger", format!("{kind:?}"));
    table.meta("nth_limit", limit.nth_limit);
    for r in &trace.records {
        table.push(vec![
            r.round.into(),
            r.nth.into(),
            Cell::from(r.beta_eff),
            r.heat.into(),
            r.sigma.into(),
            r.machine_relative_entropy.into(),
            r.mutual_information.into(),
        ]);
    }
    run.table = table;
    Ok(run)
}
