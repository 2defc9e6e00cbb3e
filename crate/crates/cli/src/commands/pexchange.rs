use clap::{Args, ValueEnum};
use hbac_core::collision::{
    asymptote, crossing_time, fano_closed_form, iterate_closed_form, short_time_update, CollisionParams,
};
use hbac_core::fock::{
    build_hamiltonian, iterate_channel, CollisionChannel, ExchangeHamiltonian, FockCutoff, FockDensity, TAIL_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Cell, CliError, Run, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PexchangeMode {
    /// Repeated collisions with fresh machines, recorded every `stride` rounds.
    Iterate,
    /// One collision, swept over the collision time up to `t_max`.
    SingleCollision,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PexchangeArgs {
    /// [default: iterate]
    #[arg(long, value_enum)]
    pub mode: Option<PexchangeMode>,
    /// Exchange orders, comma separated [default: 1,2,3 or 2].
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<u32>>,
    /// Initial system occupation [default: 2].
    #[arg(long)]
    pub nbar_s: Option<f64>,
    /// Machine occupations, comma separated [default: 1.5 or 1.5,2,2.5].
    #[arg(long, value_delimiter = ',')]
    pub nbar_m: Option<Vec<f64>>,
    /// Coupling strength [default: 1].
    #[arg(long)]
    pub chi: Option<f64>,
    /// Collision time [default: 5e-3].
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of collisions [default: 20000].
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Record every this many rounds [default: 100].
    #[arg(long)]
    pub stride: Option<usize>,
    /// Longest collision time of the single-collision sweep [default: 0.4].
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Time steps of the single-collision sweep [default: 80].
    #[arg(long)]
    pub steps: Option<usize>,
    /// System Fock cutoff [default: from the Gibbs tail tolerance].
    #[arg(long)]
    pub d_s: Option<usize>,
    /// Machine Fock cutoff [default: from the Gibbs tail tolerance].
    #[arg(long)]
    pub d_m: Option<usize>,
    /// Gibbs tail mass allowed beyond the automatic cutoffs [default: 1e-10].
    #[arg(long)]
    pub tail_tol: Option<f64>,
}

pub const COLUMNS: [&str; 10] =
    ["p", "nbar_m", "L", "t", "nbar_oracle", "nbar_closed_form", "q_oracle", "q_closed_form", "leakage", "d_s"];

struct Case {
    p: u32,
    nbar_m: f64,
    params: CollisionParams,
    h: ExchangeHamiltonian,
    rho0: FockDensity,
}

fn setup(args: &PexchangeArgs, p: u32, nbar_m: f64, nbar_s: f64, chi: f64, t: f64) -> Result<Case, CliError> {
    let params = CollisionParams::from_occupations(p, chi, t, nbar_s, nbar_m)?;
    let tol = args.tail_tol.unwrap_or(TAIL_TOL);
    let auto = FockCutoff::for_exchange(nbar_s, nbar_m, p, tol)?;
    let cutoff = FockCutoff::new(args.d_s.unwrap_or(auto.d_s), args.d_m.unwrap_or(auto.d_m), p)?;
    let h = build_hamiltonian(p, chi, params.omega0, params.omega1, cutoff)?;
    let (rho0, deficit) = FockDensity::gibbs(nbar_s, cutoff.d_s)?;
    if deficit >= tol {
        return Err(hbac_core::Error::CutoffTooSmall { leakage: deficit, threshold: tol }.into());
    }
    Ok(Case { p, nbar_m, params, h, rho0 })
}

fn closed(value: hbac_core::Result<f64>) -> Cell {
    value.map_or(Cell::Empty, Cell::from)
}

struct CellOutput {
    rows: Vec<Vec<Cell>>,
    meta: Vec<(String, String)>,
    warnings: Vec<String>,
}

fn iterate(cell: &Case, rounds: usize, stride: usize) -> Result<CellOutput, CliError> {
    let params = &cell.params;
    let channel = CollisionChannel::new(&cell.h, cell.nbar_m, params.t)?;
    let records = iterate_channel(&channel, &cell.rho0, rounds, stride)?;
    let fixed = channel.fixed_point()?;
    let rows = records
        .iter()
        .map(|r| {
            vec![
                cell.p.into(),
                cell.nbar_m.into(),
                r.round.into(),
                (r.round as f64 * params.t).into(),
                r.mean_n.into(),
                closed(iterate_closed_form(params, r.round)),
                r.fano_q.into(),
                closed(fano_closed_form(params, r.round)),
                r.leakage.into(),
                cell.h.cutoff().d_s.into(),
            ]
        })
        .collect();
    let tag = format!("p={} nbar_m={}", cell.p, cell.nbar_m);
    let meta = vec![
        (format!("fixed_point {tag}"), format!("{:?}", fixed.mean_excitation())),
        (format!("fixed_point_tv {tag}"), format!("{:?}", fixed.total_variation_to_geometric())),
        (format!("asymptote {tag}"), format!("{:?}", asymptote(params))),
        (format!("cutoff {tag}"), format!("d_s={} d_m={}", cell.h.cutoff().d_s, cell.h.cutoff().d_m)),
    ];
    Ok(CellOutput { rows, meta, warnings: params.validity_warning().into_iter().collect() })
}

fn single_collision(cell: &Case, t_max: f64, steps: usize) -> Result<CellOutput, CliError> {
    let mut rows = Vec::with_capacity(steps + 1);
    let mut warnings = Vec::new();
    for k in 0..=steps {
        let t = t_max * k as f64 / steps as f64;
        let params = cell.params.with_time(t)?;
        let out = CollisionChannel::new(&cell.h, cell.nbar_m, t)?.apply(&cell.rho0)?;
        if warnings.is_empty() {
            warnings.extend(params.validity_warning());
        }
        rows.push(vec![
            cell.p.into(),
            cell.nbar_m.into(),
            1usize.into(),
            t.into(),
            out.state.mean_excitation().into(),
            short_time_update(&params).into(),
            out.state.fano_q().into(),
            closed(fano_closed_form(&params, 1)),
            out.leakage.into(),
            cell.h.cutoff().d_s.into(),
        ]);
    }
    let tag = format!("p={} nbar_m={}", cell.p, cell.nbar_m);
    let tc = crossing_time(&cell.params).map_or("none".to_string(), |x| format!("{x:?}"));
    Ok(CellOutput { rows, meta: vec![(format!("crossing_time {tag}"), tc)], warnings })
}

pub fn run(args: &PexchangeArgs) -> Result<Run, CliError> {
    let mode = args.mode.unwrap_or(PexchangeMode::Iterate);
    let (default_p, default_m) = match mode {
        PexchangeMode::Iterate => (vec![1, 2, 3], vec![1.5]),
        PexchangeMode::SingleCollision => (vec![2], vec![1.5, 2.0, 2.5]),
    };
    let mut ps = args.p.clone().unwrap_or(default_p);
    ps.sort_unstable();
    ps.dedup();
    let mut ms = args.nbar_m.clone().unwrap_or(default_m);
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    let nbar_s = args.nbar_s.unwrap_or(2.0);
    let chi = args.chi.unwrap_or(1.0);
    let t = args.t.unwrap_or(5e-3);
    let rounds = args.rounds.unwrap_or(20_000);
    let stride = args.stride.unwrap_or(100);
    let t_max = args.t_max.unwrap_or(0.4);
    let steps = args.steps.unwrap_or(80).max(1);

    let grid: Vec<(u32, f64)> = ps.iter().flat_map(|&p| ms.iter().map(move |&m| (p, m))).collect();
    // cells finish in any order; collect keeps grid order
    let outputs: Vec<CellOutput> = grid
        .par_iter()
        .map(|&(p, m)| {
            let cell = setup(args, p, m, nbar_s, chi, t)?;
            match mode {
                PexchangeMode::Iterate => iterate(&cell, rounds, stride),
                PexchangeMode::SingleCollision => single_collision(&cell, t_max, steps),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut run = Run::default();
    let mut table = Table::new(&COLUMNS);
    table.meta("mode", format!("{mode:?}"));
    table.meta(
        "assumption",
        format!("chi = {chi:?} (the dynamics depend on chi t only through (chi t)^2 at leading order)"),
    );
    table.meta("assumption", "contraction coefficient a = (chi t)^2 p! [(1+nM)^p - nM^p], minus sign");
    table.meta("assumption", "machine cutoff extended by p (d_s - 1) levels so every system quantum can be absorbed");
    for out in outputs {
        for (k, v) in out.meta {
            table.meta(&k, v);
        }
        for w in out.warnings {
            if !run.warnings.contains(&w) {
                run.warnings.push(w);
            }
        }
        for r in out.rows {
            table.push(r);
        }
    }
    for w in &run.warnings {
        table.meta("validity_warning", w);
    }
    run.table = table;
    Ok(run)
}
