use clap::Args;
use hbac_core::checks::{run_all, SuiteConfig, DEFAULT_TRIALS};
use serde::{Deserialize, Serialize};

use crate::{CliError, Context, Run, Table};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteArgs {
    /// Trials per suite [default: 10000].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Feed the suites a corrupted unitary; they must report violations.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub inject_failure: Option<bool>,
}

pub fn run(args: &SuiteArgs, ctx: &Context) -> Result<Run, CliError> {
    let config = SuiteConfig {
        trials: args.trials.unwrap_or(DEFAULT_TRIALS),
        seed: ctx.seed,
        inject_failure: args.inject_failure.unwrap_or(false),
    };
    let reports = run_all(&config)?;
    let mut run = Run::default();
    let mut table = Table::new(&["suite", "trials", "skipped", "violations", "worst_margin", "tolerance", "status"]);
    table.meta("inject_failure", config.inject_failure);
    for r in &reports {
        if !r.passed() {
            run.failures.push(format!(
                "{}: {} of {} trials violated (worst margin {:e})",
                r.name, r.violations, r.trials, r.worst_margin
            ));
        }
        table.push(vec![
            r.name.as_str().into(),
            r.trials.into(),
            r.skipped.into(),
            r.violations.into(),
            r.worst_margin.into(),
            r.tolerance.into(),
            (if r.passed() { "pass" } else { "fail" }).into(),
        ]);
    }
    run.table = table;
    Ok(run)
}
