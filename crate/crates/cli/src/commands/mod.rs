pub mod gaussian;
pub mod limit;
pub mod pexchange;
pub mod spectrum;
pub mod suite;

use crate::CliError;

pub(crate) fn required<T>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::Usage(format!("missing required setting `{key}` (flag --{} or config key)", key.replace('_', "-")))
    })
}
