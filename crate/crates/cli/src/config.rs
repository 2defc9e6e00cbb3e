//! Flat TOML config files merged with command-line flags.
//!
//! A config file holds `key = value` pairs only. Flags given on the command
//! line replace the file's value for the same key. The merged table is then
//! deserialized into the command's argument struct, so unknown keys and
//! ill-typed values are reported as usage errors.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::CliError;

/// Keys shared by every command; split off before the command sees the table.
pub const GLOBAL_KEYS: [&str; 4] = ["format", "seed", "jobs", "out"];

pub fn load_file(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_flat(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

pub fn parse_flat(text: &str) -> Result<Table, String> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    for (k, v) in &table {
        let nested = match v {
            Value::Table(_) => true,
            Value::Array(items) => items.iter().any(|i| matches!(i, Value::Table(_) | Value::Array(_))),
            _ => false,
        };
        if nested {
            return Err(format!("key `{k}` is nested; config files must be flat"));
        }
    }
    Ok(table)
}

/// `overrides` on top of `base`, deserialized as `T`.
pub fn merge<T, O>(base: &Table, overrides: &O) -> Result<(T, Table), CliError>
where
    T: DeserializeOwned,
    O: Serialize,
{
    let mut merged = base.clone();
    let flags = Table::try_from(overrides).map_err(|e| CliError::Usage(e.to_string()))?;
    merged.extend(flags);
    let typed = merged.clone().try_into::<T>().map_err(|e| CliError::Usage(format!("config: {}", e.message())))?;
    Ok((typed, merged))
}

/// `key=value` pairs in key order, values in TOML syntax.
pub fn canonical(table: &Table) -> String {
    let mut keys: Vec<&String> = table.keys().collect();
    keys.sort();
    let mut out = String::new();
    for k in keys {
        if !out.is_empty() {
            out.push_str("; ");
        }
        let _ = write!(out, "{k}={}", table[k]);
    }
    out
}

/// First 16 hex digits of SHA-256 over the command name and canonical config.
pub fn config_hash(command: &str, table: &Table) -> String {
    let digest = Sha256::digest(format!("{command}\n{}", canonical(table)).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
