//! Heat-bath algorithmic cooling of bosonic modes.
//!
//! The crate has two halves:
//!
//! * a Gaussian half ([`gaussian`], [`hbac`], [`spectrum`]) working in the
//!   complex moment representation `(r, M)` with `M = [[mu*, nu], [nu*, mu]]`,
//!   where cooling limits, optimal swap-chain rechargers and entropy
//!   production are evaluated exactly;
//! * a non-Gaussian half ([`fock`], [`collision`]) for the p-excitation
//!   exchange interaction `chi (a b†^p + a† b^p)`, with a brute-force
//!   truncated Fock-space engine and the short-time closed forms it checks.
//!
//! Units are `hbar = k_B = 1`. Modes are indexed from zero; in protocol
//! contexts mode 0 is the system and modes `1..=N` are the machine.

pub mod checks;
pub mod collision;
mod error;
pub mod fock;
pub mod gaussian;
pub mod hbac;
pub mod linalg;
pub mod spectrum;
pub mod thermo;

pub use error::{Error, Result};
