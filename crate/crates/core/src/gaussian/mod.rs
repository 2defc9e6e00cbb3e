//! Gaussian states and unitaries in the complex moment representation.
//!
//! A `J`-mode state is stored as `alpha = <a_j>` together with the blocks
//! `mu_jk = ½<{a_j†, a_k}> - alpha_j* alpha_k` (Hermitian) and
//! `nu_jk = ½<{a_j, a_k}> - alpha_j alpha_k` (symmetric). The full moments are
//! `r = (alpha, alpha*)` and `M = [[mu*, nu], [nu*, mu]]`.
//!
//! A unitary `(d, C, S)` acts as `r -> G r + d`, `M -> G M G†` with
//! `G = [[C*, S], [S*, C]]`.

mod state;
mod unitary;

pub use state::{gibbs_state, GaussianState, GibbsMode};
pub use unitary::{
    compose, make_beam_splitter, make_displacement, make_passive, make_phase_shift, make_squeezer, make_swap,
    random_gaussian_unitary, random_gaussian_unitary_with, GaussianUnitary, SymplecticResiduals, DEFAULT_MAX_SQUEEZE,
};

pub use crate::thermo::{effective_beta, vn_entropy_single_mode};

/// Constructor-enforced tolerance on Hermiticity/symmetry of the moment blocks.
pub const BLOCK_TOL: f64 = 1e-12;
/// Tolerance on the smallest eigenvalue of `M + Z`.
pub const UNCERTAINTY_TOL: f64 = 1e-10;
/// Tolerance on the symplectic constraints of a unitary.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Tolerance on `|det G| = 1`.
pub const DET_TOL: f64 = 1e-8;
