//! Gaussian heat-bath algorithmic cooling: cooling limit, the swap-chain
//! recharger, and entropy-production bookkeeping.
//!
//! Mode 0 of every joint state is the system; machine mode `j` (1-based in
//! the physics, `omegas[j-1]` here) sits at joint index `j`.

use serde::{Deserialize, Serialize};

use crate::gaussian::{compose, make_swap, GaussianState, GaussianUnitary};
use crate::thermo::{effective_beta, gibbs_occupation, vn_entropy_single_mode};
use crate::{Error, Result};

pub use crate::thermo::relative_entropy_gibbs;

/// Numerical floor below which reported entropy production is not resolved.
pub const SIGMA_PRECISION: f64 = 1e-8;

/// Reservoir inverse temperature, system frequency and machine spectrum
/// `omega_1 <= ... <= omega_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    beta: f64,
    omega0: f64,
    omegas: Vec<f64>,
}

impl MachineSpec {
    pub fn new(beta: f64, omega0: f64, omegas: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::domain(format!("omega0 must be positive, got {omega0}")));
        }
        if omegas.is_empty() {
            return Err(Error::domain("the machine needs at least one mode"));
        }
        if let Some(w) = omegas.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::domain(format!("machine frequencies must be positive, got {w}")));
        }
        if omegas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("machine frequencies must be nondecreasing"));
        }
        Ok(Self { beta, omega0, omegas })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn machine_modes(&self) -> usize {
        self.omegas.len()
    }

    pub fn omega_max(&self) -> f64 {
        *self.omegas.last().expect("nonempty")
    }

    /// `lambda = omega_N / omega_0`
    pub fn lambda(&self) -> f64 {
        self.omega_max() / self.omega0
    }

    pub fn system_nbar(&self) -> f64 {
        gibbs_occupation(self.beta * self.omega0)
    }

    pub fn machine_nbars(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| gibbs_occupation(self.beta * w)).collect()
    }

    /// Zero-based position in `omegas` of the first mode with `omega_j > omega_0`.
    pub fn first_cooling_mode(&self) -> Option<usize> {
        self.omegas.iter().position(|w| *w > self.omega0)
    }

    pub fn system_state(&self) -> GaussianState {
        GaussianState::thermal(&[self.system_nbar()]).expect("Gibbs state is valid")
    }

    pub fn machine_state(&self) -> GaussianState {
        GaussianState::thermal(&self.machine_nbars()).expect("Gibbs state is valid")
    }

    /// The same spec with every mode at or below the system frequency removed.
    /// `None` if nothing is left.
    pub fn without_inert_modes(&self) -> Option<MachineSpec> {
        let j0 = self.first_cooling_mode()?;
        Some(MachineSpec { beta: self.beta, omega0: self.omega0, omegas: self.omegas[j0..].to_vec() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingLimit {
    /// Best reachable effective inverse temperature of the system.
    pub beta_star: f64,
    pub lambda: f64,
    /// System thermal excitation at the limit.
    pub nth_limit: f64,
    /// `false` when no machine mode is above the system frequency; the
    /// identity is then optimal and `beta_star = beta`.
    pub cooling_possible: bool,
}

/// `beta* = (omega_N / omega_0) beta`, floored at `beta` when the machine has
/// no mode above the system frequency.
pub fn gaussian_cooling_limit(spec: &MachineSpec) -> CoolingLimit {
    let lambda = spec.lambda();
    let cooling_possible = lambda > 1.0;
    let factor = lambda.max(1.0);
    CoolingLimit {
        beta_star: factor * spec.beta,
        lambda,
        nth_limit: gibbs_occupation(factor * spec.beta * spec.omega0),
        cooling_possible,
    }
}

/// Optimal Gaussian recharger.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapChain {
    pub unitary: GaussianUnitary,
    /// Joint-mode indices swapped with the system, in application order.
    pub swapped_modes: Vec<usize>,
    pub no_cooling: bool,
}

/// `SWAP(S, M_N) ∘ ... ∘ SWAP(S, M_j0)` with `j0` the first machine mode
/// above the system frequency; the identity if there is none.
pub fn build_swap_chain(spec: &MachineSpec) -> SwapChain {
    let modes = spec.machine_modes() + 1;
    let Some(j0) = spec.first_cooling_mode() else {
        return SwapChain { unitary: GaussianUnitary::identity(modes), swapped_modes: Vec::new(), no_cooling: true };
    };
    let swapped_modes: Vec<usize> = (j0 + 1..modes).collect();
    let mut u = GaussianUnitary::identity(modes);
    for &m in &swapped_modes {
        let sw = make_swap(0, m, modes).expect("indices in range");
        u = compose(&sw, &u).expect("same mode count");
    }
    SwapChain { unitary: u, swapped_modes, no_cooling: false }
}

/// One round of the protocol (round 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Thermal excitation of the system.
    pub nth: f64,
    pub beta_eff: f64,
    /// Cumulative heat dumped into the reservoir by machine resets.
    pub heat: f64,
    /// Cumulative entropy production `beta Q - (S(tau_S) - S(rho_S))`.
    pub sigma: f64,
    /// This round's `D[rho'_M || tau_M]`.
    pub machine_relative_entropy: f64,
    /// This round's `I(S:M)` of the post-recharge joint state.
    pub mutual_information: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingTrace {
    pub records: Vec<RoundRecord>,
    pub final_system: GaussianState,
}

impl CoolingTrace {
    pub fn last(&self) -> &RoundRecord {
        self.records.last().expect("trace holds the initial record")
    }
}

/// Alternate `recharger` on (system ⊗ fresh `tau_M`) with a machine reset,
/// for `rounds` rounds.
pub fn run_protocol(spec: &MachineSpec, recharger: &GaussianUnitary, rounds: usize) -> Result<CoolingTrace> {
    let modes = spec.machine_modes() + 1;
    if recharger.modes() != modes {
        return Err(Error::DimensionMismatch { expected: modes, found: recharger.modes() });
    }
    let beta = spec.beta;
    let machine = spec.machine_state();
    let machine_nbars = spec.machine_nbars();
    // -tr(rho ln tau_M) = sum_j [n'_j ln((n_j+1)/n_j) + ln(n_j+1)]
    let log_weights: Vec<f64> = machine_nbars.iter().map(|n| (1.0 / n).ln_1p()).collect();
    let log_norm: f64 = machine_nbars.iter().map(|n| n.ln_1p()).sum();
    let machine_idx: Vec<usize> = (1..modes).collect();

    let mut system = spec.system_state();
    let initial_entropy = vn_entropy_single_mode(system.thermal_excitation()?);
    let nth0 = system.thermal_excitation()?;
    let mut records = vec![RoundRecord {
        round: 0,
        nth: nth0,
        beta_eff: effective_beta(nth0, spec.omega0)?,
        heat: 0.0,
        sigma: 0.0,
        machine_relative_entropy: 0.0,
        mutual_information: 0.0,
    }];
    let mut heat = 0.0;

    for round in 1..=rounds {
        let joint = system.tensor(&machine).apply_unitary(recharger)?;
        let out = joint.mean_excitations();
        heat += spec
            .omegas
            .iter()
            .zip(&out[1..])
            .zip(&machine_nbars)
            .map(|((w, after), before)| w * (after - before))
            .sum::<f64>();

        let new_system = joint.reduce(&[0])?;
        let nth = new_system.thermal_excitation()?;
        let system_entropy = vn_entropy_single_mode(nth);

        let machine_out = joint.reduce(&machine_idx)?;
        let machine_out_entropy = machine_out.entropy();
        let cross: f64 = out[1..].iter().zip(&log_weights).map(|(n, lw)| n * lw).sum::<f64>() + log_norm;
        let joint_entropy = joint.entropy();
        let machine_relative_entropy = cross - machine_out_entropy;
        let mutual_information = system_entropy + machine_out_entropy - joint_entropy;

        records.push(RoundRecord {
            round,
            nth,
            beta_eff: effective_beta(nth, spec.omega0)?,
            heat,
            sigma: beta * heat - (initial_entropy - system_entropy),
            machine_relative_entropy,
            mutual_information,
        });
        system = new_system;
    }
    Ok(CoolingTrace { records, final_system: system })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStar {
    pub value: f64,
    pub no_cooling: bool,
}

/// Minimal entropy production of one swap-chain round:
/// `D[tau(w0) || tau(w_j0)] + sum_{j > j0} D[tau(w_{j-1}) || tau(w_j)]`.
pub fn entropy_production_star(spec: &MachineSpec) -> SigmaStar {
    let Some(j0) = spec.first_cooling_mode() else {
        return SigmaStar { value: 0.0, no_cooling: true };
    };
    let nbars = spec.machine_nbars();
    let mut chain = vec![spec.system_nbar()];
    chain.extend_from_slice(&nbars[j0..]);
    let value =
        chain.windows(2).map(|w| relative_entropy_gibbs(w[0], w[1]).expect("Gibbs occupations are positive")).sum();
    SigmaStar { value, no_cooling: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::make_beam_splitter;
    use approx::assert_relative_eq;

    fn spec(omegas: &[f64]) -> MachineSpec {
        MachineSpec::new(1.0, 1.0, omegas.to_vec()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MachineSpec::new(1.0, 1.0, vec![2.0, 1.0]).is_err());
        assert!(MachineSpec::new(0.0, 1.0, vec![2.0]).is_err());
        assert!(MachineSpec::new(1.0, -1.0, vec![2.0]).is_err());
        assert!(MachineSpec::new(1.0, 1.0, vec![]).is_err());
        assert!(MachineSpec::new(1.0, 1.0, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn cooling_limit_examples() {
        let l = gaussian_cooling_limit(&spec(&[1.0]));
        assert_eq!(l.beta_star, 1.0);
        assert!(!l.cooling_possible);

        let l = gaussian_cooling_limit(&MachineSpec::new(0.3, 1.0, vec![120.8]).unwrap());
        assert_relative_eq!(l.lambda, 120.8);

        let l = gaussian_cooling_limit(&spec(&[2.0]));
        assert_relative_eq!(l.beta_star, 2.0);
        assert_relative_eq!(l.nth_limit, 1.0 / (2f64.exp() - 1.0), max_relative = 1e-14);
        assert_relative_eq!(l.nth_limit, 0.1565, epsilon = 1e-4);

        let l = gaussian_cooling_limit(&spec(&[0.5]));
        assert!(!l.cooling_possible);
        assert_eq!(l.beta_star, 1.0);
    }

    #[test]
    fn swap_chain_structure() {
        let single = build_swap_chain(&spec(&[2.0]));
        assert_eq!(single.swapped_modes, vec![1]);
        assert!(!single.no_cooling);

        let chain = build_swap_chain(&spec(&[0.5, 2.0, 3.0]));
        assert_eq!(chain.swapped_modes, vec![2, 3]);
        assert!(chain.unitary.residuals().within_tolerance());

        let none = build_swap_chain(&spec(&[0.5, 1.0]));
        assert!(none.no_cooling);
        assert_eq!(none.unitary, GaussianUnitary::identity(3));
    }

    #[test]
    fn swap_chain_reaches_top_mode() {
        let s = spec(&[0.5, 2.0, 3.0]);
        let chain = build_swap_chain(&s);
        let joint = s.system_state().tensor(&s.machine_state()).apply_unitary(&chain.unitary).unwrap();
        let nth = joint.mode_thermal_excitation(0).unwrap();
        assert_relative_eq!(nth, gibbs_occupation(3.0), max_relative = 1e-12);
        // the chain shifts the occupations up by one mode
        assert_relative_eq!(joint.mean_excitation(3), gibbs_occupation(2.0), max_relative = 1e-12);
        assert_relative_eq!(joint.mean_excitation(2), gibbs_occupation(1.0), max_relative = 1e-12);
        assert_relative_eq!(joint.mean_excitation(1), gibbs_occupation(0.5), max_relative = 1e-12);
    }

    #[test]
    fn identity_recharger_gives_flat_trace() {
        let s = spec(&[2.0, 3.0]);
        let trace = run_protocol(&s, &GaussianUnitary::identity(3), 4).unwrap();
        assert_eq!(trace.records.len(), 5);
        for r in &trace.records {
            assert_relative_eq!(r.nth, s.system_nbar(), max_relative = 1e-13);
            assert!(r.sigma.abs() < 1e-14);
            assert!(r.heat.abs() < 1e-14);
        }
    }

    #[test]
    fn swap_chain_saturates_in_one_round() {
        let s = spec(&[1.5, 2.5, 4.0]);
        let chain = build_swap_chain(&s);
        let trace = run_protocol(&s, &chain.unitary, 3).unwrap();
        let limit = gaussian_cooling_limit(&s);
        for r in &trace.records[1..] {
            assert_relative_eq!(r.beta_eff, limit.beta_star, max_relative = 1e-10);
            assert!(r.mutual_information.abs() < 1e-9);
        }
        let star = entropy_production_star(&s);
        assert_relative_eq!(trace.records[1].sigma, star.value, epsilon = 1e-9);
        assert_relative_eq!(trace.records[1].machine_relative_entropy, star.value, epsilon = 1e-9);
        // Later rounds only re-swap an already-cold system: extra production.
        assert!(trace.records[2].sigma >= trace.records[1].sigma - 1e-12);
    }

    #[test]
    fn partial_beam_splitter_cools_partway() {
        let s = spec(&[2.0]);
        let bs = make_beam_splitter(0, 1, 2, 0.6).unwrap();
        let trace = run_protocol(&s, &bs, 1).unwrap();
        let nth = trace.records[1].nth;
        assert!(nth < s.system_nbar() && nth > s.machine_nbars()[0]);
        let r = trace.records[1];
        // entropy production decomposes as D + I when the input is a product
        assert_relative_eq!(r.sigma, r.machine_relative_entropy + r.mutual_information, epsilon = 1e-9);
        assert!(r.mutual_information > 1e-6);
    }

    #[test]
    fn entropy_production_star_examples() {
        let one = spec(&[2.5]);
        let d = relative_entropy_gibbs(one.system_nbar(), one.machine_nbars()[0]).unwrap();
        assert_relative_eq!(entropy_production_star(&one).value, d);

        let flat = spec(&[2.5, 2.5, 2.5]);
        assert_relative_eq!(entropy_production_star(&flat).value, d, max_relative = 1e-14);

        let cold = entropy_production_star(&spec(&[0.5]));
        assert!(cold.no_cooling);
        assert_eq!(cold.value, 0.0);
    }

    #[test]
    fn inert_modes_play_no_role() {
        let full = spec(&[0.3, 0.9, 1.0, 1.7, 2.2]);
        let trimmed = full.without_inert_modes().unwrap();
        assert_eq!(trimmed.omegas(), &[1.7, 2.2]);
        assert_eq!(gaussian_cooling_limit(&full), gaussian_cooling_limit(&trimmed));
        assert_relative_eq!(
            entropy_production_star(&full).value,
            entropy_production_star(&trimmed).value,
            max_relative = 1e-14
        );
        assert!(spec(&[0.5]).without_inert_modes().is_none());
    }
}
