//! Randomized property suites for the Gaussian cooling bounds.
//!
//! Each suite draws `trials` random instances from a seeded ChaCha stream and
//! records the smallest slack `lhs - rhs` of the inequality under test. A
//! trial is a violation when its slack is below `-tolerance`.
//!
//! With `inject_failure` set, the suites that consume random unitaries feed
//! them a corrupted operation (`C` and `S` scaled by 0.9) and propagate the
//! moments without validation. The suites must then report violations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gaussian::{
    compose, make_passive, random_gaussian_unitary_with, GaussianState, GaussianUnitary, DET_TOL, SYMPLECTIC_TOL,
};
use crate::hbac::{
    build_swap_chain, entropy_production_star, gaussian_cooling_limit, run_protocol, MachineSpec, SIGMA_PRECISION,
};
use crate::linalg::{c, haar_unitary, hermitian_eigenvalues, CMatrix};
use crate::Result;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 10_000;

const MODE_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-10;
const OPTIMALITY_TOL: f64 = 1e-6;
const REACH_TOL: f64 = 1e-6;
const MAX_ROUNDS: usize = 20;
const MAX_SQUEEZE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub inject_failure: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, inject_failure: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    /// Trials that were evaluated.
    pub trials: usize,
    /// Draws discarded because they did not meet the premise of the check.
    pub skipped: usize,
    pub violations: usize,
    /// Smallest slack seen; negative means the inequality was crossed.
    pub worst_margin: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &str, tolerance: f64) -> Self {
        Self { name: name.to_string(), trials: 0, skipped: 0, violations: 0, worst_margin: f64::INFINITY, tolerance }
    }

    fn record(&mut self, margin: f64) {
        self.trials += 1;
        // NaN slack counts as a violation
        if !(margin >= -self.tolerance) {
            self.violations += 1;
        }
        if margin.is_nan() || margin < self.worst_margin {
            self.worst_margin = margin;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.trials > 0
    }
}

type Suite = fn(&SuiteConfig, &mut ChaCha8Rng) -> Result<SuiteReport>;

const SUITES: [(&str, Suite); 7] = [
    ("symplectic-residuals", symplectic_residuals),
    ("single-mode-floor", single_mode_floor),
    ("eigenvalue-dominance", eigenvalue_dominance),
    ("tail-sum-bound", tail_sum_bound),
    ("swap-chain-optimality", swap_chain_optimality),
    ("cooling-floor", cooling_floor),
    ("entropy-production-sign", entropy_production_sign),
];

pub fn suite_names() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|(name, _)| *name)
}

/// Every suite, each on its own stream derived from `config.seed`.
pub fn run_all(config: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    (0..SUITES.len()).map(|k| run_index(k, config)).collect()
}

/// One suite by name, on the same stream [`run_all`] gives it.
pub fn run_one(name: &str, config: &SuiteConfig) -> Result<SuiteReport> {
    let k = SUITES
        .iter()
        .position(|(n, _)| *n == name)
        .ok_or_else(|| crate::Error::contract(format!("unknown suite `{name}`")))?;
    run_index(k, config)
}

fn run_index(k: usize, config: &SuiteConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(k as u64));
    (SUITES[k].1)(config, &mut rng)
}

/// `C -> 0.9 C`, `S -> 0.9 S`.
pub fn corrupt(u: &GaussianUnitary) -> GaussianUnitary {
    let k = c(0.9, 0.0);
    GaussianUnitary::new_unchecked(u.displacement().clone(), u.c() * k, u.s() * k).expect("shapes are unchanged")
}

fn draw_unitary<R: Rng>(config: &SuiteConfig, rng: &mut R, modes: usize) -> GaussianUnitary {
    let u = random_gaussian_unitary_with(rng, modes, MAX_SQUEEZE);
    if config.inject_failure {
        corrupt(&u)
    } else {
        u
    }
}

/// `G M G†` without validating the result.
fn raw_second_moments(state: &GaussianState, u: &GaussianUnitary) -> CMatrix {
    let g = u.g_matrix();
    &g * state.second_moments() * g.adjoint()
}

/// Thermal excitation `sqrt(mu^2 - |nu|^2) - 1/2` of one mode, read from raw
/// moments and allowed to go negative.
fn raw_mode_thermal(m: &CMatrix, modes: usize, j: usize) -> f64 {
    let mu = m[(modes + j, modes + j)].re;
    let nu = m[(j, modes + j)];
    (mu * mu - nu.norm_sqr()).sqrt() - 0.5
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_gibbs<R: Rng>(rng: &mut R, modes: usize) -> Vec<f64> {
    (0..modes).map(|_| log_uniform(rng, 1e-3, 10.0)).collect()
}

/// A random machine. With `cooling` set the top mode is above the system
/// frequency.
fn random_spec<R: Rng>(rng: &mut R, cooling: bool) -> MachineSpec {
    loop {
        let beta = rng.random_range(0.2..2.0);
        let omega0 = rng.random_range(0.5..2.0);
        let n = rng.random_range(1..=4usize);
        let mut omegas: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..5.0)).collect();
        omegas.sort_by(f64::total_cmp);
        if cooling && omegas[n - 1] <= omega0 * 1.01 {
            continue;
        }
        return MachineSpec::new(beta, omega0, omegas).expect("sampled parameters are in range");
    }
}

fn symplectic_residuals(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("symplectic-residuals", 0.0);
    for _ in 0..config.trials {
        let modes = rng.random_range(1..=6usize);
        let u = draw_unitary(config, rng, modes);
        let r = u.residuals();
        let slack = (SYMPLECTIC_TOL - r.normalization).min(SYMPLECTIC_TOL - r.symmetry).min(DET_TOL - r.determinant);
        report.record(slack);
    }
    Ok(report)
}

/// No output mode ends with less thermal excitation than the least excited
/// input mode.
fn single_mode_floor(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    const MODES: usize = 4;
    let mut report = SuiteReport::new("single-mode-floor", MODE_TOL);
    for _ in 0..config.trials {
        let nbars = random_gibbs(rng, MODES);
        let floor = nbars.iter().copied().fold(f64::INFINITY, f64::min);
        let state = GaussianState::thermal(&nbars)?;
        let u = draw_unitary(config, rng, MODES);
        let m = raw_second_moments(&state, &u);
        let out = (0..MODES).map(|j| raw_mode_thermal(&m, MODES, j)).fold(f64::INFINITY, f64::min);
        report.record(out - floor);
    }
    Ok(report)
}

/// For `L` with singular values `>= 1` and `O >= 0`: the descending
/// eigenvalues of `L O L†` dominate those of `O`, and every set of `m`
/// diagonal entries of `L O L†` sums to at least the `m` smallest eigenvalues
/// of `O`. Slack is relative to the largest eigenvalue of `L O L†`.
fn eigenvalue_dominance(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("eigenvalue-dominance", DOMINANCE_TOL);
    for _ in 0..config.trials {
        let n = rng.random_range(2..=6usize);
        let u = haar_unitary(n, rng);
        let v = haar_unitary(n, rng);
        let s = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| c(log_uniform(rng, 1.0, 5.0), 0.0)));
        let l = &u * s * &v;
        let rank = rng.random_range(1..=n);
        let a = CMatrix::from_fn(n, rank, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let o = &a * a.adjoint();
        let lol = &l * &o * l.adjoint();

        let base = hermitian_eigenvalues(&o);
        let mapped = hermitian_eigenvalues(&lol);
        let scale = mapped[n - 1].abs().max(f64::MIN_POSITIVE);
        let mut slack = f64::INFINITY;
        for k in 0..n {
            slack = slack.min((mapped[k] - base[k]) / scale);
        }
        let mut diag: Vec<f64> = (0..n).map(|j| lol[(j, j)].re).collect();
        diag.sort_by(f64::total_cmp);
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for k in 0..n {
            lhs += diag[k];
            rhs += base[k];
            slack = slack.min((lhs - rhs) / scale);
        }
        report.record(slack);
    }
    Ok(report)
}

/// For a Gibbs input and any Gaussian unitary, the `m` least excited output
/// modes hold at least as many quanta as the `m` least excited inputs.
fn tail_sum_bound(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("tail-sum-bound", MODE_TOL);
    for _ in 0..config.trials {
        let modes = rng.random_range(2..=5usize);
        let mut nbars = random_gibbs(rng, modes);
        let state = GaussianState::thermal(&nbars)?;
        let u = draw_unitary(config, rng, modes);
        let m = raw_second_moments(&state, &u);
        let mut out: Vec<f64> = (0..modes).map(|j| m[(modes + j, modes + j)].re - 0.5).collect();
        out.sort_by(f64::total_cmp);
        nbars.sort_by(f64::total_cmp);
        let (mut lhs, mut rhs, mut slack) = (0.0, 0.0, f64::INFINITY);
        for k in 0..modes {
            lhs += out[k];
            rhs += nbars[k];
            slack = slack.min(lhs - rhs);
        }
        report.record(slack);
    }
    Ok(report)
}

/// Exponential of `i eps H` for a random Hermitian `H`.
fn small_passive<R: Rng>(rng: &mut R, modes: usize, eps: f64, skip_system: bool) -> Result<GaussianUnitary> {
    let lo = usize::from(skip_system);
    let mut h = CMatrix::zeros(modes, modes);
    for i in lo..modes {
        for j in i..modes {
            let z = if i == j {
                c(rng.random_range(-1.0..1.0), 0.0)
            } else {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let eig = h.symmetric_eigen();
    let phases = eig.eigenvalues.map(|x| Complex64::from_polar(1.0, eps * x));
    let v = &eig.eigenvectors;
    make_passive(v * DMatrix::from_diagonal(&phases) * v.adjoint())
}

/// Rechargers near the swap chain that still reach the cooling limit in one
/// round produce at least the swap-chain entropy.
fn swap_chain_optimality(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("swap-chain-optimality", OPTIMALITY_TOL);
    for _ in 0..config.trials {
        let spec = random_spec(rng, true);
        let modes = spec.machine_modes() + 1;
        let chain = build_swap_chain(&spec);
        let target = *spec.machine_nbars().last().expect("at least one machine mode");
        let eps = log_uniform(rng, 1e-7, 1e-2);
        let machine_only = rng.random_bool(0.5);
        let kick = small_passive(rng, modes, eps, machine_only)?;
        let recharger =
            if rng.random_bool(0.5) { compose(&kick, &chain.unitary)? } else { compose(&chain.unitary, &kick)? };
        let trace = run_protocol(&spec, &recharger, 1)?;
        let rec = trace.last();
        if (rec.nth - target).abs() > REACH_TOL {
            report.skipped += 1;
            continue;
        }
        report.record(rec.sigma - entropy_production_star(&spec).value);
    }
    Ok(report)
}

fn random_runs<F>(config: &SuiteConfig, rng: &mut ChaCha8Rng, mut check: F) -> Result<()>
where
    F: FnMut(&MachineSpec, &crate::hbac::CoolingTrace),
{
    for _ in 0..config.trials {
        let cooling = rng.random_bool(0.8);
        let spec = random_spec(rng, cooling);
        let recharger = random_gaussian_unitary_with(rng, spec.machine_modes() + 1, MAX_SQUEEZE);
        let rounds = rng.random_range(1..=MAX_ROUNDS);
        let trace = run_protocol(&spec, &recharger, rounds)?;
        check(&spec, &trace);
    }
    Ok(())
}

/// Repeated rounds with an arbitrary Gaussian recharger never push the
/// system below `nbar(beta omega_N)` (or its initial value when no machine
/// mode is above the system).
fn cooling_floor(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("cooling-floor", MODE_TOL);
    random_runs(config, rng, |spec, trace| {
        let floor = gaussian_cooling_limit(spec).nth_limit;
        let reached = trace.records.iter().map(|r| r.nth).fold(f64::INFINITY, f64::min);
        report.record(reached - floor);
    })?;
    Ok(report)
}

fn entropy_production_sign(config: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("entropy-production-sign", SIGMA_PRECISION);
    random_runs(config, rng, |_, trace| {
        let worst = trace.records[1..].iter().map(|r| r.sigma).fold(f64::INFINITY, f64::min);
        report.record(worst);
    })?;
    Ok(report)
}
