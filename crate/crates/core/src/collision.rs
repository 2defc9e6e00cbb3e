//! Closed-form predictions for p-excitation exchange collisions in the
//! short-time regime `chi t << 1`.
//!
//! One collision with a Gibbs machine moves the system down with probability
//! `(chi t)^2 p! n (1+nM)^p` and up with probability `(chi t)^2 p! (n+1) nM^p`.
//! Averaging gives the moment recursions
//!
//! ```text
//! <n>'   = (1 - a) <n> + c
//! <n^2>' = (1 - 2a) <n^2> + b <n> + c
//! a = (chi t)^2 p! [(1+nM)^p - nM^p]
//! b = (chi t)^2 p! [(1+nM)^p + 3 nM^p]
//! c = (chi t)^2 p! nM^p
//! ```
//!
//! The contraction coefficient `a` carries a minus sign; it is the only
//! choice whose fixed point `c/a` is the thermal occupation at `p beta w1`.

use serde::{Deserialize, Serialize};

use crate::thermo::{effective_beta, factorial, gibbs_occupation};
use crate::{Error, Result};

/// `(chi t)^2 p! (1+nM)^p` above which the closed forms are flagged.
pub const PERTURBATIVE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionParams {
    pub p: u32,
    pub chi: f64,
    pub t: f64,
    pub nbar_s0: f64,
    pub nbar_m: f64,
    pub beta: f64,
    pub omega0: f64,
    pub omega1: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be non-negative and finite, got {x}")))
    }
}

impl CollisionParams {
    /// Frequencies are fixed by `beta = 1` and the Gibbs occupations.
    pub fn from_occupations(p: u32, chi: f64, t: f64, nbar_s0: f64, nbar_m: f64) -> Result<Self> {
        positive("system occupation", nbar_s0)?;
        positive("machine occupation", nbar_m)?;
        Self::from_frequencies(p, chi, t, 1.0, (1.0 / nbar_s0).ln_1p(), (1.0 / nbar_m).ln_1p())
    }

    pub fn from_frequencies(p: u32, chi: f64, t: f64, beta: f64, omega0: f64, omega1: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("interaction order p must be positive"));
        }
        non_negative("coupling", chi)?;
        non_negative("collision time", t)?;
        positive("beta", beta)?;
        positive("omega0", omega0)?;
        positive("omega1", omega1)?;
        Ok(Self {
            p,
            chi,
            t,
            nbar_s0: gibbs_occupation(beta * omega0),
            nbar_m: gibbs_occupation(beta * omega1),
            beta,
            omega0,
            omega1,
        })
    }

    pub fn with_nbar_s0(mut self, nbar_s0: f64) -> Result<Self> {
        positive("system occupation", nbar_s0)?;
        self.nbar_s0 = nbar_s0;
        self.omega0 = (1.0 / nbar_s0).ln_1p() / self.beta;
        Ok(self)
    }

    pub fn with_time(mut self, t: f64) -> Result<Self> {
        non_negative("collision time", t)?;
        self.t = t;
        Ok(self)
    }

    pub fn chi_t(&self) -> f64 {
        self.chi * self.t
    }

    /// `(chi t)^2 p! (1+nM)^p`, the largest single-collision transition scale.
    pub fn perturbative_parameter(&self) -> f64 {
        self.chi_t().powi(2) * factorial(self.p) * (1.0 + self.nbar_m).powi(self.p as i32)
    }

    pub fn validity_warning(&self) -> Option<String> {
        let x = self.perturbative_parameter();
        (x > PERTURBATIVE_LIMIT).then(|| {
            format!("(chi t)^2 p! (1+nM)^p = {x:.3e} exceeds {PERTURBATIVE_LIMIT}; short-time closed forms may be inaccurate")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationCoefficients {
    pub a: f64,
    /// `(chi t)^2 p! nM^p`
    pub b: f64,
    pub c_fano: f64,
}

impl IterationCoefficients {
    pub fn new(params: &CollisionParams) -> Self {
        let k = params.chi_t().powi(2) * factorial(params.p);
        let up = (1.0 + params.nbar_m).powi(params.p as i32);
        let down = params.nbar_m.powi(params.p as i32);
        Self { a: k * (up - down), b: k * down, c_fano: k * (up + 3.0 * down) }
    }
}

fn bracket(params: &CollisionParams, nbar_s: f64) -> f64 {
    let p = params.p as i32;
    (1.0 + params.nbar_m).powi(p) * nbar_s - params.nbar_m.powi(p) * (1.0 + nbar_s)
}

/// Mean system occupation after one short collision.
pub fn short_time_update(params: &CollisionParams) -> f64 {
    params.nbar_s0 - params.chi_t().powi(2) * factorial(params.p) * bracket(params, params.nbar_s0)
}

/// Sub-bath cooling is possible iff `p w1 > w0`.
pub fn cooling_condition(p: u32, omega0: f64, omega1: f64) -> bool {
    p as f64 * omega1 > omega0
}

/// `nM^p / ((1+nM)^p - nM^p)`: the system cools iff its occupation exceeds this.
pub fn cooling_threshold_nbar(p: u32, nbar_m: f64) -> f64 {
    if nbar_m == 0.0 {
        return 0.0;
    }
    1.0 / (p as f64 * (1.0 / nbar_m).ln_1p()).exp_m1()
}

/// Collision time at which the short-time prediction reaches `nM`, or `None`
/// when the system starts below the machine or does not cool.
pub fn crossing_time(params: &CollisionParams) -> Option<f64> {
    let gap = params.nbar_s0 - params.nbar_m;
    if gap < 0.0 || params.chi == 0.0 {
        return None;
    }
    if gap == 0.0 {
        return Some(0.0);
    }
    let rate = factorial(params.p) * bracket(params, params.nbar_s0);
    (rate > 0.0).then(|| (gap / rate).sqrt() / params.chi)
}

/// `(1 - a)^rounds`; through `ln_1p` while the base is positive so tiny `a`
/// keeps its digits.
fn contraction_power(a: f64, rounds: usize) -> f64 {
    if a < 1.0 {
        (rounds as f64 * (-a).ln_1p()).exp()
    } else {
        (1.0 - a).powi(rounds.min(i32::MAX as usize) as i32)
    }
}

fn check_regime(a: f64) -> Result<()> {
    if !(a < 1.0) {
        return Err(Error::Validity(format!("contraction coefficient a = {a:.3e} is not below 1")));
    }
    Ok(())
}

/// Mean occupation after `rounds` collisions, each with a fresh machine.
pub fn iterate_closed_form(params: &CollisionParams, rounds: usize) -> Result<f64> {
    let co = IterationCoefficients::new(params);
    check_regime(co.a)?;
    if co.a == 0.0 {
        return Ok(params.nbar_s0);
    }
    let f = contraction_power(co.a, rounds);
    Ok(params.nbar_s0 * f + co.b * (1.0 - f) / co.a)
}

/// `L -> infinity` occupation, `1/(e^{p beta w1} - 1)`.
pub fn asymptote(params: &CollisionParams) -> f64 {
    cooling_threshold_nbar(params.p, params.nbar_m)
}

/// Inverse temperature reached asymptotically, `p (w1/w0) beta`.
pub fn beta_star(params: &CollisionParams) -> f64 {
    params.p as f64 * params.omega1 / params.omega0 * params.beta
}

/// Effective inverse temperature of [`asymptote`] at the system frequency.
pub fn asymptotic_effective_beta(params: &CollisionParams) -> Result<f64> {
    effective_beta(asymptote(params), params.omega0)
}

/// `(<n>_L, <n^2>_L)` from a Gibbs initial state, by the exact solution of
/// the moment recursions.
pub fn moments_closed_form(params: &CollisionParams, rounds: usize) -> Result<(f64, f64)> {
    let co = IterationCoefficients::new(params);
    let y0 = params.nbar_s0;
    let x0 = 2.0 * y0 * y0 + y0;
    check_regime(co.a)?;
    if co.a == 0.0 {
        return Ok((y0, x0));
    }
    let (a, b, c) = (co.a, co.c_fano, co.b);
    let f1 = contraction_power(a, rounds);
    let f2 = contraction_power(2.0 * a, rounds);
    let y_inf = c / a;
    let y = y_inf + (y0 - y_inf) * f1;
    let x = f2 * x0 + b * (y0 - y_inf) * (f1 - f2) / a + (b * y_inf + c) * (1.0 - f2) / (2.0 * a);
    Ok((y, x))
}

/// Fano factor after `rounds` collisions from a Gibbs initial state.
pub fn fano_closed_form(params: &CollisionParams, rounds: usize) -> Result<f64> {
    let (y, x) = moments_closed_form(params, rounds)?;
    Ok(crate::fock::fano_q(y, x))
}

/// `(<n>_inf, <n^2>_inf)` of the recursions: `c/a` and `(c/2a)(1 + b/a)`.
pub fn moments_limit(params: &CollisionParams) -> Result<(f64, f64)> {
    let co = IterationCoefficients::new(params);
    check_regime(co.a)?;
    if co.a == 0.0 {
        return Err(Error::Validity("no contraction at zero coupling".into()));
    }
    let (a, b, c) = (co.a, co.c_fano, co.b);
    Ok((c / a, c / (2.0 * a) * (1.0 + b / a)))
}
