//! Machine-spectrum optimization: choose the intermediate gaps
//! `g_j = beta omega_j` that minimize the swap-chain entropy production
//! `sum_j D[tau(g_{j-1}) || tau(g_j)]` at fixed endpoints `g_0`, `g_N`.
//!
//! The objective is strictly convex in the occupations `n_j = 1/(e^{g_j}-1)`,
//! so the solver runs a damped Newton iteration there. Its gradient equals
//! the residual of the stationarity recurrence
//!
//! ```text
//! g_{j+1} - g_j = (e^{g_j - g_{j-1}} - 1) (1 - e^{-g_j}) / (1 - e^{-g_{j-1}})
//! ```
//!
//! which is reported as the convergence certificate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::solve_symmetric_tridiagonal;
use crate::thermo::relative_entropy_gibbs;
use crate::{Error, Result};

pub const MAX_NEWTON_ITERATIONS: usize = 200;
pub const MAX_HALVINGS: usize = 40;
/// Certified bound on the stationarity residual of a numeric solution.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProblem {
    g0: f64,
    gn: f64,
    n: usize,
}

impl SpectrumProblem {
    /// `g0 = beta omega_0`, `gn = beta omega_N`, `n` machine modes.
    /// `g0 == gn` is accepted as the trivial no-cooling problem.
    pub fn new(g0: f64, gn: f64, n: usize) -> Result<Self> {
        if !(g0 > 0.0) || !gn.is_finite() {
            return Err(Error::domain(format!("endpoints must be positive and finite, got ({g0}, {gn})")));
        }
        if gn < g0 {
            return Err(Error::domain(format!("need g0 <= gN for cooling, got ({g0}, {gn})")));
        }
        if n == 0 {
            return Err(Error::domain("need at least one machine mode"));
        }
        Ok(Self { g0, gn, n })
    }

    /// Endpoints from the initial system occupation `n0` and `lambda = gN/g0`.
    pub fn from_occupation(n0: f64, lambda: f64, n: usize) -> Result<Self> {
        if !(n0 > 0.0) {
            return Err(Error::domain(format!("initial occupation must be positive, got {n0}")));
        }
        let g0 = (1.0 / n0).ln_1p();
        Self::new(g0, lambda * g0, n)
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn gn(&self) -> f64 {
        self.gn
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.gn / self.g0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    Numeric,
    AnalyticLargeN,
}

impl SpectrumMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumMethod::Numeric => "numeric",
            SpectrumMethod::AnalyticLargeN => "analytic-large-n",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSolution {
    /// `g_0 ..= g_N`
    pub g: Vec<f64>,
    pub sigma: f64,
    /// Max stationarity residual over the interior points.
    pub residual: f64,
    pub method: SpectrumMethod,
    pub iterations: usize,
    /// Smallest eigenvalue of the occupation-space Hessian (`None` for N = 1).
    pub hessian_min_eigenvalue: Option<f64>,
}

fn occupation(g: f64) -> f64 {
    1.0 / g.exp_m1()
}

fn gap(n: f64) -> f64 {
    (1.0 / n).ln_1p()
}

/// `ln tanh x`, accurate for small and large `x`.
fn ln_tanh(x: f64) -> f64 {
    let e = (-2.0 * x).exp();
    (-(-2.0 * x).exp_m1()).ln() - e.ln_1p()
}

/// Entropy production `sum_j D[tau(g_{j-1}) || tau(g_j)]` of a spectrum.
pub fn sigma_of_spectrum(g: &[f64]) -> f64 {
    g.windows(2).map(|w| relative_entropy_gibbs(occupation(w[0]), occupation(w[1])).expect("positive gaps")).sum()
}

/// Stationarity residuals at the interior points `j = 1..N-1`.
pub fn stationarity_residuals(g: &[f64]) -> Vec<f64> {
    (1..g.len().saturating_sub(1))
        .map(|j| {
            let ratio = (-g[j]).exp_m1() / (-g[j - 1]).exp_m1();
            (g[j + 1] - g[j]) - (g[j] - g[j - 1]).exp_m1() * ratio
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Closed-form large-N trajectory point `g*_j`.
pub fn analytic_trajectory(problem: &SpectrumProblem, j: usize) -> f64 {
    let n = problem.n as f64;
    let jf = j.min(problem.n) as f64;
    let mix = jf / (2.0 * n) * ln_tanh(problem.gn / 4.0) + (n - jf) / (2.0 * n) * ln_tanh(problem.g0 / 4.0);
    // g = 2 ln(-coth(mix)) = -2 ln tanh(-mix), mix <= 0
    -2.0 * ln_tanh(-mix)
}

pub fn analytic_spectrum(problem: &SpectrumProblem) -> Vec<f64> {
    (0..=problem.n).map(|j| analytic_trajectory(problem, j)).collect()
}

/// The analytic trajectory sampled at `N` equal steps, with its entropy production.
pub fn sampled_analytic_solution(problem: &SpectrumProblem) -> SpectrumSolution {
    let mut g = analytic_spectrum(problem);
    g[0] = problem.g0;
    g[problem.n] = problem.gn;
    SpectrumSolution {
        sigma: sigma_of_spectrum(&g),
        residual: max_abs(&stationarity_residuals(&g)),
        method: SpectrumMethod::AnalyticLargeN,
        iterations: 0,
        hessian_min_eigenvalue: None,
        g,
    }
}

/// Large-N optimum `(1/2N) [ln(tanh(gN/4) / tanh(g0/4))]^2`.
///
/// The bracket is the thermodynamic length `int dg sqrt(n(n+1))` between the
/// endpoints. The often-quoted variant with an extra factor ½ inside the
/// square is a factor 4 too small; see [`sigma_large_n_quarter`].
pub fn sigma_large_n(problem: &SpectrumProblem) -> f64 {
    let length = thermodynamic_length(problem.g0, problem.gn);
    length * length / (2.0 * problem.n as f64)
}

/// `(1/2N) [½ ln(tanh(gN/4) / tanh(g0/4))]^2`, kept for comparison only.
pub fn sigma_large_n_quarter(problem: &SpectrumProblem) -> f64 {
    0.25 * sigma_large_n(problem)
}

/// `ln tanh(b/4) - ln tanh(a/4)`
pub fn thermodynamic_length(a: f64, b: f64) -> f64 {
    ln_tanh(b / 4.0) - ln_tanh(a / 4.0)
}

/// Gradient and tridiagonal Hessian of the objective in occupation space,
/// over the interior occupations. `occ` holds `n_0 ..= n_N`.
fn derivatives(occ: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let interior = occ.len() - 2;
    let g: Vec<f64> = occ.iter().map(|n| gap(*n)).collect();
    let grad = stationarity_residuals(&g);
    let mut diag = Vec::with_capacity(interior);
    let mut off = Vec::with_capacity(interior.saturating_sub(1));
    for j in 1..=interior {
        let (prev, cur) = (occ[j - 1], occ[j]);
        diag.push(prev / (cur * cur) - (prev + 1.0) / ((cur + 1.0) * (cur + 1.0)) + 1.0 / (cur * (cur + 1.0)));
        if j < interior {
            let next = occ[j + 1];
            off.push(-1.0 / (next * (next + 1.0)));
        }
    }
    (grad, diag, off)
}

fn objective(occ: &[f64]) -> f64 {
    occ.windows(2).map(|w| relative_entropy_gibbs(w[0], w[1]).unwrap_or(f64::INFINITY)).sum()
}

fn feasible(occ: &[f64]) -> bool {
    occ.iter().all(|n| *n > 0.0 && n.is_finite()) && occ.windows(2).all(|w| w[0] > w[1])
}

fn hessian_min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let m = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            diag[r]
        } else if r + 1 == c {
            off[r]
        } else if c + 1 == r {
            off[c]
        } else {
            0.0
        }
    });
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Numerically optimal spectrum for `problem`.
pub fn solve_stationarity(problem: &SpectrumProblem) -> Result<SpectrumSolution> {
    let n = problem.n;
    if n == 1 || problem.g0 == problem.gn {
        let g = if n == 1 { vec![problem.g0, problem.gn] } else { vec![problem.g0; n + 1] };
        return Ok(SpectrumSolution {
            sigma: sigma_of_spectrum(&g),
            residual: max_abs(&stationarity_residuals(&g)),
            method: SpectrumMethod::Numeric,
            iterations: 0,
            hessian_min_eigenvalue: None,
            g,
        });
    }

    let mut occ: Vec<f64> = analytic_spectrum(problem).into_iter().map(occupation).collect();
    occ[0] = occupation(problem.g0);
    occ[n] = occupation(problem.gn);
    if !feasible(&occ) {
        // Degenerate initial guess (extreme endpoints): fall back to a
        // geometric interpolation of the occupations.
        let (a, b) = (occ[0].ln(), occ[n].ln());
        for (j, o) in occ.iter_mut().enumerate().take(n).skip(1) {
            *o = (a + (b - a) * j as f64 / n as f64).exp();
        }
    }

    let mut value = objective(&occ);
    let mut iterations = 0;
    loop {
        let (grad, diag, off) = derivatives(&occ);
        let residual = max_abs(&grad);
        if residual <= 0.1 * RESIDUAL_TOL || iterations >= MAX_NEWTON_ITERATIONS {
            if residual >= RESIDUAL_TOL {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                    best: occ.iter().map(|o| gap(*o)).collect(),
                });
            }
            let g: Vec<f64> = occ.iter().map(|o| gap(*o)).collect();
            return Ok(SpectrumSolution {
                g: {
                    let mut g = g;
                    g[0] = problem.g0;
                    g[n] = problem.gn;
                    g
                },
                sigma: value,
                residual,
                method: SpectrumMethod::Numeric,
                iterations,
                hessian_min_eigenvalue: Some(hessian_min_eigenvalue(&diag, &off)),
            });
        }
        iterations += 1;

        let neg: Vec<f64> = grad.iter().map(|x| -x).collect();
        let mut step = solve_symmetric_tridiagonal(&diag, &off, &neg).unwrap_or_default();
        let mut slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        if step.len() != grad.len() || !(slope < 0.0) {
            // Not a descent direction: diagonally scaled gradient instead.
            step = grad.iter().zip(&diag).map(|(g, d)| -g / d.abs().max(1e-300)).collect();
            slope = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = occ.clone();
            for (k, s) in step.iter().enumerate() {
                trial[k + 1] += alpha * s;
            }
            if feasible(&trial) {
                let v = objective(&trial);
                let negligible = slope.abs() <= 1e-14 * (1.0 + value.abs());
                if v <= value + 1e-4 * alpha * slope || (negligible && v <= value + 1e-15 * (1.0 + value.abs())) {
                    accepted = Some((trial, v));
                    break;
                }
                if negligible {
                    // Below round-off in the objective: trust the Newton step
                    // if it lowers the gradient.
                    let (g_trial, _, _) = derivatives(&trial);
                    if max_abs(&g_trial) < residual {
                        accepted = Some((trial, v));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, v)) => {
                occ = trial;
                value = v;
            }
            None => {
                return Err(Error::NonConvergence { iterations, residual, best: occ.iter().map(|o| gap(*o)).collect() })
            }
        }
    }
}

/// One cell of a `Sigma**_N` versus `lambda` sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub n: usize,
    pub lambda: f64,
    pub result: Result<SpectrumSolution>,
}

/// `Sigma**_N(lambda)` with `g0 = ln(1 + 1/n0)`, `gN = lambda g0`, for every
/// combination; rows sorted by `(N, lambda)`. Solver failures are kept per cell.
pub fn sweep_sigma_vs_lambda(n0: f64, lambdas: &[f64], ns: &[usize]) -> Vec<SweepCell> {
    let mut cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| lambdas.iter().map(move |&l| (n, l))).collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let solve = |&(n, lambda): &(usize, f64)| SweepCell {
        n,
        lambda,
        result: SpectrumProblem::from_occupation(n0, lambda, n).and_then(|p| solve_stationarity(&p)),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.iter().map(solve).collect()
    }
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut out: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
            // pin the endpoints exactly
            out[0] = lo;
            out[count - 1] = hi;
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_mode_is_direct_relative_entropy() {
        let p = SpectrumProblem::new(0.5, 2.0, 1).unwrap();
        let s = solve_stationarity(&p).unwrap();
        let d = relative_entropy_gibbs(occupation(0.5), occupation(2.0)).unwrap();
        assert_relative_eq!(s.sigma, d, max_relative = 1e-14);
        assert_eq!(s.g, vec![0.5, 2.0]);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(SpectrumProblem::new(2.0, 1.0, 3).is_err());
        assert!(SpectrumProblem::new(1.0, 2.0, 0).is_err());
        assert!(SpectrumProblem::new(0.0, 2.0, 2).is_err());
    }

    #[test]
    fn ln_tanh_matches_naive_in_the_middle() {
        for x in [0.01, 0.3, 1.0, 3.0] {
            assert_relative_eq!(ln_tanh(x), x.tanh().ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn analytic_endpoints_and_flat_case() {
        let p = SpectrumProblem::new((1.1f64).ln(), (1.0 + 1e5f64).ln(), 10).unwrap();
        assert!((analytic_trajectory(&p, 0) - p.g0()).abs() < 1e-12);
        assert!((analytic_trajectory(&p, 10) - p.gn()).abs() < 1e-12);
        let flat = SpectrumProblem::new(0.7, 0.7, 4).unwrap();
        assert!(analytic_spectrum(&flat).iter().all(|g| (g - 0.7).abs() < 1e-12));
        assert_eq!(sigma_large_n(&flat), 0.0);
    }

    #[test]
    fn two_modes_more_than_halve() {
        let p1 = SpectrumProblem::from_occupation(10.0, 3.0, 1).unwrap();
        let p2 = SpectrumProblem::from_occupation(10.0, 3.0, 2).unwrap();
        let s1 = solve_stationarity(&p1).unwrap().sigma;
        let s2 = solve_stationarity(&p2).unwrap();
        assert!(s2.sigma < 0.5 * s1);
        assert!(s2.residual < RESIDUAL_TOL);
    }

    #[test]
    fn newton_certificate_and_convexity() {
        let p = SpectrumProblem::new((1.1f64).ln(), (1.0 + 1e5f64).ln(), 50).unwrap();
        let s = solve_stationarity(&p).unwrap();
        assert!(s.residual < RESIDUAL_TOL);
        assert!(s.hessian_min_eigenvalue.unwrap() > 0.0);
        assert!(s.g.windows(2).all(|w| w[0] < w[1]));
        assert!(s.sigma <= sampled_analytic_solution(&p).sigma + 1e-15);
    }
}
