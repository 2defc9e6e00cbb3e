//! Scalar thermodynamics of a single bosonic mode.

use crate::{Error, Result};

/// Mean excitation `1/(e^{beta omega} - 1)` of a Gibbs mode.
pub fn gibbs_occupation(beta_omega: f64) -> f64 {
    1.0 / beta_omega.exp_m1()
}

/// Inverse of [`gibbs_occupation`]: `ln(1 + 1/nbar)`.
pub fn beta_omega_from_occupation(nbar: f64) -> f64 {
    (1.0 / nbar).ln_1p()
}

/// Effective inverse temperature `ln((n+1)/n) / omega` of a mode with thermal
/// excitation `nth`.
///
/// `nth == 0` (a pure state) maps to `f64::INFINITY`.
pub fn effective_beta(nth: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("omega must be positive, got {omega}")));
    }
    if !(nth >= 0.0) {
        return Err(Error::domain(format!("thermal excitation must be nonnegative, got {nth}")));
    }
    if nth == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / nth).ln_1p() / omega)
}

/// Von Neumann entropy `(n+1) ln(n+1) - n ln n` of a Gibbs mode with mean
/// excitation `nth`; 0 at `nth = 0`.
pub fn vn_entropy_single_mode(nth: f64) -> f64 {
    let n = nth.max(0.0);
    if n == 0.0 {
        return 0.0;
    }
    (n + 1.0) * n.ln_1p() - n * n.ln()
}

/// Relative entropy `D[tau_a || tau_b]` between Gibbs modes with mean
/// excitations `nbar_a` and `nbar_b`.
pub fn relative_entropy_gibbs(nbar_a: f64, nbar_b: f64) -> Result<f64> {
    if !(nbar_a > 0.0 && nbar_b > 0.0) {
        return Err(Error::domain(format!("mean excitations must be positive, got ({nbar_a}, {nbar_b})")));
    }
    let (a, b) = (nbar_a, nbar_b);
    let d = (a + 1.0) * ((b - a) / (a + 1.0)).ln_1p() + a * ((a - b) / b).ln_1p();
    Ok(d.max(0.0))
}

/// Fock population `nbar^n / (nbar+1)^(n+1)` of a Gibbs mode.
pub fn geometric_population(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ratio = nbar / (nbar + 1.0);
    ratio.powi(n as i32) / (nbar + 1.0)
}

/// Gibbs probability mass on levels `>= levels`.
pub fn gibbs_tail_mass(nbar: f64, levels: usize) -> f64 {
    if nbar == 0.0 {
        return 0.0;
    }
    (nbar / (nbar + 1.0)).powi(levels as i32)
}

pub fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn effective_beta_examples() {
        let beta = 0.7;
        let omega = 1.3;
        let n = gibbs_occupation(beta * omega);
        assert_relative_eq!(effective_beta(n, omega).unwrap(), beta, max_relative = 1e-14);
        assert_relative_eq!(effective_beta(1.0, 2f64.ln()).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(effective_beta(0.5625, 1.0).unwrap(), (25.0f64 / 9.0).ln(), max_relative = 1e-14);
        assert_relative_eq!((25.0f64 / 9.0).ln(), 1.0217, epsilon = 1e-4);
        assert_eq!(effective_beta(0.0, 1.0).unwrap(), f64::INFINITY);
        assert!(effective_beta(-0.1, 1.0).is_err());
        assert!(effective_beta(1.0, 0.0).is_err());
    }

    #[test]
    fn entropy_closed_form_and_series() {
        assert_eq!(vn_entropy_single_mode(0.0), 0.0);
        assert_relative_eq!(vn_entropy_single_mode(1.0), 2.0 * 2f64.ln(), max_relative = 1e-15);
        // -sum p ln p over the geometric distribution, summed until the terms vanish.
        let nbar = 2.0;
        let mut series = 0.0;
        for n in 0..2000 {
            let p = geometric_population(nbar, n);
            if p == 0.0 {
                break;
            }
            series -= p * p.ln();
        }
        assert_relative_eq!(vn_entropy_single_mode(nbar), series, max_relative = 1e-13);
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(relative_entropy_gibbs(2.0, 2.0).unwrap(), 0.0);
        let expected = 11.0 * (2.0f64 / 11.0).ln() + 10.0 * 10f64.ln();
        assert_relative_eq!(relative_entropy_gibbs(10.0, 1.0).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 4.2736, epsilon = 1e-4);
        // series oracle sum p_n ln(p_n/q_n)
        let mut series = 0.0;
        for n in 0..5000 {
            let p = geometric_population(10.0, n);
            let q = geometric_population(1.0, n);
            if p == 0.0 || q == 0.0 {
                break;
            }
            series += p * (p / q).ln();
        }
        assert_relative_eq!(relative_entropy_gibbs(10.0, 1.0).unwrap(), series, max_relative = 1e-10);
        let ab = relative_entropy_gibbs(1.0, 2.0).unwrap();
        let ba = relative_entropy_gibbs(2.0, 1.0).unwrap();
        assert!((ab - ba).abs() > 1e-3);
        assert!(relative_entropy_gibbs(0.0, 1.0).is_err());
    }
}
