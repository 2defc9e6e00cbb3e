use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GaussianUnitary, BLOCK_TOL, UNCERTAINTY_TOL};
use crate::linalg::{
    self, block2, c, hermitian_eigenvalues, hermitian_part, hermitian_sqrt, symmetric_part, CMatrix, CVector, ZERO,
};
use crate::thermo::{gibbs_occupation, vn_entropy_single_mode};
use crate::{Error, Result};

/// A single bosonic mode of frequency `omega` in equilibrium at inverse
/// temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsMode {
    omega: f64,
    beta: f64,
}

impl GibbsMode {
    pub fn new(omega: f64, beta: f64) -> Result<Self> {
        if !(omega > 0.0) || !(beta > 0.0) {
            return Err(Error::domain(format!(
                "Gibbs mode needs omega > 0 and beta > 0, got omega={omega}, beta={beta}"
            )));
        }
        Ok(Self { omega, beta })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `1/(e^{beta omega} - 1)`
    pub fn nbar(&self) -> f64 {
        gibbs_occupation(self.beta * self.omega)
    }
}

/// First and second moments of a `J`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    alpha: CVector,
    mu: CMatrix,
    nu: CMatrix,
}

/// Product of Gibbs modes: `r = 0`, `nu = 0`, `mu = diag(nbar_j + 1/2)`.
pub fn gibbs_state(modes: &[GibbsMode]) -> Result<GaussianState> {
    let nbars: Vec<f64> = modes.iter().map(GibbsMode::nbar).collect();
    GaussianState::thermal(&nbars)
}

impl GaussianState {
    /// Validating constructor.
    pub fn new(alpha: CVector, mu: CMatrix, nu: CMatrix) -> Result<Self> {
        let j = alpha.len();
        if j == 0 {
            return Err(Error::contract("a Gaussian state needs at least one mode"));
        }
        for (name, m) in [("mu", &mu), ("nu", &nu)] {
            if m.nrows() != j || m.ncols() != j {
                return Err(Error::DimensionMismatch { expected: j, found: m.nrows().max(m.ncols()) });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidState(format!("{name} has non-finite entries")));
            }
        }
        let herm = linalg::hermiticity_defect(&mu);
        if herm > BLOCK_TOL {
            return Err(Error::InvalidState(format!("mu is not Hermitian (defect {herm:.3e})")));
        }
        let sym = linalg::symmetry_defect(&nu);
        if sym > BLOCK_TOL {
            return Err(Error::InvalidState(format!("nu is not symmetric (defect {sym:.3e})")));
        }
        let state = Self { alpha, mu, nu };
        let min_ev = state.uncertainty_min_eigenvalue();
        if min_ev < -UNCERTAINTY_TOL {
            return Err(Error::InvalidState(format!("uncertainty relation violated: min eig(M + Z) = {min_ev:.3e}")));
        }
        Ok(state)
    }

    /// Rebuild from numerically computed blocks, projecting away round-off
    /// asymmetry before validation.
    fn from_computed(alpha: CVector, mu: CMatrix, nu: CMatrix) -> Result<Self> {
        Self::new(alpha, hermitian_part(&mu), symmetric_part(&nu))
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::thermal(&vec![0.0; modes]).expect("vacuum is valid")
    }

    /// Product of Gibbs modes with the given mean excitations.
    pub fn thermal(nbars: &[f64]) -> Result<Self> {
        if let Some(bad) = nbars.iter().find(|n| !(**n >= 0.0) || !n.is_finite()) {
            return Err(Error::domain(format!("mean excitation must be finite and >= 0, got {bad}")));
        }
        let j = nbars.len();
        let diag = CVector::from_iterator(j, nbars.iter().map(|n| c(n + 0.5, 0.0)));
        Self::new(CVector::zeros(j), CMatrix::from_diagonal(&diag), CMatrix::zeros(j, j))
    }

    /// Gibbs mode with mean excitation `nbar`, displaced by `alpha`.
    pub fn displaced_thermal(nbar: f64, alpha: num_complex::Complex64) -> Result<Self> {
        let mut s = Self::thermal(&[nbar])?;
        s.alpha[0] = alpha;
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &CVector {
        &self.alpha
    }

    pub fn mu(&self) -> &CMatrix {
        &self.mu
    }

    pub fn nu(&self) -> &CMatrix {
        &self.nu
    }

    /// `r = (alpha, alpha*)`
    pub fn first_moments(&self) -> CVector {
        let j = self.modes();
        CVector::from_fn(2 * j, |i, _| if i < j { self.alpha[i] } else { self.alpha[i - j].conj() })
    }

    /// `M = [[mu*, nu], [nu*, mu]]`
    pub fn second_moments(&self) -> CMatrix {
        block2(&self.mu.conjugate(), &self.nu, &self.nu.conjugate(), &self.mu)
    }

    /// `Z = ½ diag(I, -I)`
    pub fn z_matrix(modes: usize) -> CMatrix {
        CMatrix::from_fn(2 * modes, 2 * modes, |i, k| {
            if i != k {
                ZERO
            } else if i < modes {
                c(0.5, 0.0)
            } else {
                c(-0.5, 0.0)
            }
        })
    }

    /// Smallest eigenvalue of `M + Z`; nonnegative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let m = self.second_moments() + Self::z_matrix(self.modes());
        hermitian_eigenvalues(&m)[0]
    }

    /// `n_j = |alpha_j|^2 + mu_jj - 1/2`
    pub fn mean_excitation(&self, mode: usize) -> f64 {
        self.alpha[mode].norm_sqr() + self.mu[(mode, mode)].re - 0.5
    }

    pub fn mean_excitations(&self) -> Vec<f64> {
        (0..self.modes()).map(|j| self.mean_excitation(j)).collect()
    }

    /// Thermal excitation `sqrt(mu^2 - |nu|^2) - 1/2` of a single-mode state.
    ///
    /// Independent of the displacement; 0 for pure states.
    pub fn thermal_excitation(&self) -> Result<f64> {
        if self.modes() != 1 {
            return Err(Error::contract(format!(
                "thermal excitation is defined for one mode, state has {}",
                self.modes()
            )));
        }
        let mu = self.mu[(0, 0)].re;
        let det = mu * mu - self.nu[(0, 0)].norm_sqr();
        if det < -UNCERTAINTY_TOL {
            return Err(Error::InvalidState(format!("mu^2 - |nu|^2 = {det:.3e} < 0")));
        }
        Ok((det.max(0.0).sqrt() - 0.5).max(0.0))
    }

    /// Thermal excitation of the marginal of `mode`.
    pub fn mode_thermal_excitation(&self, mode: usize) -> Result<f64> {
        self.reduce(&[mode])?.thermal_excitation()
    }

    /// Marginal on the listed modes, in the listed order.
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::contract("reduce needs at least one mode to keep"));
        }
        let j = self.modes();
        for (pos, &k) in keep.iter().enumerate() {
            if k >= j {
                return Err(Error::contract(format!("mode {k} out of range for {j} modes")));
            }
            if keep[..pos].contains(&k) {
                return Err(Error::contract(format!("mode {k} listed twice")));
            }
        }
        let n = keep.len();
        let alpha = CVector::from_fn(n, |i, _| self.alpha[keep[i]]);
        let mu = CMatrix::from_fn(n, n, |a, b| self.mu[(keep[a], keep[b])]);
        let nu = CMatrix::from_fn(n, n, |a, b| self.nu[(keep[a], keep[b])]);
        Ok(Self { alpha, mu, nu })
    }

    /// Tensor product `self ⊗ other` (modes of `self` first).
    pub fn tensor(&self, other: &Self) -> Self {
        let (a, b) = (self.modes(), other.modes());
        let n = a + b;
        let mut alpha = CVector::zeros(n);
        alpha.rows_mut(0, a).copy_from(&self.alpha);
        alpha.rows_mut(a, b).copy_from(&other.alpha);
        let mut mu = CMatrix::zeros(n, n);
        let mut nu = CMatrix::zeros(n, n);
        mu.view_mut((0, 0), (a, a)).copy_from(&self.mu);
        mu.view_mut((a, a), (b, b)).copy_from(&other.mu);
        nu.view_mut((0, 0), (a, a)).copy_from(&self.nu);
        nu.view_mut((a, a), (b, b)).copy_from(&other.nu);
        Self { alpha, mu, nu }
    }

    /// `r -> G r + d`, `M -> G M G†`.
    pub fn apply_unitary(&self, u: &GaussianUnitary) -> Result<Self> {
        let j = self.modes();
        if u.modes() != j {
            return Err(Error::DimensionMismatch { expected: j, found: u.modes() });
        }
        let g = u.g_matrix();
        let r = &g * self.first_moments() + u.displacement_vector();
        let m = &g * self.second_moments() * g.adjoint();
        let alpha = r.rows(0, j).into_owned();
        let mu = m.view((j, j), (j, j)).into_owned();
        let nu = m.view((0, j), (j, j)).into_owned();
        Self::from_computed(alpha, mu, nu)
    }

    pub fn det_second_moments(&self) -> f64 {
        self.second_moments().determinant().re
    }

    /// Symplectic eigenvalues `nu_k >= 1/2`, ascending: the positive half of
    /// the spectrum of `2 Z M`, computed through the Hermitian matrix
    /// `M^{1/2} (2Z) M^{1/2}`, which is similar to it.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let j = self.modes();
        let root = hermitian_sqrt(&self.second_moments());
        let k = &root * Self::z_matrix(j).scale(2.0) * &root;
        let ev = hermitian_eigenvalues(&k);
        ev[j..].to_vec()
    }

    /// Von Neumann entropy from the symplectic spectrum.
    pub fn entropy(&self) -> f64 {
        self.symplectic_eigenvalues().into_iter().map(|v| vn_entropy_single_mode(v - 0.5)).sum()
    }

    /// Quadrature means and covariance for `R = (x_1..x_J, p_1..p_J)` with
    /// `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`. Debugging aid.
    pub fn to_quadrature(&self) -> (Vec<f64>, DMatrix<f64>) {
        let j = self.modes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = CMatrix::from_fn(2 * j, 2 * j, |row, col| {
            let (block_r, i) = (row / j, row % j);
            let (block_c, k) = (col / j, col % j);
            if i != k {
                return ZERO;
            }
            match (block_r, block_c) {
                (0, _) => c(s, 0.0),
                (1, 0) => c(0.0, -s),
                _ => c(0.0, s),
            }
        });
        let means = (&t * self.first_moments()).iter().map(|z| z.re).collect();
        let cov = &t * self.second_moments() * t.adjoint();
        (means, cov.map(|z| z.re))
    }
}
