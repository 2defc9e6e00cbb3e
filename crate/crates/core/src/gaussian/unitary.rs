use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DET_TOL, SYMPLECTIC_TOL};
use crate::linalg::{self, block2, c, haar_unitary, identity, max_abs, CMatrix, CVector};
use crate::{Error, Result};

/// Squeezing cap used by the randomized property suites.
pub const DEFAULT_MAX_SQUEEZE: f64 = 1.5;

/// Gaussian unitary `(d, C, S)` on `J` modes.
///
/// Acts on moments through `G = [[C*, S], [S*, C]]`; valid iff
/// `C C† - (S S†)* = I` and `(S C†)ᵀ = S C†`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUnitary {
    alpha_d: CVector,
    c: CMatrix,
    s: CMatrix,
}

/// Residuals of the defining constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticResiduals {
    /// `max |C C† - (S S†)* - I|`
    pub normalization: f64,
    /// `max |(S C†)ᵀ - S C†|`
    pub symmetry: f64,
    /// `| |det G| - 1 |`
    pub determinant: f64,
}

impl SymplecticResiduals {
    pub fn within_tolerance(&self) -> bool {
        self.normalization <= SYMPLECTIC_TOL && self.symmetry <= SYMPLECTIC_TOL && self.determinant <= DET_TOL
    }

    pub fn worst(&self) -> f64 {
        self.normalization.max(self.symmetry).max(self.determinant)
    }
}

impl GaussianUnitary {
    /// Validating constructor.
    pub fn new(alpha_d: CVector, c: CMatrix, s: CMatrix) -> Result<Self> {
        let u = Self::new_unchecked(alpha_d, c, s)?;
        let res = u.residuals();
        if !res.within_tolerance() {
            return Err(Error::contract(format!(
                "not a Gaussian unitary: normalization {:.3e}, symmetry {:.3e}, |det G| defect {:.3e}",
                res.normalization, res.symmetry, res.determinant
            )));
        }
        Ok(u)
    }

    /// Shape checks only. Used to build deliberately corrupted operations in
    /// failure-injection tests.
    #[doc(hidden)]
    pub fn new_unchecked(alpha_d: CVector, c: CMatrix, s: CMatrix) -> Result<Self> {
        let j = alpha_d.len();
        for m in [&c, &s] {
            if m.nrows() != j || m.ncols() != j {
                return Err(Error::DimensionMismatch { expected: j, found: m.nrows().max(m.ncols()) });
            }
        }
        if j == 0 {
            return Err(Error::contract("a Gaussian unitary needs at least one mode"));
        }
        Ok(Self { alpha_d, c, s })
    }

    pub fn identity(modes: usize) -> Self {
        Self { alpha_d: CVector::zeros(modes), c: identity(modes), s: CMatrix::zeros(modes, modes) }
    }

    pub fn modes(&self) -> usize {
        self.alpha_d.len()
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn displacement(&self) -> &CVector {
        &self.alpha_d
    }

    /// `d = (alpha_d, alpha_d*)`
    pub fn displacement_vector(&self) -> CVector {
        let j = self.modes();
        CVector::from_fn(2 * j, |i, _| if i < j { self.alpha_d[i] } else { self.alpha_d[i - j].conj() })
    }

    /// `G = [[C*, S], [S*, C]]`
    pub fn g_matrix(&self) -> CMatrix {
        block2(&self.c.conjugate(), &self.s, &self.s.conjugate(), &self.c)
    }

    pub fn residuals(&self) -> SymplecticResiduals {
        let j = self.modes();
        let cc = &self.c * self.c.adjoint();
        let ss = &self.s * self.s.adjoint();
        let normalization = max_abs(&(cc - ss.conjugate() - identity(j)));
        let sc = &self.s * self.c.adjoint();
        let symmetry = max_abs(&(sc.transpose() - &sc));
        let determinant = (self.g_matrix().determinant().norm() - 1.0).abs();
        SymplecticResiduals { normalization, symmetry, determinant }
    }

    pub fn is_passive(&self) -> bool {
        max_abs(&self.s) == 0.0
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &GaussianUnitary) -> Result<GaussianUnitary> {
        compose(self, first)
    }
}

/// `u2 ∘ u1`: `G = G2 G1`, `d = G2 d1 + d2`.
pub fn compose(u2: &GaussianUnitary, u1: &GaussianUnitary) -> Result<GaussianUnitary> {
    if u1.modes() != u2.modes() {
        return Err(Error::DimensionMismatch { expected: u2.modes(), found: u1.modes() });
    }
    let c_new = &u2.c * &u1.c + u2.s.conjugate() * &u1.s;
    let s_new = u2.c.conjugate() * &u1.s + &u2.s * &u1.c;
    let alpha = u2.c.conjugate() * &u1.alpha_d + &u2.s * u1.alpha_d.conjugate() + &u2.alpha_d;
    Ok(GaussianUnitary { alpha_d: alpha, c: c_new, s: s_new })
}

/// Passive (number-conserving) unitary with mode matrix `C`.
pub fn make_passive(c_unitary: CMatrix) -> Result<GaussianUnitary> {
    if c_unitary.nrows() != c_unitary.ncols() {
        return Err(Error::contract("passive mode matrix must be square"));
    }
    let defect = linalg::unitarity_defect(&c_unitary);
    if defect > SYMPLECTIC_TOL {
        return Err(Error::contract(format!("mode matrix is not unitary (defect {defect:.3e})")));
    }
    let j = c_unitary.nrows();
    GaussianUnitary::new_unchecked(CVector::zeros(j), c_unitary, CMatrix::zeros(j, j))
}

/// Independent single-mode squeezers: `C = diag(cosh r)`, `S = diag(sinh r)`.
pub fn make_squeezer(r: &[f64]) -> GaussianUnitary {
    let j = r.len();
    let cd = CVector::from_iterator(j, r.iter().map(|x| c(x.cosh(), 0.0)));
    let sd = CVector::from_iterator(j, r.iter().map(|x| c(x.sinh(), 0.0)));
    GaussianUnitary { alpha_d: CVector::zeros(j), c: CMatrix::from_diagonal(&cd), s: CMatrix::from_diagonal(&sd) }
}

/// Phase shifters: `C = diag(e^{-i phi})`.
pub fn make_phase_shift(phi: &[f64]) -> GaussianUnitary {
    let j = phi.len();
    let cd = CVector::from_iterator(j, phi.iter().map(|p| Complex64::from_polar(1.0, -p)));
    GaussianUnitary { alpha_d: CVector::zeros(j), c: CMatrix::from_diagonal(&cd), s: CMatrix::zeros(j, j) }
}

pub fn make_displacement(alpha: &[Complex64]) -> GaussianUnitary {
    let j = alpha.len();
    GaussianUnitary { alpha_d: CVector::from_column_slice(alpha), c: identity(j), s: CMatrix::zeros(j, j) }
}

fn check_pair(i: usize, j: usize, modes: usize) -> Result<()> {
    if i >= modes || j >= modes {
        return Err(Error::contract(format!("modes ({i}, {j}) out of range for {modes} modes")));
    }
    if i == j {
        return Err(Error::contract(format!("two-mode operation needs distinct modes, got {i} twice")));
    }
    Ok(())
}

/// Full state exchange of modes `i` and `j`.
pub fn make_swap(i: usize, j: usize, modes: usize) -> Result<GaussianUnitary> {
    check_pair(i, j, modes)?;
    let mut perm = identity(modes);
    perm.swap_rows(i, j);
    make_passive(perm)
}

/// Beam splitter of angle `theta` between modes `i` and `j`; `theta = π/2`
/// exchanges the modes up to a sign.
pub fn make_beam_splitter(i: usize, j: usize, modes: usize, theta: f64) -> Result<GaussianUnitary> {
    check_pair(i, j, modes)?;
    let mut m = identity(modes);
    let (s, co) = theta.sin_cos();
    m[(i, i)] = c(co, 0.0);
    m[(i, j)] = c(-s, 0.0);
    m[(j, i)] = c(s, 0.0);
    m[(j, j)] = c(co, 0.0);
    make_passive(m)
}

/// Haar passive ∘ independent squeezers ∘ Haar passive, with squeezing
/// magnitudes uniform on `[0, max_squeeze]`. Deterministic in `seed`.
pub fn random_gaussian_unitary(modes: usize, seed: u64, max_squeeze: f64) -> GaussianUnitary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_gaussian_unitary_with(&mut rng, modes, max_squeeze)
}

/// As [`random_gaussian_unitary`], drawing from a caller-owned generator.
/// Negative `max_squeeze` is treated as 0.
pub fn random_gaussian_unitary_with<R: Rng + ?Sized>(rng: &mut R, modes: usize, max_squeeze: f64) -> GaussianUnitary {
    let cap = max_squeeze.max(0.0);
    let v = haar_unitary(modes, rng);
    let r: Vec<f64> = (0..modes).map(|_| if cap > 0.0 { rng.random_range(0.0..=cap) } else { 0.0 }).collect();
    let w = haar_unitary(modes, rng);
    let inner = make_passive(v).expect("Haar sample is unitary");
    let outer = make_passive(w).expect("Haar sample is unitary");
    let squeezed = compose(&make_squeezer(&r), &inner).expect("same mode count");
    let mut u = compose(&outer, &squeezed).expect("same mode count");
    if cap == 0.0 {
        u.s = CMatrix::zeros(modes, modes);
    }
    u
}
