//! Brute-force p-excitation exchange on a truncated two-mode Fock space.
//!
//! `H = w0 a†a + w1 b†b + chi (a b†^p + a† b^p)` conserves `K = p n + m`
//! (`n` system quanta, `m` machine quanta), so the joint space splits into
//! sectors of fixed `K`, each a real symmetric tridiagonal block in `n`.
//! The unitary is assembled per sector from a Hermitian eigendecomposition.
//!
//! With the machine in a Gibbs state the reduced channel preserves the
//! coherence order `a - b` of the system density matrix:
//!
//! ```text
//! rho'[a,b] = sum_s sum_m p_m U[(a, m+ps), (a+s, m)] conj(U[(b, m+ps), (b+s, m)]) rho[a+s, b+s]
//! ```
//!
//! Diagonal inputs therefore stay diagonal and evolve under a stochastic
//! population transfer matrix, which is what iterated runs use.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, max_abs, CMatrix, ZERO};
use crate::thermo::{geometric_population, gibbs_tail_mass};
use crate::{Error, Result};

/// Gibbs tail mass allowed beyond the cutoff.
pub const TAIL_TOL: f64 = 1e-10;
/// Boundary population above which a collision is rejected.
pub const LEAKAGE_TOL: f64 = 1e-8;
pub const DEFAULT_DIM: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockCutoff {
    pub d_s: usize,
    pub d_m: usize,
}

impl FockCutoff {
    /// Levels `0..d_s` for the system and `0..d_m` for the machine.
    pub fn new(d_s: usize, d_m: usize, p: u32) -> Result<Self> {
        let min = p as usize + 2;
        if p == 0 {
            return Err(Error::domain("interaction order p must be positive"));
        }
        if d_s < min || d_m < min {
            return Err(Error::contract(format!("cutoffs ({d_s}, {d_m}) below p + 2 = {min}")));
        }
        Ok(Self { d_s, d_m })
    }

    /// Smallest cutoffs whose Gibbs tails beyond the truncation are below `tol`.
    pub fn for_gibbs(nbar_s: f64, nbar_m: f64, p: u32, tol: f64) -> Result<Self> {
        let d_s = levels_for_tail(nbar_s, tol)?;
        let d_m = levels_for_tail(nbar_m, tol)?;
        let min = p as usize + 2;
        Self::new(d_s.max(min), d_m.max(min), p)
    }

    /// Like [`FockCutoff::for_gibbs`], with the machine extended by
    /// `p (d_s - 1)` levels so it can absorb every system quantum.
    pub fn for_exchange(nbar_s: f64, nbar_m: f64, p: u32, tol: f64) -> Result<Self> {
        let base = Self::for_gibbs(nbar_s, nbar_m, p, tol)?;
        Self::new(base.d_s, base.d_m + p as usize * (base.d_s - 1), p)
    }

    /// Errors when either Gibbs input has tail mass `>= tol` beyond the cutoff.
    pub fn check_gibbs(&self, nbar_s: f64, nbar_m: f64, tol: f64) -> Result<()> {
        for (nbar, d, which) in [(nbar_s, self.d_s, "system"), (nbar_m, self.d_m, "machine")] {
            let tail = gibbs_tail_mass(nbar, d);
            if !(tail < tol) {
                return Err(Error::contract(format!(
                    "{which} Gibbs tail {tail:.3e} beyond {d} levels is not below {tol:.1e}"
                )));
            }
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self { d_s: 2 * self.d_s, d_m: 2 * self.d_m }
    }

    pub fn joint_dim(&self) -> usize {
        self.d_s * self.d_m
    }
}

fn levels_for_tail(nbar: f64, tol: f64) -> Result<usize> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::domain(format!("occupation must be non-negative, got {nbar}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tail tolerance must lie in (0, 1), got {tol}")));
    }
    if nbar == 0.0 {
        return Ok(1);
    }
    let ratio = nbar / (nbar + 1.0);
    let mut d = (tol.ln() / ratio.ln()).ceil().max(1.0) as usize;
    while gibbs_tail_mass(nbar, d) >= tol {
        d += 1;
    }
    Ok(d)
}

/// Single-mode density matrix on levels `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    rho: CMatrix,
}

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
pub const DENSITY_EIGEN_TOL: f64 = 1e-9;

impl FockDensity {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square and nonempty".into()));
        }
        let herm = hermiticity_defect(&rho);
        if herm > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian: defect {herm:.3e}")));
        }
        let state = Self { rho };
        let tr = state.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = state.min_eigenvalue();
        if min < -DENSITY_EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(state)
    }

    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&DVector::from_iterator(pops.len(), pops.iter().map(|x| Complex64::from(*x)))))
    }

    /// Gibbs state truncated to `dim` levels and renormalized; also returns
    /// the removed tail mass.
    pub fn gibbs(nbar: f64, dim: usize) -> Result<(Self, f64)> {
        let (pops, deficit) = truncated_gibbs(nbar, dim)?;
        Ok((Self::from_populations(&pops)?, deficit))
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::DimensionMismatch { expected: n + 1, found: dim });
        }
        let mut pops = vec![0.0; dim];
        pops[n] = 1.0;
        Self::from_populations(&pops)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.rho[(n, n)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.rho)[0]
    }

    /// Largest modulus of an off-diagonal entry.
    pub fn max_coherence(&self) -> f64 {
        let mut m = self.rho.clone();
        m.fill_diagonal(ZERO);
        max_abs(&m)
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_coherence() == 0.0
    }

    pub fn mean_excitation(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.rho[(n, n)].re).sum()
    }

    pub fn second_moment(&self) -> f64 {
        (0..self.dim()).map(|n| (n * n) as f64 * self.rho[(n, n)].re).sum()
    }

    /// `tr(rho a)`
    pub fn first_moment_a(&self) -> Complex64 {
        (1..self.dim()).map(|n| self.rho[(n, n - 1)] * (n as f64).sqrt()).sum()
    }

    /// `tr(rho a^2)`
    pub fn moment_a2(&self) -> Complex64 {
        (2..self.dim()).map(|n| self.rho[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt()).sum()
    }

    pub fn fano_q(&self) -> f64 {
        fano_q(self.mean_excitation(), self.second_moment())
    }

    /// Thermal excitation of the Gaussian state with the same first and
    /// second moments.
    pub fn thermal_excitation(&self) -> f64 {
        let alpha = self.first_moment_a();
        let mu = self.mean_excitation() + 0.5 - alpha.norm_sqr();
        let nu = self.moment_a2() - alpha * alpha;
        ((mu * mu - nu.norm_sqr()).max(0.0).sqrt() - 0.5).max(0.0)
    }

    /// Total-variation distance between the populations and the untruncated
    /// geometric distribution with the same mean.
    pub fn total_variation_to_geometric(&self) -> f64 {
        total_variation_to_geometric(&self.populations())
    }
}

/// `(<n^2> - <n>^2) / (<n>(<n>+1)) - 1`, zero for Gibbs statistics.
pub fn fano_q(mean: f64, second: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    (second - mean * mean) / (mean * (mean + 1.0)) - 1.0
}

pub fn total_variation_to_geometric(pops: &[f64]) -> f64 {
    let mean: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let inside: f64 = pops.iter().enumerate().map(|(n, p)| (p - geometric_population(mean, n)).abs()).sum();
    0.5 * (inside + gibbs_tail_mass(mean, pops.len()))
}

fn truncated_gibbs(nbar: f64, dim: usize) -> Result<(Vec<f64>, f64)> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::domain(format!("occupation must be non-negative, got {nbar}")));
    }
    if dim == 0 {
        return Err(Error::domain("need at least one level"));
    }
    let mut pops: Vec<f64> = (0..dim).map(|n| geometric_population(nbar, n)).collect();
    let kept: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|p| *p /= kept);
    Ok((pops, gibbs_tail_mass(nbar, dim)))
}

/// One conserved-`K` block of the Hamiltonian, indexed by system level
/// `n_min..n_min + len`.
#[derive(Debug, Clone)]
struct Sector {
    n_min: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExchangeHamiltonian {
    p: u32,
    chi: f64,
    omega0: f64,
    omega1: f64,
    cutoff: FockCutoff,
    sectors: Vec<Sector>,
    spectra: OnceLock<Vec<SymmetricEigen<f64, nalgebra::Dyn>>>,
    orthogonality: OnceLock<f64>,
}

/// `sqrt((m+p)!/m!)`
fn raising_factor(m: usize, p: u32) -> f64 {
    (1..=p as usize).map(|k| ((m + k) as f64).sqrt()).product()
}

fn sector_range(k: usize, p: usize, cutoff: &FockCutoff) -> (usize, usize) {
    let n_max = (k / p).min(cutoff.d_s - 1);
    let n_min = if k >= cutoff.d_m { (k - (cutoff.d_m - 1)).div_ceil(p) } else { 0 };
    (n_min, n_max)
}

pub fn build_hamiltonian(
    p: u32,
    chi: f64,
    omega0: f64,
    omega1: f64,
    cutoff: FockCutoff,
) -> Result<ExchangeHamiltonian> {
    FockCutoff::new(cutoff.d_s, cutoff.d_m, p)?;
    if !chi.is_finite() || !omega0.is_finite() || !omega1.is_finite() {
        return Err(Error::domain("Hamiltonian parameters must be finite"));
    }
    let pu = p as usize;
    let k_max = pu * (cutoff.d_s - 1) + cutoff.d_m - 1;
    let sectors = (0..=k_max)
        .map(|k| {
            let (n_min, n_max) = sector_range(k, pu, &cutoff);
            let diag = (n_min..=n_max).map(|n| omega0 * n as f64 + omega1 * (k - pu * n) as f64).collect();
            // <n-1, m+p| H |n, m> = chi sqrt(n) sqrt((m+p)!/m!)
            let off = (n_min + 1..=n_max).map(|n| chi * (n as f64).sqrt() * raising_factor(k - pu * n, p)).collect();
            Sector { n_min, diag, off }
        })
        .collect();
    Ok(ExchangeHamiltonian {
        p,
        chi,
        omega0,
        omega1,
        cutoff,
        sectors,
        spectra: OnceLock::new(),
        orthogonality: OnceLock::new(),
    })
}

impl ExchangeHamiltonian {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    fn locate(&self, n: usize, m: usize) -> Option<(usize, usize)> {
        if n >= self.cutoff.d_s || m >= self.cutoff.d_m {
            return None;
        }
        let k = self.p as usize * n + m;
        Some((k, n - self.sectors[k].n_min))
    }

    /// `<n', m'| H |n, m>`
    pub fn element(&self, n_out: usize, m_out: usize, n_in: usize, m_in: usize) -> f64 {
        match (self.locate(n_out, m_out), self.locate(n_in, m_in)) {
            (Some((k1, i)), Some((k2, j))) if k1 == k2 => {
                let s = &self.sectors[k1];
                if i == j {
                    s.diag[i]
                } else if i + 1 == j {
                    s.off[i]
                } else if j + 1 == i {
                    s.off[j]
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Dense matrix on the joint basis `|n, m>` with index `n d_m + m`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (ds, dm) = (self.cutoff.d_s, self.cutoff.d_m);
        DMatrix::from_fn(ds * dm, ds * dm, |r, c| self.element(r / dm, r % dm, c / dm, c % dm))
    }

    /// `max |VᵀV - I|` over the sector eigenbases.
    pub fn orthogonality_defect(&self) -> f64 {
        *self.orthogonality.get_or_init(|| {
            self.spectra()
                .iter()
                .map(|eig| {
                    let v = &eig.eigenvectors;
                    (v.tr_mul(v) - DMatrix::<f64>::identity(v.ncols(), v.ncols())).abs().max()
                })
                .fold(0.0, f64::max)
        })
    }

    fn spectra(&self) -> &[SymmetricEigen<f64, nalgebra::Dyn>] {
        self.spectra.get_or_init(|| {
            self.sectors
                .iter()
                .map(|s| {
                    let len = s.diag.len();
                    let block = DMatrix::from_fn(len, len, |i, j| {
                        if i == j {
                            s.diag[i]
                        } else if i + 1 == j {
                            s.off[i]
                        } else if j + 1 == i {
                            s.off[j]
                        } else {
                            0.0
                        }
                    });
                    block.symmetric_eigen()
                })
                .collect()
        })
    }
}

/// Real and imaginary parts of one sector block.
#[derive(Debug, Clone)]
struct SplitBlock {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl SplitBlock {
    fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    fn norm_sqr(&self, i: usize, j: usize) -> f64 {
        self.re[(i, j)].powi(2) + self.im[(i, j)].powi(2)
    }

    fn mul(&self, other: &SplitBlock) -> SplitBlock {
        SplitBlock { re: &self.re * &other.re - &self.im * &other.im, im: &self.re * &other.im + &self.im * &other.re }
    }

    /// `max |B†B - I|`
    fn unitarity_defect(&self) -> f64 {
        let n = self.re.nrows();
        let re = self.re.tr_mul(&self.re) + self.im.tr_mul(&self.im) - DMatrix::<f64>::identity(n, n);
        let im = self.re.tr_mul(&self.im) - self.im.tr_mul(&self.re);
        re.iter().zip(im.iter()).fold(0.0, |acc, (a, b)| acc.max(a.hypot(*b)))
    }
}

/// `exp(-i H t)` stored per conserved sector.
#[derive(Debug, Clone)]
pub struct BlockUnitary {
    p: u32,
    cutoff: FockCutoff,
    n_min: Vec<usize>,
    blocks: Vec<SplitBlock>,
}

pub const UNITARITY_TOL: f64 = 1e-10;

pub fn evolve_unitary(h: &ExchangeHamiltonian, t: f64) -> Result<BlockUnitary> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("evolution time must be non-negative, got {t}")));
    }
    let blocks = h
        .spectra()
        .iter()
        .map(|eig| {
            let v = &eig.eigenvectors;
            let mut vc = v.clone();
            let mut vs = v.clone();
            for (j, e) in eig.eigenvalues.iter().enumerate() {
                let (sin, cos) = (e * t).sin_cos();
                vc.column_mut(j).scale_mut(cos);
                vs.column_mut(j).scale_mut(-sin);
            }
            SplitBlock { re: vc * v.transpose(), im: vs * v.transpose() }
        })
        .collect();
    let u = BlockUnitary { p: h.p, cutoff: h.cutoff, n_min: h.sectors.iter().map(|s| s.n_min).collect(), blocks };
    // U = V e^{-iEt} Vᵀ is unitary to within the orthogonality defect of V,
    // which is checked once per Hamiltonian.
    let defect = h.orthogonality_defect();
    if defect >= UNITARITY_TOL {
        return Err(Error::contract(format!("eigenvector orthogonality defect {defect:.3e}")));
    }
    Ok(u)
}

impl BlockUnitary {
    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    fn position(&self, n_out: usize, m_out: usize, n_in: usize, m_in: usize) -> Option<(usize, usize, usize)> {
        let (ds, dm) = (self.cutoff.d_s, self.cutoff.d_m);
        if n_out >= ds || n_in >= ds || m_out >= dm || m_in >= dm {
            return None;
        }
        let p = self.p as usize;
        let k = p * n_out + m_out;
        if k != p * n_in + m_in {
            return None;
        }
        let base = self.n_min[k];
        Some((k, n_out - base, n_in - base))
    }

    /// `<n', m'| U |n, m>`
    pub fn element(&self, n_out: usize, m_out: usize, n_in: usize, m_in: usize) -> Complex64 {
        self.position(n_out, m_out, n_in, m_in).map_or(ZERO, |(k, i, j)| self.blocks[k].get(i, j))
    }

    pub fn to_dense(&self) -> CMatrix {
        let dm = self.cutoff.d_m;
        let d = self.cutoff.joint_dim();
        CMatrix::from_fn(d, d, |r, c| self.element(r / dm, r % dm, c / dm, c % dm))
    }

    /// `max |U†U - I|` over all sectors.
    pub fn unitarity_residual(&self) -> f64 {
        self.blocks.iter().map(SplitBlock::unitarity_defect).fold(0.0, f64::max)
    }

    /// `self * other` (apply `other` first).
    pub fn after(&self, other: &BlockUnitary) -> Result<BlockUnitary> {
        if self.p != other.p || self.cutoff != other.cutoff {
            return Err(Error::contract("unitaries act on different spaces"));
        }
        Ok(BlockUnitary {
            p: self.p,
            cutoff: self.cutoff,
            n_min: self.n_min.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.mul(b)).collect(),
        })
    }
}

/// Reduced system channel of one collision with a fresh Gibbs machine.
#[derive(Debug, Clone)]
pub struct CollisionChannel {
    unitary: BlockUnitary,
    machine: Vec<f64>,
    machine_deficit: f64,
    /// `transfer[(a, n)]`: probability `|n> -> |a>`.
    transfer: DMatrix<f64>,
    /// Output population on the truncation boundary for each input level.
    boundary: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CollisionOutcome {
    pub state: FockDensity,
    /// Joint population on the truncation boundary after the collision.
    pub leakage: f64,
    /// Machine Gibbs mass removed by truncation before renormalizing.
    pub machine_deficit: f64,
}

impl CollisionChannel {
    pub fn new(h: &ExchangeHamiltonian, nbar_m: f64, t: f64) -> Result<Self> {
        let cutoff = h.cutoff;
        let (machine, machine_deficit) = truncated_gibbs(nbar_m, cutoff.d_m)?;
        if machine_deficit >= TAIL_TOL {
            return Err(Error::CutoffTooSmall { leakage: machine_deficit, threshold: TAIL_TOL });
        }
        let unitary = evolve_unitary(h, t)?;
        let (ds, dm, p) = (cutoff.d_s, cutoff.d_m, h.p as usize);
        let mut transfer = DMatrix::zeros(ds, ds);
        let mut boundary = vec![0.0; ds];
        for n in 0..ds {
            for (m, pm) in machine.iter().enumerate() {
                if *pm == 0.0 {
                    continue;
                }
                let k = p * n + m;
                let base = unitary.n_min[k];
                let block = &unitary.blocks[k];
                for i in 0..block.re.nrows() {
                    let a = base + i;
                    let w = pm * block.norm_sqr(i, n - base);
                    transfer[(a, n)] += w;
                    if a + 1 == ds || k - p * a + p >= dm {
                        boundary[n] += w;
                    }
                }
            }
        }
        Ok(Self { unitary, machine, machine_deficit, transfer, boundary })
    }

    pub fn transfer_matrix(&self) -> &DMatrix<f64> {
        &self.transfer
    }

    pub fn machine_deficit(&self) -> f64 {
        self.machine_deficit
    }

    pub fn unitary(&self) -> &BlockUnitary {
        &self.unitary
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.unitary.cutoff.d_s {
            return Err(Error::DimensionMismatch { expected: self.unitary.cutoff.d_s, found: dim });
        }
        Ok(())
    }

    pub fn leakage(&self, pops: &[f64]) -> f64 {
        pops.iter().zip(&self.boundary).map(|(p, b)| p * b).sum()
    }

    /// One round on a population vector.
    pub fn apply_populations(&self, pops: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_dim(pops.len())?;
        let leakage = self.leakage(pops);
        if leakage >= LEAKAGE_TOL {
            return Err(Error::CutoffTooSmall { leakage, threshold: LEAKAGE_TOL });
        }
        let out = &self.transfer * DVector::from_column_slice(pops);
        Ok((out.iter().copied().collect(), leakage))
    }

    /// One round on a general density matrix.
    pub fn apply(&self, rho: &FockDensity) -> Result<CollisionOutcome> {
        self.check_dim(rho.dim())?;
        let pops = rho.populations();
        let leakage = self.leakage(&pops);
        if leakage >= LEAKAGE_TOL {
            return Err(Error::CutoffTooSmall { leakage, threshold: LEAKAGE_TOL });
        }
        let out = if rho.is_diagonal() {
            let (pops, _) = self.apply_populations(&pops)?;
            CMatrix::from_diagonal(&DVector::from_iterator(pops.len(), pops.into_iter().map(Complex64::from)))
        } else {
            self.apply_coherent(rho.matrix())
        };
        let state = FockDensity::new(crate::linalg::hermitian_part(&out))?;
        Ok(CollisionOutcome { state, leakage, machine_deficit: self.machine_deficit })
    }

    fn apply_coherent(&self, rho: &CMatrix) -> CMatrix {
        let (ds, dm, p) = (self.unitary.cutoff.d_s as i64, self.unitary.cutoff.d_m as i64, self.unitary.p as i64);
        let u = &self.unitary;
        let mut out = CMatrix::zeros(ds as usize, ds as usize);
        for a in 0..ds {
            for b in 0..ds {
                let mut acc = ZERO;
                for s in -(a.min(b))..ds - a.max(b) {
                    let r = rho[((a + s) as usize, (b + s) as usize)];
                    if r == ZERO {
                        continue;
                    }
                    let mut w = ZERO;
                    for m in 0.max(-p * s)..dm.min(dm - p * s) {
                        let pm = self.machine[m as usize];
                        let m_out = (m + p * s) as usize;
                        let ua = u.element(a as usize, m_out, (a + s) as usize, m as usize);
                        let ub = u.element(b as usize, m_out, (b + s) as usize, m as usize);
                        w += ua * ub.conj() * pm;
                    }
                    acc += w * r;
                }
                out[(a as usize, b as usize)] = acc;
            }
        }
        out
    }

    /// Stationary populations of the channel (the `L -> infinity` state).
    pub fn fixed_point(&self) -> Result<FockDensity> {
        let d = self.transfer.nrows();
        let mut a = &self.transfer - DMatrix::identity(d, d);
        let mut rhs = DVector::zeros(d);
        a.row_mut(0).fill(1.0);
        rhs[0] = 1.0;
        let sol = a.lu().solve(&rhs).ok_or_else(|| Error::contract("stationary state is not unique"))?;
        let pops: Vec<f64> = sol.iter().map(|x| x.max(0.0)).collect();
        let total: f64 = pops.iter().sum();
        FockDensity::from_populations(&pops.iter().map(|x| x / total).collect::<Vec<_>>())
    }
}

pub fn single_collision(rho: &FockDensity, nbar_m: f64, h: &ExchangeHamiltonian, t: f64) -> Result<CollisionOutcome> {
    CollisionChannel::new(h, nbar_m, t)?.apply(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub round: usize,
    pub mean_n: f64,
    pub mean_n2: f64,
    pub fano_q: f64,
    /// Largest boundary leakage seen up to this round.
    pub leakage: f64,
}

/// `rounds` collisions with a fresh machine each round. Records round 0,
/// every `stride`-th round and the last round.
pub fn iterate_collisions(
    rho0: &FockDensity,
    nbar_m: f64,
    h: &ExchangeHamiltonian,
    t: f64,
    rounds: usize,
    stride: usize,
) -> Result<Vec<CollisionRecord>> {
    let channel = CollisionChannel::new(h, nbar_m, t)?;
    iterate_channel(&channel, rho0, rounds, stride)
}

pub fn iterate_channel(
    channel: &CollisionChannel,
    rho0: &FockDensity,
    rounds: usize,
    stride: usize,
) -> Result<Vec<CollisionRecord>> {
    if rounds == 0 {
        return Err(Error::domain("need at least one round"));
    }
    let stride = stride.max(1);
    let record = |round: usize, mean: f64, second: f64, leakage: f64| CollisionRecord {
        round,
        mean_n: mean,
        mean_n2: second,
        fano_q: fano_q(mean, second),
        leakage,
    };
    let mut out = vec![record(0, rho0.mean_excitation(), rho0.second_moment(), 0.0)];
    let mut worst: f64 = 0.0;
    if rho0.is_diagonal() {
        let mut pops = rho0.populations();
        for round in 1..=rounds {
            let (next, leak) = channel.apply_populations(&pops)?;
            pops = next;
            worst = worst.max(leak);
            if round % stride == 0 || round == rounds {
                let mean = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
                let second = pops.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
                out.push(record(round, mean, second, worst));
            }
        }
    } else {
        let mut rho = rho0.clone();
        for round in 1..=rounds {
            let o = channel.apply(&rho)?;
            rho = o.state;
            worst = worst.max(o.leakage);
            if round % stride == 0 || round == rounds {
                out.push(record(round, rho.mean_excitation(), rho.second_moment(), worst));
            }
        }
    }
    Ok(out)
}
