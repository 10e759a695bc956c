//! Phase-space engine for Gaussian states.
//!
//! Quadratures are `x = (a + a^dagger)/sqrt(2)`, `p = (a - a^dagger)/(i sqrt(2))`,
//! ordered `(x_1, p_1, ..., x_m, p_m)`. The vacuum has covariance `I/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QcoolError, Result};
use crate::hilbert::{annihilation, DensityMatrix};
use crate::linalg::CMatrix;
use crate::states::DSTParams;

/// Symplectic form `Omega_m`, block diagonal in `[[0, 1], [-1, 0]]`.
pub fn omega(m: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

/// First and second moments of an `m`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub disp: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(disp: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = disp.len();
        if n == 0 || n % 2 != 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(QcoolError::Dimension(format!(
                "displacement of length {n} needs an even length and a matching covariance, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 {
            return Err(QcoolError::Argument(format!("covariance is not symmetric ({asym:.3e})")));
        }
        let g = Self { disp, cov };
        let min = g.uncertainty_min_eigenvalue();
        if min < -1e-9 {
            return Err(QcoolError::Argument(format!(
                "covariance violates the uncertainty principle (eigenvalue {min:.3e})"
            )));
        }
        Ok(g)
    }

    pub fn vacuum(m: usize) -> Self {
        Self {
            disp: DVector::zeros(2 * m),
            cov: DMatrix::identity(2 * m, 2 * m) * 0.5,
        }
    }

    pub fn modes(&self) -> usize {
        self.disp.len() / 2
    }

    /// Smallest eigenvalue of `cov + (i/2) Omega`; non-negative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let w = omega(self.modes());
        let m = CMatrix::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| {
            Complex64::new(self.cov[(i, j)], 0.5 * w[(i, j)])
        });
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Direct sum of two states, `self` first.
    pub fn tensor(&self, other: &Self) -> Self {
        let (a, b) = (self.disp.len(), other.disp.len());
        let mut disp = DVector::zeros(a + b);
        disp.rows_mut(0, a).copy_from(&self.disp);
        disp.rows_mut(a, b).copy_from(&other.disp);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        Self { disp, cov }
    }

    /// Moments of a subset of modes.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        let idx = quadrature_indices(self.modes(), modes)?;
        let disp = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.disp[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.cov[(idx[a], idx[b])]);
        Ok(Self { disp, cov })
    }

    /// `<N_e>` summed over modes.
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.modes())
            .map(|j| {
                let (x, p) = (2 * j, 2 * j + 1);
                0.5 * (self.cov[(x, x)] + self.cov[(p, p)] + self.disp[x].powi(2) + self.disp[p].powi(2))
                    - 0.5
            })
            .sum()
    }

    /// Overlap `Tr(rho |0><0|)` with the multimode vacuum.
    pub fn vacuum_fidelity(&self) -> Result<f64> {
        overlap_with_vacuum(&self.disp, &self.cov)
    }

    /// `1 / sqrt(det(2 cov))`.
    pub fn purity(&self) -> f64 {
        1.0 / (&self.cov * 2.0).determinant().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.disp - &other.disp).amax().max((&self.cov - &other.cov).amax())
    }
}

fn quadrature_indices(m: usize, modes: &[usize]) -> Result<Vec<usize>> {
    let mut idx = Vec::with_capacity(2 * modes.len());
    for &j in modes {
        if j >= m {
            return Err(QcoolError::Index(format!("mode {j} outside 0..{m}")));
        }
        idx.extend([2 * j, 2 * j + 1]);
    }
    Ok(idx)
}

fn overlap_with_vacuum(d: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let n = d.len();
    let s = cov + DMatrix::identity(n, n) * 0.5;
    let inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| QcoolError::Numeric("cov + I/2 is singular".into()))?;
    let q = (d.transpose() * inv * d)[(0, 0)];
    Ok((-0.5 * q).exp() / s.determinant().sqrt())
}

/// Gaussian moments of `D(alpha) S(r) rho_th(nbar) S^dagger D^dagger` for real squeezing.
pub fn gaussian_dst(p: &DSTParams) -> Result<GaussianState> {
    p.validate()?;
    if p.theta != 0.0 {
        return Err(QcoolError::Argument(format!(
            "the phase-space engine supports real squeezing only, got theta = {}",
            p.theta
        )));
    }
    let a = p.alpha();
    let disp = DVector::from_vec(vec![2f64.sqrt() * a.re, 2f64.sqrt() * a.im]);
    let s = p.nbar + 0.5;
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
        s * (2.0 * p.r).exp(),
        s * (-2.0 * p.r).exp(),
    ]));
    GaussianState::new(disp, cov)
}

/// Real `2m x 2m` matrix with `S Omega S^T = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    pub entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || n % 2 != 0 || entries.ncols() != n {
            return Err(QcoolError::Dimension(format!(
                "symplectic matrix must be square of even size, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        let err = symplectic_error(&entries);
        if err > 1e-9 {
            return Err(QcoolError::Numeric(format!(
                "matrix violates the symplectic condition by {err:.3e}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * m, 2 * m),
        }
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    /// `2 x 2` block acting from mode `j` into mode `i`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.entries.view((2 * i, 2 * j), (2, 2)).into_owned()
    }
}

/// `max |S Omega S^T - Omega|`.
pub fn symplectic_error(s: &DMatrix<f64>) -> f64 {
    let w = omega(s.nrows() / 2);
    (s * &w * s.transpose() - w).amax()
}

/// Coefficient matrix of `sum_ij h_ij a_i^dagger a_j` in the
/// `xi = (a_1..a_m, a_1^dagger..a_m^dagger)` ordering, `H = xi^dagger M xi / 2`.
pub fn passive_coefficients(h: &DMatrix<f64>) -> Result<CMatrix> {
    let m = h.nrows();
    if h.ncols() != m || m == 0 {
        return Err(QcoolError::Dimension("passive coupling matrix must be square".into()));
    }
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = Complex64::from(h[(i, j)]);
            out[(m + i, m + j)] = Complex64::from(h[(j, i)]);
        }
    }
    Ok(out)
}

/// `a_V^dagger a_V + a_R^dagger a_R + a_V^dagger a_R + a_R^dagger a_V`, resonator first.
pub fn oneshot_coefficients() -> CMatrix {
    passive_coefficients(&DMatrix::from_element(2, 2, 1.0)).expect("2x2 input")
}

/// Symplectic evolution for time `t` under `H = xi^dagger M xi / 2`:
/// `S = T^T L^dagger exp(-i K M t) L T`.
pub fn symplectic_from_h(coeffs: &CMatrix, t: f64) -> Result<SymplecticMatrix> {
    let n = coeffs.nrows();
    if n == 0 || n % 2 != 0 || coeffs.ncols() != n {
        return Err(QcoolError::Dimension(format!(
            "coefficient matrix must be square of even size, got {}x{}",
            n,
            coeffs.ncols()
        )));
    }
    let herm = (coeffs - coeffs.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(QcoolError::Argument(format!(
            "coefficient matrix is not Hermitian ({herm:.3e})"
        )));
    }
    let m = n / 2;
    let i = Complex64::i();
    let s2 = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);

    let mut k = CMatrix::zeros(n, n);
    let mut l = CMatrix::zeros(n, n);
    let mut tmat = CMatrix::zeros(n, n);
    for j in 0..m {
        k[(j, j)] = Complex64::from(1.0);
        k[(m + j, m + j)] = Complex64::from(-1.0);
        l[(j, j)] = s2;
        l[(j, m + j)] = i * s2;
        l[(m + j, j)] = s2;
        l[(m + j, m + j)] = -i * s2;
        // (x_1, p_1, ...) -> (x_1..x_m, p_1..p_m)
        tmat[(j, 2 * j)] = Complex64::from(1.0);
        tmat[(m + j, 2 * j + 1)] = Complex64::from(1.0);
    }
    let gen = &k * coeffs * Complex64::new(0.0, -t);
    let ev = gen.exp();
    let full = tmat.adjoint() * l.adjoint() * ev * &l * &tmat;
    let imag = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-9 {
        return Err(QcoolError::Numeric(format!(
            "symplectic construction left an imaginary part of {imag:.3e}"
        )));
    }
    SymplecticMatrix::new(full.map(|z| z.re))
}

/// `d -> S d`, `cov -> S cov S^T`.
pub fn evolve_gaussian(g: &GaussianState, s: &SymplecticMatrix) -> Result<GaussianState> {
    if s.entries.nrows() != g.disp.len() {
        return Err(QcoolError::Dimension(format!(
            "symplectic matrix of size {} applied to {} quadratures",
            s.entries.nrows(),
            g.disp.len()
        )));
    }
    Ok(GaussianState {
        disp: &s.entries * &g.disp,
        cov: &s.entries * &g.cov * s.entries.transpose(),
    })
}

/// Outcome of projecting one mode onto the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub post: GaussianState,
    /// `Tr[(|0><0| ⊗ I) rho]`.
    pub prob_weight: f64,
}

/// Schur-complement update for a vacuum outcome on `measured_mode`.
pub fn condition_on_vacuum(g: &GaussianState, measured_mode: usize) -> Result<Conditioned> {
    let m = g.modes();
    if measured_mode >= m {
        return Err(QcoolError::Index(format!("mode {measured_mode} outside 0..{m}")));
    }
    if m < 2 {
        return Err(QcoolError::Argument("conditioning needs at least two modes".into()));
    }
    let keep: Vec<usize> = (0..m).filter(|&j| j != measured_mode).collect();
    let ki = quadrature_indices(m, &keep)?;
    let mi = [2 * measured_mode, 2 * measured_mode + 1];

    let d_a = DVector::from_iterator(ki.len(), ki.iter().map(|&i| g.disp[i]));
    let d_b = DVector::from_iterator(2, mi.iter().map(|&i| g.disp[i]));
    let s_a = DMatrix::from_fn(ki.len(), ki.len(), |a, b| g.cov[(ki[a], ki[b])]);
    let s_ab = DMatrix::from_fn(ki.len(), 2, |a, b| g.cov[(ki[a], mi[b])]);
    let s_b = DMatrix::from_fn(2, 2, |a, b| g.cov[(mi[a], mi[b])]);

    let sum = &s_b + DMatrix::identity(2, 2) * 0.5;
    if sum.determinant().abs() < 1e-14 {
        return Err(QcoolError::Numeric("measured covariance plus vacuum is singular".into()));
    }
    let inv = sum.try_inverse().ok_or_else(|| QcoolError::Numeric("singular update".into()))?;
    let disp = &d_a - &s_ab * &inv * &d_b;
    let cov = &s_a - &s_ab * &inv * s_ab.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(Conditioned {
        post: GaussianState::new(disp, cov)?,
        prob_weight: overlap_with_vacuum(&d_b, &s_b)?,
    })
}

/// Closed form for the one-shot success probability as printed in the source
/// analysis; it equals the projector probability divided by `pi`.
pub fn oneshot_probability_formula(p: &DSTParams) -> f64 {
    let a = p.alpha();
    let (a1, a2, r, n) = (a.re, a.im, p.r, p.nbar);
    let e2r = (2.0 * r).exp();
    let expo = -2.0 * a1 * a1 / (1.0 + e2r * (1.0 + 2.0 * n)) - 2.0 * e2r * a2 * a2 / (1.0 + e2r + 2.0 * n);
    let den = ((1.0 + n).powi(2) * r.cosh().powi(2) - n * n * r.sinh().powi(2)).sqrt();
    expo.exp() / (std::f64::consts::PI * den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneShot {
    pub post: GaussianState,
    pub fidelity: f64,
    /// Projector probability of the vacuum outcome.
    pub prob: f64,
    pub prob_formula: f64,
}

/// One beam-splitter cycle of length `pi/2` with an oscillator regulator in
/// vacuum, followed by conditioning the regulator on vacuum.
pub fn theorem3_oneshot(p: &DSTParams) -> Result<OneShot> {
    oneshot_at(p, std::f64::consts::FRAC_PI_2)
}

/// As [`theorem3_oneshot`] with an arbitrary interaction time.
pub fn oneshot_at(p: &DSTParams, t: f64) -> Result<OneShot> {
    let g = gaussian_dst(p)?.tensor(&GaussianState::vacuum(1));
    let s = symplectic_from_h(&oneshot_coefficients(), t)?;
    let c = condition_on_vacuum(&evolve_gaussian(&g, &s)?, 1)?;
    Ok(OneShot {
        fidelity: c.post.vacuum_fidelity()?,
        post: c.post,
        prob: c.prob_weight,
        prob_formula: oneshot_probability_formula(p),
    })
}

/// First and second quadrature moments of a Fock-space state whose
/// subsystems are all oscillators.
pub fn fock_moments(rho: &DensityMatrix) -> Result<GaussianState> {
    let space = &rho.space;
    let m = space.len();
    if space.subsystems().iter().any(|s| !s.is_oscillator()) {
        return Err(QcoolError::Type("moments need oscillator subsystems only".into()));
    }
    let s2 = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let i = Complex64::i();
    let mut quads: Vec<CMatrix> = Vec::with_capacity(2 * m);
    for j in 0..m {
        let a = annihilation(space, j)?.matrix;
        let ad = a.adjoint();
        quads.push((&a + &ad) * s2);
        quads.push((&a - &ad) * (s2 / i));
    }
    let ex = |op: &CMatrix| -> f64 { (&rho.matrix * op).trace().re };
    let disp = DVector::from_iterator(2 * m, quads.iter().map(ex));
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    for a in 0..2 * m {
        for b in a..2 * m {
            let anti = &quads[a] * &quads[b] + &quads[b] * &quads[a];
            let v = 0.5 * ex(&anti) - disp[a] * disp[b];
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(GaussianState { disp, cov })
}
