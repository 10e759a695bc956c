//! Initial states: displaced squeezed thermal oscillator states, qudit
//! eigenstates and the depolarized qudit.
//!
//! Squeezing follows `S(z) = exp[(z a^dagger^2 - z^* a^2) / 2]`, so at
//! `theta = 0` the `x` quadrature is stretched by `e^r`. The phase-space
//! engine in [`crate::gaussian`] uses the same orientation.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{QcoolError, Result};
use crate::hilbert::{local_annihilation, DensityMatrix, Ket, OperatorMatrix, OperatorTag, SpaceSpec};
use crate::linalg::{exp_antihermitian, CMatrix};

/// Largest trace weight a truncated state may lose before it is rejected.
pub const LEAKAGE_TOL: f64 = 1e-6;

/// Parameters of `D(alpha) S(z) rho_th(nbar) S^dagger D^dagger` with
/// `alpha = alpha_mag e^{i alpha_phase}` and `z = r e^{i theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DSTParams {
    pub alpha_mag: f64,
    pub alpha_phase: f64,
    pub r: f64,
    pub theta: f64,
    pub nbar: f64,
}

impl DSTParams {
    /// Real displacement and real squeezing.
    pub fn new(alpha: f64, r: f64, nbar: f64) -> Self {
        Self {
            alpha_mag: alpha,
            alpha_phase: 0.0,
            r,
            theta: 0.0,
            nbar,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_alpha_phase(mut self, phase: f64) -> Self {
        self.alpha_phase = phase;
        self
    }

    pub fn vacuum() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_mag, self.alpha_phase)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha_mag, self.alpha_phase, self.r, self.theta, self.nbar];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(QcoolError::Argument("state parameters must be finite".into()));
        }
        if self.alpha_mag < 0.0 || self.r < 0.0 || self.nbar < 0.0 {
            return Err(QcoolError::Argument(
                "|alpha|, r and nbar must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Closed-form `<a^dagger a>` of the untruncated state.
    pub fn mean_photon_number(&self) -> f64 {
        self.alpha_mag.powi(2) + self.r.sinh().powi(2) + self.nbar * (2.0 * self.r).cosh()
    }
}

fn padded(cutoff: usize) -> usize {
    2 * cutoff + 20
}

fn crop(m: &CMatrix, n: usize) -> CMatrix {
    m.view((0, 0), (n, n)).into_owned()
}

fn thermal_populations(nbar: f64, n: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut p = vec![0.0; n];
        p[0] = 1.0;
        return p;
    }
    let q = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..n).map(|m| q.powi(m as i32) / (1.0 + nbar)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Thermal state `sum_m nbar^m / (1+nbar)^{m+1} |m><m|`, renormalised over the cutoff.
pub fn thermal_state(nbar: f64, cutoff: usize) -> Result<DensityMatrix> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(QcoolError::Argument(format!("mean photon number must be >= 0, got {nbar}")));
    }
    DensityMatrix::diagonal(SpaceSpec::oscillator(cutoff)?, &thermal_populations(nbar, cutoff))
}

fn displacement_matrix(alpha: Complex64, n: usize) -> CMatrix {
    let a = local_annihilation(n);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    exp_antihermitian(&gen)
}

fn squeezing_matrix(z: Complex64, n: usize) -> CMatrix {
    let a = local_annihilation(n);
    let ad = a.adjoint();
    let gen = (&ad * &ad * z - &a * &a * z.conj()) * Complex64::from(0.5);
    exp_antihermitian(&gen)
}

/// `D(alpha) = exp(alpha a^dagger - alpha^* a)`, exponentiated on a padded
/// space and cropped so the low-lying block is free of edge artefacts.
pub fn displacement_op(alpha: Complex64, cutoff: usize) -> Result<OperatorMatrix> {
    let space = SpaceSpec::oscillator(cutoff)?;
    let m = crop(&displacement_matrix(alpha, padded(cutoff)), cutoff);
    OperatorMatrix::new(space, m, OperatorTag::Unitary)
}

/// `S(z) = exp[(z a^dagger^2 - z^* a^2) / 2]`, padded and cropped like [`displacement_op`].
pub fn squeezing_op(z: Complex64, cutoff: usize) -> Result<OperatorMatrix> {
    let space = SpaceSpec::oscillator(cutoff)?;
    let m = crop(&squeezing_matrix(z, padded(cutoff)), cutoff);
    OperatorMatrix::new(space, m, OperatorTag::Unitary)
}

/// Displaced squeezed thermal state truncated to `cutoff` levels.
///
/// The state is built on a padded space; the weight lost by cropping is
/// reported as a truncation error when it exceeds [`LEAKAGE_TOL`].
pub fn displaced_squeezed_thermal(p: &DSTParams, cutoff: usize) -> Result<DensityMatrix> {
    p.validate()?;
    SpaceSpec::oscillator(cutoff)?;
    let n = padded(cutoff);
    let ds = displacement_matrix(p.alpha(), n) * squeezing_matrix(p.z(), n);
    dst_from_ds(&ds, p.nbar, cutoff)
}

/// Fixed displacement and squeezing with a variable thermal occupation.
/// Caches `D S` so sweeps over `nbar` skip the exponentials.
#[derive(Debug, Clone)]
pub struct DstFamily {
    base: DSTParams,
    cutoff: usize,
    ds: CMatrix,
}

impl DstFamily {
    pub fn new(p: &DSTParams, cutoff: usize) -> Result<Self> {
        p.validate()?;
        SpaceSpec::oscillator(cutoff)?;
        let n = padded(cutoff);
        Ok(Self {
            base: *p,
            cutoff,
            ds: displacement_matrix(p.alpha(), n) * squeezing_matrix(p.z(), n),
        })
    }

    pub fn params(&self, nbar: f64) -> DSTParams {
        DSTParams { nbar, ..self.base }
    }

    pub fn state(&self, nbar: f64) -> Result<DensityMatrix> {
        self.params(nbar).validate()?;
        dst_from_ds(&self.ds, nbar, self.cutoff)
    }

    /// Fock populations only, in `O(n^2)`; same truncation rule as [`DstFamily::state`].
    pub fn populations(&self, nbar: f64) -> Result<Vec<f64>> {
        self.params(nbar).validate()?;
        let n = self.ds.nrows();
        let th = thermal_populations(nbar, n);
        let mut pops: Vec<f64> = (0..self.cutoff)
            .map(|i| (0..n).map(|m| self.ds[(i, m)].norm_sqr() * th[m]).sum())
            .collect();
        let kept: f64 = pops.iter().sum();
        let leakage = 1.0 - kept;
        if leakage > LEAKAGE_TOL {
            return Err(QcoolError::Truncation {
                leakage,
                tol: LEAKAGE_TOL,
            });
        }
        pops.iter_mut().for_each(|p| *p /= kept);
        Ok(pops)
    }
}

fn dst_from_ds(ds: &CMatrix, nbar: f64, cutoff: usize) -> Result<DensityMatrix> {
    let n = ds.nrows();
    let th = CMatrix::from_diagonal(&DVector::from_iterator(
        n,
        thermal_populations(nbar, n).into_iter().map(Complex64::from),
    ));
    let full = ds * th * ds.adjoint();
    let kept = crop(&full, cutoff);
    let leakage = 1.0 - kept.trace().re;
    if leakage > LEAKAGE_TOL {
        return Err(QcoolError::Truncation {
            leakage,
            tol: LEAKAGE_TOL,
        });
    }
    let kept = (&kept + kept.adjoint()) * Complex64::from(0.5);
    DensityMatrix::new(SpaceSpec::oscillator(cutoff)?, kept)?.normalized()
}

/// Smallest cutoff (from `start`, growing in steps of 10) that holds the state.
pub fn fitting_cutoff(p: &DSTParams, start: usize) -> Result<usize> {
    let mut c = start.max(4);
    loop {
        match displaced_squeezed_thermal(p, c) {
            Ok(_) => return Ok(c),
            Err(QcoolError::Truncation { .. }) if c < 1000 => c += 10,
            Err(e) => return Err(e),
        }
    }
}

/// Coherent state from its Fock amplitudes `e^{-|b|^2/2} b^n / sqrt(n!)`.
pub fn coherent_ket(beta: Complex64, cutoff: usize) -> Result<Ket> {
    let space = SpaceSpec::oscillator(cutoff)?;
    let mut amps = DVector::zeros(cutoff);
    let mut term = Complex64::from((-beta.norm_sqr() / 2.0).exp());
    for n in 0..cutoff {
        amps[n] = term;
        term = term * beta / ((n + 1) as f64).sqrt();
    }
    Ket::new(space, amps)
}

/// Projector `|k><k|` on a `d`-level qudit.
pub fn qudit_state(d: usize, k: usize) -> Result<DensityMatrix> {
    if k >= d {
        return Err(QcoolError::Index(format!("level {k} outside 0..{d}")));
    }
    Ok(Ket::basis(SpaceSpec::qudit(d)?, &[k])?.to_density())
}

/// `(|0><0| + I/d_s) / 2`.
pub fn depolarized_qudit(d_s: usize) -> Result<DensityMatrix> {
    if d_s < 2 {
        return Err(QcoolError::Argument("depolarized qudit needs d_s >= 2".into()));
    }
    let mut pops = vec![0.5 / d_s as f64; d_s];
    pops[0] += 0.5;
    DensityMatrix::diagonal(SpaceSpec::qudit(d_s)?, &pops)
}

/// `Tr(rho N_e)` where `N_e` counts excitations over all subsystems.
pub fn mean_energy(rho: &DensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(i, p)| p * rho.space.excitation(i).expect("index in range") as f64)
        .sum()
}
