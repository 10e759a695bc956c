//! State preparation on the cooled oscillator-plus-qudit ground state.
//!
//! Joint kets live on `[oscillator(cutoff), qudit(d)]`, oscillator first.
//!
//! Heralded photon addition is modelled as a conditional operator
//! `C = sum_k |k><k| ⊗ G_k` rescaled so that its strongest branch acts with
//! unit gain on the prepared input. The heralded state is `C psi` normalised
//! and the success probability is `|C psi|^2 / max_k |G_k phi_k|^2`, where
//! `phi_k` is the normalised input of branch `k`. This keeps probabilities in
//! `(0, 1]` and makes them shrink as more photons have to be added.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{QcoolError, Result};
use crate::hilbert::{local_annihilation, Ket, OperatorMatrix, OperatorTag, SpaceSpec};
use crate::linalg::{exp_antihermitian, CMatrix};
use crate::states::{coherent_ket, squeezing_op, LEAKAGE_TOL};

/// A prepared pure state with its success probability and target overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepResult {
    pub state: Ket,
    pub success_prob: f64,
    pub target_fidelity: f64,
}

/// Hybrid entangled state with the overlap against the maximally entangled
/// `sum_k |k, k> / sqrt(d)` reported alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridEntangled {
    pub prep: PrepResult,
    pub maximal_fidelity: f64,
}

/// N00N preparation. `prep.state` has its photon-added branch renormalised;
/// `unbalanced_fidelity` is the overlap of the raw heralded state with the
/// balanced target.
#[derive(Debug, Clone, PartialEq)]
pub struct Noon {
    pub prep: PrepResult,
    pub unbalanced_fidelity: f64,
}

/// `H_d |j> = sum_k w^{jk} |k> / sqrt(d)` with `w = e^{2 pi i / d}`.
pub fn hadamard_qudit(d: usize) -> Result<OperatorMatrix> {
    if d < 2 {
        return Err(QcoolError::Argument("the qudit Hadamard needs d >= 2".into()));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let m = CMatrix::from_fn(d, d, |k, j| {
        Complex64::from_polar(norm, 2.0 * PI * ((j * k) % d) as f64 / d as f64)
    });
    OperatorMatrix::new(SpaceSpec::qudit(d)?, m, OperatorTag::Unitary)
}

fn root_of_unity(n: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % n) as f64 / n as f64)
}

fn coherent_tail(beta: Complex64, cutoff: usize) -> f64 {
    let x = beta.norm_sqr();
    let mut term = (-x).exp();
    let mut kept = 0.0;
    for n in 0..cutoff {
        kept += term;
        term *= x / (n + 1) as f64;
    }
    (1.0 - kept).max(0.0)
}

fn local_displacement(beta: Complex64, cutoff: usize) -> CMatrix {
    let a = local_annihilation(cutoff);
    exp_antihermitian(&(a.adjoint() * beta - &a * beta.conj()))
}

/// `D_C = sum_k D(alpha w_N^k) ⊗ |k><k|` on `[oscillator(cutoff), qudit(d)]`.
///
/// Each displacement is exponentiated on the truncated space, so the result is
/// exactly unitary; a coherent tail above the cutoff beyond the leakage
/// tolerance is rejected.
pub fn conditional_displacement(
    d: usize,
    alpha: Complex64,
    n_components: usize,
    cutoff: usize,
) -> Result<OperatorMatrix> {
    if d < 2 || n_components == 0 {
        return Err(QcoolError::Argument("need d >= 2 and at least one component".into()));
    }
    let leakage = coherent_tail(alpha, cutoff);
    if leakage > LEAKAGE_TOL {
        return Err(QcoolError::Truncation {
            leakage,
            tol: LEAKAGE_TOL,
        });
    }
    let space = SpaceSpec::oscillator(cutoff)?.tensor(&SpaceSpec::qudit(d)?);
    let mut m = CMatrix::zeros(cutoff * d, cutoff * d);
    for k in 0..d {
        let dk = local_displacement(alpha * root_of_unity(n_components, k), cutoff);
        for i in 0..cutoff {
            for j in 0..cutoff {
                m[(i * d + k, j * d + k)] = dk[(i, j)];
            }
        }
    }
    OperatorMatrix::new(space, m, OperatorTag::Unitary)
}

/// `<P> = sum_n (-1)^n |psi_n|^2` for a normalised oscillator ket.
pub fn parity(ket: &Ket) -> f64 {
    ket.amplitudes
        .iter()
        .enumerate()
        .map(|(n, a)| if n % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum::<f64>()
        / ket.norm().powi(2)
}

/// Normalised `sum_k |alpha w_N^k>` built from analytic coherent amplitudes.
pub fn cat_reference(alpha: Complex64, n_components: usize, cutoff: usize) -> Result<Ket> {
    let space = SpaceSpec::oscillator(cutoff)?;
    let mut amps = DVector::zeros(cutoff);
    for k in 0..n_components {
        amps += coherent_ket(alpha * root_of_unity(n_components, k), cutoff)?.amplitudes;
    }
    Ket::new(space, amps)?.normalized()
}

/// Even `N`-component cat from conditional displacement and a projection of
/// the qudit onto its uniform superposition; requires `d = N` even.
pub fn make_cat(alpha: Complex64, n_components: usize, d: usize, cutoff: usize) -> Result<PrepResult> {
    if d != n_components || d % 2 != 0 {
        return Err(QcoolError::Argument(format!(
            "even cats need an even qudit with d = N, got d = {d}, N = {n_components}"
        )));
    }
    let dc = conditional_displacement(d, alpha, n_components, cutoff)?;
    let h = hadamard_qudit(d)?;
    let mut input = DVector::zeros(cutoff * d);
    for s in 0..d {
        input[s] = h.matrix[(s, 0)];
    }
    let joint = &dc.matrix * input;
    let xi = 1.0 / (d as f64).sqrt();
    let mut projected = DVector::zeros(cutoff);
    for n in 0..cutoff {
        for s in 0..d {
            projected[n] += joint[n * d + s] * xi;
        }
    }
    let raw = Ket::new(SpaceSpec::oscillator(cutoff)?, projected)?;
    let success_prob = raw.norm().powi(2);
    let state = raw.normalized()?;
    let target_fidelity = state.fidelity(&cat_reference(alpha, n_components, cutoff)?);
    Ok(PrepResult {
        state,
        success_prob,
        target_fidelity,
    })
}

/// `(a^dagger)^m v` on a truncated oscillator, with the weight pushed past the
/// cutoff reported as leakage relative to the untruncated result.
fn add_photons(v: &DVector<Complex64>, m: usize) -> Result<DVector<Complex64>> {
    let c = v.len();
    let mut out = DVector::zeros(c);
    let mut total = 0.0;
    let mut lost = 0.0;
    for n in 0..c {
        let gain: f64 = (n + 1..=n + m).map(|j| (j as f64).sqrt()).product();
        let a = v[n] * gain;
        total += a.norm_sqr();
        if n + m < c {
            out[n + m] = a;
        } else {
            lost += a.norm_sqr();
        }
    }
    if total > 0.0 && lost / total > LEAKAGE_TOL {
        return Err(QcoolError::Truncation {
            leakage: lost / total,
            tol: LEAKAGE_TOL,
        });
    }
    Ok(out)
}

/// Odd cat by photon addition on an even cat. The addition acts on a single
/// branch, so it carries unit relative gain and the even success probability
/// is passed through. `target_fidelity` is the overlap with the normalised
/// `sum_k w^{-k} |alpha w^k>`, the codeword on Fock levels `1 mod N`
/// (for `N = 2`, `|alpha> - |-alpha>`).
pub fn make_odd_cat(even: &PrepResult, alpha: Complex64, n_components: usize) -> Result<PrepResult> {
    let space = even.state.space.clone();
    if space.len() != 1 || !space.subsystems()[0].is_oscillator() {
        return Err(QcoolError::Type("photon addition needs a single oscillator ket".into()));
    }
    let added = add_photons(&even.state.amplitudes, 1)?;
    let raw = Ket::new(space.clone(), added)?;
    if raw.norm() == 0.0 {
        return Err(QcoolError::Argument("photon addition on a zero-norm state".into()));
    }
    let state = raw.normalized()?;
    let cutoff = space.dim();
    let mut amps = DVector::zeros(cutoff);
    for k in 0..n_components {
        let w = root_of_unity(n_components, k);
        amps += coherent_ket(alpha * w, cutoff)?.amplitudes * w.conj();
    }
    let reference = Ket::new(space, amps)?.normalized()?;
    Ok(PrepResult {
        target_fidelity: state.fidelity(&reference),
        success_prob: even.success_prob,
        state,
    })
}

fn joint_ket(cutoff: usize, d: usize, branches: &[(usize, Complex64, DVector<Complex64>)]) -> Result<Ket> {
    let space = SpaceSpec::oscillator(cutoff)?.tensor(&SpaceSpec::qudit(d)?);
    let mut amps = DVector::zeros(cutoff * d);
    for (s, w, v) in branches {
        for n in 0..cutoff {
            amps[n * d + s] += *w * v[n];
        }
    }
    Ket::new(space, amps)
}

fn squeezed_photon_addition(r: f64, k: usize, cutoff: usize) -> Result<DVector<Complex64>> {
    let pad = cutoff + 4 * k + 40;
    let s = squeezing_op(Complex64::from(r), pad)?.matrix;
    let s_dag = squeezing_op(Complex64::from(-r), pad)?.matrix;
    let squeezed = s.column(0).into_owned();
    let raised = add_photons(&squeezed, k)?;
    let full = s_dag * raised;
    let total = full.norm_squared();
    let kept = full.rows(0, cutoff).into_owned();
    let leakage = 1.0 - kept.norm_squared() / total;
    if leakage > LEAKAGE_TOL {
        return Err(QcoolError::Truncation {
            leakage,
            tol: LEAKAGE_TOL,
        });
    }
    Ok(kept)
}

/// `sum_k |k><k| ⊗ G_k` applied to `(H_d |0>) ⊗ |0>`, with `G_k = (a^dagger)^k`
/// for `r = 0` and `S^dagger(r) (a^dagger)^k S(r)` otherwise.
///
/// The reference for `r = 0` is the normalised `sum_k sqrt(k!) |k, k>`; for
/// `r > 0` it is `sum_k cosh^k r |k, k>`.
pub fn make_hybrid_entangled(d: usize, r: f64, cutoff: usize) -> Result<HybridEntangled> {
    if d < 2 {
        return Err(QcoolError::Argument("hybrid entanglement needs d >= 2".into()));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(QcoolError::Argument(format!("squeezing must be finite and >= 0, got {r}")));
    }
    if cutoff < d {
        return Err(QcoolError::Argument(format!("cutoff {cutoff} cannot hold {} photons", d - 1)));
    }
    let w = Complex64::from(1.0 / (d as f64).sqrt());
    let mut branches = Vec::with_capacity(d);
    let mut max_gain = 0.0f64;
    for k in 0..d {
        let v = if r == 0.0 {
            let mut vac = DVector::zeros(cutoff);
            vac[0] = Complex64::from(1.0);
            add_photons(&vac, k)?
        } else {
            squeezed_photon_addition(r, k, cutoff)?
        };
        max_gain = max_gain.max(v.norm_squared());
        branches.push((k, w, v));
    }
    let raw = joint_ket(cutoff, d, &branches)?;
    let success_prob = raw.norm().powi(2) / max_gain;
    let state = raw.normalized()?;

    let mut weights: Vec<f64> = Vec::with_capacity(d);
    let mut fact = 1.0f64;
    for k in 0..d {
        if k > 0 {
            fact *= k as f64;
        }
        weights.push(if r == 0.0 { fact.sqrt() } else { r.cosh().powi(k as i32) });
    }
    let diag_ket = |ws: &[f64]| -> Result<Ket> {
        let bs: Vec<_> = ws
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let mut v = DVector::zeros(cutoff);
                v[k] = Complex64::from(x);
                (k, Complex64::from(1.0), v)
            })
            .collect();
        joint_ket(cutoff, d, &bs)?.normalized()
    };
    let target_fidelity = state.fidelity(&diag_ket(&weights)?);
    let maximal_fidelity = state.fidelity(&diag_ket(&vec![1.0; d])?);
    Ok(HybridEntangled {
        prep: PrepResult {
            state,
            success_prob,
            target_fidelity,
        },
        maximal_fidelity,
    })
}

/// Two-level rotation on `span{|0>, |d-1>}` sending `|0> -> (|0> + |d-1>)/sqrt(2)`.
pub fn subspace_rotation(d: usize) -> Result<OperatorMatrix> {
    if d < 2 {
        return Err(QcoolError::Argument("subspace rotation needs d >= 2".into()));
    }
    let mut m = CMatrix::identity(d, d);
    let h = Complex64::from(FRAC_1_SQRT_2);
    m[(0, 0)] = h;
    m[(d - 1, 0)] = h;
    m[(0, d - 1)] = h;
    m[(d - 1, d - 1)] = -h;
    OperatorMatrix::new(SpaceSpec::qudit(d)?, m, OperatorTag::Unitary)
}

/// `(|N_s, 0_V> + |0_s, N_V>)/sqrt(2)` with `N = d - 1`, from the subspace
/// rotation followed by `|0><0| ⊗ (a^dagger)^N + |N><N| ⊗ I`.
pub fn make_noon(d: usize, cutoff: usize) -> Result<Noon> {
    let rot = subspace_rotation(d)?;
    let n = d - 1;
    if cutoff < d {
        return Err(QcoolError::Argument(format!("cutoff {cutoff} cannot hold {n} photons")));
    }
    let mut vac = DVector::zeros(cutoff);
    vac[0] = Complex64::from(1.0);
    let added = add_photons(&vac, n)?;
    let gain = added.norm_squared();
    let (w0, wn) = (rot.matrix[(0, 0)], rot.matrix[(n, 0)]);

    let raw = joint_ket(cutoff, d, &[(0, w0, added.clone()), (n, wn, vac.clone())])?;
    let success_prob = raw.norm().powi(2) / gain.max(1.0);
    let raw = raw.normalized()?;

    let balanced = joint_ket(
        cutoff,
        d,
        &[(0, w0, added * Complex64::from(1.0 / gain.sqrt())), (n, wn, vac.clone())],
    )?
    .normalized()?;
    let mut fock_n = DVector::zeros(cutoff);
    fock_n[n] = Complex64::from(1.0);
    let target = joint_ket(
        cutoff,
        d,
        &[(0, Complex64::from(1.0), fock_n), (n, Complex64::from(1.0), vac)],
    )?
    .normalized()?;
    Ok(Noon {
        unbalanced_fidelity: raw.fidelity(&target),
        prep: PrepResult {
            target_fidelity: balanced.fidelity(&target),
            success_prob,
            state: balanced,
        },
    })
}
