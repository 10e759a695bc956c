mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use qcool::gaussian::{
    condition_on_vacuum, evolve_gaussian, fock_moments, gaussian_dst, oneshot_at, oneshot_coefficients,
    oneshot_probability_formula, passive_coefficients, symplectic_error, symplectic_from_h, theorem3_oneshot,
    GaussianState, SymplecticMatrix,
};
use qcool::linalg::CMatrix;
use qcool::states::{displaced_squeezed_thermal, mean_energy};
use qcool::{DSTParams, QcoolError};

/// Quadrature map of `a -> u a` in the `(x, p)` ordering.
fn quadrature_of(u: Complex64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[u.re, -u.im, u.im, u.re])
}

fn amax(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

#[test]
fn dst_moments() {
    let vac = gaussian_dst(&DSTParams::vacuum()).unwrap();
    assert_eq!(vac, GaussianState::vacuum(1));

    let g = gaussian_dst(&DSTParams::new(0.0, 0.2, 0.0)).unwrap();
    assert!((g.cov[(0, 0)] - 0.4f64.exp() / 2.0).abs() < 1e-15);
    assert!((g.cov[(1, 1)] - (-0.4f64).exp() / 2.0).abs() < 1e-15);

    assert!(matches!(
        gaussian_dst(&DSTParams::new(0.1, 0.1, 0.1).with_theta(PI)),
        Err(QcoolError::Argument(_))
    ));
}

#[test]
fn moments_agree_with_fock_states() {
    for p in [
        DSTParams::new(0.4, 0.1, 0.4),
        DSTParams::new(0.5, 0.2, 0.5),
        DSTParams::new(0.7, 0.3, 0.2).with_alpha_phase(1.1),
    ] {
        let g = gaussian_dst(&p).unwrap();
        let rho = displaced_squeezed_thermal(&p, 60).unwrap();
        assert!(g.max_abs_diff(&fock_moments(&rho).unwrap()) < 1e-6);
        assert!((g.mean_photon_number() - mean_energy(&rho)).abs() < 1e-6);
        assert!((g.vacuum_fidelity().unwrap() - rho.matrix[(0, 0)].re).abs() < 1e-6);
    }
}

#[test]
fn symplectic_examples() {
    let s0 = symplectic_from_h(&oneshot_coefficients(), 0.0).unwrap();
    assert!(amax(&(s0.entries - DMatrix::identity(4, 4))) < 1e-14);

    let free = passive_coefficients(&DMatrix::from_element(1, 1, 1.0)).unwrap();
    for t in [0.3, 1.0, 2.5] {
        let s = symplectic_from_h(&free, t).unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(amax(&(s.entries - rot)) < 1e-12);
    }
}

#[test]
fn oneshot_blocks_match_mode_algebra() {
    // a_V(t) = e^{-it} (cos t a_V - i sin t a_R)
    for t in [0.2, 0.9, PI / 4.0, 2.0] {
        let s = symplectic_from_h(&oneshot_coefficients(), t).unwrap();
        let phase = Complex64::from_polar(1.0, -t);
        let a = quadrature_of(phase * t.cos());
        let b = quadrature_of(phase * Complex64::new(0.0, -t.sin()));
        assert!(amax(&(s.block(0, 0) - &a)) < 1e-12);
        assert!(amax(&(s.block(0, 1) - &b)) < 1e-12);
        let (sn, cs) = (t.sin(), t.cos());
        let b_closed = DMatrix::from_row_slice(2, 2, &[-sn * sn, sn * cs, -sn * cs, -sn * sn]);
        assert!(amax(&(s.block(0, 1) - b_closed)) < 1e-12);
    }
    let s = symplectic_from_h(&oneshot_coefficients(), PI / 2.0).unwrap();
    assert!(amax(&s.block(0, 0)) < 1e-12);
    assert!(amax(&(s.block(0, 1) + DMatrix::identity(2, 2))) < 1e-12);
}

#[test]
fn printed_symmetric_block_is_not_symplectic() {
    // the variant with +sin t cos t in both off-diagonal slots of B
    let t = 0.7f64;
    let (sn, cs) = (t.sin(), t.cos());
    let a = DMatrix::from_row_slice(2, 2, &[cs * cs, sn * cs, -sn * cs, cs * cs]);
    let b = DMatrix::from_row_slice(2, 2, &[-sn * sn, sn * cs, sn * cs, -sn * sn]);
    let mut m = DMatrix::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(&a);
    m.view_mut((0, 2), (2, 2)).copy_from(&b);
    m.view_mut((2, 0), (2, 2)).copy_from(&b);
    m.view_mut((2, 2), (2, 2)).copy_from(&a);
    assert!(symplectic_error(&m) > 1e-3);
    assert!(SymplecticMatrix::new(m).is_err());
}

#[test]
fn evolution_examples() {
    let g = gaussian_dst(&DSTParams::new(0.4, 0.1, 0.4)).unwrap().tensor(&GaussianState::vacuum(1));
    assert_eq!(evolve_gaussian(&g, &SymplecticMatrix::identity(2)).unwrap(), g);

    let s = symplectic_from_h(&oneshot_coefficients(), 1.234).unwrap();
    let out = evolve_gaussian(&g, &s).unwrap();
    assert!(((out.cov.determinant()) - g.cov.determinant()).abs() < 1e-12);

    let vv = GaussianState::vacuum(2);
    for t in [0.3, 1.0, PI / 2.0] {
        let s = symplectic_from_h(&oneshot_coefficients(), t).unwrap();
        assert!(evolve_gaussian(&vv, &s).unwrap().max_abs_diff(&vv) < 1e-12);
    }
    assert!(matches!(evolve_gaussian(&g, &SymplecticMatrix::identity(1)), Err(QcoolError::Dimension(_))));
}

#[test]
fn conditioning_examples() {
    let a = gaussian_dst(&DSTParams::new(0.4, 0.1, 0.4)).unwrap();
    let b = gaussian_dst(&DSTParams::new(0.2, 0.3, 0.1)).unwrap();
    let c = condition_on_vacuum(&a.tensor(&b), 1).unwrap();
    assert!(c.post.max_abs_diff(&a) < 1e-14);
    assert!((c.prob_weight - b.vacuum_fidelity().unwrap()).abs() < 1e-14);

    // the post covariance ignores the displacement of the measured mode
    let s = symplectic_from_h(&oneshot_coefficients(), 0.6).unwrap();
    let mut g = evolve_gaussian(&a.tensor(&b), &s).unwrap();
    let c1 = condition_on_vacuum(&g, 1).unwrap();
    g.disp[2] += 0.8;
    g.disp[3] -= 0.3;
    let c2 = condition_on_vacuum(&g, 1).unwrap();
    assert!(amax(&(c1.post.cov - c2.post.cov)) < 1e-14);

    assert!(matches!(condition_on_vacuum(&g, 2), Err(QcoolError::Index(_))));
}

#[test]
fn oneshot_examples() {
    let o = theorem3_oneshot(&DSTParams::vacuum()).unwrap();
    assert!((o.fidelity - 1.0).abs() < 1e-12);
    assert!((o.prob - 1.0).abs() < 1e-12);
    assert!((o.prob_formula - 1.0 / PI).abs() < 1e-12);

    for p in [DSTParams::new(0.4, 0.1, 0.4), DSTParams::new(0.5, 0.2, 0.5)] {
        let o = theorem3_oneshot(&p).unwrap();
        assert!((o.fidelity - 1.0).abs() < 1e-9);
        assert!(o.post.max_abs_diff(&GaussianState::vacuum(1)) < 1e-9);
        assert!((o.prob - PI * o.prob_formula).abs() < 1e-12);
    }
    // away from pi/2 the post state is not the vacuum
    let o = oneshot_at(&DSTParams::new(0.4, 0.1, 0.4), 1.0).unwrap();
    assert!(o.fidelity < 0.99);
}

#[test]
fn evolved_moments_match_fock_engine() {
    for p in [DSTParams::new(0.4, 0.1, 0.4), DSTParams::new(0.3, 0.25, 0.8).with_alpha_phase(-0.7)] {
        let g0 = gaussian_dst(&p).unwrap().tensor(&GaussianState::vacuum(1));
        for t in [0.3, PI / 4.0, PI / 2.0] {
            let g = evolve_gaussian(&g0, &symplectic_from_h(&oneshot_coefficients(), t).unwrap()).unwrap();
            let f = common::fock_beam_splitter_moments(&p, 60, t);
            assert!(g.max_abs_diff(&f) < 1e-6, "t = {t}: {}", g.max_abs_diff(&f));
        }
    }
}

#[test]
fn invalid_states_are_rejected() {
    let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1]));
    assert!(GaussianState::new(DVector::zeros(2), bad).is_err());
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    assert!(GaussianState::new(DVector::zeros(2), asym).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn passive_evolutions_are_symplectic(h in prop::collection::vec(-1.5f64..1.5, 9), t in -5.0f64..5.0) {
        let mut m = DMatrix::from_vec(3, 3, h);
        m = (&m + m.transpose()) * 0.5;
        let s = symplectic_from_h(&passive_coefficients(&m).unwrap(), t).unwrap();
        prop_assert!(symplectic_error(&s.entries) < 1e-9);
    }

    #[test]
    fn active_single_mode_evolution_is_symplectic(w in 1.0f64..2.0, g in -0.9f64..0.9, t in 0.0f64..4.0) {
        let coeffs = CMatrix::from_row_slice(2, 2, &[
            Complex64::from(w), Complex64::from(g),
            Complex64::from(g), Complex64::from(w),
        ]);
        let s = symplectic_from_h(&coeffs, t).unwrap();
        prop_assert!(symplectic_error(&s.entries) < 1e-9);
        prop_assert!((s.entries.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oneshot_always_reaches_vacuum(a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, r in 0.0f64..0.5, nbar in 0.0f64..1.0) {
        let alpha = Complex64::new(a1, a2);
        let p = DSTParams::new(alpha.norm(), r, nbar).with_alpha_phase(alpha.arg());
        let o = theorem3_oneshot(&p).unwrap();
        prop_assert!(o.post.max_abs_diff(&GaussianState::vacuum(1)) < 1e-9);
        prop_assert!((o.prob / PI - oneshot_probability_formula(&p)).abs() < 1e-9);
        prop_assert!(o.prob > 0.0 && o.prob <= 1.0);
    }
}
