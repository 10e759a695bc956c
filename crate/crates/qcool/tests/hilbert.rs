mod common;

use common::c;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use qcool::hamiltonians::{
    free_hamiltonian, hamiltonian, hamiltonian_hybrid, interaction_linear, interaction_star, CouplingParams,
};
use qcool::hilbert::{
    annihilation, block_decompose, creation, excitation_number, partial_trace, qudit_transition, OperatorTag,
};
use qcool::linalg::{exp_hermitian, hermiticity_error, max_abs_diff, CMatrix};
use qcool::protocol::evolve_blocked;
use qcool::states::{depolarized_qudit, thermal_state};
use qcool::{DensityMatrix, Ket, OperatorMatrix, QcoolError, SpaceSpec, Subsystem, Topology, TopologyKind};

fn osc_qudit(cutoff: usize, d: usize) -> SpaceSpec {
    SpaceSpec::new(vec![Subsystem::Oscillator { cutoff }, Subsystem::Qudit { levels: d }]).unwrap()
}

fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b - b * a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn annihilation_matrix_elements() {
    let a = annihilation(&SpaceSpec::oscillator(2).unwrap(), 0).unwrap();
    assert_eq!(a.matrix[(0, 1)], c(1.0));
    assert_eq!(a.matrix[(1, 0)], c(0.0));
    assert_eq!(a.matrix[(0, 0)], c(0.0));

    let a = annihilation(&SpaceSpec::oscillator(5).unwrap(), 0).unwrap();
    assert!((a.matrix[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn commutator_is_identity_below_the_cutoff() {
    let space = SpaceSpec::oscillator(6).unwrap();
    let a = annihilation(&space, 0).unwrap().matrix;
    let ad = creation(&space, 0).unwrap().matrix;
    let comm = &a * &ad - &ad * &a;
    for i in 0..5 {
        assert!((comm[(i, i)] - c(1.0)).norm() < 1e-12);
    }
    assert!((comm[(5, 5)] - c(-5.0)).norm() < 1e-12);
}

#[test]
fn ladder_on_qudit_is_a_type_error() {
    let space = osc_qudit(3, 2);
    assert!(matches!(annihilation(&space, 1), Err(QcoolError::Type(_))));
    assert!(matches!(annihilation(&space, 2), Err(QcoolError::Index(_))));
    assert!(matches!(qudit_transition(&space, 0, 0, 1), Err(QcoolError::Type(_))));
    assert!(matches!(qudit_transition(&space, 1, 0, 2), Err(QcoolError::Index(_))));
}

#[test]
fn qudit_transitions() {
    let q = SpaceSpec::qudit(2).unwrap();
    let up = qudit_transition(&q, 0, 0, 1).unwrap().matrix;
    assert_eq!(up[(1, 0)], c(1.0));
    assert_eq!(up.iter().filter(|z| z.norm() > 0.0).count(), 1);

    let q = SpaceSpec::qudit(4).unwrap();
    for k in 0..3 {
        let up = qudit_transition(&q, 0, k, k + 1).unwrap().matrix;
        let down = qudit_transition(&q, 0, k + 1, k).unwrap().matrix;
        assert_eq!(up.adjoint(), down);
    }
    let sum = (0..4)
        .map(|k| qudit_transition(&q, 0, k, k).unwrap().matrix)
        .fold(CMatrix::zeros(4, 4), |acc, m| acc + m);
    assert_eq!(sum, CMatrix::identity(4, 4));
}

#[test]
fn excitation_number_diagonal() {
    let n = excitation_number(&osc_qudit(3, 2));
    let diag: Vec<f64> = n.matrix.diagonal().iter().map(|z| z.re).collect();
    assert_eq!(diag, vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0]);

    let rho = thermal_state(0.3, 60).unwrap().tensor(&Ket::basis(SpaceSpec::qudit(2).unwrap(), &[0]).unwrap().to_density());
    let mean = rho.expect(&excitation_number(&rho.space).matrix).re;
    assert!((mean - 0.3).abs() < 1e-9);
}

#[test]
fn blocks_of_single_oscillator_with_qubit() {
    let topo = Topology::new(TopologyKind::SingleOscillator, 2);
    let h = hamiltonian(&topo, &CouplingParams::default(), 4).unwrap();
    let blocked = block_decompose(&h, h.space.max_excitation()).unwrap();
    let e1 = &blocked.blocks[&1];
    let labels: Vec<Vec<usize>> = e1.indices.iter().map(|&i| h.space.levels(i).unwrap()).collect();
    assert_eq!(labels, vec![vec![0, 1], vec![1, 0]]);
    assert!(max_abs_diff(&blocked.to_dense(), &h.matrix) < 1e-12);

    let free = free_hamiltonian(&h.space, &[1.0, 1.0]).unwrap();
    for b in block_decompose(&free, 3).unwrap().blocks.values() {
        let off: f64 = b.matrix.iter().enumerate().filter(|(i, _)| i % (b.matrix.nrows() + 1) != 0).map(|(_, z)| z.norm()).sum();
        assert_eq!(off, 0.0);
    }
}

#[test]
fn block_decompose_rejects_nonconserving_operators() {
    let space = osc_qudit(3, 2);
    let x = annihilation(&space, 0).unwrap().plus_adjoint();
    match block_decompose(&x, 3) {
        Err(QcoolError::ConservationViolation { max_off }) => assert!(max_off > 0.5),
        other => panic!("expected a conservation violation, got {other:?}"),
    }
}

#[test]
fn partial_trace_examples() {
    let a = thermal_state(0.4, 5).unwrap();
    let b = depolarized_qudit(3).unwrap();
    let back = partial_trace(&a.tensor(&b), &[0]).unwrap();
    assert!(max_abs_diff(&back.matrix, &a.matrix) < 1e-14);
    assert!((back.trace() - 1.0).abs() < 1e-12);

    let q2 = SpaceSpec::qudit(2).unwrap().tensor(&SpaceSpec::qudit(2).unwrap());
    let bell = Ket::new(q2, DVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(1.0)])).unwrap().normalized().unwrap();
    let red = partial_trace(&bell.to_density(), &[0]).unwrap();
    assert!(max_abs_diff(&red.matrix, &(CMatrix::identity(2, 2) * c(0.5))) < 1e-14);

    assert!(matches!(partial_trace(&bell.to_density(), &[]), Err(QcoolError::Argument(_))));
}

#[test]
fn free_hamiltonian_examples() {
    let space = osc_qudit(3, 2);
    let h0 = free_hamiltonian(&space, &[1.0, 1.0]).unwrap();
    assert!(max_abs_diff(&h0.matrix, &excitation_number(&space).matrix) < 1e-14);

    // qubit first, oscillator second: levels ordered (q, n)
    let space = SpaceSpec::new(vec![Subsystem::Qudit { levels: 2 }, Subsystem::Oscillator { cutoff: 2 }]).unwrap();
    let h0 = free_hamiltonian(&space, &[1.0, 2.0]).unwrap();
    let diag: Vec<f64> = h0.matrix.diagonal().iter().map(|z| z.re).collect();
    for (a, b) in diag.iter().zip([0.0, 2.0, 1.0, 3.0]) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn interaction_matrix_elements() {
    let p = CouplingParams {
        lambda: 0.7,
        ..CouplingParams::default()
    };
    let space = osc_qudit(3, 2);
    let hi = interaction_linear(&space, &p).unwrap();
    let i10 = space.flat_index(&[1, 0]).unwrap();
    let i01 = space.flat_index(&[0, 1]).unwrap();
    assert!((hi.matrix[(i10, i01)] - c(0.7)).norm() < 1e-15);
    assert!(hermiticity_error(&hi.matrix) < 1e-12);

    let star = interaction_star(&space, &p).unwrap();
    assert_eq!(star.matrix, hi.matrix);
}

#[test]
fn star_is_symmetric_under_mode_swap() {
    let topo = Topology::new(TopologyKind::Star(2), 3);
    let h = hamiltonian(&topo, &CouplingParams::default(), 3).unwrap();
    let space = &h.space;
    let n = space.dim();
    let perm: Vec<usize> = (0..n)
        .map(|i| {
            let l = space.levels(i).unwrap();
            space.flat_index(&[l[1], l[0], l[2]]).unwrap()
        })
        .collect();
    let swapped = CMatrix::from_fn(n, n, |i, j| h.matrix[(perm[i], perm[j])]);
    assert!(max_abs_diff(&swapped, &h.matrix) < 1e-15);
}

#[test]
fn hybrid_blocks_and_coupling() {
    let topo = Topology::new(TopologyKind::Hybrid(2), 3);
    let h = hamiltonian(&topo, &CouplingParams::default(), 4).unwrap();
    let blocked = block_decompose(&h, 2).unwrap();
    let e1: Vec<Vec<usize>> = blocked.blocks[&1].indices.iter().map(|&i| h.space.levels(i).unwrap()).collect();
    assert_eq!(e1, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
    let a = h.space.flat_index(&[0, 1, 0]).unwrap();
    let b = h.space.flat_index(&[1, 0, 0]).unwrap();
    assert!((h.matrix[(a, b)] - c(1.0)).norm() < 1e-15);
    // the two qudits never exchange directly
    let r = h.space.flat_index(&[0, 0, 1]).unwrap();
    assert_eq!(h.matrix[(a, r)], c(0.0));

    let direct = hamiltonian_hybrid(&h.space, &CouplingParams::default()).unwrap();
    assert!(max_abs_diff(&direct.matrix, &h.matrix) < 1e-15);
}

fn topologies() -> impl Strategy<Value = (Topology, usize)> {
    prop_oneof![
        (2usize..5, 3usize..8).prop_map(|(d, c)| (Topology::new(TopologyKind::SingleOscillator, d), c)),
        (1usize..3, 2usize..4, 2usize..4).prop_map(|(m, d, c)| (Topology::new(TopologyKind::Linear(m), d), c)),
        (1usize..3, 2usize..4, 2usize..4).prop_map(|(m, d, c)| (Topology::new(TopologyKind::Star(m), d), c)),
        (2usize..4, 2usize..4, 2usize..4).prop_map(|(ds, d, c)| (Topology::new(TopologyKind::Hybrid(ds), d), c)),
    ]
}

fn couplings() -> impl Strategy<Value = CouplingParams> {
    (0.2f64..2.0, 0.2f64..2.0, 0.5f64..1.5, prop::collection::vec(0.5f64..1.5, 3)).prop_map(|(l, lt, wa, wf)| {
        CouplingParams {
            lambda: l,
            lambda_tilde: lt,
            omega_a: wa,
            omega_s: 1.0,
            omega_f: wf,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonians_are_hermitian_and_conserving((topo, cutoff) in topologies(), p in couplings()) {
        let h = hamiltonian(&topo, &p, cutoff).unwrap();
        prop_assert!(hermiticity_error(&h.matrix) <= 1e-12);
        let n = excitation_number(&h.space);
        prop_assert!(commutator_norm(&h.matrix, &n.matrix) <= 1e-10);
    }

    #[test]
    fn blocked_and_dense_evolution_agree((topo, cutoff) in topologies(), p in couplings(), t in 0.0f64..6.0) {
        let h = hamiltonian(&topo, &p, cutoff).unwrap();
        prop_assume!(h.space.dim() <= 64);
        let dense = exp_hermitian(&h.matrix, t);
        let blocked = evolve_blocked(&block_decompose(&h, h.space.max_excitation()).unwrap(), t).unwrap();
        prop_assert!(max_abs_diff(&blocked.to_dense(), &dense) <= 1e-9);
    }

    #[test]
    fn random_conserving_operator_blocks(seed in prop::collection::vec(-1.0f64..1.0, 64 * 64), cutoff in 2usize..6, d in 2usize..4) {
        // random Hermitian H restricted to equal-excitation pairs
        let space = osc_qudit(cutoff, d);
        let n = space.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                if space.excitation(i).unwrap() == space.excitation(j).unwrap() {
                    let re = seed[i * 64 + j];
                    let im = if i == j { 0.0 } else { seed[j * 64 + i] };
                    m[(i, j)] = Complex64::new(re, im);
                    m[(j, i)] = Complex64::new(re, -im);
                }
            }
        }
        let h = OperatorMatrix::new(space.clone(), m, OperatorTag::Hermitian).unwrap();
        let blocked = block_decompose(&h, space.max_excitation()).unwrap();
        prop_assert!(max_abs_diff(&blocked.to_dense(), &h.matrix) <= 1e-12);
        let dense = exp_hermitian(&h.matrix, 1.3);
        prop_assert!(max_abs_diff(&evolve_blocked(&blocked, 1.3).unwrap().to_dense(), &dense) <= 1e-9);
    }

    #[test]
    fn index_bijection(dims in prop::collection::vec(2usize..5, 1..4), pick in 0usize..1000) {
        let subs: Vec<Subsystem> = dims.iter().enumerate().map(|(i, &d)| {
            if i % 2 == 0 { Subsystem::Oscillator { cutoff: d } } else { Subsystem::Qudit { levels: d } }
        }).collect();
        let space = SpaceSpec::new(subs).unwrap();
        let i = pick % space.dim();
        let levels = space.levels(i).unwrap();
        prop_assert_eq!(space.flat_index(&levels).unwrap(), i);
        prop_assert_eq!(space.dim(), dims.iter().product::<usize>());
    }

    #[test]
    fn partial_trace_preserves_trace(n1 in 0.0f64..1.0, ds in 2usize..5) {
        let rho = thermal_state(n1, 6).unwrap().tensor(&depolarized_qudit(ds).unwrap());
        for keep in [[0usize], [1]] {
            let red = partial_trace(&rho, &keep).unwrap();
            prop_assert!((red.trace() - rho.trace()).abs() < 1e-12);
        }
    }
}

#[test]
fn density_matrix_checks() {
    let space = SpaceSpec::qudit(2).unwrap();
    let bad = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.3), c(0.0), c(0.0)]);
    assert!(DensityMatrix::new(space, bad).is_err());
}
