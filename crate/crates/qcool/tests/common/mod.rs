//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use qcool::gaussian::GaussianState;
use qcool::hamiltonians::{CouplingParams, ExcitationModel};
use qcool::hilbert::DensityMatrix;
use qcool::states::{displaced_squeezed_thermal, DSTParams};
use qcool::{Topology, TopologyKind};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Per-mode state used for networks and the hybrid system.
pub fn network_mode_state() -> DSTParams {
    DSTParams::new(0.5, 0.2, 0.5).with_theta(PI)
}

/// Single-oscillator state of the dimension table.
pub fn table_state() -> DSTParams {
    DSTParams::new(0.4, 0.1, 0.4)
}

/// Moments of `rho_V ⊗ |0><0|_R` after the beam splitter
/// `a^dag a + b^dag b + a^dag b + b^dag a` acts for time `t`, computed in
/// the Fock basis sector by sector.
///
/// The input only populates `|n, 0>` in sector `n`, so the evolved state is
/// `sum rho_V[e, e'] u_e u_e'^dagger` with `u_e = U_e |e, 0>`.
pub fn fock_beam_splitter_moments(p: &DSTParams, cutoff: usize, t: f64) -> GaussianState {
    let rho = displaced_squeezed_thermal(p, cutoff).expect("state fits");
    let topo = Topology::new(TopologyKind::SingleOscillator, 2).with_oscillator_regulator(cutoff);
    let model = ExcitationModel::for_topology(&topo, &CouplingParams::default(), cutoff).expect("model");

    // sector e: basis states (n_V, n_R) and u_e
    let mut sectors: Vec<(Vec<Vec<usize>>, DVector<Complex64>)> = Vec::with_capacity(cutoff);
    for e in 0..cutoff {
        let (states, h) = model.block(e);
        let pos = states.iter().position(|s| s[0] == e && s[1] == 0).expect("input state");
        let eig = SymmetricEigen::new(h);
        let q = &eig.eigenvectors;
        let u = DVector::from_fn(states.len(), |i, _| {
            (0..states.len())
                .map(|j| c(q[(i, j)] * q[(pos, j)]) * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t))
                .sum::<Complex64>()
        });
        sectors.push((states, u));
    }

    // <O> = sum_{e,e'} rho[e, e'] u_e'^dag O u_e, with O mapping sector e to e - shift
    let expect = |lower: &[usize], raise: &[usize]| -> Complex64 {
        let shift = lower.len() as isize - raise.len() as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for e in 0..cutoff {
            let ep = e as isize - shift;
            if ep < 0 || ep >= cutoff as isize {
                continue;
            }
            let ep = ep as usize;
            let w = rho.matrix[(e, ep)];
            if w.norm() == 0.0 {
                continue;
            }
            let (src, ue) = &sectors[e];
            let (dst, uep) = &sectors[ep];
            for (i, s) in src.iter().enumerate() {
                // apply lowering ops then raising ops (operators act right to left:
                // raise... lower... |s>), i.e. normal order a^dag.. a..
                let mut lv = s.clone();
                let mut amp = 1.0;
                for &m in lower {
                    if lv[m] == 0 {
                        amp = 0.0;
                        break;
                    }
                    amp *= (lv[m] as f64).sqrt();
                    lv[m] -= 1;
                }
                if amp == 0.0 {
                    continue;
                }
                for &m in raise {
                    lv[m] += 1;
                    amp *= (lv[m] as f64).sqrt();
                }
                if let Some(j) = dst.iter().position(|x| *x == lv) {
                    acc += w * uep[j].conj() * ue[i] * amp;
                }
            }
        }
        acc
    };

    let mu = [expect(&[0], &[]), expect(&[1], &[])];
    let mut mm = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut nn = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            mm[i][j] = expect(&[i, j], &[]);
            nn[i][j] = expect(&[j], &[i]); // <a_i^dag a_j>
        }
    }
    // second moments <xi_a xi_b> with xi = (a_0, a_1, a_0^dag, a_1^dag)
    let second = |a: usize, b: usize| -> Complex64 {
        let (ia, da) = (a % 2, a >= 2);
        let (ib, db) = (b % 2, b >= 2);
        match (da, db) {
            (false, false) => mm[ia][ib],
            (true, true) => mm[ib][ia].conj(),
            (true, false) => nn[ia][ib],
            (false, true) => nn[ib][ia] + if ia == ib { c(1.0) } else { c(0.0) },
        }
    };
    let first = |a: usize| -> Complex64 {
        if a >= 2 {
            mu[a % 2].conj()
        } else {
            mu[a]
        }
    };
    // quadratures (x_0, p_0, x_1, p_1) as rows over xi
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::i();
    let mut tr = vec![vec![c(0.0); 4]; 4];
    for m in 0..2 {
        tr[2 * m][m] = c(s2);
        tr[2 * m][m + 2] = c(s2);
        tr[2 * m + 1][m] = -i * s2;
        tr[2 * m + 1][m + 2] = i * s2;
    }
    let disp = DVector::from_fn(4, |a, _| (0..4).map(|x| tr[a][x] * first(x)).sum::<Complex64>().re);
    let cov = DMatrix::from_fn(4, 4, |a, b| {
        let mut acc = c(0.0);
        for x in 0..4 {
            for y in 0..4 {
                acc += tr[a][x] * tr[b][y] * second(x, y);
            }
        }
        acc.re - disp[a] * disp[b]
    });
    GaussianState { disp, cov }
}

/// Vacuum population of a Fock-space state.
pub fn rho00(rho: &DensityMatrix) -> f64 {
    rho.matrix[(0, 0)].re
}
