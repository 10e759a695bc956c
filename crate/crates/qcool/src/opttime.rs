//! Optimal cycle times for a single oscillator coupled to a qudit.
//!
//! For a regulator prepared and measured in `|k>` the system vacuum picks up
//! the amplitude `lambda_0^k(t) = <0, k| exp(-iHt) |0, k>`. Only the `E = k`
//! sector contributes, so `lambda_0^k` does not depend on `d` once `d > k`.
//! At resonance that sector is the Jacobi matrix of the probabilists' Hermite
//! polynomial `He_{k+1}`, shifted by `k`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QcoolError, Result};
use crate::linalg::symmetric_eigen;
use crate::hamiltonians::{CouplingParams, ExcitationModel, Topology, TopologyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptTimeResult {
    pub t_opt: f64,
    /// `1 - |lambda_0^k(t_opt)|`.
    pub residual: f64,
    pub search_window: (f64, f64),
    pub method: Method,
}

/// Amplitude `<n, k| exp(-iHt) |n, k>` written as `sum_j w_j exp(-i f_j t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalAmplitude {
    pub weights: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl DiagonalAmplitude {
    /// Amplitude of system level `n` with the regulator in level `k` of `d`.
    pub fn single_oscillator(d: usize, k: usize, n: usize) -> Result<Self> {
        if k >= d {
            return Err(QcoolError::Index(format!("regulator level {k} outside 0..{d}")));
        }
        let topo = Topology::new(TopologyKind::SingleOscillator, d);
        let model = ExcitationModel::for_topology(&topo, &CouplingParams::default(), n + k + 1)?;
        let (states, h) = model.block(n + k);
        let pos = states
            .iter()
            .position(|s| s[0] == n && s[1] == k)
            .expect("state lies in its own sector");
        let eig = symmetric_eigen(h);
        let weights = eig.eigenvectors.row(pos).iter().map(|q| q * q).collect();
        Ok(Self {
            weights,
            frequencies: eig.eigenvalues.iter().copied().collect(),
        })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(w, f)| Complex64::from_polar(*w, -f * t))
            .sum()
    }

    pub fn modulus(&self, t: f64) -> f64 {
        self.eval(t).norm()
    }

    /// True when a single frequency carries all the weight, so `|lambda|` is constant.
    pub fn is_constant_modulus(&self) -> bool {
        let total: f64 = self.weights.iter().sum();
        let f0 = self.frequencies[0];
        let spread: f64 = self
            .weights
            .iter()
            .zip(&self.frequencies)
            .filter(|(_, f)| (*f - f0).abs() > 1e-9)
            .map(|(w, _)| *w)
            .sum();
        spread.min(total - spread) < 1e-12
    }
}

/// Closed-form optimal times for `k = 0, 1, 2`: `pi/2`, `pi`, `2 pi / sqrt(3)`.
pub fn analytic_topt(k: usize) -> Result<OptTimeResult> {
    let t = match k {
        0 => PI / 2.0,
        1 => PI,
        2 => 2.0 * PI / 3f64.sqrt(),
        _ => {
            return Err(QcoolError::Argument(format!(
                "no closed form for k = {k}; use the numerical search"
            )))
        }
    };
    let amp = DiagonalAmplitude::single_oscillator((k + 1).max(2), k, 0)?;
    Ok(OptTimeResult {
        t_opt: t,
        residual: 1.0 - amp.modulus(t),
        search_window: (t, t),
        method: Method::Analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub window: (f64, f64),
    pub grid_step: f64,
    /// Largest accepted `1 - |lambda_0^k|`.
    pub tol: f64,
    /// Among admissible optima, prefer one within 1% of this time.
    pub prefer_near: Option<f64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            window: (0.0, 250.0),
            grid_step: 1e-3,
            tol: 1e-4,
            prefer_near: None,
        }
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-11 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

fn scan_grid(opts: &SearchOptions) -> Result<Vec<f64>> {
    let (lo, hi) = opts.window;
    if !(hi > lo) || !(opts.grid_step > 0.0) {
        return Err(QcoolError::Argument("empty search window or non-positive grid step".into()));
    }
    let n = ((hi - lo) / opts.grid_step).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * opts.grid_step).collect())
}

/// Interior local maxima of `f` on the grid, refined by golden-section search.
/// Returns `(t, f(t))`, sorted by `t`.
pub fn local_maxima(f: &dyn Fn(f64) -> f64, opts: &SearchOptions) -> Result<Vec<(f64, f64)>> {
    let grid = scan_grid(opts)?;
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for i in 1..grid.len().saturating_sub(1) {
        if vals[i] >= vals[i - 1] && vals[i] > vals[i + 1] {
            let t = golden_max(f, grid[i - 1], grid[i + 1]);
            out.push((t, f(t)));
        }
    }
    Ok(out)
}

/// Admissible optima of `|lambda_0^k|` as `(t, residual)`, excluding the
/// trivial maximum at `t = 0`.
pub fn candidate_optima(d: usize, k: usize, opts: &SearchOptions) -> Result<Vec<(f64, f64)>> {
    let amp = DiagonalAmplitude::single_oscillator(d, k, 0)?;
    let f = |t: f64| amp.modulus(t);
    Ok(local_maxima(&f, opts)?
        .into_iter()
        .map(|(t, m)| (t, 1.0 - m))
        .collect())
}

/// Numerical optimal time: the smallest `t` in the window where
/// `1 - |lambda_0^k(t)| <= tol`.
///
/// When `|lambda_0^k|` is identically one (the `k = 0` case) every time is
/// admissible for the vacuum; the first zero of `|lambda_1^k|` is taken
/// instead, so that the first excited level is suppressed.
pub fn solve_topt(d: usize, k: usize, opts: &SearchOptions) -> Result<OptTimeResult> {
    if k >= d {
        return Err(QcoolError::Index(format!("regulator level {k} outside 0..{d}")));
    }
    let amp = DiagonalAmplitude::single_oscillator(d, k, 0)?;
    if amp.is_constant_modulus() {
        let first = DiagonalAmplitude::single_oscillator(d, k, 1)?;
        let neg = |t: f64| -first.modulus(t);
        let (t, _) = local_maxima(&neg, opts)?
            .into_iter()
            .next()
            .ok_or(QcoolError::SearchFailure {
                best_t: f64::NAN,
                best_residual: f64::NAN,
                tol: opts.tol,
            })?;
        return Ok(OptTimeResult {
            t_opt: t,
            residual: 1.0 - amp.modulus(t),
            search_window: opts.window,
            method: Method::Numeric,
        });
    }

    let cands = candidate_optima(d, k, opts)?;
    let admissible: Vec<(f64, f64)> = cands.iter().copied().filter(|(_, r)| *r <= opts.tol).collect();
    let chosen = opts
        .prefer_near
        .and_then(|p| {
            admissible
                .iter()
                .filter(|(t, _)| (t - p).abs() <= 0.01 * p.abs())
                .min_by(|a, b| (a.0 - p).abs().total_cmp(&(b.0 - p).abs()))
                .copied()
        })
        .or_else(|| admissible.first().copied());
    match chosen {
        Some((t, r)) => Ok(OptTimeResult {
            t_opt: t,
            residual: r,
            search_window: opts.window,
            method: Method::Numeric,
        }),
        None => {
            let best = cands
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .copied()
                .unwrap_or((f64::NAN, f64::NAN));
            Err(QcoolError::SearchFailure {
                best_t: best.0,
                best_residual: best.1,
                tol: opts.tol,
            })
        }
    }
}

/// Analytic value for `k <= 2`, numerical search beyond.
pub fn topt(d: usize, k: usize, opts: &SearchOptions) -> Result<OptTimeResult> {
    if k >= d {
        return Err(QcoolError::Index(format!("regulator level {k} outside 0..{d}")));
    }
    if k <= 2 {
        analytic_topt(k)
    } else {
        solve_topt(d, k, opts)
    }
}

/// Probabilists' Hermite polynomial `He_n(x)` by the three-term recurrence.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for m in 1..n {
        let p2 = x * p1 - m as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Roots of `He_n`, ascending, by sign-change bracketing and bisection.
pub fn hermite_roots(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    // All roots lie inside |x| < 2 sqrt(n).
    let bound = 2.0 * (n as f64).sqrt() + 1.0;
    let steps = 20_000;
    let h = 2.0 * bound / steps as f64;
    let mut roots = Vec::with_capacity(n);
    let mut a = -bound;
    let mut fa = hermite_he(n, a);
    for i in 1..=steps {
        let b = -bound + i as f64 * h;
        let fb = hermite_he(n, b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = hermite_he(n, mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    roots
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCheck {
    pub roots: Vec<f64>,
    /// Least-squares weight of each `cos(x_j t)` term.
    pub weights: Vec<f64>,
    /// Largest deviation of the fitted sum from the exact amplitude.
    pub residual: f64,
}

/// Fit `e^{i(d-1)t} lambda_0^{d-1}(t)` with `sum_j w_j cos(x_j t)` over the
/// roots `x_j` of `He_d` and report the worst deviation on the time grid.
pub fn hermite_structure_check(d: usize) -> Result<HermiteCheck> {
    if !(2..=8).contains(&d) {
        return Err(QcoolError::Argument(format!("Hermite check supports 2 <= d <= 8, got {d}")));
    }
    let k = d - 1;
    let amp = DiagonalAmplitude::single_oscillator(d, k, 0)?;
    let roots = hermite_roots(d);
    let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
    let target: Vec<Complex64> = times
        .iter()
        .map(|&t| amp.eval(t) * Complex64::from_polar(1.0, k as f64 * t))
        .collect();
    // cos is even, so roots +x and -x share one column of the design
    let mut freqs: Vec<f64> = Vec::new();
    for x in roots.iter().map(|x| x.abs()) {
        if !freqs.iter().any(|f| (f - x).abs() < 1e-9) {
            freqs.push(x);
        }
    }
    let design = DMatrix::from_fn(times.len(), freqs.len(), |i, j| (freqs[j] * times[i]).cos());
    let rhs = DVector::from_iterator(times.len(), target.iter().map(|z| z.re));
    let svd = design.clone().svd(true, true);
    let w = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| QcoolError::Numeric(format!("least-squares fit failed: {e}")))?;
    let fitted = &design * &w;
    let residual = target
        .iter()
        .zip(fitted.iter())
        .map(|(z, f)| (z - Complex64::from(*f)).norm())
        .fold(0.0, f64::max);
    let weights = roots
        .iter()
        .map(|x| {
            let j = freqs.iter().position(|f| (f - x.abs()).abs() < 1e-9).expect("frequency listed");
            if freqs[j] < 1e-9 {
                w[j]
            } else {
                w[j] / 2.0
            }
        })
        .collect();
    let check = HermiteCheck {
        roots,
        weights,
        residual,
    };
    if residual > 1e-6 {
        return Err(QcoolError::CheckFailed { residual });
    }
    Ok(check)
}
