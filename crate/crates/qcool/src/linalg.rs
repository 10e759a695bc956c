//! Small dense helpers built on nalgebra's Hermitian eigensolver.

use nalgebra::{DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest elementwise modulus of `h - h^dagger`.
pub fn hermiticity_error(h: &CMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// Largest elementwise deviation of `u u^dagger` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
}

/// `exp(-i h t)` for Hermitian `h` via its eigendecomposition.
///
/// Runs on the real symmetric embedding `[[A, -B], [B, A]]` of `h = A + iB`
/// (or on `A` alone when `B = 0`); the real solver keeps full accuracy on
/// highly degenerate spectra where the complex one loses digits.
pub fn exp_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let a = h.map(|z| z.re);
    let b = h.map(|z| z.im);
    if b.iter().all(|&x| x == 0.0) {
        let eig = symmetric_eigen(a);
        let cos = spectral(&eig, |w| (w * t).cos());
        let sin = spectral(&eig, |w| (w * t).sin());
        return SplitMatrix { re: cos, im: -sin }.to_complex();
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a);
    m.view_mut((n, n), (n, n)).copy_from(&a);
    m.view_mut((n, 0), (n, n)).copy_from(&b);
    m.view_mut((0, n), (n, n)).copy_from(&(-&b));
    // symmetrise rounding in the input
    let m = (&m + m.transpose()) * 0.5;
    let eig = symmetric_eigen(m);
    let cos = spectral(&eig, |w| (w * t).cos());
    let sin = spectral(&eig, |w| (w * t).sin());
    // f(M) = [[Re f(h), -Im f(h)], [Im f(h), Re f(h)]] for real f
    let re = cos.view((0, 0), (n, n)) + sin.view((n, 0), (n, n));
    let im = cos.view((n, 0), (n, n)) - sin.view((0, 0), (n, n));
    SplitMatrix { re, im }.to_complex()
}

/// Real symmetric eigendecomposition accurate to rounding.
///
/// nalgebra's QR iteration can stop with eigenvector residuals near 1e-8 on
/// clustered spectra; the result is polished with Jacobi rotations on the
/// few off-diagonal entries of `Q^T A Q` that remain above rounding level.
pub fn symmetric_eigen(a: DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    let n = a.nrows();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut eig = SymmetricEigen::new(a.clone());
    if n < 2 {
        return eig;
    }
    let mut q = eig.eigenvectors;
    let mut b = q.transpose() * &a * &q;
    let tol = 4.0 * f64::EPSILON * scale;
    for _ in 0..20 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let bij = b[(i, j)];
                if bij.abs() <= tol {
                    continue;
                }
                rotated = true;
                let tau = (b[(j, j)] - b[(i, i)]) / (2.0 * bij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate_cols(&mut b, i, j, c, s);
                rotate_rows(&mut b, i, j, c, s);
                rotate_cols(&mut q, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    eig.eigenvalues = b.diagonal();
    eig.eigenvectors = q;
    eig
}

fn rotate_cols(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

fn rotate_rows(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for col in 0..m.ncols() {
        let (x, y) = (m[(i, col)], m[(j, col)]);
        m[(i, col)] = c * x - s * y;
        m[(j, col)] = s * x + c * y;
    }
}

/// `Q f(w) Q^T` for a real symmetric eigendecomposition.
fn spectral(eig: &SymmetricEigen<f64, Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(eig.eigenvalues[j]);
    }
    scaled * q.transpose()
}

/// `exp(a)` for anti-Hermitian `a`, written as `exp(-i g)` with `g = i a`.
pub fn exp_antihermitian(a: &CMatrix) -> CMatrix {
    let g = a * Complex64::i();
    // Symmetrise away rounding so the eigensolver sees an exactly Hermitian input.
    let g = (&g + g.adjoint()) * Complex64::from(0.5);
    exp_hermitian(&g, 1.0)
}

/// Promote a real matrix to complex.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(Complex64::from)
}

/// Complex matrix stored as separate real and imaginary parts so products
/// run through the real matrix kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn from_complex(m: &CMatrix) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    pub fn to_complex(&self) -> CMatrix {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    /// `self * other`.
    pub fn mul(&self, other: &SplitMatrix) -> SplitMatrix {
        SplitMatrix {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    /// `self * other^dagger`.
    pub fn mul_adjoint(&self, other: &SplitMatrix) -> SplitMatrix {
        SplitMatrix {
            re: &self.re * other.re.transpose() + &self.im * other.im.transpose(),
            im: &self.im * other.re.transpose() - &self.re * other.im.transpose(),
        }
    }

    /// `v rho v^dagger`.
    pub fn sandwich(v: &SplitMatrix, rho: &SplitMatrix) -> SplitMatrix {
        v.mul(rho).mul_adjoint(v)
    }
}
