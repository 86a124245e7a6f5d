//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 30;

/// Eigen-decomposition `A = V diag(values) V*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= self.values[j];
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Applies a real function to the spectrum and rebuilds the matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        HermitianEigen {
            values: self.values.iter().map(|&v| f(v)).collect(),
            vectors: self.vectors.clone(),
        }
        .reconstruct()
    }
}

/// Cyclic complex Jacobi rotations.
///
/// Sweeps visit pivots `(p, q)` with `p < q` in row order. Iteration stops once
/// the off-diagonal Frobenius norm falls below `1e-12 * max(1, ||A||_F)` or
/// after 30 sweeps.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Validation(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    check_hermitian(a, 1e-9)?;

    // row-major working copy
    let mut m: Vec<Complex64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    for i in 0..n {
        m[i * n + i] = Complex64::new(m[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
            m[i * n + j] = avg;
            m[j * n + i] = avg.conj();
        }
    }
    let mut v: Vec<Complex64> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();

    let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = JACOBI_TOLERANCE * frob.max(1.0);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let b = apq.norm();
                if b == 0.0 || b < 1e-300 {
                    continue;
                }
                let phase = apq / b;
                let alpha = m[p * n + p].re;
                let beta = m[q * n + q].re;
                let theta = (beta - alpha) / (2.0 * b);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = phase.conj();
                let w00 = Complex64::new(c, 0.0);
                let w01 = Complex64::new(s, 0.0);
                let w10 = e * (-s);
                let w11 = e * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * w00 + akq * w10;
                    m[k * n + q] = akp * w01 + akq * w11;
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * w00 + vkq * w10;
                    v[k * n + q] = vkp * w01 + vkq * w11;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = w00.conj() * apk + w10.conj() * aqk;
                    m[q * n + k] = w01.conj() * apk + w11.conj() * aqk;
                }
                m[p * n + q] = Complex64::new(0.0, 0.0);
                m[q * n + p] = Complex64::new(0.0, 0.0);
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[i * n + order[j]]);
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|e| e.values)
}

pub fn check_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > tol {
                return Err(Error::Validation(format!(
                    "matrix is not Hermitian: |a[{i},{j}] - conj(a[{j},{i}])| = {d:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Largest entry of `|U U* - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = u * u.adjoint();
    let n = u.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Checks `lo - tol <= spec(A) <= hi + tol` for Hermitian `A`.
pub fn check_spectrum_within(a: &CMatrix, lo: f64, hi: f64, tol: f64, what: &str) -> Result<()> {
    let eig = hermitian_eigenvalues(a)?;
    if let (Some(&min), Some(&max)) = (eig.first(), eig.last()) {
        if min < lo - tol || max > hi + tol {
            return Err(Error::Validation(format!(
                "{what}: spectrum [{min:e}, {max:e}] leaves [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Squared Frobenius norm, i.e. `Tr(A A*)`.
pub fn frobenius_sqr(a: &CMatrix) -> f64 {
    crate::summation::compensated_sum(a.iter().map(|z| z.norm_sqr()))
}

/// Orthonormalizes the columns of a seeded complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix the column phases so the distribution does not depend on the QR sign choice
    let mut out = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            out[(i, j)] *= ph;
        }
    }
    out
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}
