//! Small dense helpers shared by the relaxation, solver and sampler code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Whether a matrix is real symmetric (stored with zero imaginary part) or
/// complex Hermitian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// Real embedding of a complex vector: `(Re z; Im z)`.
pub fn embed_vector(z: &[C64]) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

/// Inverse of [`embed_vector`].
pub fn unembed_vector(x: &[f64]) -> Result<Vec<C64>> {
    if !x.len().is_multiple_of(2) {
        return Err(Error::invalid(format!("embedded vector has odd length {}", x.len())));
    }
    let n = x.len() / 2;
    Ok((0..n).map(|i| C64::new(x[i], x[i + n])).collect())
}

pub fn hermitian_residual(z: &DMatrix<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..z.nrows() {
        for j in 0..z.ncols() {
            worst = worst.max((z[(i, j)] - z[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_hermitian(z: &DMatrix<C64>) -> Result<()> {
    if !z.is_square() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, expected square",
            z.nrows(),
            z.ncols()
        )));
    }
    let scale = z.iter().fold(1.0_f64, |m, v| m.max(v.norm()));
    let res = hermitian_residual(z);
    if res > 1e-12 * scale {
        return Err(Error::invalid(format!("matrix is not Hermitian (residual {res:e})")));
    }
    Ok(())
}

/// Real embedding of a Hermitian matrix: `[[Re Z, -Im Z], [Im Z, Re Z]]`.
pub fn embed_matrix(z: &DMatrix<C64>) -> Result<DMatrix<f64>> {
    check_hermitian(z)?;
    let n = z.nrows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = z[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    }))
}

/// Map a real symmetric `2n x 2n` matrix back to the Hermitian `n x n`
/// matrix whose embedding is closest to it (average over the two copies).
pub fn unembed_matrix(y: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    if !y.is_square() || !y.nrows().is_multiple_of(2) {
        return Err(Error::invalid("embedded matrix must be square of even size"));
    }
    let n = y.nrows() / 2;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        C64::new(re, im)
    }))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Eigen-decomposition of a Hermitian (or real symmetric) matrix with
/// eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<C64>>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>, field: Field) -> Self {
        let mut pairs: Vec<(f64, Vec<C64>)> = match field {
            Field::Real => {
                let re = m.map(|v| v.re);
                let eig = re.symmetric_eigen();
                (0..eig.eigenvalues.len())
                    .map(|i| {
                        let col = eig.eigenvectors.column(i);
                        (eig.eigenvalues[i], col.iter().map(|&v| C64::new(v, 0.0)).collect())
                    })
                    .collect()
            }
            Field::Complex => {
                let eig = m.clone().symmetric_eigen();
                (0..eig.eigenvalues.len())
                    .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
                    .collect()
            }
        };
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (values, vectors) = pairs.into_iter().unzip();
        HermitianEigen { values, vectors }
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.vectors.first().map_or(0, Vec::len);
        let mut out = DMatrix::<C64>::zeros(n, n);
        for (lam, q) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += q[i] * q[j].conj() * *lam;
                }
            }
        }
        out
    }
}

/// `Tr(A B)` for square complex matrices.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
