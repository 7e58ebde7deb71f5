//! Dense linear-algebra and optimization kernels.

mod bpdn;
mod eigen;
mod lp;
mod pinv;

pub use bpdn::{bpdn_solve, BpdnOptions, BpdnSolution};
pub use eigen::{eigh, EigenDecomposition};
pub use lp::{lp_solve, Bound, LinearProgram, LpSolution};
pub use pinv::{pinv_psd, PsdPseudoInverse};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square matrix whose stored entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricMatrix(Array2<f64>);

impl SymmetricMatrix {
    /// Builds `(A + Aᵀ) / 2`.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                context: "SymmetricMatrix (columns)",
                expected: r,
                actual: c,
            });
        }
        let mut s = a;
        for i in 0..r {
            for j in (i + 1)..r {
                let m = 0.5 * (s[[i, j]] + s[[j, i]]);
                s[[i, j]] = m;
                s[[j, i]] = m;
            }
        }
        Ok(SymmetricMatrix(s))
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(Array2::eye(n))
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(Array2::zeros((n, n)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    /// `c cᵀ`
    pub fn outer(c: &[f64]) -> Self {
        let n = c.len();
        SymmetricMatrix(Array2::from_shape_fn((n, n), |(i, j)| c[i] * c[j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.0.view())
    }

    pub fn trace(&self) -> f64 {
        self.0.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymmetricMatrix::new(array_from_rows(&rows)?)
    }
}

impl From<SymmetricMatrix> for Vec<Vec<f64>> {
    fn from(m: SymmetricMatrix) -> Self {
        rows_from_array(m.0.view())
    }
}

pub fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn norm2(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn array_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(nrows * ncols);
    for row in rows {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                context: "row-major matrix",
                expected: ncols,
                actual: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::invalid(format!("matrix shape: {e}")))
}

pub fn rows_from_array(a: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub(crate) struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub(crate) fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) {
                return Err(Error::Numerical(format!(
                    "Cholesky pivot {j} is not positive ({diag:e})"
                )));
            }
            let ljj = diag.sqrt();
            l[[j, j]] = ljj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub(crate) fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.l.nrows();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[[i, k]] * y[k];
            }
            y[i] = s / self.l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * y[k];
            }
            y[i] = s / self.l[[i, i]];
        }
        y
    }
}

/// Least-squares solution of `a x ≈ b` for a tall matrix via the normal
/// equations with a tiny relative ridge.
pub(crate) fn least_squares(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let mut gram = a.t().dot(&a);
    let scale = gram.diag().iter().fold(0.0_f64, |m, v| m.max(*v));
    let ridge = 1e-14 * scale.max(f64::MIN_POSITIVE);
    for i in 0..gram.nrows() {
        gram[[i, i]] += ridge;
    }
    let chol = Cholesky::factor(&gram)?;
    Ok(chol.solve(&a.t().dot(&b)))
}
