use ndarray::{s, Array1, Array2, ArrayView1};

use super::{eigh, SymmetricMatrix};
use crate::{Error, Result};

/// Rank-aware pseudo-inverse of a positive semidefinite matrix.
///
/// Keeps the eigenpairs above `rel_tol · λ_max`; `basis` holds their
/// eigenvectors as columns (descending eigenvalue order).
#[derive(Debug, Clone)]
pub struct PsdPseudoInverse {
    pub rank: usize,
    pub values: Array1<f64>,
    pub basis: Array2<f64>,
}

impl PsdPseudoInverse {
    pub fn new(s: &SymmetricMatrix, rel_tol: f64) -> Result<Self> {
        if !(rel_tol >= 0.0) {
            return Err(Error::invalid(format!("rel_tol must be nonnegative, got {rel_tol}")));
        }
        let eig = eigh(s)?;
        let trace = s.trace().abs();
        let n = s.dim();
        if n > 0 {
            let smallest = eig.values[n - 1];
            if smallest < -1e-8 * trace {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: smallest, trace });
            }
        }
        let lmax = eig.values.first().copied().unwrap_or(0.0);
        let cutoff = rel_tol * lmax;
        let rank = if lmax > 0.0 { eig.values.iter().take_while(|&&l| l > cutoff).count() } else { 0 };
        Ok(PsdPseudoInverse {
            rank,
            values: eig.values.slice(s![..rank]).to_owned(),
            basis: eig.vectors.slice(s![.., ..rank]).to_owned(),
        })
    }

    pub fn matrix(&self) -> SymmetricMatrix {
        let scaled = &self.basis / &self.values;
        SymmetricMatrix::new(scaled.dot(&self.basis.t())).expect("square by construction")
    }

    /// `vᵀ S⁺ v` together with the squared norm of the part of `v` outside
    /// the retained span.
    pub fn quadratic_form(&self, v: ArrayView1<'_, f64>) -> (f64, f64) {
        let coords = self.basis.t().dot(&v);
        let inside: f64 = coords.iter().zip(&self.values).map(|(c, l)| c * c / l).sum();
        let orth = &v - &self.basis.dot(&coords);
        (inside, orth.dot(&orth))
    }

    /// Smallest retained eigenvalue.
    pub fn floor_eigenvalue(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// Pseudo-inverse and numerical rank.
pub fn pinv_psd(s: &SymmetricMatrix, rel_tol: f64) -> Result<(SymmetricMatrix, usize)> {
    let p = PsdPseudoInverse::new(s, rel_tol)?;
    Ok((p.matrix(), p.rank))
}
