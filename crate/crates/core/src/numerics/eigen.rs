use ndarray::{Array1, Array2};

use super::SymmetricMatrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in nonincreasing order.
///
/// Column `k` of `vectors` pairs with `values[k]`. Each column is signed so
/// that its largest-magnitude component (first one on ties) is positive.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.vectors * &self.values;
        scaled.dot(&self.vectors.t())
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn eigh(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    if !a.is_finite() {
        return Err(Error::invalid(format!(
            "{n}x{n} symmetric matrix has non-finite entries"
        )));
    }
    let mut m: Vec<f64> = a.as_array().iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-15 * frob;
    let mut off = off_diagonal_norm(&m, n);
    let mut sweeps = 0;
    while off > target && off > f64::MIN_POSITIVE {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                matrix: format!("{n}x{n} symmetric matrix"),
                residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, n, p, q);
            }
        }
        off = off_diagonal_norm(&m, n);
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));

    let values = Array1::from_iter(order.iter().map(|&k| m[k * n + k]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        let mut pivot = 0;
        for r in 0..n {
            if v[r * n + k].abs() > v[pivot * n + k].abs() {
                pivot = r;
            }
        }
        let sign = if v[pivot * n + k] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[[r, col]] = sign * v[r * n + k];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * m[i * n + j] * m[i * n + j];
        }
    }
    s.sqrt()
}

fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    m[p * n + p] = app - t * apq;
    m[q * n + q] = aqq + t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[r * n + p];
        let arq = m[r * n + q];
        let new_rp = c * arp - s * arq;
        let new_rq = c * arq + s * arp;
        m[r * n + p] = new_rp;
        m[p * n + r] = new_rp;
        m[r * n + q] = new_rq;
        m[q * n + r] = new_rq;
    }
    for r in 0..n {
        let vrp = v[r * n + p];
        let vrq = v[r * n + q];
        v[r * n + p] = c * vrp - s * vrq;
        v[r * n + q] = s * vrp + c * vrq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs;
    use ndarray::array;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = crate::rng::seeded(seed);
        let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        SymmetricMatrix::new(&a + &a.t()).unwrap()
    }

    fn check_invariants(a: &SymmetricMatrix, e: &EigenDecomposition) {
        let n = a.dim();
        let q = &e.vectors;
        let orth = q.t().dot(q) - Array2::<f64>::eye(n);
        assert!(max_abs(orth.view()) <= 1e-10, "orthogonality {}", max_abs(orth.view()));
        let scale = a.max_abs().max(1.0);
        let rec = e.reconstruct() - a.as_array();
        assert!(max_abs(rec.view()) <= 1e-8 * scale);
        let aq = a.as_array().dot(q) - q * &e.values;
        assert!(max_abs(aq.view()) <= 1e-8 * scale);
        for k in 1..n {
            assert!(e.values[k - 1] >= e.values[k]);
        }
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let a = SymmetricMatrix::identity(2);
        let e = eigh(&a).unwrap();
        assert_eq!(e.values.to_vec(), vec![1.0, 1.0]);
        check_invariants(&a, &e);
        for k in 0..2 {
            let col = e.vectors.column(k);
            let big = col.iter().fold(0.0_f64, |m, v| if v.abs() > m.abs() { *v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let c = [0.6, 0.8];
        let a = SymmetricMatrix::outer(&c);
        let e = eigh(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14);
        assert!((e.vectors[[0, 0]] - 0.6).abs() < 1e-14);
        assert!((e.vectors[[1, 0]] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn sign_convention_fixes_negated_vectors() {
        let c = [-0.6, -0.8];
        let e = eigh(&SymmetricMatrix::outer(&c)).unwrap();
        assert!(e.vectors[[1, 0]] > 0.0);
    }

    #[test]
    fn random_20x20_reconstructs() {
        let a = random_symmetric(20, 7);
        let e = eigh(&a).unwrap();
        check_invariants(&a, &e);
    }

    #[test]
    fn random_300x300_satisfies_eigen_equation() {
        let a = random_symmetric(300, 11);
        let e = eigh(&a).unwrap();
        check_invariants(&a, &e);
    }

    #[test]
    fn deterministic_for_fixed_input() {
        let a = random_symmetric(15, 3);
        let e1 = eigh(&a).unwrap();
        let e2 = eigh(&a).unwrap();
        assert_eq!(e1.vectors, e2.vectors);
        assert_eq!(e1.values, e2.values);
    }

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, 5.0, -2.0]);
        let e = eigh(&a).unwrap();
        assert_eq!(e.values, array![5.0, 1.0, -2.0]);
    }

    #[test]
    fn non_finite_rejected() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(eigh(&a).is_err());
    }
}
