//! Gradient covariance, active/inactive partitions and active coordinates.

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::DesignVector;
use crate::numerics::{array_from_rows, eigh, rows_from_array, SymmetricMatrix};
use crate::surrogate::Surrogate;
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 100_000;

/// Eigenvalues below this fraction of the largest are clamped before the gap
/// ratio is taken.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Monte Carlo points per RNG substream.
const CHUNK: usize = 2048;

/// `Ĉ = (1/M) Σ ∇f(x_m)∇f(x_m)ᵀ` over `M` uniform points in `[-1, 1]^d`.
pub fn estimate_covariance(s: &Surrogate, m: usize, seed: u64) -> Result<SymmetricMatrix> {
    estimate_covariance_with(s.dim(), m, seed, |x| s.gradient_slice(x))
}

/// Same estimator for any gradient function. Chunk `c` draws its points from
/// substream `c` of `seed` and chunk sums are reduced in order, so the result
/// does not depend on the thread count.
pub fn estimate_covariance_with<G>(d: usize, m: usize, seed: u64, grad: G) -> Result<SymmetricMatrix>
where
    G: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if d == 0 || m == 0 {
        return Err(Error::invalid("gradient covariance needs d ≥ 1 and M ≥ 1"));
    }
    if m < d {
        log::warn!("M = {m} Monte Carlo points is fewer than d = {d}");
    }
    let chunks = m.div_ceil(CHUNK);
    let partials: Vec<Array2<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::rng::substream(seed, c as u64);
            let count = CHUNK.min(m - c * CHUNK);
            let mut acc = Array2::<f64>::zeros((d, d));
            let mut x = vec![0.0; d];
            for _ in 0..count {
                x.iter_mut().for_each(|v| *v = rng.random_range(-1.0..=1.0));
                let g = grad(&x)?;
                if g.len() != d {
                    return Err(Error::DimensionMismatch { context: "gradient", expected: d, actual: g.len() });
                }
                for i in 0..d {
                    for j in i..d {
                        acc[[i, j]] += g[i] * g[j];
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut c = Array2::<f64>::zeros((d, d));
    for p in &partials {
        c += p;
    }
    c /= m as f64;
    for i in 0..d {
        for j in 0..i {
            c[[i, j]] = c[[j, i]];
        }
    }
    SymmetricMatrix::new(c)
}

/// Active dimension: chosen by the largest eigenvalue ratio, or given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Auto,
    Fixed(usize),
}

impl Serialize for Rank {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rank::Auto => s.serialize_str("auto"),
            Rank::Fixed(r) => s.serialize_u64(*r as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(Rank::Fixed(r as usize)),
            Raw::Text(t) if t == "auto" => Ok(Rank::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("rank must be an integer or \"auto\", got `{t}`"))),
        }
    }
}

/// Index `r ≥ 1` maximizing `λ_r / λ_{r+1}`, first maximum on ties.
pub fn gap_rank(eigenvalues: &[f64]) -> Result<usize> {
    let d = eigenvalues.len();
    if d < 2 {
        return Err(Error::invalid("automatic rank needs at least two eigenvalues; give r explicitly"));
    }
    let top = eigenvalues[0];
    if !(top > 0.0) {
        return Err(Error::invalid("all eigenvalues are zero; give r explicitly"));
    }
    let floor = EIGEN_FLOOR * top;
    let mut best = (1, 0.0);
    for k in 0..d - 1 {
        let ratio = eigenvalues[k].max(floor) / eigenvalues[k + 1].max(floor);
        if ratio > best.1 {
            best = (k + 1, ratio);
        }
    }
    if best.1 <= 1.0 + 1e-8 {
        return Err(Error::invalid("eigenvalues are all equal; the gap rule cannot choose r, give it explicitly"));
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePartition {
    eigenvalues: Array1<f64>,
    w: Array2<f64>,
    v: Array2<f64>,
    /// Monte Carlo size and seed of the covariance estimate, when known.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

pub fn partition(c: &SymmetricMatrix, rank: Rank) -> Result<SubspacePartition> {
    let eig = eigh(c)?;
    let d = c.dim();
    let r = match rank {
        Rank::Auto => gap_rank(eig.values.as_slice().expect("contiguous"))?,
        Rank::Fixed(r) if (1..=d).contains(&r) => r,
        Rank::Fixed(r) => return Err(Error::invalid(format!("active dimension r = {r} outside 1..={d}"))),
    };
    Ok(SubspacePartition {
        w: eig.vectors.slice(s![.., ..r]).to_owned(),
        v: eig.vectors.slice(s![.., r..]).to_owned(),
        eigenvalues: eig.values,
        samples: None,
        seed: None,
    })
}

impl SubspacePartition {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn inactive_dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// `[W V]`.
    pub fn basis(&self) -> Array2<f64> {
        ndarray::concatenate![ndarray::Axis(1), self.w, self.v]
    }

    pub fn with_provenance(mut self, samples: usize, seed: u64) -> Self {
        self.samples = Some(samples);
        self.seed = Some(seed);
        self
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { context: "design vector", expected: self.dim(), actual: x.len() });
        }
        Ok(())
    }

    pub fn active_coordinate_slice(&self, x: &[f64]) -> Result<Array1<f64>> {
        self.check(x)?;
        Ok(self.w.t().dot(&ndarray::aview1(x)))
    }

    pub fn inactive_coordinate_slice(&self, x: &[f64]) -> Result<Array1<f64>> {
        self.check(x)?;
        Ok(self.v.t().dot(&ndarray::aview1(x)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PartitionFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<PartitionFile>(text)?.try_into()
    }
}

/// `u = Wᵀx`.
pub fn active_coordinate(p: &SubspacePartition, x: &DesignVector) -> Result<Array1<f64>> {
    p.active_coordinate_slice(x.as_slice())
}

/// Largest principal angle (radians) between `span(b)` and `span(a)`, both
/// with orthonormal columns: `sin θ = ‖b − a aᵀb‖₂`.
pub fn subspace_angle(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { context: "subspace angle", expected: a.nrows(), actual: b.nrows() });
    }
    if b.ncols() == 0 {
        return Ok(0.0);
    }
    let resid = &b - &a.dot(&a.t().dot(&b));
    let gram = SymmetricMatrix::new(resid.t().dot(&resid))?;
    let top = eigh(&gram)?.values[0].max(0.0);
    Ok(top.sqrt().min(1.0).asin())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionFile {
    pub eigenvalues: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub r: usize,
    #[serde(rename = "M")]
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl From<&SubspacePartition> for PartitionFile {
    fn from(p: &SubspacePartition) -> Self {
        PartitionFile {
            eigenvalues: p.eigenvalues.to_vec(),
            w: rows_from_array(p.w.view()),
            v: rows_from_array(p.v.view()),
            r: p.rank(),
            samples: p.samples,
            seed: p.seed,
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, cols: usize) -> Result<Array2<f64>> {
    if rows.is_empty() || cols == 0 {
        return Ok(Array2::zeros((d, cols)));
    }
    let m = array_from_rows(rows)?;
    if m.dim() != (d, cols) {
        return Err(Error::format("partition", format!("matrix is {:?}, expected ({d}, {cols})", m.dim())));
    }
    Ok(m)
}

impl TryFrom<PartitionFile> for SubspacePartition {
    type Error = Error;
    fn try_from(f: PartitionFile) -> Result<Self> {
        let d = f.eigenvalues.len();
        if f.r == 0 || f.r > d {
            return Err(Error::format("partition", format!("r = {} outside 1..={d}", f.r)));
        }
        let w = matrix_from_rows(&f.w, d, f.r)?;
        let v = matrix_from_rows(&f.v, d, d - f.r)?;
        let p = SubspacePartition { eigenvalues: Array1::from(f.eigenvalues), w, v, samples: f.samples, seed: f.seed };
        let q = p.basis();
        let defect = crate::numerics::max_abs((q.t().dot(&q) - Array2::<f64>::eye(d)).view());
        if defect > 1e-8 {
            return Err(Error::format("partition", format!("[W V] is not orthogonal (defect {defect:e})")));
        }
        Ok(p)
    }
}
