//! Global orthonormal-Legendre polynomial surrogates fitted by basis pursuit
//! denoising.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{DesignVector, BOUND_TOL};
use crate::numerics::{bpdn_solve, norm2, BpdnOptions};
use crate::{Error, Result};

/// Largest index set we are willing to enumerate.
pub const MAX_TERMS: usize = 2_000_000;

/// Exponent of the hyperbolic-cross rule.
pub const HYPERBOLIC_Q: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexSetKind {
    Tensorial,
    TotalOrder,
    Euclidean,
    Hyperbolic,
}

impl IndexSetKind {
    pub const ALL: [IndexSetKind; 4] =
        [IndexSetKind::Tensorial, IndexSetKind::TotalOrder, IndexSetKind::Euclidean, IndexSetKind::Hyperbolic];

    pub fn as_str(self) -> &'static str {
        match self {
            IndexSetKind::Tensorial => "tensorial",
            IndexSetKind::TotalOrder => "total-order",
            IndexSetKind::Euclidean => "euclidean",
            IndexSetKind::Hyperbolic => "hyperbolic",
        }
    }

    /// Membership rule for a complete multi-index.
    pub fn admits(self, index: &[u32], p: u32) -> bool {
        match self {
            IndexSetKind::Tensorial => index.iter().all(|&i| i <= p),
            IndexSetKind::TotalOrder => index.iter().map(|&i| i as u64).sum::<u64>() <= p as u64,
            IndexSetKind::Euclidean => {
                index.iter().map(|&i| (i as u64) * (i as u64)).sum::<u64>() <= (p as u64) * (p as u64)
            }
            IndexSetKind::Hyperbolic => {
                let s: f64 = index.iter().map(|&i| (i as f64).powf(HYPERBOLIC_Q)).sum();
                s.powf(1.0 / HYPERBOLIC_Q) <= p as f64 + 1e-12
            }
        }
    }

    /// Closed-form cardinality where one exists.
    pub fn closed_form_count(self, d: usize, p: u32) -> Option<u128> {
        match self {
            IndexSetKind::Tensorial => (p as u128 + 1).checked_pow(d as u32),
            IndexSetKind::TotalOrder => Some(binomial_u128(p as u128 + d as u128, p as u128)),
            _ => None,
        }
    }
}

impl fmt::Display for IndexSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexSetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IndexSetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown multi-index set kind `{s}`")))
    }
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Lexicographically sorted multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    kind: IndexSetKind,
    d: usize,
    p: u32,
    indices: Vec<Vec<u32>>,
    /// Nonzero `(dimension, degree)` pairs of each index.
    terms: Vec<Vec<(usize, u32)>>,
}

impl MultiIndexSet {
    pub fn build(kind: IndexSetKind, d: usize, p: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("multi-index set needs d ≥ 1"));
        }
        if let Some(n) = kind.closed_form_count(d, p) {
            if n > MAX_TERMS as u128 {
                return Err(Error::invalid(format!("{kind} set with d={d}, p={p} has {n} terms (limit {MAX_TERMS})")));
            }
        }
        let mut indices = Vec::new();
        let mut current = vec![0u32; d];
        enumerate(kind, p, 0, &mut current, &mut indices)?;
        Ok(Self::from_parts(kind, d, p, indices))
    }

    /// Rebuilds a set from a persisted index list, checking every entry.
    pub fn from_indices(kind: IndexSetKind, d: usize, p: u32, indices: Vec<Vec<u32>>) -> Result<Self> {
        for idx in &indices {
            if idx.len() != d {
                return Err(Error::DimensionMismatch { context: "multi-index", expected: d, actual: idx.len() });
            }
            if !kind.admits(idx, p) {
                return Err(Error::invalid(format!("index {idx:?} violates the {kind} rule for p={p}")));
            }
        }
        let mut sorted = indices.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::invalid("multi-index list contains duplicates"));
        }
        Ok(Self::from_parts(kind, d, p, indices))
    }

    fn from_parts(kind: IndexSetKind, d: usize, p: u32, indices: Vec<Vec<u32>>) -> Self {
        let terms = indices
            .iter()
            .map(|idx| idx.iter().enumerate().filter(|(_, &i)| i > 0).map(|(j, &i)| (j, i)).collect())
            .collect();
        MultiIndexSet { kind, d, p, indices, terms }
    }

    pub fn kind(&self) -> IndexSetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> u32 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.indices.binary_search_by(|probe| probe.as_slice().cmp(index)).ok()
    }
}

pub fn build_index_set(kind: IndexSetKind, d: usize, p: u32) -> Result<MultiIndexSet> {
    MultiIndexSet::build(kind, d, p)
}

fn enumerate(kind: IndexSetKind, p: u32, dim: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) -> Result<()> {
    if dim == current.len() {
        if out.len() == MAX_TERMS {
            return Err(Error::invalid(format!("multi-index set exceeds {MAX_TERMS} terms")));
        }
        out.push(current.clone());
        return Ok(());
    }
    for i in 0..=p {
        current[dim] = i;
        // the rules are monotone in each entry, so a violating prefix (with
        // zeros after it) ends the loop
        let saved: Vec<u32> = current[dim + 1..].to_vec();
        current[dim + 1..].iter_mut().for_each(|v| *v = 0);
        let ok = kind.admits(current, p);
        current[dim + 1..].copy_from_slice(&saved);
        if !ok {
            break;
        }
        enumerate(kind, p, dim + 1, current, out)?;
    }
    current[dim] = 0;
    Ok(())
}

/// Orthonormal Legendre values and derivatives `ψ_0..ψ_p` at `x`, with
/// `ψ_n = √(2n+1) P_n` (unit norm under the uniform density on `[-1, 1]`).
pub fn legendre_orthonormal(p: u32, x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = p as usize + 1;
    let mut val = vec![0.0; n];
    let mut der = vec![0.0; n];
    val[0] = 1.0;
    if n > 1 {
        val[1] = x;
        der[1] = 1.0;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        val[k + 1] = ((2.0 * kf + 1.0) * x * val[k] - kf * val[k - 1]) / (kf + 1.0);
        der[k + 1] = der[k - 1] + (2.0 * kf + 1.0) * val[k];
    }
    for k in 0..n {
        let s = (2.0 * k as f64 + 1.0).sqrt();
        val[k] *= s;
        der[k] *= s;
    }
    (val, der)
}

fn check_point(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch { context: "surrogate input", expected: d, actual: x.len() });
    }
    for (j, &v) in x.iter().enumerate() {
        if !v.is_finite() || v.abs() > 1.0 + BOUND_TOL {
            return Err(Error::OutOfBounds { index: j + 1, value: v });
        }
    }
    Ok(())
}

struct PointTables {
    val: Vec<Vec<f64>>,
    der: Vec<Vec<f64>>,
}

impl PointTables {
    fn new(basis: &MultiIndexSet, x: &[f64]) -> Self {
        let (val, der) = x.iter().map(|&xj| legendre_orthonormal(basis.p, xj)).unzip();
        PointTables { val, der }
    }

    fn basis_value(&self, term: &[(usize, u32)]) -> f64 {
        term.iter().map(|&(j, i)| self.val[j][i as usize]).product()
    }
}

/// Design matrix `Ψ[k][i] = ψ_i(x_k)`.
pub fn eval_basis(basis: &MultiIndexSet, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (k, d) = x.dim();
    if d != basis.d {
        return Err(Error::DimensionMismatch { context: "eval_basis columns", expected: basis.d, actual: d });
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|r| {
            let point = x.row(r).to_vec();
            check_point(&point, d)?;
            let t = PointTables::new(basis, &point);
            Ok(basis.terms.iter().map(|term| t.basis_value(term)).collect())
        })
        .collect::<Result<_>>()?;
    let mut psi = Array2::<f64>::zeros((k, basis.len()));
    for (r, row) in rows.into_iter().enumerate() {
        psi.row_mut(r).assign(&Array1::from(row));
    }
    Ok(psi)
}

/// ε in `‖Ψa − f‖₂ ≤ ε`: fixed, or chosen by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Fixed(f64),
    Auto,
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Epsilon::Fixed(v) => s.serialize_f64(*v),
            Epsilon::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v >= 0.0 && v.is_finite() => Ok(Epsilon::Fixed(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("epsilon must be nonnegative, got {v}"))),
            Raw::Text(t) if t == "auto" => Ok(Epsilon::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("epsilon must be a number or \"auto\", got `{t}`"))),
        }
    }
}

/// Candidate ε values for cross-validated selection: 10 points log-spaced on
/// `[1e-5, 1e-1]`.
pub fn epsilon_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-5.0 + 4.0 * i as f64 / 9.0)).collect()
}

pub const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub residual_norm: f64,
    pub r_squared: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    /// `(ε, mean squared CV error)` pairs when ε was auto-selected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cv_errors: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    basis: MultiIndexSet,
    coefficients: Array1<f64>,
    epsilon: f64,
    diagnostics: FitDiagnostics,
}

impl Surrogate {
    pub fn from_coefficients(basis: MultiIndexSet, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                context: "surrogate coefficients",
                expected: basis.len(),
                actual: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("surrogate coefficients must be finite"));
        }
        Ok(Surrogate {
            basis,
            coefficients: Array1::from(coefficients),
            epsilon: 0.0,
            diagnostics: FitDiagnostics {
                residual_norm: 0.0,
                r_squared: 1.0,
                iterations: 0,
                converged: true,
                warning: None,
                cv_errors: Vec::new(),
            },
        })
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn dim(&self) -> usize {
        self.basis.d
    }

    pub fn predict(&self, x: &DesignVector) -> Result<f64> {
        self.predict_slice(x.as_slice())
    }

    pub fn predict_slice(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.basis.d)?;
        let t = PointTables::new(&self.basis, x);
        Ok(self.basis.terms.iter().zip(self.coefficients.iter()).map(|(term, a)| a * t.basis_value(term)).sum())
    }

    pub fn predict_many(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(eval_basis(&self.basis, x)?.dot(&self.coefficients))
    }

    pub fn gradient(&self, x: &DesignVector) -> Result<Vec<f64>> {
        self.gradient_slice(x.as_slice())
    }

    pub fn gradient_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(x, self.basis.d)?;
        let t = PointTables::new(&self.basis, x);
        let mut g = vec![0.0; self.basis.d];
        for (term, &a) in self.basis.terms.iter().zip(self.coefficients.iter()) {
            if a == 0.0 {
                continue;
            }
            for (pos, &(j, i)) in term.iter().enumerate() {
                let mut prod = a * t.der[j][i as usize];
                for (other, &(l, k)) in term.iter().enumerate() {
                    if other != pos {
                        prod *= t.val[l][k as usize];
                    }
                }
                g[j] += prod;
            }
        }
        Ok(g)
    }
}

/// Fits coefficients by basis pursuit denoising.
pub fn fit(basis: &MultiIndexSet, x: ArrayView2<'_, f64>, f: ArrayView1<'_, f64>, epsilon: Epsilon) -> Result<Surrogate> {
    fit_with(basis, x, f, epsilon, &BpdnOptions::default())
}

pub fn fit_with(
    basis: &MultiIndexSet,
    x: ArrayView2<'_, f64>,
    f: ArrayView1<'_, f64>,
    epsilon: Epsilon,
    opts: &BpdnOptions,
) -> Result<Surrogate> {
    let k = x.nrows();
    if k == 0 {
        return Err(Error::invalid("cannot fit a surrogate to zero samples"));
    }
    if f.len() != k {
        return Err(Error::DimensionMismatch { context: "fit targets", expected: k, actual: f.len() });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("fit targets must be finite"));
    }
    let psi = eval_basis(basis, x)?;
    let (eps, cv_errors) = match epsilon {
        Epsilon::Fixed(e) => (e, Vec::new()),
        Epsilon::Auto => select_epsilon(&psi, f, opts)?,
    };
    let sol = bpdn_solve(psi.view(), f, eps, opts)?;
    if let Some(w) = &sol.warning {
        log::warn!("surrogate fit: {w}");
    }
    let pred = psi.dot(&sol.coefficients);
    let r_squared = r_squared_of(pred.view(), f).unwrap_or(f64::NAN);
    Ok(Surrogate {
        basis: basis.clone(),
        coefficients: sol.coefficients,
        epsilon: eps,
        diagnostics: FitDiagnostics {
            residual_norm: sol.residual_norm,
            r_squared,
            iterations: sol.iterations,
            converged: sol.converged,
            warning: sol.warning,
            cv_errors,
        },
    })
}

fn select_epsilon(psi: &Array2<f64>, f: ArrayView1<'_, f64>, opts: &BpdnOptions) -> Result<(f64, Vec<(f64, f64)>)> {
    let k = psi.nrows();
    if k < CV_FOLDS {
        return Err(Error::invalid(format!("automatic epsilon needs at least {CV_FOLDS} samples, got {k}")));
    }
    let grid = epsilon_grid();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|e| (0..CV_FOLDS).map(move |fold| (e, fold))).collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(e, fold)| {
            let train: Vec<usize> = (0..k).filter(|i| i % CV_FOLDS != fold).collect();
            let test: Vec<usize> = (0..k).filter(|i| i % CV_FOLDS == fold).collect();
            let psi_train = psi.select(ndarray::Axis(0), &train);
            let f_train = Array1::from_iter(train.iter().map(|&i| f[i]));
            let sol = bpdn_solve(psi_train.view(), f_train.view(), grid[e], opts)?;
            let psi_test = psi.select(ndarray::Axis(0), &test);
            let pred = psi_test.dot(&sol.coefficients);
            Ok(test.iter().zip(pred.iter()).map(|(&i, p)| (p - f[i]).powi(2)).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let mut table = Vec::with_capacity(grid.len());
    for (e, &eps) in grid.iter().enumerate() {
        let sse: f64 = errors[e * CV_FOLDS..(e + 1) * CV_FOLDS].iter().sum();
        table.push((eps, sse / k as f64));
    }
    let best = table
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(e, _)| e)
        .expect("grid is nonempty");
    Ok((best, table))
}

fn r_squared_of(pred: ArrayView1<'_, f64>, truth: ArrayView1<'_, f64>) -> Result<f64> {
    let n = truth.len();
    if n == 0 {
        return Err(Error::invalid("R² needs a nonempty test set"));
    }
    let mean = truth.sum() / n as f64;
    let ss_tot: f64 = truth.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::invalid("R² is undefined for a zero-variance test set"));
    }
    let ss_res: f64 = truth.iter().zip(pred.iter()).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn r_squared(s: &Surrogate, x_test: ArrayView2<'_, f64>, f_test: ArrayView1<'_, f64>) -> Result<f64> {
    if x_test.nrows() != f_test.len() {
        return Err(Error::DimensionMismatch { context: "R² test set", expected: x_test.nrows(), actual: f_test.len() });
    }
    let pred = s.predict_many(x_test)?;
    r_squared_of(pred.view(), f_test)
}

/// JSON form of a fitted surrogate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateFile {
    pub kind: IndexSetKind,
    pub d: usize,
    pub p: u32,
    pub indices: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
    pub epsilon: f64,
    pub diagnostics: FitDiagnostics,
}

impl From<&Surrogate> for SurrogateFile {
    fn from(s: &Surrogate) -> Self {
        SurrogateFile {
            kind: s.basis.kind,
            d: s.basis.d,
            p: s.basis.p,
            indices: s.basis.indices.clone(),
            coefficients: s.coefficients.to_vec(),
            epsilon: s.epsilon,
            diagnostics: s.diagnostics.clone(),
        }
    }
}

impl TryFrom<SurrogateFile> for Surrogate {
    type Error = Error;
    fn try_from(file: SurrogateFile) -> Result<Self> {
        let basis = MultiIndexSet::from_indices(file.kind, file.d, file.p, file.indices)?;
        let mut s = Surrogate::from_coefficients(basis, file.coefficients)?;
        s.epsilon = file.epsilon;
        s.diagnostics = file.diagnostics;
        Ok(s)
    }
}

impl Surrogate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SurrogateFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<SurrogateFile>(text)?.try_into()
    }

    /// Coefficient magnitudes in descending order.
    pub fn sorted_magnitudes(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.coefficients.iter().map(|c| c.abs()).collect();
        m.sort_by(|a, b| b.total_cmp(a));
        m
    }

    pub fn coefficient_norm(&self) -> f64 {
        norm2(self.coefficients.view())
    }
}
