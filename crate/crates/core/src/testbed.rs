//! Synthetic oracles with known active subspaces, used in place of flow
//! solutions to exercise the pipeline end to end.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envelope::BladeEnvelope;
use crate::geometry::{AirfoilProfile, Deformer, DesignVector};
use crate::ingest::QoiTable;
use crate::{Error, Result};

/// Ridge link `g(t) = t³ + t/2`.
pub fn ridge_link(t: f64) -> f64 {
    t * t * t + 0.5 * t
}

pub fn ridge_link_derivative(t: f64) -> f64 {
    3.0 * t * t + 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticOracle {
    /// `wᵀx`
    Linear { w: Vec<f64> },
    /// `g(wᵀx)`
    Ridge { w: Vec<f64> },
    /// `(w₁ᵀx)² + 0.1 w₂ᵀx`
    QuadraticRidge { w1: Vec<f64>, w2: Vec<f64> },
    /// `inner(x) + amplitude · ξ(x)`, with `ξ` a standard normal draw keyed
    /// by the seed and the bits of `x`.
    AdditiveNoise { inner: Box<SyntheticOracle>, amplitude: f64, seed: u64 },
}

fn unit(w: &[f64]) -> Result<Vec<f64>> {
    let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("oracle direction must be a nonzero finite vector"));
    }
    Ok(w.iter().map(|v| v / n).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Five-term direction used by the reference pipeline: support at design
/// coordinates 3, 6, 12, 15, 18 (one-based) when `d = 20`, spread
/// proportionally otherwise.
pub fn sparse_ridge_direction(d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("direction needs d ≥ 1"));
    }
    let support = [2usize, 5, 11, 14, 17];
    let values = [1.0, -0.8, 0.6, 0.5, -0.4];
    let mut w = vec![0.0; d];
    for (&j, &v) in support.iter().zip(&values) {
        let idx = j * d / 20;
        if w[idx] == 0.0 {
            w[idx] = v;
        }
    }
    unit(&w)
}

impl SyntheticOracle {
    pub fn linear(w: &[f64]) -> Result<Self> {
        Ok(SyntheticOracle::Linear { w: unit(w)? })
    }

    pub fn ridge(w: &[f64]) -> Result<Self> {
        Ok(SyntheticOracle::Ridge { w: unit(w)? })
    }

    pub fn quadratic_ridge(w1: &[f64], w2: &[f64]) -> Result<Self> {
        if w1.len() != w2.len() {
            return Err(Error::DimensionMismatch { context: "oracle directions", expected: w1.len(), actual: w2.len() });
        }
        Ok(SyntheticOracle::QuadraticRidge { w1: unit(w1)?, w2: unit(w2)? })
    }

    pub fn with_noise(self, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::invalid(format!("noise amplitude must be nonnegative, got {amplitude}")));
        }
        Ok(SyntheticOracle::AdditiveNoise { inner: Box::new(self), amplitude, seed })
    }

    /// Ridge oracle on [`sparse_ridge_direction`].
    pub fn reference_ridge(d: usize) -> Result<Self> {
        Self::ridge(&sparse_ridge_direction(d)?)
    }

    /// Looks an oracle up by name: `linear`, `ridge`, `quadratic-ridge`, or
    /// `noisy-ridge` (1% noise).
    pub fn by_name(name: &str, d: usize, seed: u64) -> Result<Self> {
        let w = sparse_ridge_direction(d)?;
        match name {
            "linear" => Self::linear(&w),
            "ridge" => Self::ridge(&w),
            "quadratic-ridge" => {
                let mut w2 = vec![0.0; d];
                w2[0] = 1.0;
                if d > 1 {
                    w2[d - 1] = 1.0;
                }
                Self::quadratic_ridge(&w, &w2)
            }
            "noisy-ridge" => Self::ridge(&w)?.with_noise(0.01, seed),
            other => Err(Error::invalid(format!(
                "unknown oracle `{other}` (expected linear, ridge, quadratic-ridge or noisy-ridge)"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SyntheticOracle::Linear { w } | SyntheticOracle::Ridge { w } => w.len(),
            SyntheticOracle::QuadraticRidge { w1, .. } => w1.len(),
            SyntheticOracle::AdditiveNoise { inner, .. } => inner.dim(),
        }
    }

    pub fn evaluate(&self, x: &DesignVector) -> Result<f64> {
        self.evaluate_slice(x.as_slice())
    }

    /// Evaluates at any point of matching dimension, inside the cube or not.
    pub fn evaluate_slice(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { context: "oracle input", expected: self.dim(), actual: x.len() });
        }
        Ok(match self {
            SyntheticOracle::Linear { w } => dot(w, x),
            SyntheticOracle::Ridge { w } => ridge_link(dot(w, x)),
            SyntheticOracle::QuadraticRidge { w1, w2 } => dot(w1, x).powi(2) + 0.1 * dot(w2, x),
            SyntheticOracle::AdditiveNoise { inner, amplitude, seed } => {
                inner.evaluate_slice(x)? + amplitude * keyed_normal(*seed, x)
            }
        })
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { context: "oracle input", expected: self.dim(), actual: x.len() });
        }
        match self {
            SyntheticOracle::Linear { w } => Ok(w.clone()),
            SyntheticOracle::Ridge { w } => {
                let g = ridge_link_derivative(dot(w, x));
                Ok(w.iter().map(|v| g * v).collect())
            }
            SyntheticOracle::QuadraticRidge { w1, w2 } => {
                let t = 2.0 * dot(w1, x);
                Ok(w1.iter().zip(w2).map(|(a, b)| t * a + 0.1 * b).collect())
            }
            SyntheticOracle::AdditiveNoise { .. } => Err(Error::invalid("the noisy oracle has no gradient")),
        }
    }

    /// Orthonormal basis (columns) of the span of the generator directions.
    pub fn true_active_subspace(&self) -> Result<Array2<f64>> {
        let dirs: Vec<&Vec<f64>> = match self {
            SyntheticOracle::Linear { w } | SyntheticOracle::Ridge { w } => vec![w],
            SyntheticOracle::QuadraticRidge { w1, w2 } => vec![w1, w2],
            SyntheticOracle::AdditiveNoise { .. } => {
                return Err(Error::invalid("the noisy oracle has no closed-form active subspace"))
            }
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for w in dirs {
            let mut v = w.clone();
            for b in &basis {
                let c = dot(b, &v);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
            let n = dot(&v, &v).sqrt();
            if n > 1e-12 {
                basis.push(v.iter().map(|x| x / n).collect());
            }
        }
        let d = self.dim();
        Ok(Array2::from_shape_fn((d, basis.len()), |(i, j)| basis[j][i]))
    }

    pub fn evaluate_table(&self, designs: &[DesignVector], name: &str) -> Result<QoiTable> {
        let mut t = QoiTable::new(vec![name.to_string()])?;
        for (i, x) in designs.iter().enumerate() {
            t.push(i, vec![self.evaluate(x)?])?;
        }
        Ok(t)
    }
}

fn keyed_normal(seed: u64, x: &[f64]) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for v in x {
        h.update(v.to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    let key = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    StandardNormal.sample(&mut crate::rng::seeded(key))
}

/// Oracle on profiles: the least-squares design of a profile on a fixed
/// lattice, fed to a design-space oracle.
pub struct ProfileOracle<'a> {
    pub deformer: &'a Deformer,
    pub oracle: &'a SyntheticOracle,
}

impl ProfileOracle<'_> {
    pub fn evaluate(&self, profile: &AirfoilProfile) -> Result<f64> {
        let x = self.deformer.project(profile)?;
        self.oracle.evaluate_slice(x.as_slice().expect("contiguous"))
    }
}

/// Flips the sign of `s̃ − μ` on every other coordinate, wherever the flipped
/// ordinate stays inside the control zone. The result keeps the member's
/// pointwise amplitudes but not its correlation structure. `None` when fewer
/// than two coordinates can be flipped.
pub fn kinked_profile(envelope: &BladeEnvelope, member: &AirfoilProfile) -> Result<Option<AirfoilProfile>> {
    let mu = envelope.mu();
    let (lo, hi) = (envelope.lower(), envelope.upper());
    let y = Array1::from(member.ordinates().to_vec());
    if y.len() != mu.len() {
        return Err(Error::DimensionMismatch { context: "kinked profile", expected: mu.len(), actual: y.len() });
    }
    let mut out = y.clone();
    let mut flipped = 0;
    for i in (1..y.len()).step_by(2) {
        let candidate = 2.0 * mu[i] - y[i];
        if candidate >= lo[i] && candidate <= hi[i] && candidate != y[i] {
            out[i] = candidate;
            flipped += 1;
        }
    }
    if flipped < 2 {
        return Ok(None);
    }
    envelope.profile_with(out.to_vec()).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::build_envelope;
    use crate::geometry::FfdLattice;
    use crate::subspace::{estimate_covariance_with, partition, subspace_angle, Rank};

    #[test]
    fn linear_at_its_direction() {
        let w = [0.6, 0.8, 0.0];
        let o = SyntheticOracle::linear(&w).unwrap();
        assert!((o.evaluate(&DesignVector::new(w.to_vec()).unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ridge_at_origin() {
        let o = SyntheticOracle::reference_ridge(20).unwrap();
        assert_eq!(o.evaluate(&DesignVector::zeros(20)).unwrap(), 0.0);
    }

    #[test]
    fn reference_direction_support() {
        let w = sparse_ridge_direction(20).unwrap();
        let nz: Vec<usize> = (0..20).filter(|&j| w[j] != 0.0).collect();
        assert_eq!(nz, vec![2, 5, 11, 14, 17]);
        assert!((dot(&w, &w) - 1.0).abs() < 1e-15);
        assert!(sparse_ridge_direction(3).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let o = SyntheticOracle::reference_ridge(6).unwrap().with_noise(0.01, 4).unwrap();
        let x = DesignVector::new(vec![0.1, 0.2, -0.3, 0.4, 0.0, 0.9]).unwrap();
        assert_eq!(o.evaluate(&x).unwrap(), o.evaluate(&x).unwrap());
        let clean = SyntheticOracle::reference_ridge(6).unwrap().evaluate(&x).unwrap();
        let noisy = o.evaluate(&x).unwrap();
        assert!(noisy != clean && (noisy - clean).abs() < 0.1);
    }

    #[test]
    fn noise_has_requested_spread() {
        let o = SyntheticOracle::linear(&[1.0, 0.0]).unwrap().with_noise(0.5, 1).unwrap();
        let designs = crate::ingest::doe_uniform(2, 4000, 2).unwrap();
        let resid: Vec<f64> = designs.iter().map(|x| o.evaluate(x).unwrap() - x.as_slice()[0]).collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((sd - 0.5).abs() < 0.03 && mean.abs() < 0.03, "{sd} {mean}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = crate::rng::seeded(3);
        use rand::Rng;
        for name in ["linear", "ridge", "quadratic-ridge"] {
            let o = SyntheticOracle::by_name(name, 7, 0).unwrap();
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = o.gradient(&x).unwrap();
            for j in 0..7 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += 1e-6;
                xm[j] -= 1e-6;
                let fd = (o.evaluate_slice(&xp).unwrap() - o.evaluate_slice(&xm).unwrap()) / 2e-6;
                assert!((fd - g[j]).abs() < 1e-7, "{name} {j}");
            }
        }
        assert!(SyntheticOracle::by_name("noisy-ridge", 3, 0).unwrap().gradient(&[0.0; 3]).is_err());
        assert!(SyntheticOracle::by_name("cfd", 3, 0).is_err());
    }

    #[test]
    fn true_subspaces() {
        let o = SyntheticOracle::linear(&[3.0, 4.0]).unwrap();
        let w = o.true_active_subspace().unwrap();
        assert_eq!(w.dim(), (2, 1));
        assert!((w[[0, 0]] - 0.6).abs() < 1e-15);
        let q = SyntheticOracle::quadratic_ridge(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        let b = q.true_active_subspace().unwrap();
        assert_eq!(b.dim(), (3, 2));
        let gram = b.t().dot(&b);
        assert!((gram - Array2::<f64>::eye(2)).iter().all(|v| v.abs() < 1e-14));
        assert!(b.column(0).iter().chain(b.column(1).iter()).zip([true, true, false, true, true, false]).all(|(v, nz)| nz || *v == 0.0));
        assert!(SyntheticOracle::by_name("noisy-ridge", 3, 0).unwrap().true_active_subspace().is_err());
    }

    #[test]
    fn covariance_eigenspace_is_the_true_subspace() {
        let o = SyntheticOracle::by_name("quadratic-ridge", 6, 0).unwrap();
        let c = estimate_covariance_with(6, 20_000, 1, |x| o.gradient(x)).unwrap();
        let p = partition(&c, Rank::Fixed(2)).unwrap();
        let truth = o.true_active_subspace().unwrap();
        assert!(subspace_angle(p.w().view(), truth.view()).unwrap() < 1e-10);
    }

    #[test]
    fn serde_uses_kind_tags() {
        let o = SyntheticOracle::reference_ridge(3).unwrap().with_noise(0.1, 9).unwrap();
        let text = serde_json::to_string(&o).unwrap();
        assert!(text.contains("\"kind\":\"additive-noise\"") && text.contains("\"kind\":\"ridge\""));
        assert_eq!(serde_json::from_str::<SyntheticOracle>(&text).unwrap(), o);
    }

    #[test]
    fn qoi_table_export() {
        let o = SyntheticOracle::by_name("ridge", 4, 0).unwrap();
        let designs = crate::ingest::doe_uniform(4, 5, 1).unwrap();
        let t = o.evaluate_table(&designs, "yp").unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.column("yp").unwrap()[2], o.evaluate(&designs[2]).unwrap());
    }

    #[test]
    fn profile_oracle_recovers_design_value() {
        let base = AirfoilProfile::synthetic_baseline(60);
        let lattice = FfdLattice::for_dimension(&base, 20, 0.015).unwrap();
        let deformer = Deformer::new(&base, &lattice).unwrap();
        let oracle = SyntheticOracle::reference_ridge(20).unwrap();
        let po = ProfileOracle { deformer: &deformer, oracle: &oracle };
        let x = crate::ingest::doe_uniform(20, 1, 5).unwrap().pop().unwrap();
        let prof = deformer.deform(&x).unwrap();
        assert!((po.evaluate(&prof).unwrap() - oracle.evaluate(&x).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn kinks_stay_in_zone_and_leave_the_span() {
        let base = AirfoilProfile::synthetic_baseline(60);
        let lattice = FfdLattice::for_dimension(&base, 20, 0.015).unwrap();
        let deformer = Deformer::new(&base, &lattice).unwrap();
        let members: Vec<AirfoilProfile> = crate::ingest::doe_uniform(20, 500, 8)
            .unwrap()
            .iter()
            .map(|x| deformer.deform(x).unwrap())
            .collect();
        let e = build_envelope(&members, &base).unwrap();
        for m in members.iter().take(10) {
            let kinked = kinked_profile(&e, m).unwrap().unwrap();
            assert!(e.in_control_zone(&kinked).unwrap().all_inside());
            assert!(e.mahalanobis(&kinked).unwrap() > 100.0 * e.mahalanobis(m).unwrap());
        }
    }
}
