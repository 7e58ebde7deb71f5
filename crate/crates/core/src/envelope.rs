//! Blade envelopes: ensemble mean, tolerance covariance, control zone, and
//! the Mahalanobis/logistic gate built on them.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::geometry::AirfoilProfile;
use crate::numerics::{norm2, PsdPseudoInverse, SymmetricMatrix};
use crate::{Error, Result};

/// Relative eigenvalue cutoff of the covariance pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-10;
/// Slack on control-zone bounds.
pub const ZONE_TOL: f64 = 1e-12;

/// Single-pass mean and covariance (Welford).
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    n: usize,
    mean: Array1<f64>,
    /// Upper triangle of the centred second-moment sum.
    m2: Array2<f64>,
    min: Array1<f64>,
    max: Array1<f64>,
    history_every: usize,
    history: Vec<NormCheckpoint>,
}

/// `‖μ‖₂` and `‖S‖_F` after `count` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCheckpoint {
    pub count: usize,
    pub mean_norm: f64,
    pub cov_norm: f64,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator {
            n: 0,
            mean: Array1::zeros(dim),
            m2: Array2::zeros((dim, dim)),
            min: Array1::from_elem(dim, f64::INFINITY),
            max: Array1::from_elem(dim, f64::NEG_INFINITY),
            history_every: 0,
            history: Vec::new(),
        }
    }

    /// Also records norm checkpoints every `every` samples (0 disables).
    pub fn with_history(mut self, every: usize) -> Self {
        self.history_every = every;
        self
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: ArrayView1<'_, f64>) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { context: "accumulated sample", expected: n, actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("accumulated sample has non-finite entries"));
        }
        self.n += 1;
        let delta = &x - &self.mean;
        self.mean.scaled_add(1.0 / self.n as f64, &delta);
        let w = (self.n - 1) as f64 / self.n as f64;
        for i in 0..n {
            let di = w * delta[i];
            if di == 0.0 {
                continue;
            }
            let mut row = self.m2.row_mut(i);
            for j in i..n {
                row[j] += di * delta[j];
            }
        }
        for i in 0..n {
            self.min[i] = self.min[i].min(x[i]);
            self.max[i] = self.max[i].max(x[i]);
        }
        if self.history_every > 0 && self.n % self.history_every == 0 && self.n >= 2 {
            let cov = self.covariance()?;
            self.history.push(NormCheckpoint {
                count: self.n,
                mean_norm: norm2(self.mean.view()),
                cov_norm: cov.frobenius_norm(),
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn min(&self) -> &Array1<f64> {
        &self.min
    }

    pub fn max(&self) -> &Array1<f64> {
        &self.max
    }

    /// Sample covariance with divisor `H − 1`.
    pub fn covariance(&self) -> Result<SymmetricMatrix> {
        if self.n < 2 {
            return Err(Error::invalid(format!("covariance needs at least 2 samples, got {}", self.n)));
        }
        let n = self.dim();
        let scale = 1.0 / (self.n - 1) as f64;
        let mut c = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = self.m2[[i, j]] * scale;
                c[[i, j]] = v;
                c[[j, i]] = v;
            }
        }
        SymmetricMatrix::new(c)
    }

    pub fn history(&self) -> &[NormCheckpoint] {
        &self.history
    }
}

/// Largest relative change of `‖μ‖₂` and `‖S‖_F` between any checkpoint in the
/// last `fraction` of the samples and the final one.
pub fn tail_drift(history: &[NormCheckpoint], total: usize, fraction: f64) -> Option<(f64, f64)> {
    let last = history.last()?;
    let start = ((1.0 - fraction) * total as f64).floor() as usize;
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { (a - b).abs() / b };
    let mut drift = (0.0f64, 0.0f64);
    for c in history.iter().filter(|c| c.count >= start) {
        drift.0 = drift.0.max(rel(c.mean_norm, last.mean_norm));
        drift.1 = drift.1.max(rel(c.cov_norm, last.cov_norm));
    }
    Some(drift)
}

/// `β₁ / (1 + exp(−β₂(ζ − β₃)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticGate {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl Default for LogisticGate {
    fn default() -> Self {
        LogisticGate { beta1: 1.0, beta2: 5.0, beta3: 3.0 }
    }
}

impl LogisticGate {
    pub fn new(beta1: f64, beta2: f64, beta3: f64) -> Result<Self> {
        let g = LogisticGate { beta1, beta2, beta3 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta2 > 0.0 && self.beta3.is_finite() && self.beta1.is_finite() && self.beta2.is_finite()) {
            return Err(Error::invalid(format!("gate needs β₁ > 0, β₂ > 0 and finite β₃, got {self:?}")));
        }
        Ok(())
    }

    pub fn score(&self, zeta: f64) -> f64 {
        self.beta1 * sigmoid(self.beta2 * (zeta - self.beta3))
    }
}

pub fn gate_score(g: &LogisticGate, zeta: f64) -> f64 {
    g.score(zeta)
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᵗ)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// ζ band: use below `zeta_lo`, review up to `zeta_hi`, scrap above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Buffer {
    pub zeta_lo: f64,
    pub zeta_hi: f64,
}

impl Default for Buffer {
    fn default() -> Self {
        Buffer { zeta_lo: 3.5, zeta_hi: 7.0 }
    }
}

impl Buffer {
    pub fn new(zeta_lo: f64, zeta_hi: f64) -> Result<Self> {
        let b = Buffer { zeta_lo, zeta_hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_lo >= 0.0 && self.zeta_lo <= self.zeta_hi && self.zeta_hi.is_finite()) {
            return Err(Error::invalid(format!("buffer needs 0 ≤ zeta_lo ≤ zeta_hi, got {self:?}")));
        }
        Ok(())
    }

    /// Bounds at chi-squared significance levels for `dof` degrees of freedom.
    pub fn chi_squared(dof: usize, lo_level: f64, hi_level: f64) -> Result<Self> {
        Buffer::new(chi2_quantile(dof, lo_level)?.sqrt(), chi2_quantile(dof, hi_level)?.sqrt())
    }
}

/// Quantile of the chi-squared distribution by bisection on the regularized
/// lower incomplete gamma function.
pub fn chi2_quantile(dof: usize, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("significance must lie in (0, 1), got {level}")));
    }
    if dof == 0 {
        return Err(Error::invalid("chi-squared quantile needs at least one degree of freedom"));
    }
    let k = dof as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(k, x / 2.0);
    let mut hi = dof as f64 + 1.0;
    while cdf(hi) < level {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("chi-squared quantile bracket overflowed".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Use,
    Review,
    Scrap,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Use => "use",
            Verdict::Review => "review",
            Verdict::Scrap => "scrap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub id: String,
    /// Capped at `f64::MAX` so it survives JSON.
    pub zeta: f64,
    pub score: f64,
    pub verdict: Verdict,
    pub in_zone: bool,
    /// Zero-based coordinates outside the control zone.
    pub zone_violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneCheck {
    pub inside: Vec<bool>,
    pub violations: Vec<usize>,
}

impl ZoneCheck {
    pub fn all_inside(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BladeEnvelope {
    abscissae: Vec<f64>,
    n_suction: usize,
    mu: Array1<f64>,
    s: SymmetricMatrix,
    pinv: PsdPseudoInverse,
    c_l: Array1<f64>,
    c_u: Array1<f64>,
    h: usize,
    pub gate: LogisticGate,
    pub buffer: Buffer,
    pub provenance: BTreeMap<String, serde_json::Value>,
    history: Vec<NormCheckpoint>,
}

/// Streams profiles into an envelope.
pub struct EnvelopeBuilder {
    grid: AirfoilProfile,
    acc: MomentAccumulator,
}

impl EnvelopeBuilder {
    pub fn new(baseline: &AirfoilProfile) -> Self {
        EnvelopeBuilder { grid: baseline.clone(), acc: MomentAccumulator::new(baseline.len()) }
    }

    pub fn with_history(mut self, every: usize) -> Self {
        self.acc = self.acc.with_history(every);
        self
    }

    pub fn push(&mut self, profile: &AirfoilProfile) -> Result<()> {
        self.grid.check_same_grid(profile)?;
        self.acc.push(ArrayView1::from(profile.ordinates()))
    }

    pub fn finish(self) -> Result<BladeEnvelope> {
        let h = self.acc.count();
        if h < 2 {
            return Err(Error::invalid(format!("an envelope needs at least 2 profiles, got {h}")));
        }
        let s = self.acc.covariance()?;
        BladeEnvelope::from_parts(
            self.grid.abscissae().to_vec(),
            self.grid.suction_len(),
            self.acc.mean().clone(),
            s,
            self.acc.min().clone(),
            self.acc.max().clone(),
            h,
        )
        .map(|mut e| {
            e.history = self.acc.history().to_vec();
            e
        })
    }
}

/// Coordinate-wise mean, covariance (divisor `H − 1`) and min/max band.
pub fn build_envelope(profiles: &[AirfoilProfile], baseline: &AirfoilProfile) -> Result<BladeEnvelope> {
    let every = (profiles.len() / 100).max(1);
    let mut b = EnvelopeBuilder::new(baseline).with_history(every);
    for p in profiles {
        b.push(p)?;
    }
    b.finish()
}

impl BladeEnvelope {
    fn from_parts(
        abscissae: Vec<f64>,
        n_suction: usize,
        mu: Array1<f64>,
        s: SymmetricMatrix,
        c_l: Array1<f64>,
        c_u: Array1<f64>,
        h: usize,
    ) -> Result<Self> {
        let n = abscissae.len();
        if mu.len() != n || s.dim() != n || c_l.len() != n || c_u.len() != n {
            return Err(Error::invalid("envelope fields disagree in length"));
        }
        if n_suction > n {
            return Err(Error::invalid("suction-side length exceeds profile length"));
        }
        let pinv = PsdPseudoInverse::new(&s, PINV_RTOL)?;
        Ok(BladeEnvelope {
            abscissae,
            n_suction,
            mu,
            s,
            pinv,
            c_l,
            c_u,
            h,
            gate: LogisticGate::default(),
            buffer: Buffer::default(),
            provenance: BTreeMap::new(),
            history: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn mu(&self) -> &Array1<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.s
    }

    pub fn lower(&self) -> &Array1<f64> {
        &self.c_l
    }

    pub fn upper(&self) -> &Array1<f64> {
        &self.c_u
    }

    pub fn sample_count(&self) -> usize {
        self.h
    }

    pub fn rank(&self) -> usize {
        self.pinv.rank
    }

    pub fn pseudo_inverse(&self) -> &PsdPseudoInverse {
        &self.pinv
    }

    pub fn history(&self) -> &[NormCheckpoint] {
        &self.history
    }

    /// Profile with the mean ordinates on the envelope grid.
    pub fn mean_profile(&self) -> Result<AirfoilProfile> {
        self.profile_with(self.mu.to_vec())
    }

    pub fn profile_with(&self, ordinates: Vec<f64>) -> Result<AirfoilProfile> {
        if ordinates.len() != self.len() {
            return Err(Error::DimensionMismatch { context: "envelope ordinates", expected: self.len(), actual: ordinates.len() });
        }
        let k = self.n_suction;
        AirfoilProfile::new(
            (self.abscissae[..k].to_vec(), ordinates[..k].to_vec()),
            (self.abscissae[k..].to_vec(), ordinates[k..].to_vec()),
        )
    }

    fn check_grid(&self, profile: &AirfoilProfile) -> Result<()> {
        let same = profile.len() == self.len()
            && profile.suction_len() == self.n_suction
            && profile
                .abscissae()
                .iter()
                .zip(&self.abscissae)
                .all(|(a, b)| (a - b).abs() <= crate::geometry::ABSCISSA_TOL);
        if same {
            Ok(())
        } else {
            Err(Error::AbscissaMismatch("profile does not share the envelope abscissae; resample it first".into()))
        }
    }

    pub fn in_control_zone(&self, profile: &AirfoilProfile) -> Result<ZoneCheck> {
        self.check_grid(profile)?;
        let inside: Vec<bool> = profile
            .ordinates()
            .iter()
            .enumerate()
            .map(|(i, &y)| y >= self.c_l[i] - ZONE_TOL && y <= self.c_u[i] + ZONE_TOL)
            .collect();
        let violations = inside.iter().enumerate().filter(|(_, &ok)| !ok).map(|(i, _)| i).collect();
        Ok(ZoneCheck { inside, violations })
    }

    /// `ζ = √((s̃−μ)ᵀS⁺(s̃−μ) + ‖orth‖²/λ_floor)`, where `orth` is the part of
    /// `s̃−μ` outside the span of `S` and `λ_floor` the smallest retained
    /// eigenvalue.
    pub fn mahalanobis(&self, profile: &AirfoilProfile) -> Result<f64> {
        self.check_grid(profile)?;
        Ok(self.mahalanobis_ordinates(ArrayView1::from(profile.ordinates())))
    }

    pub fn mahalanobis_ordinates(&self, y: ArrayView1<'_, f64>) -> f64 {
        let v = &y - &self.mu;
        let (inside, orth_sq) = self.pinv.quadratic_form(v.view());
        let penalty = match self.pinv.floor_eigenvalue() {
            Some(floor) => orth_sq / floor,
            None if orth_sq == 0.0 => 0.0,
            None => f64::INFINITY,
        };
        (inside + penalty).sqrt()
    }

    /// `√χ²_rank(significance)`.
    pub fn chi2_threshold(&self, significance: f64) -> Result<f64> {
        Ok(chi2_quantile(self.rank(), significance)?.sqrt())
    }

    pub fn verdict(&self, id: &str, profile: &AirfoilProfile) -> Result<VerdictReport> {
        let zone = self.in_control_zone(profile)?;
        let zeta = self.mahalanobis(profile)?;
        let verdict = if !zone.all_inside() || zeta > self.buffer.zeta_hi {
            Verdict::Scrap
        } else if zeta < self.buffer.zeta_lo {
            Verdict::Use
        } else {
            Verdict::Review
        };
        Ok(VerdictReport {
            id: id.to_string(),
            zeta: zeta.min(f64::MAX),
            score: self.gate.score(zeta),
            verdict,
            in_zone: zone.all_inside(),
            zone_violations: zone.violations,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&EnvelopeFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<EnvelopeFile>(text)?.try_into()
    }
}

pub fn verdict(e: &BladeEnvelope, profile: &AirfoilProfile) -> Result<VerdictReport> {
    e.verdict("", profile)
}

/// JSON form; `S` is stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFile {
    pub abscissae: Vec<f64>,
    pub n_suction: usize,
    pub mu: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    pub c_l: Vec<f64>,
    pub c_u: Vec<f64>,
    pub rank: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub gate: LogisticGate,
    pub buffer: Buffer,
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub history: Vec<NormCheckpoint>,
}

impl From<&BladeEnvelope> for EnvelopeFile {
    fn from(e: &BladeEnvelope) -> Self {
        EnvelopeFile {
            abscissae: e.abscissae.clone(),
            n_suction: e.n_suction,
            mu: e.mu.to_vec(),
            s: e.s.as_array().iter().copied().collect(),
            c_l: e.c_l.to_vec(),
            c_u: e.c_u.to_vec(),
            rank: e.rank(),
            h: e.h,
            gate: e.gate,
            buffer: e.buffer,
            provenance: e.provenance.clone(),
            history: e.history.clone(),
        }
    }
}

impl TryFrom<EnvelopeFile> for BladeEnvelope {
    type Error = Error;
    fn try_from(f: EnvelopeFile) -> Result<Self> {
        let n = f.abscissae.len();
        if f.s.len() != n * n {
            return Err(Error::format("envelope", format!("S has {} entries, expected {}", f.s.len(), n * n)));
        }
        let s = SymmetricMatrix::new(Array2::from_shape_vec((n, n), f.s).expect("length checked"))?;
        f.gate.validate()?;
        f.buffer.validate()?;
        let mut e = BladeEnvelope::from_parts(
            f.abscissae,
            f.n_suction,
            Array1::from(f.mu),
            s,
            Array1::from(f.c_l),
            Array1::from(f.c_u),
            f.h,
        )?;
        if e.rank() != f.rank {
            return Err(Error::format("envelope", format!("stored rank {} but S has rank {}", f.rank, e.rank())));
        }
        e.gate = f.gate;
        e.buffer = f.buffer;
        e.provenance = f.provenance;
        e.history = f.history;
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateCalibration {
    pub gate: LogisticGate,
    /// Mean cross-entropy at the returned parameters.
    pub loss: f64,
    pub warning: Option<String>,
}

const RESTARTS: usize = 10;
const DESCENT_STEPS: usize = 3000;
/// Upper bound on the standardized slope, reached only by separable data.
const MAX_LOG_SLOPE: f64 = 9.0;

/// Fits `β₂, β₃` (with `β₁ = 1`) by minimizing the cross-entropy of the gate
/// score against labels use = 0, scrap = 1.
pub fn calibrate_gate(distances_use: &[f64], distances_scrap: &[f64], seed: u64) -> Result<GateCalibration> {
    if distances_use.is_empty() || distances_scrap.is_empty() {
        return Err(Error::invalid("gate calibration needs both use and scrap examples"));
    }
    let data: Vec<(f64, f64)> = distances_use
        .iter()
        .map(|&z| (z, 0.0))
        .chain(distances_scrap.iter().map(|&z| (z, 1.0)))
        .collect();
    if data.iter().any(|(z, _)| !z.is_finite()) {
        return Err(Error::invalid("gate calibration distances must be finite"));
    }
    let n = data.len() as f64;
    let mean = data.iter().map(|d| d.0).sum::<f64>() / n;
    let sd = (data.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    let std: Vec<(f64, f64)> = data.iter().map(|&(z, y)| ((z - mean) / scale, y)).collect();

    // standardized parameters: slope e^θ, centre c
    let loss = |theta: f64, c: f64| -> f64 {
        let k = theta.exp();
        std.iter().map(|&(z, y)| {
            let t = k * (z - c);
            softplus(t) - y * t
        }).sum::<f64>() / n
    };
    let grad = |theta: f64, c: f64| -> (f64, f64) {
        let k = theta.exp();
        let (mut gt, mut gc) = (0.0, 0.0);
        for &(z, y) in &std {
            let r = sigmoid(k * (z - c)) - y;
            gt += r * k * (z - c);
            gc -= r * k;
        }
        (gt / n, gc / n)
    };

    let zmin = std.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let zmax = std.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let mut rng = crate::rng::seeded(seed);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..RESTARTS {
        let mut theta: f64 = rng.random_range((0.1f64).ln()..=(10.0f64).ln());
        let mut c = if zmax > zmin { rng.random_range(zmin..=zmax) } else { zmin };
        let mut f = loss(theta, c);
        let mut step = 1.0;
        for _ in 0..DESCENT_STEPS {
            let (gt, gc) = grad(theta, c);
            let gn2 = gt * gt + gc * gc;
            if gn2 < 1e-24 {
                break;
            }
            // Armijo backtracking
            loop {
                let nt = (theta - step * gt).min(MAX_LOG_SLOPE);
                let nc = c - step * gc;
                let nf = loss(nt, nc);
                if nf <= f - 1e-4 * step * gn2 || step < 1e-12 {
                    if nf <= f {
                        theta = nt;
                        c = nc;
                        f = nf;
                    }
                    break;
                }
                step *= 0.5;
            }
            if step < 1e-12 {
                break;
            }
            step = (step * 2.0).min(1e3);
        }
        if f < best.0 {
            best = (f, theta, c);
        }
    }
    let (f, theta, c) = best;
    let gate = LogisticGate { beta1: 1.0, beta2: theta.exp() / scale, beta3: mean + scale * c };
    let p_scrap = distances_scrap.len() as f64 / n;
    let prior_entropy = -(p_scrap * p_scrap.ln() + (1.0 - p_scrap) * (1.0 - p_scrap).ln());
    let warning = (f >= prior_entropy * (1.0 - 1e-3)).then(|| {
        format!("use and scrap distances are inseparable (cross-entropy {f:.4} vs {prior_entropy:.4} for a constant gate)")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(GateCalibration { gate, loss: f, warning })
}
