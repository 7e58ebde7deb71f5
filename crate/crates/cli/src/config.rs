//! Pipeline configuration.

use std::path::{Path, PathBuf};

use blade_envelope::envelope::{Buffer, LogisticGate};
use blade_envelope::io::content_hash;
use blade_envelope::subspace::Rank;
use blade_envelope::surrogate::{Epsilon, IndexSetKind};
use blade_envelope::testbed::SyntheticOracle;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; each stage draws from `seed + offset`.
    pub seed: u64,
    pub design: DesignSpec,
    pub doe: DoeSpec,
    pub qoi: QoiSpec,
    pub surrogate: SurrogateSpec,
    pub subspace: SubspaceSpec,
    pub sampler: SamplerSpec,
    pub envelope: EnvelopeSpec,
    pub gating: GatingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSpec {
    pub d: usize,
    /// Lattice node displacement at unit design value, in chord units.
    pub amplitude: f64,
    pub points_per_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeSpec {
    pub k: usize,
    /// Leading rows used for fitting; the rest are held out.
    pub train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QoiSpec {
    Oracle {
        name: String,
    },
    /// Whitespace- or comma-separated numeric tables: one design per line, and
    /// the matching output rows.
    Table {
        designs: PathBuf,
        values: PathBuf,
        #[serde(default)]
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSpec {
    pub kind: IndexSetKind,
    pub p: u32,
    pub epsilon: Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceSpec {
    pub m: usize,
    pub r: Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSpec {
    /// Active coordinate; zeros when absent.
    pub u: Option<Vec<f64>>,
    pub h: usize,
    pub burn_in: usize,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BufferSpec {
    /// Square roots of chi-squared quantiles with dof = rank(S).
    Chi2 { lo_level: f64, hi_level: f64 },
    Fixed { zeta_lo: f64, zeta_hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GateSpec {
    Fixed { beta1: f64, beta2: f64, beta3: f64 },
    Calibrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub buffer: BufferSpec,
    /// Level of the reported chi-squared threshold.
    pub significance: f64,
    pub gate: GateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingSpec {
    /// Uniform random designs gated against the envelope.
    pub random: usize,
    /// Lattice dimension of the cross-parameterization profiles (0 disables).
    pub cross_d: usize,
    pub cross_count: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            design: DesignSpec::default(),
            doe: DoeSpec::default(),
            qoi: QoiSpec::default(),
            surrogate: SurrogateSpec::default(),
            subspace: SubspaceSpec::default(),
            sampler: SamplerSpec::default(),
            envelope: EnvelopeSpec::default(),
            gating: GatingSpec::default(),
        }
    }
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec { d: 20, amplitude: 0.015, points_per_side: 120 }
    }
}

impl Default for DoeSpec {
    fn default() -> Self {
        DoeSpec { k: 1000, train: 800 }
    }
}

impl Default for QoiSpec {
    fn default() -> Self {
        QoiSpec::Oracle { name: "ridge".into() }
    }
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        SurrogateSpec { kind: IndexSetKind::TotalOrder, p: 3, epsilon: Epsilon::Fixed(1e-6) }
    }
}

impl Default for SubspaceSpec {
    fn default() -> Self {
        SubspaceSpec { m: 100_000, r: Rank::Auto }
    }
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec { u: None, h: 5000, burn_in: 100, thin: 5 }
    }
}

impl Default for BufferSpec {
    fn default() -> Self {
        BufferSpec::Chi2 { lo_level: 0.99, hi_level: 0.9999 }
    }
}

impl Default for GateSpec {
    fn default() -> Self {
        let g = LogisticGate::default();
        GateSpec::Fixed { beta1: g.beta1, beta2: g.beta2, beta3: g.beta3 }
    }
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        EnvelopeSpec { buffer: BufferSpec::default(), significance: 0.99, gate: GateSpec::default() }
    }
}

impl Default for GatingSpec {
    fn default() -> Self {
        GatingSpec { random: 500, cross_d: 30, cross_count: 1000 }
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Doe,
    Evaluate,
    Fit,
    Subspace,
    Sample,
    Envelope,
    Gate,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Doe, Stage::Evaluate, Stage::Fit, Stage::Subspace, Stage::Sample, Stage::Envelope, Stage::Gate];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Doe => "doe",
            Stage::Evaluate => "evaluate",
            Stage::Fit => "fit",
            Stage::Subspace => "subspace",
            Stage::Sample => "sample",
            Stage::Envelope => "envelope",
            Stage::Gate => "gate",
        }
    }

    /// Offset added to the master seed for this stage's random streams.
    pub fn seed_offset(self) -> u64 {
        self as u64
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn seed_for(&self, stage: Stage) -> u64 {
        self.seed.wrapping_add(stage.seed_offset())
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let d = &self.design;
        if d.d < 2 {
            return bad(format!("design.d must be at least 2, got {}", d.d));
        }
        if !(d.amplitude > 0.0 && d.amplitude.is_finite()) {
            return bad(format!("design.amplitude must be positive, got {}", d.amplitude));
        }
        if d.points_per_side < 3 {
            return bad(format!("design.points_per_side must be at least 3, got {}", d.points_per_side));
        }
        if self.doe.k < 2 || self.doe.train == 0 || self.doe.train > self.doe.k {
            return bad(format!("doe needs 1 ≤ train ≤ k and k ≥ 2, got k={} train={}", self.doe.k, self.doe.train));
        }
        match &self.qoi {
            QoiSpec::Oracle { name } => {
                SyntheticOracle::by_name(name, d.d, 0).map_err(|e| CliError::config(format!("qoi.name: {e}")))?;
            }
            QoiSpec::Table { designs, values, .. } => {
                for p in [designs, values] {
                    if !p.exists() {
                        return bad(format!("qoi table {} does not exist", p.display()));
                    }
                }
            }
        }
        if self.surrogate.p == 0 {
            return bad("surrogate.p must be at least 1".into());
        }
        if let Epsilon::Fixed(e) = self.surrogate.epsilon {
            if !(e >= 0.0) {
                return bad(format!("surrogate.epsilon must be nonnegative, got {e}"));
            }
        }
        if self.subspace.m == 0 {
            return bad("subspace.m must be positive".into());
        }
        if let Rank::Fixed(r) = self.subspace.r {
            if r == 0 || r >= d.d {
                return bad(format!("subspace.r must lie in 1..{}, got {r}", d.d));
            }
        }
        let s = &self.sampler;
        if s.h < 2 || s.thin == 0 {
            return bad(format!("sampler needs h ≥ 2 and thin ≥ 1, got h={} thin={}", s.h, s.thin));
        }
        if let Some(u) = &s.u {
            if let Rank::Fixed(r) = self.subspace.r {
                if u.len() != r {
                    return bad(format!("sampler.u has {} entries but subspace.r = {r}", u.len()));
                }
            }
            if u.iter().any(|v| !v.is_finite()) {
                return bad("sampler.u must be finite".into());
            }
        }
        let e = &self.envelope;
        if !(e.significance > 0.0 && e.significance < 1.0) {
            return bad(format!("envelope.significance must lie in (0, 1), got {}", e.significance));
        }
        match e.buffer {
            BufferSpec::Chi2 { lo_level, hi_level } => {
                if !(lo_level > 0.0 && lo_level <= hi_level && hi_level < 1.0) {
                    return bad(format!("chi2 buffer levels need 0 < lo ≤ hi < 1, got ({lo_level}, {hi_level})"));
                }
            }
            BufferSpec::Fixed { zeta_lo, zeta_hi } => {
                Buffer::new(zeta_lo, zeta_hi).map_err(|e| CliError::config(format!("envelope.buffer: {e}")))?;
            }
        }
        if let GateSpec::Fixed { beta1, beta2, beta3 } = e.gate {
            LogisticGate::new(beta1, beta2, beta3).map_err(|e| CliError::config(format!("envelope.gate: {e}")))?;
        }
        if self.gating.cross_d == 1 {
            return bad("gating.cross_d must be 0 (disabled) or at least 2".into());
        }
        Ok(())
    }

    /// Hash of every setting that `stage` and the stages before it read.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let mut parts = vec![
            serde_json::to_string(&(self.seed, &self.design, &self.doe)).expect("serializes"),
            serde_json::to_string(&self.qoi).expect("serializes"),
        ];
        if stage == Stage::Doe {
            // designs come from the table when one is configured
            parts.truncate(if matches!(self.qoi, QoiSpec::Table { .. }) { 2 } else { 1 });
        }
        if stage >= Stage::Fit {
            parts.push(serde_json::to_string(&self.surrogate).expect("serializes"));
        }
        if stage >= Stage::Subspace {
            parts.push(serde_json::to_string(&self.subspace).expect("serializes"));
        }
        if stage >= Stage::Sample {
            parts.push(serde_json::to_string(&self.sampler).expect("serializes"));
        }
        if stage >= Stage::Envelope {
            parts.push(serde_json::to_string(&self.envelope).expect("serializes"));
        }
        if stage >= Stage::Gate {
            parts.push(serde_json::to_string(&self.gating).expect("serializes"));
        }
        content_hash(parts.join("\n").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(PipelineConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(PipelineConfig::from_json(r#"{"sed": 3}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"design": {"dim": 3}}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            r#"{"design": {"d": 1}}"#,
            r#"{"doe": {"k": 10, "train": 20}}"#,
            r#"{"qoi": {"source": "oracle", "name": "cfd"}}"#,
            r#"{"surrogate": {"kind": "cubic"}}"#,
            r#"{"surrogate": {"epsilon": "big"}}"#,
            r#"{"subspace": {"r": 20}}"#,
            r#"{"subspace": {"r": 2}, "sampler": {"u": [0.0]}}"#,
            r#"{"envelope": {"buffer": {"mode": "fixed", "zeta_lo": 5, "zeta_hi": 1}}}"#,
            r#"{"envelope": {"gate": {"mode": "fixed", "beta1": 1, "beta2": -5, "beta3": 3}}}"#,
            r#"{"envelope": {"significance": 1.5}}"#,
        ] {
            let err = PipelineConfig::from_json(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn stage_hashes_track_upstream_changes() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.sampler.h = 100;
        assert_eq!(a.stage_hash(Stage::Subspace), b.stage_hash(Stage::Subspace));
        assert_ne!(a.stage_hash(Stage::Sample), b.stage_hash(Stage::Sample));
        assert_ne!(a.stage_hash(Stage::Gate), b.stage_hash(Stage::Gate));
        let mut c = a.clone();
        c.seed = 9;
        assert_ne!(a.stage_hash(Stage::Doe), c.stage_hash(Stage::Doe));
    }
}
