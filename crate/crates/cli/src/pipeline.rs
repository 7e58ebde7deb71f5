//! The stages, each reading upstream artifacts and writing its own.

use std::collections::BTreeMap;
use std::path::Path;

use blade_envelope::envelope::{
    calibrate_gate, tail_drift, BladeEnvelope, Buffer, EnvelopeBuilder, EnvelopeFile, LogisticGate, Verdict,
    VerdictReport,
};
use blade_envelope::geometry::{resample_onto, AirfoilProfile, DesignVector, Deformer, FfdLattice};
use blade_envelope::ingest::{designs_from_csv, designs_to_csv, doe_uniform, import_plain_tables, QoiTable};
use blade_envelope::io::{fmt_f64, parse_f64, read_file, render_csv, CsvTable, Header};
use blade_envelope::rng::GENERATOR_NAME;
use blade_envelope::sampler::{build_polytope, SampleSet};
use blade_envelope::subspace::{estimate_covariance, partition, PartitionFile, SubspacePartition};
use blade_envelope::surrogate::{build_index_set, fit, r_squared, Surrogate, SurrogateFile};
use blade_envelope::testbed::{ProfileOracle, SyntheticOracle};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{self as art, Store};
use crate::config::{BufferSpec, GateSpec, PipelineConfig, QoiSpec, Stage};
use crate::error::{CliError, CliResult};
use crate::stats::spearman;

/// Name of the qoi column in `qoi.csv`.
pub const QOI_COLUMN: &str = "f";

/// Added to the gate-stage seed for the cross-parameterization designs.
const CROSS_STREAM: u64 = 0x5eed_0000;

/// Tail fraction of the accumulation used for the drift check.
const DRIFT_TAIL: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Validation {
    pub train: usize,
    pub test: usize,
    pub train_r_squared: f64,
    pub test_r_squared: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub surrogate: SurrogateFile,
    pub validation: Validation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatedProfile {
    pub group: String,
    #[serde(flatten)]
    pub report: VerdictReport,
    pub qoi: f64,
    /// `|qoi − nominal|`.
    pub qoi_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub count: usize,
    pub use_count: usize,
    pub review_count: usize,
    pub scrap_count: usize,
    pub use_rate: f64,
    /// Rank correlation between ζ and the qoi deviation.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateArtifact {
    /// Mean qoi over the envelope members.
    pub nominal_qoi: f64,
    pub chi2_threshold: f64,
    pub summaries: Vec<GroupSummary>,
    pub verdicts: Vec<GatedProfile>,
}

/// Per-sample qoi values written by the sample stage.
#[derive(Debug, Clone)]
pub struct SampleQoi {
    pub surrogate: Vec<f64>,
    pub oracle: Option<Vec<f64>>,
}

impl SampleQoi {
    /// Oracle values when available, otherwise the surrogate.
    pub fn best(&self) -> &[f64] {
        self.oracle.as_deref().unwrap_or(&self.surrogate)
    }
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub store: Store,
}

fn core<T>(r: blade_envelope::Result<T>) -> CliResult<T> {
    r.map_err(CliError::from)
}

impl Pipeline {
    /// Validates `cfg`, creates the output directory and writes the resolved
    /// configuration.
    pub fn new(cfg: PipelineConfig, out: &Path) -> CliResult<Self> {
        cfg.validate()?;
        let store = Store::new(out)?;
        store.write(art::CONFIG, &(cfg.to_json() + "\n"))?;
        Ok(Pipeline { cfg, store })
    }

    fn hash(&self, stage: Stage) -> String {
        self.cfg.stage_hash(stage)
    }

    fn oracle(&self) -> CliResult<Option<SyntheticOracle>> {
        match &self.cfg.qoi {
            QoiSpec::Oracle { name } => {
                Ok(Some(core(SyntheticOracle::by_name(name, self.cfg.design.d, self.cfg.seed_for(Stage::Evaluate)))?))
            }
            QoiSpec::Table { .. } => Ok(None),
        }
    }

    fn read_tables(&self) -> CliResult<(Vec<DesignVector>, QoiTable)> {
        let QoiSpec::Table { designs, values, column } = &self.cfg.qoi else {
            unreachable!("only called for table sources");
        };
        let read = |p: &Path| read_file(p).map_err(|e| CliError::config(e.to_string()));
        let (x, mut f) = import_plain_tables(&read(designs)?, &read(values)?, *column, QOI_COLUMN)
            .map_err(|e| CliError::config(format!("qoi tables: {e}")))?;
        let k = self.cfg.doe.k;
        if x.len() < k {
            return Err(CliError::config(format!("qoi tables hold {} designs but doe.k = {k}", x.len())));
        }
        if x[0].dim() != self.cfg.design.d {
            return Err(CliError::config(format!(
                "qoi tables have dimension {} but design.d = {}",
                x[0].dim(),
                self.cfg.design.d
            )));
        }
        f.ids.truncate(k);
        f.values.truncate(k);
        Ok((x.into_iter().take(k).collect(), f))
    }

    pub fn deformer_for(&self, baseline: &AirfoilProfile, d: usize) -> CliResult<Deformer> {
        let lattice = core(FfdLattice::for_dimension(baseline, d, self.cfg.design.amplitude))?;
        core(Deformer::new(baseline, &lattice))
    }

    // ---- loaders ----

    pub fn load_baseline(&self) -> CliResult<AirfoilProfile> {
        let text = self.store.read_csv(art::BASELINE, Stage::Doe, &self.hash(Stage::Doe))?;
        core(AirfoilProfile::from_csv(&text))
    }

    pub fn load_designs(&self) -> CliResult<Vec<DesignVector>> {
        let text = self.store.read_csv(art::DESIGNS, Stage::Doe, &self.hash(Stage::Doe))?;
        Ok(core(designs_from_csv(&text))?.0)
    }

    pub fn load_qoi(&self) -> CliResult<Vec<f64>> {
        let text = self.store.read_csv(art::QOI, Stage::Evaluate, &self.hash(Stage::Evaluate))?;
        core(core(QoiTable::from_csv(&text))?.0.column(QOI_COLUMN))
    }

    pub fn load_fit(&self) -> CliResult<(Surrogate, Validation)> {
        let a: art::JsonArtifact<FitArtifact> =
            self.store.read_json(art::SURROGATE, Stage::Fit, &self.hash(Stage::Fit))?;
        Ok((core(Surrogate::try_from(a.data.surrogate))?, a.data.validation))
    }

    pub fn load_surrogate(&self) -> CliResult<Surrogate> {
        Ok(self.load_fit()?.0)
    }

    pub fn load_partition(&self) -> CliResult<SubspacePartition> {
        let a: art::JsonArtifact<PartitionFile> =
            self.store.read_json(art::PARTITION, Stage::Subspace, &self.hash(Stage::Subspace))?;
        core(SubspacePartition::try_from(a.data))
    }

    pub fn load_samples(&self) -> CliResult<SampleSet> {
        let text = self.store.read_csv(art::SAMPLES, Stage::Sample, &self.hash(Stage::Sample))?;
        core(SampleSet::from_csv(&text))
    }

    pub fn load_profiles(&self) -> CliResult<Vec<AirfoilProfile>> {
        let text = self.store.read_csv(art::PROFILES, Stage::Sample, &self.hash(Stage::Sample))?;
        core(profiles_from_csv(&text, &self.load_baseline()?))
    }

    pub fn load_sample_qoi(&self) -> CliResult<SampleQoi> {
        let text = self.store.read_csv(art::SAMPLE_QOI, Stage::Sample, &self.hash(Stage::Sample))?;
        let t = core(CsvTable::parse(&text, "sample qoi"))?;
        let col = |name: &str| -> CliResult<Option<Vec<f64>>> {
            t.column(name)
                .map(|c| t.rows.iter().map(|r| core(parse_f64(&r[c], "sample qoi"))).collect())
                .transpose()
        };
        let surrogate =
            col("surrogate")?.ok_or_else(|| CliError::upstream("sample", "samples_qoi.csv lacks a surrogate column"))?;
        Ok(SampleQoi { surrogate, oracle: col("oracle")? })
    }

    pub fn load_envelope(&self) -> CliResult<BladeEnvelope> {
        let a: art::JsonArtifact<EnvelopeFile> =
            self.store.read_json(art::ENVELOPE, Stage::Envelope, &self.hash(Stage::Envelope))?;
        core(BladeEnvelope::try_from(a.data))
    }

    pub fn load_gate(&self) -> CliResult<GateArtifact> {
        Ok(self.store.read_json(art::VERDICTS, Stage::Gate, &self.hash(Stage::Gate))?.data)
    }

    // ---- stages ----

    pub fn doe(&self) -> CliResult<()> {
        let hash = self.hash(Stage::Doe);
        let baseline = AirfoilProfile::synthetic_baseline(self.cfg.design.points_per_side);
        let header = self.store.csv_header("baseline", &hash, &BTreeMap::new());
        self.store.write(art::BASELINE, &baseline.to_csv_with(header))?;

        let (designs, source) = match &self.cfg.qoi {
            QoiSpec::Oracle { .. } => {
                let seed = self.cfg.seed_for(Stage::Doe);
                (core(doe_uniform(self.cfg.design.d, self.cfg.doe.k, seed))?, format!("uniform:{GENERATOR_NAME}:{seed}"))
            }
            QoiSpec::Table { .. } => (self.read_tables()?.0, "table".to_string()),
        };
        let mut header = self.store.csv_header("design_matrix", &hash, &self.store.inputs(&[art::BASELINE])?);
        header.set("source", source);
        self.store.write(art::DESIGNS, &core(designs_to_csv(&designs, &header))?)?;
        log::info!("doe: {} designs in d = {}", designs.len(), self.cfg.design.d);
        Ok(())
    }

    pub fn evaluate(&self) -> CliResult<()> {
        let designs = self.load_designs()?;
        let table = match self.oracle()? {
            Some(o) => core(o.evaluate_table(&designs, QOI_COLUMN))?,
            None => self.read_tables()?.1,
        };
        let header =
            self.store.csv_header("qoi", &self.hash(Stage::Evaluate), &self.store.inputs(&[art::DESIGNS])?);
        self.store.write(art::QOI, &table.to_csv(&header))?;
        log::info!("evaluate: {} values", table.len());
        Ok(())
    }

    pub fn fit(&self) -> CliResult<Validation> {
        let designs = self.load_designs()?;
        let f = self.load_qoi()?;
        if f.len() != designs.len() {
            return Err(CliError::upstream("evaluate", "qoi.csv and designs.csv differ in length"));
        }
        let s = &self.cfg.surrogate;
        let basis = core(build_index_set(s.kind, self.cfg.design.d, s.p))?;
        let x = design_matrix(&designs);
        let f = Array1::from(f);
        let n = self.cfg.doe.train;
        log::info!("fit: {} terms on {n} designs", basis.len());
        let surrogate = core(fit(&basis, x.slice(ndarray::s![..n, ..]), f.slice(ndarray::s![..n]), s.epsilon))?;
        if let Some(w) = &surrogate.diagnostics().warning {
            log::warn!("fit: {w}");
        }
        let test_r_squared = if n < designs.len() {
            Some(core(r_squared(&surrogate, x.slice(ndarray::s![n.., ..]), f.slice(ndarray::s![n..])))?)
        } else {
            None
        };
        let validation = Validation {
            train: n,
            test: designs.len() - n,
            train_r_squared: surrogate.diagnostics().r_squared,
            test_r_squared,
        };
        log::info!("fit: train R² {:.6}, test R² {:?}", validation.train_r_squared, validation.test_r_squared);
        let data = FitArtifact { surrogate: SurrogateFile::from(&surrogate), validation: validation.clone() };
        self.store.write_json(
            art::SURROGATE,
            "surrogate",
            &self.hash(Stage::Fit),
            self.store.inputs(&[art::DESIGNS, art::QOI])?,
            data,
        )?;
        Ok(validation)
    }

    pub fn subspace(&self) -> CliResult<SubspacePartition> {
        let s = self.load_surrogate()?;
        let (m, seed) = (self.cfg.subspace.m, self.cfg.seed_for(Stage::Subspace));
        let c = core(estimate_covariance(&s, m, seed))?;
        let p = core(partition(&c, self.cfg.subspace.r))?.with_provenance(m, seed);
        log::info!("subspace: r = {} of d = {}", p.rank(), p.dim());
        self.store.write_json(
            art::PARTITION,
            "partition",
            &self.hash(Stage::Subspace),
            self.store.inputs(&[art::SURROGATE])?,
            PartitionFile::from(&p),
        )?;
        Ok(p)
    }

    /// The configured active coordinate, zeros by default.
    pub fn active_coordinate(&self, p: &SubspacePartition) -> CliResult<Vec<f64>> {
        match &self.cfg.sampler.u {
            None => Ok(vec![0.0; p.rank()]),
            Some(u) if u.len() == p.rank() => Ok(u.clone()),
            Some(u) => Err(CliError::config(format!("sampler.u has {} entries but the partition has r = {}", u.len(), p.rank()))),
        }
    }

    pub fn sample(&self) -> CliResult<()> {
        let p = self.load_partition()?;
        let s = self.load_surrogate()?;
        let baseline = self.load_baseline()?;
        let u = self.active_coordinate(&p)?;
        let poly = core(build_polytope(&p, &u))?;
        let sc = &self.cfg.sampler;
        let set = core(SampleSet::draw(&poly, sc.h, self.cfg.seed_for(Stage::Sample), sc.burn_in, sc.thin))?;
        let hash = self.hash(Stage::Sample);
        let mut extra = vec![("config", hash.clone())];
        let inputs = self.store.inputs(&[art::PARTITION, art::SURROGATE, art::BASELINE])?;
        let keys: Vec<String> = inputs.keys().map(|k| format!("in.{k}")).collect();
        extra.extend(keys.iter().map(String::as_str).zip(inputs.values().cloned()));
        self.store.write(art::SAMPLES, &core(set.to_csv(&extra))?)?;

        let deformer = self.deformer_for(&baseline, self.cfg.design.d)?;
        let profiles: Vec<AirfoilProfile> = core(set.designs.par_iter().map(|x| deformer.deform(x)).collect())?;
        let header = self.store.csv_header("profiles", &hash, &self.store.inputs(&[art::SAMPLES, art::BASELINE])?);
        self.store.write(art::PROFILES, &profiles_to_csv(&profiles, header))?;

        let surrogate: Vec<f64> = core(set.designs.par_iter().map(|x| s.predict(x)).collect())?;
        let oracle = match self.oracle()? {
            Some(o) => Some(core(set.designs.par_iter().map(|x| o.evaluate(x)).collect::<Result<Vec<_>, _>>())?),
            None => None,
        };
        let mut cols = vec!["design_id".to_string(), "surrogate".to_string()];
        if oracle.is_some() {
            cols.push("oracle".into());
        }
        let rows: Vec<Vec<String>> = (0..surrogate.len())
            .map(|i| {
                let mut r = vec![i.to_string(), fmt_f64(surrogate[i])];
                if let Some(o) = &oracle {
                    r.push(fmt_f64(o[i]));
                }
                r
            })
            .collect();
        let header = self.store.csv_header("sample_qoi", &hash, &self.store.inputs(&[art::SAMPLES, art::SURROGATE])?);
        self.store.write(art::SAMPLE_QOI, &render_csv(Some(&header), &cols, &rows))?;
        log::info!("sample: {} inactive designs at u = {u:?}", set.designs.len());
        Ok(())
    }

    pub fn envelope(&self) -> CliResult<BladeEnvelope> {
        let profiles = self.load_profiles()?;
        let baseline = self.load_baseline()?;
        let set = self.load_samples()?;
        let mut builder = EnvelopeBuilder::new(&baseline).with_history((profiles.len() / 100).max(1));
        for p in &profiles {
            core(builder.push(p))?;
        }
        let mut e = core(builder.finish())?;
        let rank = e.rank();
        let ec = &self.cfg.envelope;
        e.buffer = match ec.buffer {
            BufferSpec::Chi2 { lo_level, hi_level } => core(Buffer::chi_squared(rank, lo_level, hi_level))?,
            BufferSpec::Fixed { zeta_lo, zeta_hi } => core(Buffer::new(zeta_lo, zeta_hi))?,
        };
        let mut prov = BTreeMap::new();
        e.gate = match ec.gate {
            GateSpec::Fixed { beta1, beta2, beta3 } => core(LogisticGate::new(beta1, beta2, beta3))?,
            GateSpec::Calibrate => {
                let cal = self.calibrate(&e, &profiles, &baseline)?;
                prov.insert("gate_calibration_loss".into(), json!(cal.1));
                if let Some(w) = cal.2 {
                    log::warn!("envelope: {w}");
                    prov.insert("gate_calibration_warning".into(), json!(w));
                }
                cal.0
            }
        };
        let threshold = core(e.chi2_threshold(ec.significance))?;
        prov.insert("u".into(), json!(set.u));
        prov.insert("seed".into(), json!(set.seed));
        prov.insert("burn_in".into(), json!(set.burn_in));
        prov.insert("thin".into(), json!(set.thin));
        prov.insert("rank".into(), json!(rank));
        prov.insert("significance".into(), json!(ec.significance));
        prov.insert("chi2_threshold".into(), json!(threshold));
        if let Some((dm, ds)) = tail_drift(e.history(), e.sample_count(), DRIFT_TAIL) {
            prov.insert("drift_mean".into(), json!(dm));
            prov.insert("drift_cov".into(), json!(ds));
        }
        for (k, v) in self.store.inputs(&[art::PROFILES, art::SAMPLES, art::PARTITION, art::SURROGATE])? {
            prov.insert(format!("hash.{k}"), json!(v));
        }
        e.provenance = prov;
        log::info!("envelope: H = {}, rank {rank}, buffer ({:.3}, {:.3})", e.sample_count(), e.buffer.zeta_lo, e.buffer.zeta_hi);
        self.store.write_json(
            art::ENVELOPE,
            "envelope",
            &self.hash(Stage::Envelope),
            self.store.inputs(&[art::PROFILES])?,
            EnvelopeFile::from(&e),
        )?;
        Ok(e)
    }

    /// Labels: members and random designs whose surrogate deviation stays
    /// within the members' largest are `use`; the other random designs are
    /// `scrap`.
    fn calibrate(
        &self,
        e: &BladeEnvelope,
        profiles: &[AirfoilProfile],
        baseline: &AirfoilProfile,
    ) -> CliResult<(LogisticGate, f64, Option<String>)> {
        let s = self.load_surrogate()?;
        let member_f = self.load_sample_qoi()?.surrogate;
        let nominal = mean(&member_f);
        let limit = member_f.iter().map(|v| (v - nominal).abs()).fold(0.0, f64::max);
        let designs = core(doe_uniform(self.cfg.design.d, self.cfg.gating.random, self.cfg.seed_for(Stage::Envelope)))?;
        let deformer = self.deformer_for(baseline, self.cfg.design.d)?;
        let random: Vec<(f64, f64)> = core(
            designs
                .par_iter()
                .map(|x| Ok((e.mahalanobis(&deformer.deform(x)?)?, s.predict(x)?)))
                .collect::<blade_envelope::Result<Vec<_>>>(),
        )?;
        let mut use_z: Vec<f64> = core(profiles.par_iter().map(|p| e.mahalanobis(p)).collect())?;
        let mut scrap_z = Vec::new();
        for (z, f) in random {
            if (f - nominal).abs() > limit {
                scrap_z.push(z);
            } else {
                use_z.push(z);
            }
        }
        if scrap_z.is_empty() {
            return Err(CliError::Core(blade_envelope::Error::Numerical(
                "gate calibration found no random design outside the member qoi range".into(),
            )));
        }
        let cap = |v: &mut Vec<f64>| v.iter_mut().for_each(|z| *z = z.min(f64::MAX));
        cap(&mut use_z);
        cap(&mut scrap_z);
        let cal = core(calibrate_gate(&use_z, &scrap_z, self.cfg.seed_for(Stage::Envelope)))?;
        log::info!("envelope: calibrated gate {:?} on {} use / {} scrap", cal.gate, use_z.len(), scrap_z.len());
        Ok((cal.gate, cal.loss, cal.warning))
    }

    /// Qoi of an arbitrary profile: the oracle on its least-squares design
    /// when one is configured, otherwise the surrogate on the clamped design.
    fn profile_qoi(&self, deformer: &Deformer, oracle: Option<&SyntheticOracle>, s: &Surrogate, p: &AirfoilProfile) -> blade_envelope::Result<f64> {
        match oracle {
            Some(o) => ProfileOracle { deformer, oracle: o }.evaluate(p),
            None => {
                let x: Vec<f64> = deformer.project(p)?.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
                s.predict_slice(&x)
            }
        }
    }

    pub fn gate(&self, external: Option<&Path>) -> CliResult<GateArtifact> {
        let e = self.load_envelope()?;
        let profiles = self.load_profiles()?;
        let baseline = self.load_baseline()?;
        let s = self.load_surrogate()?;
        let member_f = self.load_sample_qoi()?.best().to_vec();
        let oracle = self.oracle()?;
        let d = self.cfg.design.d;
        let deformer = self.deformer_for(&baseline, d)?;
        let nominal = mean(&member_f);
        let seed = self.cfg.seed_for(Stage::Gate);

        let mut verdicts = Vec::new();
        let mut push_group = |group: &str, items: Vec<(VerdictReport, f64)>| {
            verdicts.extend(items.into_iter().map(|(report, qoi)| GatedProfile {
                group: group.to_string(),
                report,
                qoi,
                qoi_deviation: (qoi - nominal).abs(),
            }));
        };

        let members: Vec<(VerdictReport, f64)> = core(
            profiles
                .par_iter()
                .zip(&member_f)
                .enumerate()
                .map(|(i, (p, &f))| Ok((e.verdict(&format!("member-{i}"), p)?, f)))
                .collect(),
        )?;
        push_group("members", members);

        let g = &self.cfg.gating;
        if g.random > 0 {
            let designs = core(doe_uniform(d, g.random, seed))?;
            let items = core(
                designs
                    .par_iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let f = match &oracle {
                            Some(o) => o.evaluate(x)?,
                            None => s.predict(x)?,
                        };
                        Ok((e.verdict(&format!("random-{i}"), &deformer.deform(x)?)?, f))
                    })
                    .collect(),
            )?;
            push_group("random", items);
        }

        if g.cross_d > 0 && g.cross_count > 0 {
            let cross = self.deformer_for(&baseline, g.cross_d)?;
            let designs = core(doe_uniform(g.cross_d, g.cross_count, seed.wrapping_add(CROSS_STREAM)))?;
            let items = core(
                designs
                    .par_iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let p = cross.deform(x)?;
                        let f = self.profile_qoi(&deformer, oracle.as_ref(), &s, &p)?;
                        Ok((e.verdict(&format!("cross-{i}"), &p)?, f))
                    })
                    .collect(),
            )?;
            push_group("cross", items);
        }

        if let Some(path) = external {
            let text = read_file(path).map_err(|e| CliError::config(e.to_string()))?;
            let measured = read_external_profiles(&text, &baseline)
                .map_err(|err| CliError::config(format!("{}: {err}", path.display())))?;
            let items = core(
                measured
                    .par_iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let f = self.profile_qoi(&deformer, oracle.as_ref(), &s, p)?;
                        Ok((e.verdict(&format!("external-{i}"), p)?, f))
                    })
                    .collect(),
            )?;
            push_group("external", items);
        }

        let mut groups: Vec<String> = Vec::new();
        for v in &verdicts {
            if !groups.contains(&v.group) {
                groups.push(v.group.clone());
            }
        }
        let summaries = groups.iter().map(|g| summarize(g, &verdicts)).collect::<Vec<_>>();
        for s in &summaries {
            log::info!(
                "gate: {:<8} n = {:<5} use {:.3}  review {}  scrap {}  spearman {:?}",
                s.group,
                s.count,
                s.use_rate,
                s.review_count,
                s.scrap_count,
                s.spearman
            );
        }
        let artifact = GateArtifact {
            nominal_qoi: nominal,
            chi2_threshold: core(e.chi2_threshold(self.cfg.envelope.significance))?,
            summaries,
            verdicts,
        };
        let mut inputs = self.store.inputs(&[art::ENVELOPE, art::PROFILES, art::SAMPLE_QOI])?;
        if let Some(path) = external {
            inputs.insert("external".into(), core(blade_envelope::io::file_hash(path))?);
        }
        self.store.write_json(art::VERDICTS, "verdicts", &self.hash(Stage::Gate), inputs, &artifact)?;
        Ok(artifact)
    }

    pub fn run_all(&self) -> CliResult<()> {
        self.doe()?;
        self.evaluate()?;
        self.fit()?;
        self.subspace()?;
        self.sample()?;
        self.envelope()?;
        self.gate(None)?;
        crate::report::write_report(self)
    }
}

fn summarize(group: &str, verdicts: &[GatedProfile]) -> GroupSummary {
    let members: Vec<&GatedProfile> = verdicts.iter().filter(|v| v.group == group).collect();
    let count_of = |k: Verdict| members.iter().filter(|v| v.report.verdict == k).count();
    let zeta: Vec<f64> = members.iter().map(|v| v.report.zeta).collect();
    let dev: Vec<f64> = members.iter().map(|v| v.qoi_deviation).collect();
    let use_count = count_of(Verdict::Use);
    GroupSummary {
        group: group.to_string(),
        count: members.len(),
        use_count,
        review_count: count_of(Verdict::Review),
        scrap_count: count_of(Verdict::Scrap),
        use_rate: use_count as f64 / members.len().max(1) as f64,
        spearman: spearman(&zeta, &dev),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub fn design_matrix(designs: &[DesignVector]) -> Array2<f64> {
    let d = designs.first().map_or(0, DesignVector::dim);
    Array2::from_shape_fn((designs.len(), d), |(i, j)| designs[i].as_slice()[j])
}

/// Wide CSV: one row per profile, `profile_id,y1..yN` on the baseline grid.
pub fn profiles_to_csv(profiles: &[AirfoilProfile], header: Header) -> String {
    let n = profiles.first().map_or(0, AirfoilProfile::len);
    let header = header.with("points", n).with("n_suction", profiles.first().map_or(0, AirfoilProfile::suction_len));
    let mut cols = vec!["profile_id".to_string()];
    cols.extend((1..=n).map(|i| format!("y{i}")));
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| std::iter::once(i.to_string()).chain(p.ordinates().iter().map(|&v| fmt_f64(v))).collect())
        .collect();
    render_csv(Some(&header), &cols, &rows)
}

pub fn profiles_from_csv(text: &str, grid: &AirfoilProfile) -> blade_envelope::Result<Vec<AirfoilProfile>> {
    let t = CsvTable::parse(text, "profiles")?;
    if t.columns.first().map(String::as_str) != Some("profile_id") || t.columns.len() != grid.len() + 1 {
        return Err(blade_envelope::Error::Format {
            what: "profiles".into(),
            detail: format!("expected `profile_id` and {} ordinate columns", grid.len()),
        });
    }
    t.rows
        .iter()
        .map(|r| grid.with_ordinates(r[1..].iter().map(|v| parse_f64(v, "ordinate")).collect::<blade_envelope::Result<_>>()?))
        .collect()
}

/// Measured profiles: either the wide layout on the baseline grid, or a
/// single `side,x,y` profile resampled onto it.
pub fn read_external_profiles(text: &str, grid: &AirfoilProfile) -> blade_envelope::Result<Vec<AirfoilProfile>> {
    let first = text.lines().find(|l| !l.starts_with('#')).unwrap_or_default();
    if first.trim_start().starts_with("profile_id") {
        profiles_from_csv(text, grid)
    } else {
        Ok(vec![resample_onto(&AirfoilProfile::from_csv(text)?, grid)?])
    }
}
