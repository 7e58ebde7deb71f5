//! Artifact files: names, headers with schema and input hashes, and checks
//! that upstream files exist and match the current configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use blade_envelope::io::{file_hash, read_file, write_file, Header, SCHEMA_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Stage;
use crate::error::{CliError, CliResult};

pub const CONFIG: &str = "config.resolved.json";
pub const BASELINE: &str = "baseline.csv";
pub const DESIGNS: &str = "designs.csv";
pub const QOI: &str = "qoi.csv";
pub const SURROGATE: &str = "surrogate.json";
pub const PARTITION: &str = "partition.json";
pub const SAMPLES: &str = "samples.csv";
pub const PROFILES: &str = "profiles.csv";
pub const SAMPLE_QOI: &str = "samples_qoi.csv";
pub const ENVELOPE: &str = "envelope.json";
pub const VERDICTS: &str = "verdicts.json";
pub const REPORT_DIR: &str = "report";

/// Every artifact the pipeline writes, for determinism checks.
pub const ALL: [&str; 11] =
    [CONFIG, BASELINE, DESIGNS, QOI, SURROGATE, PARTITION, SAMPLES, PROFILES, SAMPLE_QOI, ENVELOPE, VERDICTS];

/// JSON artifact wrapper.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonArtifact<T> {
    pub schema: u32,
    pub kind: String,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub data: T,
}

#[derive(Debug, Deserialize)]
struct JsonMeta {
    schema: u32,
    config_hash: String,
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Store { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> CliResult<()> {
        Ok(write_file(&self.path(name), text)?)
    }

    /// Hashes of the named upstream files.
    pub fn inputs(&self, names: &[&str]) -> CliResult<BTreeMap<String, String>> {
        names.iter().map(|&n| Ok((n.to_string(), file_hash(&self.path(n))?))).collect()
    }

    pub fn csv_header(&self, kind: &str, config_hash: &str, inputs: &BTreeMap<String, String>) -> Header {
        let mut h = Header::new(kind);
        h.set("config", config_hash);
        for (k, v) in inputs {
            h.set(&format!("in.{k}"), v);
        }
        h
    }

    fn read_upstream(&self, name: &str, stage: Stage) -> CliResult<String> {
        let path = self.path(name);
        if !path.exists() {
            return Err(CliError::upstream(stage.name(), format!("{} is missing", path.display())));
        }
        read_file(&path).map_err(|e| CliError::upstream(stage.name(), e.to_string()))
    }

    fn stale(&self, name: &str, stage: Stage) -> CliError {
        CliError::upstream(stage.name(), format!("{name} was produced under a different configuration"))
    }

    /// Reads a CSV artifact after checking its header.
    pub fn read_csv(&self, name: &str, stage: Stage, config_hash: &str) -> CliResult<String> {
        let text = self.read_upstream(name, stage)?;
        let first = text.lines().next().unwrap_or_default();
        let header = Header::parse(first).map_err(|e| CliError::upstream(stage.name(), format!("{name}: {e}")))?;
        if header.get("schema") != Some(SCHEMA_VERSION.to_string().as_str()) {
            return Err(CliError::upstream(stage.name(), format!("{name} has an unsupported schema version")));
        }
        if header.get("config") != Some(config_hash) {
            return Err(self.stale(name, stage));
        }
        Ok(text)
    }

    pub fn write_json<T: Serialize>(
        &self,
        name: &str,
        kind: &str,
        config_hash: &str,
        inputs: BTreeMap<String, String>,
        data: T,
    ) -> CliResult<()> {
        let artifact =
            JsonArtifact { schema: SCHEMA_VERSION, kind: kind.to_string(), config_hash: config_hash.to_string(), inputs, data };
        let mut text = serde_json::to_string_pretty(&artifact).map_err(blade_envelope::Error::from)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str, stage: Stage, config_hash: &str) -> CliResult<JsonArtifact<T>> {
        let text = self.read_upstream(name, stage)?;
        let meta: JsonMeta =
            serde_json::from_str(&text).map_err(|e| CliError::upstream(stage.name(), format!("{name}: {e}")))?;
        if meta.schema != SCHEMA_VERSION {
            return Err(CliError::upstream(stage.name(), format!("{name} has an unsupported schema version")));
        }
        if meta.config_hash != config_hash {
            return Err(self.stale(name, stage));
        }
        serde_json::from_str(&text).map_err(|e| CliError::upstream(stage.name(), format!("{name}: {e}")))
    }
}
