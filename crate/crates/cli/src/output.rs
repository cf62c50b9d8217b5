use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiments::Artifacts;
use crate::spec::{ExperimentSpec, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeVersion {
    pub package: String,
    /// `git describe --always --dirty` of the source tree, or `unknown`.
    pub git_describe: String,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub created: String,
    pub code_version: CodeVersion,
    pub spec: ExperimentSpec,
}

pub fn code_version() -> CodeVersion {
    let git = Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    CodeVersion {
        package: env!("CARGO_PKG_VERSION").to_string(),
        git_describe: git.unwrap_or_else(|| "unknown".into()),
    }
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec, created: DateTime<Utc>) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            experiment: spec.experiment.name().to_string(),
            seed: spec.mc.seed,
            created: created.to_rfc3339(),
            code_version: code_version(),
            spec: spec.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::format("manifest", e))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::format(
                "manifest",
                format!("schema version {} (expected {SCHEMA_VERSION})", m.schema_version),
            ));
        }
        Ok(m)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("plain data serializes");
    s.push(b'\n');
    s
}

/// Write `data.csv`, `manifest.json` and `fit.json` under
/// `out/<experiment>/<timestamp>-<seed>/`. The files are written into a
/// hidden staging directory that is renamed into place at the end, so a
/// run directory is either complete or absent.
pub fn write_run(out: &Path, spec: &ExperimentSpec, artifacts: &Artifacts, now: DateTime<Utc>) -> Result<PathBuf, CliError> {
    let parent = out.join(spec.experiment.name());
    fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
    let stem = format!("{}-{}", now.format("%Y%m%dT%H%M%SZ"), spec.mc.seed);
    let staging = parent.join(format!(".staging-{stem}-{}", std::process::id()));
    fs::create_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
    write(&staging.join("data.csv"), &artifacts.csv)?;
    write(&staging.join("fit.json"), &pretty(&artifacts.fit))?;
    write(&staging.join("manifest.json"), &pretty(&Manifest::new(spec, now)))?;
    let mut target = parent.join(&stem);
    let mut k = 1;
    while target.exists() {
        k += 1;
        target = parent.join(format!("{stem}.{k}"));
    }
    fs::rename(&staging, &target).map_err(|e| CliError::io(&target, e))?;
    Ok(target)
}
