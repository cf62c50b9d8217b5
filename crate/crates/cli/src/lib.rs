//! Experiment runner behind the `contact-gap` binary.
//!
//! A run is described by an [`ExperimentSpec`]: the experiment name, a
//! Monte Carlo config and experiment parameters. Specs come from built-in
//! defaults, an optional TOML file and command-line overrides, in that
//! order. Results land in `out/<experiment>/<timestamp>-<seed>/` as
//! `data.csv`, `manifest.json` and `fit.json`.

mod error;
mod experiments;
mod output;
mod spec;

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use contact_gap::estimators::MCConfig;
use serde_json::{json, Value};

pub use error::{CliError, ErrorReport};
pub use experiments::{execute, light_cone, refit, Artifacts};
pub use output::{code_version, write_run, CodeVersion, Manifest};
pub use spec::{
    default_grid, default_mc, Experiment, ExperimentSpec, Params, DEFAULT_HORIZON, DEFAULT_REPLICAS, GRID_STEP,
    SCHEMA_VERSION,
};

/// Fields of [`MCConfig`]; `--set` keys outside this list go to the
/// experiment parameters.
const MC_KEYS: [&str; 11] = [
    "dim",
    "lambda",
    "replicas",
    "seed",
    "t_grid",
    "burn_in",
    "probe_radius",
    "kappa",
    "survival_horizon",
    "t_min",
    "domain",
];

/// Command-line overrides, applied over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub lambda: Option<f64>,
    pub dim: Option<usize>,
    /// Replaces the time grid with `0, 0.5, …, horizon`.
    pub horizon: Option<f64>,
    /// `key=value` pairs with TOML values.
    pub sets: Vec<String>,
}

fn table_of(v: toml::Value, what: &str) -> Result<toml::Table, CliError> {
    match v {
        toml::Value::Table(t) => Ok(t),
        _ => Err(CliError::Config(format!("`{what}` must be a table"))),
    }
}

/// Build a spec from an optional TOML document and overrides.
///
/// The document may hold `experiment = "<name>"` (which must match),
/// an `[mc]` table with [`MCConfig`] fields and a `[params]` table with
/// [`Params`] fields.
pub fn build_spec(experiment: Experiment, config: Option<&str>, o: &Overrides) -> Result<ExperimentSpec, CliError> {
    let mut mc = table_of(
        toml::Value::try_from(default_mc()).map_err(|e| CliError::Config(e.to_string()))?,
        "mc",
    )?;
    let mut params = toml::Table::new();
    if let Some(text) = config {
        let mut doc: toml::Table = text.parse().map_err(|e| CliError::format("config file", e))?;
        if let Some(name) = doc.remove("experiment") {
            let name = name.as_str().ok_or_else(|| CliError::Config("`experiment` must be a string".into()))?;
            if name.parse::<Experiment>()? != experiment {
                return Err(CliError::Config(format!("config is for `{name}`, not `{experiment}`")));
            }
        }
        if let Some(m) = doc.remove("mc") {
            mc.extend(table_of(m, "mc")?);
        }
        if let Some(p) = doc.remove("params") {
            params = table_of(p, "params")?;
        }
        if let Some(k) = doc.keys().next() {
            return Err(CliError::Config(format!("unknown top-level key `{k}`")));
        }
    }
    if let Some(s) = o.seed {
        mc.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    if let Some(r) = o.replicas {
        mc.insert("replicas".into(), toml::Value::Integer(r as i64));
    }
    if let Some(l) = o.lambda {
        mc.insert("lambda".into(), toml::Value::Float(l));
    }
    if let Some(d) = o.dim {
        mc.insert("dim".into(), toml::Value::Integer(d as i64));
    }
    if let Some(h) = o.horizon {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(CliError::Config(format!("horizon must be non-negative, got {h}")));
        }
        let grid = default_grid(h, GRID_STEP).into_iter().map(toml::Value::Float).collect();
        mc.insert("t_grid".into(), toml::Value::Array(grid));
    }
    for kv in &o.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("`--set {kv}` is not key=value")))?;
        let k = k.trim();
        let value: toml::Value = format!("v = {v}")
            .parse::<toml::Table>()
            .map_err(|e| CliError::Config(format!("value of `{k}`: {e}")))?
            .remove("v")
            .expect("parsed key");
        if MC_KEYS.contains(&k) {
            mc.insert(k.into(), value);
        } else {
            params.insert(k.into(), value);
        }
    }
    let mc: MCConfig = toml::Value::Table(mc)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    let params: Params = toml::Value::Table(params)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    ExperimentSpec::resolve(experiment, mc, params)
}

/// Validate a spec and report the light-cone window radius `M` without
/// simulating.
pub fn dry_run(spec: &ExperimentSpec) -> Result<Value, CliError> {
    let (m, burn) = light_cone(spec)?;
    Ok(json!({
        "status": "dry-run",
        "experiment": spec.experiment,
        "light_cone_radius": m,
        "burn_in_radius": burn,
        "spec": spec,
    }))
}

/// Execute a spec and write its run directory.
pub fn run(spec: &ExperimentSpec, out: &Path, now: DateTime<Utc>) -> Result<(PathBuf, Value), CliError> {
    let artifacts = execute(spec)?;
    let dir = write_run(out, spec, &artifacts, now)?;
    let summary = json!({
        "status": "ok",
        "experiment": spec.experiment,
        "output_dir": dir.display().to_string(),
        "summary": artifacts.headline,
    });
    Ok((dir, summary))
}

/// Recompute the fits of a run directory from its `data.csv` and compare
/// with its `fit.json`.
pub fn refit_dir(dir: &Path) -> Result<Value, CliError> {
    let manifest = Manifest::load(&dir.join("manifest.json"))?;
    let csv_path = dir.join("data.csv");
    let csv = std::fs::read(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let fit = refit(&manifest.spec, &csv)?;
    let fit_path = dir.join("fit.json");
    let recorded: Value = serde_json::from_slice(&std::fs::read(&fit_path).map_err(|e| CliError::io(&fit_path, e))?)
        .map_err(|e| CliError::format("fit.json", e))?;
    let obj = fit.as_object().expect("refit returns an object");
    let matches = obj.iter().all(|(k, v)| recorded.get(k) == Some(v));
    Ok(json!({ "status": "ok", "fit": fit, "matches_recorded": matches }))
}
