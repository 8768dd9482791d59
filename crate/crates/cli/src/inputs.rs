//! Loading and resolving command inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::Value;
use sha2::{Digest, Sha256};
use shortvid::prelude::*;
use shortvid::retention::ModelSet;
use shortvid::trace::{parse_behavior_traces, parse_throughput_trace};

use crate::SessionInputs;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Config file fields, then `--set` overrides, validated.
pub fn load_config(inputs: &SessionInputs, manifest_config: Option<&Path>) -> Result<SessionConfig> {
    let path = inputs.config.as_deref().or(manifest_config);
    let mut value = match path {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("{} is not valid JSON", p.display()))?,
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut value else {
        bail!("config must be a JSON object");
    };
    for o in &inputs.overrides {
        let Some((key, raw)) = o.split_once('=') else {
            bail!("override `{o}` is not KEY=VALUE");
        };
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.trim().to_string(), parsed);
    }
    let config: SessionConfig = serde_json::from_value(value).context("invalid config")?;
    config.validate()?;
    Ok(config)
}

pub fn parse_strategies(names: &[String], inputs: &SessionInputs) -> Result<Vec<StrategyKind>> {
    if names.is_empty() {
        bail!(
            "at least one strategy is required (valid: {})",
            StrategyKind::NAMES.join(", ")
        );
    }
    let current = inputs.fixb_current.unwrap_or(4);
    let next = inputs.fixb_next.unwrap_or(2);
    let mut out: Vec<StrategyKind> = Vec::new();
    for n in names {
        let s = StrategyKind::parse_with(n, current, next)?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn parse_scenarios(names: &[String]) -> Result<Vec<ScenarioKind>> {
    if names.is_empty() {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    let mut out: Vec<ScenarioKind> = Vec::new();
    for n in names {
        let k: ScenarioKind = n.parse()?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    // Reports follow the fixed scenario order regardless of flag order.
    out.sort();
    Ok(out)
}

pub fn load_scripts(path: &Path) -> Result<Vec<SessionScript>> {
    let scripts: Vec<SessionScript> =
        serde_json::from_str(&read(path)?).with_context(|| format!("{} is not a valid script list", path.display()))?;
    if scripts.is_empty() {
        bail!("{} holds no scripts", path.display());
    }
    Ok(scripts)
}

pub fn load_behavior(path: &Path) -> Result<Vec<BehaviorTrace>> {
    let traces = parse_behavior_traces(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if traces.is_empty() {
        bail!("{} holds no behavior traces", path.display());
    }
    Ok(traces)
}

/// A model file, or every `*.json` in a directory.
pub fn load_models(path: &Path) -> Result<ModelSet> {
    let files = if path.is_dir() {
        json_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    let models = files
        .iter()
        .map(|f| serde_json::from_str(&read(f)?).with_context(|| format!("{} is not a valid model", f.display())))
        .collect::<Result<Vec<RetentionModel>>>()?;
    Ok(ModelSet::from_models(models)?)
}

/// Models from `--models`, else from `--behavior`, else `None`.
pub fn explicit_models(inputs: &SessionInputs) -> Result<Option<ModelSet>> {
    match (&inputs.models, &inputs.behavior) {
        (Some(m), _) => load_models(m).map(Some),
        (None, Some(b)) => Ok(Some(ModelSet::build(&load_behavior(b)?)?)),
        (None, None) => Ok(None),
    }
}

pub fn load_trace(path: &Path) -> Result<ThroughputTrace> {
    parse_throughput_trace(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Every `<scenario>_*.csv` in `dir` whose scenario is selected, sorted by
/// file name.
pub fn load_trace_dir(dir: &Path, scenarios: &[ScenarioKind]) -> Result<Vec<LabeledTrace>> {
    if !dir.is_dir() {
        bail!("trace directory {} does not exist", dir.display());
    }
    let mut out = Vec::new();
    for path in files_with_extension(dir, "csv")? {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let prefix = stem.split('_').next().unwrap_or_default();
        let kind: ScenarioKind = prefix
            .parse()
            .with_context(|| format!("{}: file name must start with a scenario kind", path.display()))?;
        if scenarios.contains(&kind) {
            out.push(LabeledTrace {
                id: stem,
                scenario: kind.to_string(),
                trace: load_trace(&path)?,
            });
        }
    }
    // Keep the scenario order of the report, then file order.
    out.sort_by_key(|t| t.scenario.parse::<ScenarioKind>().ok());
    if out.is_empty() {
        bail!("no traces for the selected scenarios in {}", dir.display());
    }
    Ok(out)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let files = files_with_extension(dir, "json")?;
    if files.is_empty() {
        bail!("no model files in {}", dir.display());
    }
    Ok(files)
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == ext));
    files.sort();
    Ok(files)
}
