use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use shortvid::batch::AggregateRow;
use shortvid::engine::SessionAbort;
use shortvid::prelude::*;
use shortvid::retention::ModelSet;
use shortvid::trace::{behavior_to_csv, generate_scenario};
use shortvid::workload::{default_profiles, scenario_traces, Workload, WorkloadParams};

use crate::inputs::{self, read, sha256_hex, write};
use crate::{CompareArgs, GenArgs, Internal, RunArgs, WorkloadArgs};

pub fn model_build(behavior: &Path, out: &Path) -> Result<()> {
    let traces = inputs::load_behavior(behavior)?;
    let models = ModelSet::build(&traces)?;
    for m in models.categories() {
        let path = out.join(format!("{}.json", file_safe(m.category())));
        write(&path, &serde_json::to_string_pretty(m)?)?;
        println!("{} ({} traces) -> {}", m.category(), m.trace_count(), path.display());
    }
    Ok(())
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let kind: ScenarioKind = args.scenario.parse()?;
    if args.count == 0 {
        bail!("count must be at least 1");
    }
    for t in scenario_traces(kind, args.seed, args.count, args.duration)? {
        let path = args.out.join(format!("{}.csv", t.id));
        write(&path, &t.trace.to_csv())?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn workload(args: &WorkloadArgs) -> Result<()> {
    let mut params = WorkloadParams::default();
    if let Some(n) = args.script_count {
        params.scripts = n;
    }
    if let Some(n) = args.videos_per_script {
        params.videos_per_script = n;
    }
    let w = Workload::with_params(args.seed, params, default_profiles())?;
    let files = [
        ("catalog.json", serde_json::to_string_pretty(&w.catalog)?),
        ("behavior.csv", behavior_to_csv(&w.training)),
        ("scripts.json", serde_json::to_string_pretty(&w.scripts)?),
    ];
    for (name, contents) in files {
        let path = args.out.join(name);
        write(&path, &contents)?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<()> {
    let config = inputs::load_config(&args.inputs, None)?;
    let strategy = inputs::parse_strategies(std::slice::from_ref(&args.strategy), &args.inputs)?[0];
    let explicit = inputs::explicit_models(&args.inputs)?;
    let (scripts, models) = match (&args.inputs.scripts, explicit) {
        (Some(path), Some(models)) => (inputs::load_scripts(path)?, models),
        (Some(_), None) => bail!("--scripts needs --models or --behavior"),
        (None, explicit) => {
            let w = Workload::synthetic(args.seed)?;
            (w.scripts, explicit.unwrap_or(w.models))
        }
    };
    let script = match &args.script_id {
        Some(id) => scripts
            .iter()
            .find(|s| &s.id == id)
            .with_context(|| format!("no script with id `{id}`"))?,
        None => &scripts[0],
    };
    let trace = match &args.trace {
        Some(path) => inputs::load_trace(path)?,
        None => generate_scenario(args.scenario.parse()?, args.seed, args.duration)?,
    };
    let result = run_session(script, &trace, &strategy, &config, &models).map_err(|e| match e {
        SessionAbort::InvalidAction { .. } | SessionAbort::EventBudget(_) => {
            anyhow::Error::new(Internal(e.to_string()))
        }
        other => anyhow::Error::new(other),
    })?;
    for v in &result.videos {
        if v.cost_kbit != v.watched_kbit + v.waste_kbit {
            return Err(Internal(format!("cost of {} is not watched + waste", v.id)).into());
        }
    }
    println!("strategy      {}", result.strategy);
    println!("script        {}", result.script_id);
    println!("videos        {}", result.videos.len());
    println!("qoe           {:.3}", result.qoe);
    println!("cost_mbit     {:.3}", result.cost_mbit);
    println!("waste_mbit    {:.3}", result.waste_mbit);
    println!("rebuffer_s    {:.3}", result.rebuffer_s);
    println!("utility       {:.3}", result.utility);
    println!("wall_s        {:.3}", result.total_wall_s);
    if let Some(out) = &args.out {
        write(out, &serde_json::to_string_pretty(&result)?)?;
    }
    Ok(())
}

/// Comparison inputs. Every field is optional; relative paths resolve
/// against the manifest's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Manifest {
    config: Option<PathBuf>,
    strategies: Vec<String>,
    scenarios: Vec<String>,
    seeds: Vec<u64>,
    scripts: Option<PathBuf>,
    traces: Option<PathBuf>,
    models: Option<PathBuf>,
    behavior: Option<PathBuf>,
    trace_count: Option<usize>,
    duration: Option<f64>,
    script_count: Option<usize>,
    fixb_current: Option<usize>,
    fixb_next: Option<usize>,
    out: Option<PathBuf>,
}

impl Manifest {
    fn load(path: &Path) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(&read(path)?)
            .with_context(|| format!("{} is not a valid manifest", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut m.config,
            &mut m.scripts,
            &mut m.traces,
            &mut m.models,
            &mut m.behavior,
            &mut m.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }
}

/// Everything that determines the results, with file inputs replaced by
/// their digests. Its hash tags every report.
#[derive(Serialize)]
struct Resolved<'a> {
    strategies: &'a [StrategyKind],
    scenarios: Vec<&'static str>,
    seeds: &'a [u64],
    config: &'a SessionConfig,
    scripts_sha256: String,
    models_sha256: String,
    traces: Vec<(String, String)>,
}

#[derive(Serialize)]
struct AggregateReport<'a> {
    manifest_sha256: &'a str,
    aggregates: &'a [AggregateRow],
}

#[derive(Serialize)]
struct SessionReport<'a> {
    manifest_sha256: &'a str,
    rows: &'a [shortvid::batch::SessionRow],
}

#[derive(Serialize)]
struct ManifestRecord<'a> {
    sha256: &'a str,
    resolved: &'a Resolved<'a>,
}

/// Trace seeds for generated traces: each run seed owns a block of
/// 10 000 consecutive trace seeds.
const TRACE_SEED_BLOCK: u64 = 10_000;

pub fn compare(args: &CompareArgs) -> Result<()> {
    let m = match &args.manifest {
        Some(p) => Manifest::load(p)?,
        None => Manifest::default(),
    };
    let mut session_inputs = crate::SessionInputs {
        config: args.inputs.config.clone(),
        overrides: args.inputs.overrides.clone(),
        scripts: args.inputs.scripts.clone().or(m.scripts),
        models: args.inputs.models.clone().or(m.models),
        behavior: args.inputs.behavior.clone().or(m.behavior),
        fixb_current: args.inputs.fixb_current.or(m.fixb_current),
        fixb_next: args.inputs.fixb_next.or(m.fixb_next),
    };
    let config = inputs::load_config(&session_inputs, m.config.as_deref())?;
    let strategy_names = pick(&args.strategy, m.strategies);
    let strategy_names = if strategy_names.is_empty() {
        StrategyKind::NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        strategy_names
    };
    let strategies = inputs::parse_strategies(&strategy_names, &session_inputs)?;
    let scenarios = inputs::parse_scenarios(&pick(&args.scenario, m.scenarios))?;
    let seeds = pick(&args.seed, m.seeds);
    let seeds = if seeds.is_empty() { vec![1] } else { seeds };
    let out = args.out.clone().or(m.out).context("--out is required")?;

    let mut params = WorkloadParams::default();
    if let Some(n) = args.script_count.or(m.script_count) {
        params.scripts = n;
    }
    if let Some(n) = args.trace_count.or(m.trace_count) {
        params.traces_per_scenario = n;
    }
    if let Some(d) = args.duration.or(m.duration) {
        params.trace_duration_s = d;
    }
    if params.traces_per_scenario == 0 || params.scripts == 0 {
        bail!("trace and script counts must be at least 1");
    }

    let explicit = inputs::explicit_models(&session_inputs)?;
    let (scripts, models) = match (session_inputs.scripts.take(), explicit) {
        (Some(path), Some(models)) => (inputs::load_scripts(&path)?, models),
        (Some(_), None) => bail!("--scripts needs --models or --behavior"),
        (None, explicit) => {
            let w = Workload::with_params(seeds[0], params.clone(), default_profiles())?;
            (w.scripts, explicit.unwrap_or(w.models))
        }
    };
    let traces = match args.traces.clone().or(m.traces) {
        Some(dir) => inputs::load_trace_dir(&dir, &scenarios)?,
        None => {
            let mut all = Vec::new();
            for &kind in &scenarios {
                for &seed in &seeds {
                    let base = seed.checked_mul(TRACE_SEED_BLOCK).context("seed too large")?;
                    let ts = scenario_traces(kind, base, params.traces_per_scenario, params.trace_duration_s)?;
                    all.extend(ts.into_iter().enumerate().map(|(i, mut t)| {
                        t.id = format!("{kind}_{seed}_{i:03}");
                        t
                    }));
                }
            }
            all
        }
    };

    let resolved = Resolved {
        strategies: &strategies,
        scenarios: scenarios.iter().map(|k| k.as_str()).collect(),
        seeds: &seeds,
        config: &config,
        scripts_sha256: sha256_hex(serde_json::to_string(&scripts)?.as_bytes()),
        models_sha256: sha256_hex(serde_json::to_string(&models)?.as_bytes()),
        traces: traces
            .iter()
            .map(|t| (t.id.clone(), sha256_hex(t.trace.to_csv().as_bytes())))
            .collect(),
    };
    let hash = sha256_hex(serde_json::to_string(&resolved)?.as_bytes());

    let report = run_batch(&scripts, &traces, &strategies, &config, &models, seeds[0])?;
    let expected = strategies.len() * traces.len() * scripts.len();
    if report.rows.len() != expected {
        return Err(Internal(format!("{} session rows, expected {expected}", report.rows.len())).into());
    }

    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&ManifestRecord {
            sha256: &hash,
            resolved: &resolved,
        })?,
    )?;
    write(&out.join("sessions.csv"), &report.sessions_csv())?;
    write(
        &out.join("sessions.json"),
        &serde_json::to_string_pretty(&SessionReport {
            manifest_sha256: &hash,
            rows: &report.rows,
        })?,
    )?;
    write(&out.join("aggregates.csv"), &report.aggregates_csv())?;
    write(
        &out.join("aggregates.json"),
        &serde_json::to_string_pretty(&AggregateReport {
            manifest_sha256: &hash,
            aggregates: &report.aggregates,
        })?,
    )?;
    let table = utility_table(&report.aggregates, &strategies, &scenarios);
    write(&out.join("utility_table.csv"), &table)?;

    let aborted: usize = report.aggregates.iter().map(|a| a.aborted).sum();
    print!("{table}");
    println!("{} sessions, {aborted} aborted, manifest {hash}", report.rows.len());
    println!("reports in {}", out.display());
    Ok(())
}

/// Mean utility with one row per strategy and one column per scenario.
fn utility_table(aggregates: &[AggregateRow], strategies: &[StrategyKind], scenarios: &[ScenarioKind]) -> String {
    let mut out = String::from("strategy");
    for k in scenarios {
        out.push(',');
        out.push_str(k.as_str());
    }
    out.push('\n');
    let mut seen: Vec<&str> = Vec::new();
    for s in strategies {
        let name = s.label();
        if seen.contains(&name) {
            continue;
        }
        seen.push(name);
        out.push_str(name);
        for k in scenarios {
            out.push(',');
            if let Some(a) = aggregates
                .iter()
                .find(|a| a.strategy == name && a.scenario == k.as_str())
            {
                out.push_str(&a.mean_utility.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn pick<T: Clone>(flag: &[T], manifest: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        manifest
    } else {
        flag.to_vec()
    }
}

fn file_safe(category: &str) -> String {
    category
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
