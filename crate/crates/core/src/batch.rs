//! Cross-product evaluation: every script against every trace under every
//! strategy, aggregated per strategy and scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_session, SessionScript};
use crate::error::{Error, Result};
use crate::retention::ModelSet;
use crate::strategy::{Strategy, StrategyKind};
use crate::trace::{ScenarioKind, ThroughputTrace};
use crate::types::SessionConfig;

pub const SESSION_CSV_HEADER: &str = "strategy,scenario,script_id,trace_id,qoe,cost_mbit,waste_mbit,utility,rebuffer_s";
pub const AGGREGATE_CSV_HEADER: &str =
    "strategy,scenario,sessions,aborted,mean_qoe,p10_qoe,p50_qoe,p90_qoe,mean_cost_mbit,mean_waste_mbit,mean_utility,p50_utility,mean_rebuffer_s";

/// A bandwidth trace with an identifier and the scenario it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrace {
    pub id: String,
    pub scenario: String,
    pub trace: ThroughputTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub qoe: f64,
    pub cost_mbit: f64,
    pub waste_mbit: f64,
    pub utility: f64,
    pub rebuffer_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub strategy: String,
    pub scenario: String,
    pub script_id: String,
    pub trace_id: String,
    /// `None` when the session aborted; see `abort`.
    pub metrics: Option<SessionMetrics>,
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub scenario: String,
    pub sessions: usize,
    pub aborted: usize,
    pub mean_qoe: f64,
    pub p10_qoe: f64,
    pub p50_qoe: f64,
    pub p90_qoe: f64,
    pub mean_cost_mbit: f64,
    pub mean_waste_mbit: f64,
    pub mean_utility: f64,
    pub p50_utility: f64,
    pub mean_rebuffer_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seed: u64,
    pub rows: Vec<SessionRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl BatchReport {
    pub fn aggregate(&self, strategy: &str, scenario: &str) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.strategy == strategy && a.scenario == scenario)
    }

    pub fn sessions_csv(&self) -> String {
        let mut out = String::from(SESSION_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let metrics = match r.metrics {
                Some(m) => format!(
                    "{},{},{},{},{}",
                    m.qoe, m.cost_mbit, m.waste_mbit, m.utility, m.rebuffer_s
                ),
                None => ",,,,".to_string(),
            };
            out.push_str(&format!(
                "{},{},{},{},{metrics}\n",
                r.strategy, r.scenario, r.script_id, r.trace_id
            ));
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from(AGGREGATE_CSV_HEADER);
        out.push('\n');
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                a.strategy,
                a.scenario,
                a.sessions,
                a.aborted,
                a.mean_qoe,
                a.p10_qoe,
                a.p50_qoe,
                a.p90_qoe,
                a.mean_cost_mbit,
                a.mean_waste_mbit,
                a.mean_utility,
                a.p50_utility,
                a.mean_rebuffer_s
            ));
        }
        out
    }
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Orders scenarios high, medium, low, mixed, then anything else by name.
fn scenario_rank(s: &str) -> (usize, &str) {
    match s.parse::<ScenarioKind>() {
        Ok(k) => (ScenarioKind::ALL.iter().position(|&x| x == k).unwrap(), ""),
        Err(_) => (ScenarioKind::ALL.len(), s),
    }
}

fn aggregate(rows: &[SessionRow], strategies: &[String]) -> Vec<AggregateRow> {
    let mut scenarios: Vec<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
    scenarios.sort_by(|a, b| scenario_rank(a).cmp(&scenario_rank(b)));
    scenarios.dedup();

    let mut out = Vec::new();
    for strategy in strategies {
        for &scenario in &scenarios {
            let group: Vec<&SessionRow> = rows
                .iter()
                .filter(|r| &r.strategy == strategy && r.scenario == scenario)
                .collect();
            if group.is_empty() {
                continue;
            }
            let ok: Vec<SessionMetrics> = group.iter().filter_map(|r| r.metrics).collect();
            let mut qoe: Vec<f64> = ok.iter().map(|m| m.qoe).collect();
            let mut utility: Vec<f64> = ok.iter().map(|m| m.utility).collect();
            let cost: Vec<f64> = ok.iter().map(|m| m.cost_mbit).collect();
            let waste: Vec<f64> = ok.iter().map(|m| m.waste_mbit).collect();
            let rebuffer: Vec<f64> = ok.iter().map(|m| m.rebuffer_s).collect();
            let mean_qoe = mean(&qoe);
            let mean_utility = mean(&utility);
            qoe.sort_by(f64::total_cmp);
            utility.sort_by(f64::total_cmp);
            out.push(AggregateRow {
                strategy: strategy.clone(),
                scenario: scenario.to_string(),
                sessions: group.len(),
                aborted: group.len() - ok.len(),
                mean_qoe,
                p10_qoe: percentile(&qoe, 10.0),
                p50_qoe: percentile(&qoe, 50.0),
                p90_qoe: percentile(&qoe, 90.0),
                mean_cost_mbit: mean(&cost),
                mean_waste_mbit: mean(&waste),
                mean_utility,
                p50_utility: percentile(&utility, 50.0),
                mean_rebuffer_s: mean(&rebuffer),
            });
        }
    }
    out
}

/// Runs `strategies x traces x scripts` and aggregates per strategy and
/// scenario. Sessions may run in parallel; rows come out in input order
/// (strategy, then trace, then script), so the report is deterministic.
pub fn run_batch(
    scripts: &[SessionScript],
    traces: &[LabeledTrace],
    strategies: &[StrategyKind],
    config: &SessionConfig,
    models: &ModelSet,
    seed: u64,
) -> Result<BatchReport> {
    if scripts.is_empty() || traces.is_empty() || strategies.is_empty() {
        return Err(Error::InvalidConfig(
            "batch needs at least one script, trace and strategy".into(),
        ));
    }
    config.validate()?;
    let jobs: Vec<(&StrategyKind, &LabeledTrace, &SessionScript)> = strategies
        .iter()
        .flat_map(|s| {
            traces
                .iter()
                .flat_map(move |t| scripts.iter().map(move |sc| (s, t, sc)))
        })
        .collect();
    let rows: Vec<SessionRow> = jobs
        .par_iter()
        .map(|&(strategy, trace, script)| {
            let outcome = run_session(script, &trace.trace, strategy, config, models);
            let (metrics, abort) = match outcome {
                Ok(r) => (
                    Some(SessionMetrics {
                        qoe: r.qoe,
                        cost_mbit: r.cost_mbit,
                        waste_mbit: r.waste_mbit,
                        utility: r.utility,
                        rebuffer_s: r.rebuffer_s,
                    }),
                    None,
                ),
                Err(e) => (None, Some(e.to_string())),
            };
            SessionRow {
                strategy: strategy.name().to_string(),
                scenario: trace.scenario.clone(),
                script_id: script.id.clone(),
                trace_id: trace.id.clone(),
                metrics,
                abort,
            }
        })
        .collect();
    let names: Vec<String> = strategies.iter().map(|s| s.name().to_string()).collect();
    let mut unique: Vec<String> = Vec::new();
    for n in names {
        if !unique.contains(&n) {
            unique.push(n);
        }
    }
    Ok(BatchReport {
        seed,
        aggregates: aggregate(&rows, &unique),
        rows,
    })
}
