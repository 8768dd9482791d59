//! Throughput and behavior traces: CSV parsing, synthetic scenario
//! generation, and download timing against a bandwidth trace.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THROUGHPUT_HEADER: &str = "timestamp_s,bandwidth_kbps";
pub const BEHAVIOR_HEADER: &str = "trace_id,category,total_chunks,swipe_chunk";

/// Piecewise-constant bandwidth. Sample `i` holds from its start time until
/// the next sample starts; the last sample extends forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputTrace {
    samples: Vec<(f64, f64)>,
}

impl ThroughputTrace {
    /// Builds a trace from `(start_time_s, bandwidth_kbps)` pairs.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(t0, _)) = samples.first() else {
            return Err(Error::InvalidTrace("trace has no samples".into()));
        };
        if t0 != 0.0 {
            return Err(Error::InvalidTrace(format!("trace must start at 0, starts at {t0}")));
        }
        for (i, &(t, bw)) in samples.iter().enumerate() {
            if !t.is_finite() || !bw.is_finite() {
                return Err(Error::InvalidTrace(format!("sample {i} is not finite")));
            }
            if bw < 0.0 {
                return Err(Error::InvalidTrace(format!("sample {i} has negative bandwidth {bw}")));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::InvalidTrace(format!(
                    "timestamps must be strictly increasing: {} then {t}",
                    samples[i - 1].0
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn constant(kbps: f64) -> Result<Self> {
        Self::new(vec![(0.0, kbps)])
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Bandwidth in effect at time `t`.
    pub fn bandwidth_at(&self, t: f64) -> f64 {
        self.samples[self.segment_index(t)].1
    }

    fn segment_index(&self, t: f64) -> usize {
        // partition_point gives the count of samples starting at or before t.
        self.samples.partition_point(|&(s, _)| s <= t).saturating_sub(1)
    }

    /// Earliest time `t >= start_s` such that the bandwidth integral over
    /// `[start_s, t]` equals `size_kbit`. Returns `f64::INFINITY` when the
    /// channel carries nothing from some point on and the data never arrives.
    pub fn download_finish_time(&self, start_s: f64, size_kbit: f64) -> f64 {
        if size_kbit <= 0.0 {
            return start_s;
        }
        let mut idx = self.segment_index(start_s);
        let mut t = start_s;
        let mut remaining = size_kbit;
        loop {
            let bw = self.samples[idx].1;
            let seg_end = self.samples.get(idx + 1).map_or(f64::INFINITY, |&(s, _)| s);
            if bw > 0.0 {
                let capacity = bw * (seg_end - t);
                if remaining <= capacity {
                    return t + remaining / bw;
                }
                remaining -= capacity;
            } else if seg_end.is_infinite() {
                return f64::INFINITY;
            }
            t = seg_end;
            idx += 1;
        }
    }

    /// Kilobits deliverable over `[from_s, to_s]`.
    pub fn integral(&self, from_s: f64, to_s: f64) -> f64 {
        if to_s <= from_s {
            return 0.0;
        }
        let mut idx = self.segment_index(from_s);
        let mut t = from_s;
        let mut total = 0.0;
        while t < to_s {
            let seg_end = self.samples.get(idx + 1).map_or(f64::INFINITY, |&(s, _)| s).min(to_s);
            total += self.samples[idx].1 * (seg_end - t);
            t = seg_end;
            idx += 1;
        }
        total
    }

    pub fn mean_kbps(&self, duration_s: f64) -> f64 {
        self.integral(0.0, duration_s) / duration_s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * self.samples.len() + 32);
        out.push_str(THROUGHPUT_HEADER);
        out.push('\n');
        for (t, bw) in &self.samples {
            out.push_str(&format!("{t},{bw}\n"));
        }
        out
    }
}

/// Parses a throughput CSV with header `timestamp_s,bandwidth_kbps`.
pub fn parse_throughput_trace(text: &str) -> Result<ThroughputTrace> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let Some((_, header)) = lines.by_ref().find(|(_, l)| !l.is_empty()) else {
        return Err(Error::Parse {
            line: 1,
            message: "empty input".into(),
        });
    };
    let mut rows: Vec<(usize, &str)> = Vec::new();
    if header.replace(' ', "") != THROUGHPUT_HEADER {
        // Headerless input is accepted as long as the first row is numeric.
        if header
            .split(',')
            .next()
            .and_then(|f| f.trim().parse::<f64>().ok())
            .is_none()
        {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{THROUGHPUT_HEADER}`, got `{header}`"),
            });
        }
        rows.push((1, header));
    }
    rows.extend(lines.filter(|(_, l)| !l.is_empty()));

    for (line, row) in rows {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad {what} `{s}`"),
                })
        };
        let t = num(fields[0], "timestamp")?;
        let bw = num(fields[1], "bandwidth")?;
        if bw < 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("negative bandwidth {bw}"),
            });
        }
        match samples.last() {
            None if t != 0.0 => {
                return Err(Error::Parse {
                    line,
                    message: format!("trace must start at 0, first timestamp is {t}"),
                })
            }
            Some(&(prev, _)) if t <= prev => {
                return Err(Error::Parse {
                    line,
                    message: format!("timestamps must be strictly increasing: {prev} then {t}"),
                })
            }
            _ => {}
        }
        samples.push((t, bw));
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "trace has no samples".into(),
        });
    }
    ThroughputTrace::new(samples)
}

/// One observed viewing: the user swiped away after `swipe_chunk` of
/// `total_chunks` chunks (equal when watched to completion).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTrace {
    pub trace_id: String,
    pub category: String,
    total_chunks: usize,
    swipe_chunk: usize,
}

impl BehaviorTrace {
    pub fn new(
        trace_id: impl Into<String>,
        category: impl Into<String>,
        total_chunks: usize,
        swipe_chunk: usize,
    ) -> Result<Self> {
        if total_chunks == 0 || swipe_chunk == 0 {
            return Err(Error::InvalidTrace("chunk counts must be positive".into()));
        }
        if swipe_chunk > total_chunks {
            return Err(Error::InvalidTrace(format!(
                "swipe chunk {swipe_chunk} exceeds total {total_chunks}"
            )));
        }
        Ok(Self {
            trace_id: trace_id.into(),
            category: category.into(),
            total_chunks,
            swipe_chunk,
        })
    }

    pub fn total_chunks(&self) -> usize {
        self.total_chunks
    }

    pub fn swipe_chunk(&self) -> usize {
        self.swipe_chunk
    }

    /// Fraction of the video watched, in (0, 1].
    pub fn watched_fraction(&self) -> f64 {
        self.swipe_chunk as f64 / self.total_chunks as f64
    }
}

/// Parses a behavior CSV with header `trace_id,category,total_chunks,swipe_chunk`.
pub fn parse_behavior_traces(text: &str) -> Result<Vec<BehaviorTrace>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true;
            if row.replace(' ', "") == BEHAVIOR_HEADER {
                continue;
            }
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let count = |s: &str, what: &str| {
            s.parse::<i64>()
                .map_err(|_| Error::Parse {
                    line,
                    message: format!("bad {what} `{s}`"),
                })
                .and_then(|v| {
                    if v <= 0 {
                        Err(Error::Parse {
                            line,
                            message: format!("{what} must be positive, got {v}"),
                        })
                    } else {
                        Ok(v as usize)
                    }
                })
        };
        let total = count(fields[2], "total_chunks")?;
        let swipe = count(fields[3], "swipe_chunk")?;
        let trace = BehaviorTrace::new(fields[0], fields[1], total, swipe).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(trace);
    }
    Ok(out)
}

pub fn behavior_to_csv(traces: &[BehaviorTrace]) -> String {
    let mut out = String::from(BEHAVIOR_HEADER);
    out.push('\n');
    for t in traces {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t.trace_id, t.category, t.total_chunks, t.swipe_chunk
        ));
    }
    out
}

/// The four synthetic network scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    High,
    Medium,
    Low,
    Mixed,
}

impl ScenarioKind {
    /// Report order: high, medium, low, mixed.
    pub const ALL: [ScenarioKind; 4] = [Self::High, Self::Medium, Self::Low, Self::Mixed];

    /// Inclusive sampling band in kbps for the uniform scenarios, and the
    /// clipping range for `Mixed`.
    pub fn band(self) -> (f64, f64) {
        match self {
            Self::High => (2500.0, 6000.0),
            Self::Medium => (1000.0, 2500.0),
            Self::Low => (300.0, 1000.0),
            Self::Mixed => (300.0, 6000.0),
        }
    }

    /// Which uniform band a bandwidth value falls in; boundaries go to the
    /// higher band.
    pub fn classify(kbps: f64) -> Self {
        if kbps >= 2500.0 {
            Self::High
        } else if kbps >= 1000.0 {
            Self::Medium
        } else {
            Self::Low
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::High => "high",
            Self::Medium => "medium",
            Self::Low => "low",
            Self::Mixed => "mixed",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Self::High => 0x4849_4748,
            Self::Medium => 0x4d45_4449,
            Self::Low => 0x4c4f_5700,
            Self::Mixed => 0x4d49_5845,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Self::High),
            "medium" => Ok(Self::Medium),
            "low" => Ok(Self::Low),
            "mixed" => Ok(Self::Mixed),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

/// Step size of the mixed-scenario random walk.
pub const MIXED_STEP_SIGMA_KBPS: f64 = 300.0;
/// Where the mixed-scenario random walk starts.
pub const MIXED_START_KBPS: f64 = 1750.0;

/// Generates a per-second synthetic trace covering `duration_s` seconds.
/// Deterministic in `(kind, seed)`; samples are whole kbps.
pub fn generate_scenario(kind: ScenarioKind, seed: u64, duration_s: f64) -> Result<ThroughputTrace> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidTrace(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n = duration_s.ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind.salt().rotate_left(17));
    let (lo, hi) = kind.band();
    let samples = match kind {
        ScenarioKind::Mixed => {
            let step = Normal::new(0.0, MIXED_STEP_SIGMA_KBPS).expect("valid sigma");
            let mut level = MIXED_START_KBPS;
            (0..n)
                .map(|i| {
                    if i > 0 {
                        level = (level + step.sample(&mut rng)).clamp(lo, hi);
                    }
                    (i as f64, level.round())
                })
                .collect()
        }
        _ => (0..n)
            .map(|i| (i as f64, rng.gen_range(lo as u32..=hi as u32) as f64))
            .collect(),
    };
    ThroughputTrace::new(samples)
}
