//! Per-category swipe model built from observed viewings.
//!
//! Every viewing says where, as a fraction of the video, the user swiped
//! away. The model is a 100-bin histogram of that position at 1% resolution.
//! Queries map a chunk `k` of a `K`-chunk video back onto the bins it covers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::BehaviorTrace;

pub const BINS: usize = 100;

/// Category name of the model pooled over every category.
pub const POOLED: &str = "*";

/// Last percentile bin covered by the first `k` chunks of a `total`-chunk
/// video: `ceil(100 k / total)`, with `bin_upper(0, _) == 0`.
pub fn bin_upper(k: usize, total: usize) -> usize {
    (BINS * k).div_ceil(total)
}

/// The bins (1-based, inclusive) covered by chunk `k`. Empty when
/// `total > 100` squeezes the chunk below the bin resolution.
pub fn chunk_bins(k: usize, total: usize) -> std::ops::RangeInclusive<usize> {
    bin_upper(k - 1, total) + 1..=bin_upper(k, total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionModel {
    category: String,
    trace_count: usize,
    mass: Vec<f64>,
}

#[derive(Deserialize)]
struct RetentionModelRepr {
    category: String,
    trace_count: usize,
    mass: Vec<f64>,
}

impl<'de> Deserialize<'de> for RetentionModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RetentionModelRepr::deserialize(d)?;
        RetentionModel::from_mass(r.category, r.trace_count, r.mass).map_err(serde::de::Error::custom)
    }
}

/// Chunk-count thresholds for one video length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionThresholds {
    /// Earliest chunk at which anyone swipes.
    pub k_min: usize,
    /// First chunk by which the cumulative swipe probability exceeds the
    /// early threshold.
    pub k_early: usize,
    /// First chunk from which the remaining swipe probability before the
    /// last chunk drops below the long-view threshold.
    pub k_long: usize,
}

impl RetentionModel {
    /// Builds the model of `category` from every matching trace. Each trace
    /// carries weight `1/X`, spread evenly over the bins of its swipe chunk.
    pub fn build(traces: &[BehaviorTrace], category: &str) -> Result<Self> {
        let selected: Vec<&BehaviorTrace> = traces
            .iter()
            .filter(|t| category == POOLED || t.category == category)
            .collect();
        Self::from_traces(category, &selected)
    }

    fn from_traces(category: &str, traces: &[&BehaviorTrace]) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::EmptyCategory(category.to_string()));
        }
        let mut acc = vec![0.0f64; BINS];
        for t in traces {
            let bins = chunk_bins(t.swipe_chunk(), t.total_chunks());
            if bins.is_empty() {
                acc[bins.end() - 1] += 1.0;
            } else {
                let share = 1.0 / (bins.end() - bins.start() + 1) as f64;
                for j in bins {
                    acc[j - 1] += share;
                }
            }
        }
        let x = traces.len() as f64;
        Ok(Self {
            category: category.to_string(),
            trace_count: traces.len(),
            mass: acc.into_iter().map(|a| a / x).collect(),
        })
    }

    /// Reassembles a model from an exported mass vector.
    pub fn from_mass(category: impl Into<String>, trace_count: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != BINS {
            return Err(Error::InvalidModel(format!("expected {BINS} bins, got {}", mass.len())));
        }
        if mass.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(Error::InvalidModel("bin mass must be finite and non-negative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("bin mass sums to {total}, not 1")));
        }
        Ok(Self {
            category: category.into(),
            trace_count,
            mass,
        })
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn trace_count(&self) -> usize {
        self.trace_count
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn interval_mass(&self, bins: std::ops::RangeInclusive<usize>) -> f64 {
        bins.map(|j| self.mass[j - 1]).sum()
    }

    /// Probability that a viewer of a `total`-chunk video swipes at chunk
    /// `k`, as the unconditional mass of the chunk's bins.
    pub fn swipe_probability(&self, k: usize, total: usize) -> Result<f64> {
        if k == 0 || k > total {
            return Err(Error::ChunkOutOfRange { k, total });
        }
        Ok(self.interval_mass(chunk_bins(k, total)))
    }

    /// Swipe probability at chunk `k` given the viewer reached chunk `k`.
    /// Returns 1 when no mass is left from chunk `k` on.
    pub fn conditional_swipe_probability(&self, k: usize, total: usize) -> Result<f64> {
        let here = self.swipe_probability(k, total)?;
        let tail = self.interval_mass(bin_upper(k - 1, total) + 1..=BINS);
        Ok(if tail > 0.0 { (here / tail).min(1.0) } else { 1.0 })
    }

    /// Swipe probability accumulated over chunks `1..=k`.
    pub fn cumulative_swipe_probability(&self, k: usize, total: usize) -> Result<f64> {
        if k > total {
            return Err(Error::ChunkOutOfRange { k, total });
        }
        Ok((1..=k).map(|j| self.interval_mass(chunk_bins(j, total))).sum())
    }

    /// Share of viewers still watching after chunk `k`.
    pub fn retention(&self, k: usize, total: usize) -> Result<f64> {
        Ok((1.0 - self.cumulative_swipe_probability(k, total)?).max(0.0))
    }

    pub fn thresholds(&self, total: usize, p_th_early: f64, p_th_long: f64) -> RetentionThresholds {
        derive_thresholds(self, total, p_th_early, p_th_long)
    }
}

pub fn build_model(traces: &[BehaviorTrace], category: &str) -> Result<RetentionModel> {
    RetentionModel::build(traces, category)
}

/// Derives `k_min`, `k_early` and `k_long` for a `total`-chunk video.
pub fn derive_thresholds(model: &RetentionModel, total: usize, p_th_early: f64, p_th_long: f64) -> RetentionThresholds {
    assert!(total >= 1, "video must have at least one chunk");
    let per_chunk: Vec<f64> = (1..=total).map(|k| model.interval_mass(chunk_bins(k, total))).collect();

    let k_min = per_chunk.iter().position(|&p| p > 0.0).map_or(total, |i| i + 1);

    let mut cumulative = 0.0;
    let mut k_early = total;
    for (i, &p) in per_chunk.iter().enumerate() {
        cumulative += p;
        if cumulative > p_th_early {
            k_early = i + 1;
            break;
        }
    }

    // Walk back from the last chunk; the tail over `k..=total-1` only grows.
    // With an empty tail (k == total) the condition holds trivially.
    let mut k_long = total;
    let mut tail = 0.0;
    for k in (1..total).rev() {
        tail += per_chunk[k - 1];
        if tail >= p_th_long {
            break;
        }
        k_long = k;
    }

    RetentionThresholds { k_min, k_early, k_long }
}

/// Models keyed by category, with a pooled model for unseen categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    models: BTreeMap<String, RetentionModel>,
    pooled: RetentionModel,
}

impl ModelSet {
    /// One model per category found in `traces`, plus the pooled model.
    pub fn build(traces: &[BehaviorTrace]) -> Result<Self> {
        let mut by_cat: BTreeMap<&str, Vec<&BehaviorTrace>> = BTreeMap::new();
        for t in traces {
            by_cat.entry(t.category.as_str()).or_default().push(t);
        }
        let models = by_cat
            .into_iter()
            .map(|(c, ts)| RetentionModel::from_traces(c, &ts).map(|m| (c.to_string(), m)))
            .collect::<Result<_>>()?;
        let all: Vec<&BehaviorTrace> = traces.iter().collect();
        Ok(Self {
            models,
            pooled: RetentionModel::from_traces(POOLED, &all)?,
        })
    }

    /// A set that answers every category with `model`.
    pub fn single(model: RetentionModel) -> Self {
        Self {
            models: BTreeMap::from([(model.category.clone(), model.clone())]),
            pooled: model,
        }
    }

    pub fn from_models(models: Vec<RetentionModel>) -> Result<Self> {
        let Some(first) = models.first().cloned() else {
            return Err(Error::InvalidModel("no models".into()));
        };
        let pooled = models.iter().find(|m| m.category == POOLED).cloned().unwrap_or(first);
        Ok(Self {
            models: models.into_iter().map(|m| (m.category.clone(), m)).collect(),
            pooled,
        })
    }

    pub fn get(&self, category: &str) -> &RetentionModel {
        self.models.get(category).unwrap_or(&self.pooled)
    }

    pub fn categories(&self) -> impl Iterator<Item = &RetentionModel> {
        self.models.values()
    }
}

impl From<RetentionModel> for ModelSet {
    fn from(model: RetentionModel) -> Self {
        Self::single(model)
    }
}
