//! Session scoring: per-video QoE, bandwidth cost and waste, and the session
//! utility that trades them off.
//!
//! Data volumes are computed in whole kilobits first and converted to Mbit
//! at the end, so `cost == watched + waste` holds exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{chunk_kbit, QualityMetric, SessionConfig};

/// Weights of the three QoE terms: quality, quality variation, rebuffering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoEWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl QoEWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        if [w1, w2, w3].iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "QoE weights must be >= 0: {w1}, {w2}, {w3}"
            )));
        }
        Ok(Self { w1, w2, w3 })
    }
}

impl From<&SessionConfig> for QoEWeights {
    fn from(c: &SessionConfig) -> Self {
        Self {
            w1: c.w1,
            w2: c.w2,
            w3: c.w3,
        }
    }
}

/// Linear quality: the bitrate in Mbps.
pub fn quality(bitrate_kbps: u32) -> f64 {
    f64::from(bitrate_kbps) / 1000.0
}

pub fn quality_with(metric: QualityMetric, bitrate_kbps: u32) -> f64 {
    match metric {
        QualityMetric::Linear => quality(bitrate_kbps),
        QualityMetric::Log { base_kbps } => (f64::from(bitrate_kbps) / base_kbps).ln(),
    }
}

/// QoE of one video from the bitrates and stall seconds of its watched
/// chunks.
pub fn qoe_video(watched_bitrates: &[u32], rebuffer_s: &[f64], weights: QoEWeights) -> Result<f64> {
    qoe_video_with(watched_bitrates, rebuffer_s, weights, QualityMetric::Linear)
}

pub fn qoe_video_with(
    watched_bitrates: &[u32],
    rebuffer_s: &[f64],
    weights: QoEWeights,
    metric: QualityMetric,
) -> Result<f64> {
    if watched_bitrates.len() != rebuffer_s.len() {
        return Err(Error::LengthMismatch {
            expected: watched_bitrates.len(),
            actual: rebuffer_s.len(),
        });
    }
    let q: Vec<f64> = watched_bitrates.iter().map(|&r| quality_with(metric, r)).collect();
    let total_quality: f64 = q.iter().sum();
    let variation: f64 = q.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let stall: f64 = rebuffer_s.iter().sum();
    Ok(weights.w1 * total_quality - weights.w2 * variation - weights.w3 * stall)
}

pub fn cost_video_kbit(downloaded_bitrates: &[u32], t0_s: f64) -> u64 {
    downloaded_bitrates.iter().map(|&r| chunk_kbit(r, t0_s)).sum()
}

/// Kilobits downloaded beyond the last watched chunk.
pub fn waste_video_kbit(downloaded_bitrates: &[u32], watched: usize, t0_s: f64) -> Result<u64> {
    if watched > downloaded_bitrates.len() {
        return Err(Error::LengthMismatch {
            expected: downloaded_bitrates.len(),
            actual: watched,
        });
    }
    Ok(cost_video_kbit(&downloaded_bitrates[watched..], t0_s))
}

/// Bandwidth spent on a video, in Mbit.
pub fn cost_video(downloaded_bitrates: &[u32], t0_s: f64) -> f64 {
    kbit_to_mbit(cost_video_kbit(downloaded_bitrates, t0_s))
}

/// Bandwidth spent on chunks past the swipe point, in Mbit.
pub fn waste_video(downloaded_bitrates: &[u32], watched: usize, t0_s: f64) -> Result<f64> {
    waste_video_kbit(downloaded_bitrates, watched, t0_s).map(kbit_to_mbit)
}

pub fn kbit_to_mbit(kbit: u64) -> f64 {
    kbit as f64 / 1000.0
}

/// Session utility: sum of `QoE_i - w4 * Cost_i`.
pub fn utility(qoes: &[f64], costs_mbit: &[f64], w4: f64) -> Result<f64> {
    if qoes.len() != costs_mbit.len() {
        return Err(Error::LengthMismatch {
            expected: qoes.len(),
            actual: costs_mbit.len(),
        });
    }
    Ok(qoes.iter().zip(costs_mbit).map(|(q, c)| q - w4 * c).sum())
}
