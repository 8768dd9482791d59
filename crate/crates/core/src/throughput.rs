//! Throughput prediction and the smooth-playback bound.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-chunk download rates, most recent last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputHistory {
    window: VecDeque<f64>,
    capacity: usize,
    last_sample_kbps: Option<f64>,
}

impl ThroughputHistory {
    pub fn new(window_chunks: usize) -> Self {
        let capacity = window_chunks.max(1);
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            last_sample_kbps: None,
        }
    }

    /// Records one finished chunk download.
    pub fn record_download(&mut self, chunk_size_kbit: f64, elapsed_s: f64) -> Result<f64> {
        if elapsed_s.is_nan() || elapsed_s <= 0.0 {
            return Err(Error::NonPositiveElapsed(elapsed_s));
        }
        let rate = chunk_size_kbit / elapsed_s;
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(rate);
        self.last_sample_kbps = Some(rate);
        Ok(rate)
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn last_sample(&self) -> Option<f64> {
        self.last_sample_kbps
    }

    /// Mean of the window, the "average throughput" fed to the strategies.
    pub fn average(&self) -> Option<f64> {
        if self.window.is_empty() {
            None
        } else {
            Some(self.window.iter().sum::<f64>() / self.window.len() as f64)
        }
    }

    /// `alpha1 * average + alpha2 * last sample`.
    pub fn predict(&self, alpha1: f64, alpha2: f64) -> Result<f64> {
        match (self.average(), self.last_sample_kbps) {
            (Some(avg), Some(last)) => Ok(alpha1 * avg + alpha2 * last),
            _ => Err(Error::EmptyHistory),
        }
    }
}

/// Minimum throughput that keeps playback smooth when the viewer swipes
/// after every first chunk: the next chunk of the current video plus `b0`
/// startup chunks of the next video must arrive within one chunk time.
pub fn min_smooth_throughput(current_first_bitrate: u32, next_video_bitrates: &[u32], b0: usize) -> Result<f64> {
    if next_video_bitrates.len() != b0 {
        return Err(Error::LengthMismatch {
            expected: b0,
            actual: next_video_bitrates.len(),
        });
    }
    Ok(f64::from(current_first_bitrate) + next_video_bitrates.iter().map(|&r| f64::from(r)).sum::<f64>())
}

/// How the available throughput relates to the ladder floor and the
/// smooth-playback bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `C >= c_min`: the minimum preload already avoids stalls.
    Ample,
    /// Between the two bounds: the preload policy decides.
    Constrained,
    /// `C <= r_min`: even the lowest bitrate cannot be sustained.
    Starved,
}

pub fn classify_regime(c: f64, r_min: f64, c_min: f64) -> Regime {
    if c >= c_min {
        Regime::Ample
    } else if c <= r_min {
        Regime::Starved
    } else {
        Regime::Constrained
    }
}
