//! Domain types shared by the whole simulator.
//!
//! Bitrates are carried in kbps as integers. Chunk sizes are derived on demand
//! as kbps x seconds, i.e. kilobits, and also kept as integers so that cost and
//! waste accounting is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::throughput::ThroughputHistory;

/// The ordered set of encoding bitrates every chunk is available at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct BitrateLadder {
    levels: Vec<u32>,
}

impl BitrateLadder {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLadder("ladder is empty".into()));
        }
        if levels.contains(&0) {
            return Err(Error::InvalidLadder("bitrates must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLadder(format!(
                "levels must be strictly ascending: {levels:?}"
            )));
        }
        Ok(Self { levels })
    }

    /// The 750 / 1200 / 1850 kbps ladder used in the evaluation workloads.
    pub fn evaluation() -> Self {
        Self {
            levels: vec![750, 1200, 1850],
        }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lowest(&self) -> u32 {
        self.levels[0]
    }

    pub fn highest(&self) -> u32 {
        *self.levels.last().unwrap()
    }

    pub fn contains(&self, kbps: u32) -> bool {
        self.levels.binary_search(&kbps).is_ok()
    }

    pub fn position(&self, kbps: u32) -> Option<usize> {
        self.levels.binary_search(&kbps).ok()
    }

    /// Highest level not above `kbps`, or the lowest level when every level
    /// exceeds it.
    pub fn highest_at_most(&self, kbps: f64) -> u32 {
        self.levels
            .iter()
            .rev()
            .copied()
            .find(|&r| f64::from(r) <= kbps)
            .unwrap_or_else(|| self.lowest())
    }

    /// One level below the level nearest to `kbps` from below (clamped).
    pub fn step_down(&self, kbps: u32) -> u32 {
        match self.levels.iter().rposition(|&r| r < kbps) {
            Some(i) => self.levels[i],
            None => self.lowest(),
        }
    }

    /// One level above `kbps` (clamped at the top).
    pub fn step_up(&self, kbps: u32) -> u32 {
        self.levels
            .iter()
            .copied()
            .find(|&r| r > kbps)
            .unwrap_or_else(|| self.highest())
    }
}

impl TryFrom<Vec<u32>> for BitrateLadder {
    type Error = Error;

    fn try_from(levels: Vec<u32>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<BitrateLadder> for Vec<u32> {
    fn from(ladder: BitrateLadder) -> Self {
        ladder.levels
    }
}

/// Size in kilobits of one chunk of `duration_s` seconds at `kbps`.
pub fn chunk_kbit(kbps: u32, duration_s: f64) -> u64 {
    (f64::from(kbps) * duration_s).round() as u64
}

/// A recommended video: `chunk_count` chunks of identical duration, each
/// available at every ladder bitrate.
///
/// Serialized with the catalog field names (`ladder_kbps`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VideoSpecRepr", into = "VideoSpecRepr")]
pub struct VideoSpec {
    id: String,
    category: String,
    chunk_count: usize,
    chunk_duration_s: f64,
    ladder: BitrateLadder,
}

#[derive(Serialize, Deserialize)]
struct VideoSpecRepr {
    id: String,
    category: String,
    chunk_count: usize,
    chunk_duration_s: f64,
    ladder_kbps: BitrateLadder,
}

impl TryFrom<VideoSpecRepr> for VideoSpec {
    type Error = Error;

    fn try_from(r: VideoSpecRepr) -> Result<Self> {
        VideoSpec::new(r.id, r.category, r.chunk_count, r.chunk_duration_s, r.ladder_kbps)
    }
}

impl From<VideoSpec> for VideoSpecRepr {
    fn from(v: VideoSpec) -> Self {
        VideoSpecRepr {
            id: v.id,
            category: v.category,
            chunk_count: v.chunk_count,
            chunk_duration_s: v.chunk_duration_s,
            ladder_kbps: v.ladder,
        }
    }
}

impl VideoSpec {
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        chunk_count: usize,
        chunk_duration_s: f64,
        ladder: BitrateLadder,
    ) -> Result<Self> {
        let id = id.into();
        if chunk_count == 0 {
            return Err(Error::InvalidVideo(format!("{id}: chunk_count must be >= 1")));
        }
        if !(chunk_duration_s > 0.0 && chunk_duration_s.is_finite()) {
            return Err(Error::InvalidVideo(format!(
                "{id}: chunk_duration_s must be positive, got {chunk_duration_s}"
            )));
        }
        if chunk_kbit(ladder.lowest(), chunk_duration_s) == 0 {
            return Err(Error::InvalidVideo(format!(
                "{id}: chunks at {} kbps for {chunk_duration_s} s round to 0 kbit",
                ladder.lowest()
            )));
        }
        Ok(Self {
            id,
            category: category.into(),
            chunk_count,
            chunk_duration_s,
            ladder,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn chunk_count(&self) -> usize {
        self.chunk_count
    }

    pub fn chunk_duration_s(&self) -> f64 {
        self.chunk_duration_s
    }

    pub fn ladder(&self) -> &BitrateLadder {
        &self.ladder
    }

    pub fn chunk_kbit(&self, kbps: u32) -> u64 {
        chunk_kbit(kbps, self.chunk_duration_s)
    }
}

/// A specific chunk of a specific video at a specific bitrate.
///
/// Only constructible through [`ChunkRef::new`], which checks the reference
/// against the video it points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRef {
    video_index: usize,
    chunk_index: usize,
    bitrate_kbps: u32,
}

impl ChunkRef {
    /// `video_index` is the 0-based position in the recommendation list,
    /// `chunk_index` is 1-based.
    pub fn new(video_index: usize, video: &VideoSpec, chunk_index: usize, bitrate_kbps: u32) -> Result<Self> {
        if chunk_index == 0 || chunk_index > video.chunk_count {
            return Err(Error::InvalidChunk(format!(
                "chunk {chunk_index} outside 1..={} of video {}",
                video.chunk_count, video.id
            )));
        }
        if !video.ladder.contains(bitrate_kbps) {
            return Err(Error::InvalidChunk(format!(
                "{bitrate_kbps} kbps is not on the ladder {:?}",
                video.ladder.levels()
            )));
        }
        Ok(Self {
            video_index,
            chunk_index,
            bitrate_kbps,
        })
    }

    pub fn video_index(&self) -> usize {
        self.video_index
    }

    pub fn chunk_index(&self) -> usize {
        self.chunk_index
    }

    pub fn bitrate_kbps(&self) -> u32 {
        self.bitrate_kbps
    }
}

/// Downloaded chunks of one video. Always a contiguous prefix starting at
/// chunk 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerBuffer {
    video_index: usize,
    downloaded: Vec<u32>,
}

impl PlayerBuffer {
    pub fn new(video_index: usize) -> Self {
        Self {
            video_index,
            downloaded: Vec::new(),
        }
    }

    pub fn video_index(&self) -> usize {
        self.video_index
    }

    pub fn downloaded_count(&self) -> usize {
        self.downloaded.len()
    }

    /// First chunk index (1-based) that has not been downloaded.
    pub fn next_needed(&self) -> usize {
        self.downloaded.len() + 1
    }

    pub fn bitrates(&self) -> &[u32] {
        &self.downloaded
    }

    pub fn has_chunk(&self, k: usize) -> bool {
        k >= 1 && k <= self.downloaded.len()
    }

    /// Appends `chunk`, which must be the next needed chunk of this video.
    pub fn push(&mut self, chunk: &ChunkRef) -> Result<()> {
        if chunk.video_index != self.video_index {
            return Err(Error::InvalidChunk(format!(
                "chunk for video {} pushed into buffer of video {}",
                chunk.video_index, self.video_index
            )));
        }
        if chunk.chunk_index != self.next_needed() {
            return Err(Error::InvalidChunk(format!(
                "chunk {} would leave a hole, next needed is {}",
                chunk.chunk_index,
                self.next_needed()
            )));
        }
        self.downloaded.push(chunk.bitrate_kbps);
        Ok(())
    }

    /// Checks the prefix property against `video`.
    pub fn validate(&self, video: &VideoSpec) -> Result<()> {
        if self.downloaded.len() > video.chunk_count {
            return Err(Error::InvalidChunk(format!(
                "{} chunks downloaded for a {}-chunk video",
                self.downloaded.len(),
                video.chunk_count
            )));
        }
        if let Some(r) = self.downloaded.iter().find(|&&r| !video.ladder.contains(r)) {
            return Err(Error::InvalidChunk(format!("{r} kbps not on ladder")));
        }
        Ok(())
    }
}

/// Quality function applied to chunk bitrates in the QoE score.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QualityMetric {
    /// q(r) = r / 1000, i.e. Mbps.
    #[default]
    Linear,
    /// q(r) = ln(r / base_kbps).
    Log { base_kbps: f64 },
}

/// Which bitrates feed the smooth-playback throughput bound inside DTAAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CminBasis {
    /// Every term at the lowest ladder level.
    #[default]
    Lowest,
    /// The current video's actual first-chunk bitrate and the last selected
    /// bitrate for the next video.
    Selected,
}

/// Tunables for one simulated session. Every field has a default; JSON
/// config files may omit any of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub window_chunks: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p_th_early: f64,
    pub p_th_long: f64,
    pub b0_startup_chunks: usize,
    pub t_sleep_s: f64,
    pub n_pred: usize,
    pub quality: QualityMetric,
    pub c_min_basis: CminBasis,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 1.85,
            w4: 0.5,
            alpha1: 0.5,
            alpha2: 0.5,
            window_chunks: 5,
            gamma1: 0.5,
            gamma2: 0.8,
            p_th_early: 0.3,
            p_th_long: 0.1,
            b0_startup_chunks: 1,
            t_sleep_s: 0.5,
            n_pred: 5,
            quality: QualityMetric::Linear,
            c_min_basis: CminBasis::Lowest,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3), ("w4", self.w4)] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {w}"));
            }
        }
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a >= 0.0 && a.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {a}"));
            }
        }
        if self.alpha1 + self.alpha2 <= 0.0 {
            return bad("alpha1 + alpha2 must be positive".into());
        }
        if self.window_chunks == 0 {
            return bad("window_chunks must be >= 1".into());
        }
        if !(0.0 < self.gamma1 && self.gamma1 < self.gamma2 && self.gamma2 <= 1.0) {
            return bad(format!(
                "need 0 < gamma1 < gamma2 <= 1, got {} and {}",
                self.gamma1, self.gamma2
            ));
        }
        for (name, p) in [("p_th_early", self.p_th_early), ("p_th_long", self.p_th_long)] {
            if !(0.0 < p && p < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {p}"));
            }
        }
        if self.b0_startup_chunks == 0 {
            return bad("b0_startup_chunks must be >= 1".into());
        }
        if !(self.t_sleep_s > 0.0 && self.t_sleep_s.is_finite()) {
            return bad(format!("t_sleep_s must be positive, got {}", self.t_sleep_s));
        }
        if self.n_pred < 2 {
            return bad(format!("n_pred must be >= 2, got {}", self.n_pred));
        }
        if let QualityMetric::Log { base_kbps } = self.quality {
            if base_kbps.is_nan() || base_kbps <= 0.0 {
                return bad("log quality base must be positive".into());
            }
        }
        Ok(())
    }
}

/// Mutable state of one viewing session.
#[derive(Debug, Clone)]
pub struct SessionState {
    /// One buffer per video of the session, indexed by list position.
    pub buffers: Vec<PlayerBuffer>,
    pub current_index: usize,
    /// Seconds into the current video.
    pub playback_position_s: f64,
    pub wall_clock_s: f64,
    /// Stall seconds per (video, chunk), chunk index 1 at position 0.
    pub rebuffering: Vec<Vec<f64>>,
    pub throughput_history: ThroughputHistory,
    n_pred: usize,
}

impl SessionState {
    pub fn new(videos: &[VideoSpec], n_pred: usize, window_chunks: usize) -> Self {
        Self {
            buffers: (0..videos.len()).map(PlayerBuffer::new).collect(),
            current_index: 0,
            playback_position_s: 0.0,
            wall_clock_s: 0.0,
            rebuffering: videos.iter().map(|v| vec![0.0; v.chunk_count()]).collect(),
            throughput_history: ThroughputHistory::new(window_chunks),
            n_pred,
        }
    }

    /// The live players: the current video followed by up to `n_pred - 1`
    /// recommended videos.
    pub fn players(&self) -> &[PlayerBuffer] {
        let end = (self.current_index + self.n_pred).min(self.buffers.len());
        &self.buffers[self.current_index.min(end)..end]
    }

    pub fn validate(&self, videos: &[VideoSpec]) -> Result<()> {
        if self.current_index >= self.buffers.len() {
            return Err(Error::InvalidScript("current index past the end".into()));
        }
        if self.playback_position_s < 0.0 {
            return Err(Error::InvalidScript("negative playback position".into()));
        }
        for (buf, video) in self.buffers.iter().zip(videos) {
            buf.validate(video)?;
        }
        if self.rebuffering.iter().flatten().any(|&t| t < 0.0) {
            return Err(Error::InvalidScript("negative rebuffer entry".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(k: usize) -> VideoSpec {
        VideoSpec::new("v", "c", k, 1.0, BitrateLadder::evaluation()).unwrap()
    }

    #[test]
    fn ladder_rejects_bad_levels() {
        assert!(BitrateLadder::new(vec![]).is_err());
        assert!(BitrateLadder::new(vec![0, 750]).is_err());
        assert!(BitrateLadder::new(vec![750, 750]).is_err());
        assert!(BitrateLadder::new(vec![1200, 750]).is_err());
        assert!(BitrateLadder::new(vec![750, 1200, 1850]).is_ok());
    }

    #[test]
    fn ladder_lookups() {
        let l = BitrateLadder::evaluation();
        assert_eq!(l.highest_at_most(1300.0), 1200);
        assert_eq!(l.highest_at_most(600.0), 750);
        assert_eq!(l.highest_at_most(1850.0), 1850);
        assert_eq!(l.step_down(1200), 750);
        assert_eq!(l.step_down(750), 750);
        assert_eq!(l.step_up(1200), 1850);
        assert_eq!(l.step_up(1850), 1850);
    }

    #[test]
    fn video_spec_invariants() {
        let l = BitrateLadder::evaluation();
        assert!(VideoSpec::new("a", "c", 0, 1.0, l.clone()).is_err());
        assert!(VideoSpec::new("a", "c", 3, 0.0, l.clone()).is_err());
        assert!(VideoSpec::new("a", "c", 3, f64::NAN, l).is_err());
    }

    #[test]
    fn chunk_ref_validates_against_video() {
        let v = video(4);
        assert!(ChunkRef::new(0, &v, 0, 750).is_err());
        assert!(ChunkRef::new(0, &v, 5, 750).is_err());
        assert!(ChunkRef::new(0, &v, 2, 1000).is_err());
        let c = ChunkRef::new(0, &v, 4, 1850).unwrap();
        assert_eq!((c.chunk_index(), c.bitrate_kbps()), (4, 1850));
    }

    #[test]
    fn buffer_keeps_contiguous_prefix() {
        let v = video(3);
        let mut b = PlayerBuffer::new(0);
        assert_eq!(b.next_needed(), 1);
        assert!(b.push(&ChunkRef::new(0, &v, 2, 750).unwrap()).is_err());
        b.push(&ChunkRef::new(0, &v, 1, 750).unwrap()).unwrap();
        b.push(&ChunkRef::new(0, &v, 2, 1200).unwrap()).unwrap();
        assert!(b.push(&ChunkRef::new(1, &v, 3, 750).unwrap()).is_err());
        assert_eq!(b.next_needed(), 3);
        assert_eq!(b.bitrates(), &[750, 1200]);
        b.validate(&v).unwrap();
    }

    #[test]
    fn default_config_is_valid() {
        let c = SessionConfig::default();
        c.validate().unwrap();
        assert_eq!((c.w1, c.w2, c.w3, c.w4), (1.0, 1.0, 1.85, 0.5));
        assert_eq!(c.n_pred, 5);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = SessionConfig {
            gamma1: 0.9,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SessionConfig {
            n_pred: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SessionConfig {
            w3: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SessionConfig {
            b0_startup_chunks: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = SessionConfig {
            p_th_long: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_fields_are_optional() {
        let c: SessionConfig = serde_json::from_str(r#"{"w4": 0.0, "n_pred": 3}"#).unwrap();
        assert_eq!(c.w4, 0.0);
        assert_eq!(c.n_pred, 3);
        assert_eq!(c.gamma2, 0.8);
        assert!(serde_json::from_str::<SessionConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn session_players_window() {
        let videos: Vec<_> = (0..7).map(|_| video(2)).collect();
        let mut s = SessionState::new(&videos, 5, 5);
        assert_eq!(s.players().len(), 5);
        s.current_index = 4;
        assert_eq!(s.players().len(), 3);
        assert_eq!(s.players()[0].video_index(), 4);
        s.validate(&videos).unwrap();
    }
}
