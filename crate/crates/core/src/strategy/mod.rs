//! Preloading decisions: which chunk to fetch next and at what bitrate, or
//! whether to idle.
//!
//! Every strategy sees the same [`StrategyContext`] and answers with a
//! [`Decision`]. A decision carries the per-player buffer thresholds the
//! strategy evaluated, so callers can check that a download was only issued
//! to a player below its threshold and that `Sleep` means everybody is full.

mod baselines;
mod dtaap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::retention::{RetentionModel, RetentionThresholds};
use crate::types::{ChunkRef, SessionConfig, VideoSpec};

pub use baselines::{fixb_decide, network_thresholds, networkbased_decide, nextone_decide, pdas_cap, pdas_lite_decide};
pub use dtaap::{
    buffer_threshold_current, buffer_threshold_next, current_bitrate, dtaap_bitrate, dtaap_decide, dtaap_thresholds,
    recommended_bitrate, BitrateTarget,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Download(ChunkRef),
    Sleep(f64),
}

/// What a strategy may look at for one live player.
#[derive(Debug, Clone)]
pub struct PlayerView<'a> {
    /// Position of the video in the session's list.
    pub video_index: usize,
    pub video: &'a VideoSpec,
    pub downloaded: usize,
    /// Buffer level the thresholds are compared against, in chunks. For the
    /// current video: downloaded video ahead of the playhead, fractional
    /// while a chunk is playing. For recommended videos: all downloaded
    /// chunks.
    pub buffered: f64,
    pub thresholds: RetentionThresholds,
    pub model: &'a RetentionModel,
}

impl PlayerView<'_> {
    pub fn is_complete(&self) -> bool {
        self.downloaded >= self.video.chunk_count()
    }

    pub fn next_needed(&self) -> usize {
        self.downloaded + 1
    }

    /// A download of the next needed chunk at `bitrate`, or `None` when the
    /// video is complete.
    pub fn next_chunk(&self, bitrate: u32) -> Option<ChunkRef> {
        if self.is_complete() {
            return None;
        }
        ChunkRef::new(self.video_index, self.video, self.next_needed(), bitrate).ok()
    }
}

/// Read-only view handed to a strategy at each decision point.
#[derive(Debug, Clone)]
pub struct StrategyContext<'a> {
    /// Live players; index 0 is the current video.
    pub players: Vec<PlayerView<'a>>,
    /// Predicted throughput, `None` until the first download completes.
    pub c_pred: Option<f64>,
    /// Windowed average throughput, `None` until the first download completes.
    pub c_ave: Option<f64>,
    /// Smooth-playback throughput bound for the current transition.
    pub c_min: f64,
    /// Bitrate of the most recently downloaded chunk.
    pub r_last: Option<u32>,
    /// A stall happened since the previous decision.
    pub rebuffer_flag: bool,
    pub config: &'a SessionConfig,
}

impl StrategyContext<'_> {
    pub fn current(&self) -> &PlayerView<'_> {
        &self.players[0]
    }

    fn warmed_up(&self) -> Option<(f64, f64, u32)> {
        Some((self.c_pred?, self.c_ave?, self.r_last?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    /// Threshold evaluated for each live player, aligned with
    /// `StrategyContext::players`.
    pub thresholds: Vec<usize>,
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, ctx: &StrategyContext<'_>) -> Decision;
}

/// First download of the session: no throughput sample exists yet, so the
/// current video's next chunk goes out at the lowest level.
pub(crate) fn bootstrap(ctx: &StrategyContext<'_>) -> Option<Decision> {
    if ctx.warmed_up().is_some() {
        return None;
    }
    let cur = ctx.current();
    let chunk = cur.next_chunk(cur.video.ladder().lowest())?;
    let mut thresholds = vec![0; ctx.players.len()];
    thresholds[0] = cur.buffered.floor() as usize + 1;
    Some(Decision {
        action: Action::Download(chunk),
        thresholds,
    })
}

/// Scans players in order and downloads for the first one below its
/// threshold; sleeps when none is. The current player's threshold is raised
/// to the startup depth, since playback cannot start below it.
pub(crate) fn scan(ctx: &StrategyContext<'_>, mut thresholds: Vec<usize>, bitrate: impl Fn(usize) -> u32) -> Decision {
    debug_assert_eq!(thresholds.len(), ctx.players.len());
    thresholds[0] = thresholds[0].max(ctx.config.b0_startup_chunks);
    for (j, p) in ctx.players.iter().enumerate() {
        if p.is_complete() || p.buffered >= thresholds[j] as f64 {
            continue;
        }
        if let Some(chunk) = p.next_chunk(bitrate(j)) {
            return Decision {
                action: Action::Download(chunk),
                thresholds,
            };
        }
    }
    Decision {
        action: Action::Sleep(ctx.config.t_sleep_s),
        thresholds,
    }
}

/// The built-in strategies, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum StrategyKind {
    Dtaap,
    FixB { current: usize, next: usize },
    NextOne,
    Network,
    PdasLite,
}

impl StrategyKind {
    pub const NAMES: [&'static str; 5] = ["dtaap", "fixb", "nextone", "network", "pdas_lite"];

    /// Every built-in strategy, Fix-B at its default thresholds.
    pub fn all() -> [StrategyKind; 5] {
        [
            Self::FixB { current: 4, next: 2 },
            Self::NextOne,
            Self::Network,
            Self::PdasLite,
            Self::Dtaap,
        ]
    }

    pub fn fixb_default() -> Self {
        Self::FixB { current: 4, next: 2 }
    }

    /// Parses a strategy name; Fix-B picks up the given thresholds.
    pub fn parse_with(name: &str, fixb_current: usize, fixb_next: usize) -> Result<Self, Error> {
        match name.trim().to_ascii_lowercase().as_str() {
            "dtaap" => Ok(Self::Dtaap),
            "fixb" | "fix-b" => {
                if fixb_current == 0 || fixb_next == 0 {
                    return Err(Error::InvalidConfig("Fix-B thresholds must be >= 1".into()));
                }
                Ok(Self::FixB {
                    current: fixb_current,
                    next: fixb_next,
                })
            }
            "nextone" => Ok(Self::NextOne),
            "network" | "network-based" => Ok(Self::Network),
            "pdas_lite" | "pdas" => Ok(Self::PdasLite),
            _ => Err(Error::UnknownStrategy {
                name: name.to_string(),
                valid: Self::NAMES.join(", "),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Dtaap => "dtaap",
            Self::FixB { .. } => "fixb",
            Self::NextOne => "nextone",
            Self::Network => "network",
            Self::PdasLite => "pdas_lite",
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::parse_with(s, 4, 2)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Strategy for StrategyKind {
    fn name(&self) -> &str {
        self.label()
    }

    fn decide(&self, ctx: &StrategyContext<'_>) -> Decision {
        match *self {
            Self::Dtaap => dtaap_decide(ctx),
            Self::FixB { current, next } => fixb_decide(ctx, current, next),
            Self::NextOne => nextone_decide(ctx),
            Self::Network => networkbased_decide(ctx),
            Self::PdasLite => pdas_lite_decide(ctx),
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::trace::BehaviorTrace;
    use crate::types::BitrateLadder;

    /// Owns everything a hand-built context borrows.
    pub struct Fixture {
        pub videos: Vec<VideoSpec>,
        pub model: RetentionModel,
        pub config: SessionConfig,
    }

    impl Fixture {
        pub fn new(chunk_counts: &[usize]) -> Self {
            let videos = chunk_counts
                .iter()
                .enumerate()
                .map(|(i, &k)| VideoSpec::new(format!("v{i}"), "c", k, 1.0, BitrateLadder::evaluation()).unwrap())
                .collect();
            let model = RetentionModel::build(
                &[
                    BehaviorTrace::new("t", "c", 10, 5).unwrap(),
                    BehaviorTrace::new("u", "c", 10, 10).unwrap(),
                ],
                "c",
            )
            .unwrap();
            Self {
                videos,
                model,
                config: SessionConfig::default(),
            }
        }

        /// `levels[j] = (downloaded, buffered)` for live player `j`.
        pub fn ctx(&self, levels: &[(usize, usize)], thresholds: RetentionThresholds) -> StrategyContext<'_> {
            let players = levels
                .iter()
                .enumerate()
                .map(|(j, &(downloaded, buffered))| PlayerView {
                    video_index: j,
                    video: &self.videos[j],
                    downloaded,
                    buffered: buffered as f64,
                    thresholds,
                    model: &self.model,
                })
                .collect();
            StrategyContext {
                players,
                c_pred: Some(2000.0),
                c_ave: Some(2000.0),
                c_min: 1500.0,
                r_last: Some(1200),
                rebuffer_flag: false,
                config: &self.config,
            }
        }
    }

    pub fn th(k_min: usize, k_early: usize, k_long: usize) -> RetentionThresholds {
        RetentionThresholds { k_min, k_early, k_long }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in StrategyKind::NAMES {
            assert_eq!(name.parse::<StrategyKind>().unwrap().label(), name);
        }
        let e = "foo".parse::<StrategyKind>().unwrap_err();
        assert!(
            e.to_string().contains("dtaap, fixb, nextone, network, pdas_lite"),
            "{e}"
        );
        assert_eq!(
            StrategyKind::parse_with("fixb", 3, 1).unwrap(),
            StrategyKind::FixB { current: 3, next: 1 }
        );
        assert!(StrategyKind::parse_with("fixb", 0, 1).is_err());
    }

    #[test]
    fn bootstrap_downloads_lowest_first_chunk() {
        let f = Fixture::new(&[10, 8]);
        let mut ctx = f.ctx(&[(0, 0), (0, 0)], th(1, 1, 1));
        ctx.c_pred = None;
        ctx.c_ave = None;
        ctx.r_last = None;
        for s in StrategyKind::all() {
            let d = s.decide(&ctx);
            match d.action {
                Action::Download(c) => {
                    assert_eq!((c.video_index(), c.chunk_index(), c.bitrate_kbps()), (0, 1, 750), "{s}");
                }
                other => panic!("{s}: {other:?}"),
            }
        }
    }
}
