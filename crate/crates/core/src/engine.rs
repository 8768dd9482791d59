//! Discrete-event simulation of one viewing session.
//!
//! One downloader fetches one chunk at a time against the bandwidth trace,
//! without preemption. Playback consumes the current video chunk by chunk.
//! When the playhead reaches a chunk that is not there yet, the player
//! stalls and the stall is charged to that chunk. The viewer swipes as soon
//! as the scripted swipe chunk finishes playing, and the player window
//! slides forward by one video.
//!
//! Simultaneous events resolve in a fixed order: download completion first,
//! then playback, then the strategy is consulted if the downloader is idle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, kbit_to_mbit, QoEWeights};
use crate::retention::{ModelSet, RetentionThresholds};
use crate::strategy::{Action, PlayerView, Strategy, StrategyContext};
use crate::throughput::min_smooth_throughput;
use crate::trace::{BehaviorTrace, ThroughputTrace};
use crate::types::{ChunkRef, CminBasis, SessionConfig, SessionState, VideoSpec};

/// Event budget per session; only a strategy that sleeps through a stall
/// forever can reach it.
const MAX_EVENTS: usize = 5_000_000;

/// The videos a viewer goes through, in order, and where they swipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScriptRepr")]
pub struct SessionScript {
    pub id: String,
    videos: Vec<VideoSpec>,
    swipe_points: Vec<usize>,
}

#[derive(Deserialize)]
struct ScriptRepr {
    id: String,
    videos: Vec<VideoSpec>,
    swipe_points: Vec<usize>,
}

impl TryFrom<ScriptRepr> for SessionScript {
    type Error = Error;

    fn try_from(r: ScriptRepr) -> Result<Self> {
        SessionScript::new(r.id, r.videos, r.swipe_points)
    }
}

impl SessionScript {
    pub fn new(id: impl Into<String>, videos: Vec<VideoSpec>, swipe_points: Vec<usize>) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::InvalidScript("script has no videos".into()));
        }
        if videos.len() != swipe_points.len() {
            return Err(Error::InvalidScript(format!(
                "{} videos but {} swipe points",
                videos.len(),
                swipe_points.len()
            )));
        }
        for (i, (v, &k)) in videos.iter().zip(&swipe_points).enumerate() {
            if k == 0 || k > v.chunk_count() {
                return Err(Error::InvalidScript(format!(
                    "video {i}: swipe point {k} outside 1..={}",
                    v.chunk_count()
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            videos,
            swipe_points,
        })
    }

    /// Draws a swipe point for every video from the behavior traces of its
    /// category (any trace when the category has none). The trace's watched
    /// fraction is mapped onto the video's own chunk count.
    pub fn sample<R: Rng + ?Sized>(
        id: impl Into<String>,
        videos: Vec<VideoSpec>,
        behavior: &[BehaviorTrace],
        rng: &mut R,
    ) -> Result<Self> {
        if behavior.is_empty() {
            return Err(Error::InvalidScript("no behavior traces to sample from".into()));
        }
        let swipe_points = videos
            .iter()
            .map(|v| {
                let pool: Vec<&BehaviorTrace> = behavior.iter().filter(|t| t.category == v.category()).collect();
                let t = if pool.is_empty() {
                    &behavior[rng.gen_range(0..behavior.len())]
                } else {
                    pool[rng.gen_range(0..pool.len())]
                };
                let k = (t.watched_fraction() * v.chunk_count() as f64).ceil() as usize;
                k.clamp(1, v.chunk_count())
            })
            .collect();
        Self::new(id, videos, swipe_points)
    }

    pub fn videos(&self) -> &[VideoSpec] {
        &self.videos
    }

    pub fn swipe_points(&self) -> &[usize] {
        &self.swipe_points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TimelineEvent {
    DownloadStart {
        t: f64,
        video: usize,
        chunk: usize,
        bitrate_kbps: u32,
    },
    DownloadEnd {
        t: f64,
        video: usize,
        chunk: usize,
        bitrate_kbps: u32,
    },
    StallStart {
        t: f64,
        video: usize,
        chunk: usize,
    },
    StallEnd {
        t: f64,
        video: usize,
        chunk: usize,
    },
    ChunkPlay {
        t: f64,
        video: usize,
        chunk: usize,
    },
    Swipe {
        t: f64,
        video: usize,
    },
}

impl TimelineEvent {
    pub fn time(&self) -> f64 {
        match *self {
            Self::DownloadStart { t, .. }
            | Self::DownloadEnd { t, .. }
            | Self::StallStart { t, .. }
            | Self::StallEnd { t, .. }
            | Self::ChunkPlay { t, .. }
            | Self::Swipe { t, .. } => t,
        }
    }
}

/// One strategy consultation, with the buffer levels it saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub t: f64,
    pub action: Action,
    /// Video index of each live player.
    pub players: Vec<usize>,
    pub levels: Vec<f64>,
    pub complete: Vec<bool>,
    pub thresholds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    pub id: String,
    pub watched_chunks: usize,
    pub downloaded_chunks: usize,
    /// Bitrate of every downloaded chunk, chunk 1 first.
    pub bitrates: Vec<u32>,
    /// Stall seconds of every watched chunk.
    pub rebuffer_s: Vec<f64>,
    pub qoe: f64,
    pub cost_kbit: u64,
    pub watched_kbit: u64,
    pub waste_kbit: u64,
    pub cost_mbit: f64,
    pub waste_mbit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub script_id: String,
    pub strategy: String,
    pub videos: Vec<VideoResult>,
    pub qoe: f64,
    pub cost_mbit: f64,
    pub waste_mbit: f64,
    pub rebuffer_s: f64,
    pub utility: f64,
    pub total_wall_s: f64,
    pub timeline: Vec<TimelineEvent>,
    pub decisions: Vec<DecisionRecord>,
}

/// Why a session could not finish.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionAbort {
    #[error("starved at t={t}s: video {video} chunk {chunk} can never arrive")]
    Starvation { t: f64, video: usize, chunk: usize },
    #[error("strategy `{strategy}` issued an invalid action at t={t}s: {reason}")]
    InvalidAction { strategy: String, t: f64, reason: String },
    #[error("session exceeded {0} events without finishing")]
    EventBudget(usize),
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, Copy)]
enum Playback {
    /// Waiting for `need` chunks of the current video to be downloaded
    /// before `chunk` can play. `charged` says whether the wait counts as
    /// rebuffering.
    Waiting {
        chunk: usize,
        need: usize,
        since: f64,
        charged: bool,
    },
    Playing {
        chunk: usize,
        ends_at: f64,
    },
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    chunk: ChunkRef,
    start: f64,
    finish: f64,
}

struct Sim<'a> {
    script: &'a SessionScript,
    trace: &'a ThroughputTrace,
    strategy: &'a dyn Strategy,
    config: &'a SessionConfig,
    models: &'a ModelSet,
    thresholds: Vec<RetentionThresholds>,
    state: SessionState,
    playback: Playback,
    in_flight: Option<InFlight>,
    sleeping_until: Option<f64>,
    r_last: Option<u32>,
    rebuffer_flag: bool,
    timeline: Vec<TimelineEvent>,
    decisions: Vec<DecisionRecord>,
}

impl<'a> Sim<'a> {
    fn videos(&self) -> &'a [VideoSpec] {
        self.script.videos()
    }

    fn startup_need(&self, video: usize) -> usize {
        self.config.b0_startup_chunks.min(self.videos()[video].chunk_count())
    }

    fn now(&self) -> f64 {
        self.state.wall_clock_s
    }

    /// Chunks of the current video behind the playhead, fractional while a
    /// chunk plays.
    fn played(&self) -> f64 {
        match self.playback {
            Playback::Waiting { chunk, .. } => (chunk - 1) as f64,
            Playback::Playing { chunk, ends_at } => {
                let t0 = self.videos()[self.state.current_index].chunk_duration_s();
                chunk as f64 - (ends_at - self.now()) / t0
            }
        }
    }

    fn begin_wait(&mut self, chunk: usize, need: usize, charged: bool) {
        let t = self.now();
        let video = self.state.current_index;
        self.playback = Playback::Waiting {
            chunk,
            need,
            since: t,
            charged,
        };
        if charged && self.state.buffers[video].downloaded_count() < need {
            self.rebuffer_flag = true;
            self.timeline.push(TimelineEvent::StallStart { t, video, chunk });
        }
        self.try_resume();
    }

    fn try_resume(&mut self) {
        let Playback::Waiting {
            chunk,
            need,
            since,
            charged,
        } = self.playback
        else {
            return;
        };
        let video = self.state.current_index;
        if self.state.buffers[video].downloaded_count() < need {
            return;
        }
        let t = self.now();
        if charged && t > since {
            self.state.rebuffering[video][chunk - 1] += t - since;
            self.timeline.push(TimelineEvent::StallEnd { t, video, chunk });
        }
        let t0 = self.videos()[video].chunk_duration_s();
        self.playback = Playback::Playing { chunk, ends_at: t + t0 };
        self.state.playback_position_s = (chunk - 1) as f64 * t0;
        self.timeline.push(TimelineEvent::ChunkPlay { t, video, chunk });
    }

    fn c_min(&self) -> f64 {
        let videos = self.videos();
        let cur = self.state.current_index;
        let b0 = self.config.b0_startup_chunks;
        let next = videos.get(cur + 1).unwrap_or(&videos[cur]);
        let (first, following) = match self.config.c_min_basis {
            CminBasis::Lowest => (videos[cur].ladder().lowest(), next.ladder().lowest()),
            CminBasis::Selected => {
                let first = self.state.buffers[cur]
                    .bitrates()
                    .first()
                    .copied()
                    .unwrap_or_else(|| videos[cur].ladder().lowest());
                let following = self
                    .r_last
                    .map_or(next.ladder().lowest(), |r| next.ladder().highest_at_most(f64::from(r)));
                (first, following)
            }
        };
        min_smooth_throughput(first, &vec![following; b0], b0).expect("length matches b0")
    }

    fn consult(&mut self) -> std::result::Result<(), SessionAbort> {
        let videos = self.videos();
        let cur = self.state.current_index;
        let played = self.played();
        let players: Vec<PlayerView<'_>> = self
            .state
            .players()
            .iter()
            .map(|b| {
                let i = b.video_index();
                let downloaded = b.downloaded_count();
                PlayerView {
                    video_index: i,
                    video: &videos[i],
                    downloaded,
                    buffered: if i == cur {
                        (downloaded as f64 - played).max(0.0)
                    } else {
                        downloaded as f64
                    },
                    thresholds: self.thresholds[i],
                    model: self.models.get(videos[i].category()),
                }
            })
            .collect();
        let history = &self.state.throughput_history;
        let ctx = StrategyContext {
            c_pred: history.predict(self.config.alpha1, self.config.alpha2).ok(),
            c_ave: history.average(),
            c_min: self.c_min(),
            r_last: self.r_last,
            rebuffer_flag: self.rebuffer_flag,
            config: self.config,
            players,
        };
        let decision = self.strategy.decide(&ctx);
        let t = self.now();
        self.decisions.push(DecisionRecord {
            t,
            action: decision.action,
            players: ctx.players.iter().map(|p| p.video_index).collect(),
            levels: ctx.players.iter().map(|p| p.buffered).collect(),
            complete: ctx.players.iter().map(|p| p.is_complete()).collect(),
            thresholds: decision.thresholds.clone(),
        });
        let window: Vec<usize> = ctx.players.iter().map(|p| p.video_index).collect();
        drop(ctx);
        self.rebuffer_flag = false;

        let invalid = |reason: String| SessionAbort::InvalidAction {
            strategy: self.strategy.name().to_string(),
            t,
            reason,
        };
        match decision.action {
            Action::Sleep(d) => {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(invalid(format!("sleep of {d}s")));
                }
                if matches!(self.playback, Playback::Waiting { .. }) {
                    return Err(invalid("sleep while playback waits for a chunk".into()));
                }
                self.sleeping_until = Some(t + d);
            }
            Action::Download(chunk) => {
                let v = chunk.video_index();
                if !window.contains(&v) {
                    return Err(invalid(format!("video {v} is not a live player")));
                }
                let buf = &self.state.buffers[v];
                if chunk.chunk_index() != buf.next_needed() {
                    return Err(invalid(format!(
                        "chunk {} of video {v} requested, next needed is {}",
                        chunk.chunk_index(),
                        buf.next_needed()
                    )));
                }
                ChunkRef::new(v, &videos[v], chunk.chunk_index(), chunk.bitrate_kbps())
                    .map_err(|e| invalid(e.to_string()))?;
                let size = videos[v].chunk_kbit(chunk.bitrate_kbps()) as f64;
                let finish = self.trace.download_finish_time(t, size);
                self.timeline.push(TimelineEvent::DownloadStart {
                    t,
                    video: v,
                    chunk: chunk.chunk_index(),
                    bitrate_kbps: chunk.bitrate_kbps(),
                });
                self.in_flight = Some(InFlight {
                    chunk,
                    start: t,
                    finish,
                });
            }
        }
        Ok(())
    }

    fn complete_download(&mut self, job: InFlight) -> std::result::Result<(), SessionAbort> {
        let v = job.chunk.video_index();
        self.state.buffers[v].push(&job.chunk)?;
        let size = self.videos()[v].chunk_kbit(job.chunk.bitrate_kbps()) as f64;
        let elapsed = job.finish - job.start;
        if elapsed > 0.0 {
            self.state.throughput_history.record_download(size, elapsed)?;
        }
        self.r_last = Some(job.chunk.bitrate_kbps());
        self.timeline.push(TimelineEvent::DownloadEnd {
            t: job.finish,
            video: v,
            chunk: job.chunk.chunk_index(),
            bitrate_kbps: job.chunk.bitrate_kbps(),
        });
        Ok(())
    }

    /// Runs to the final swipe and returns the session end time.
    fn run(&mut self) -> std::result::Result<f64, SessionAbort> {
        let first_need = self.startup_need(0);
        self.begin_wait(1, first_need, false);

        for _ in 0..MAX_EVENTS {
            if self.in_flight.is_none() && self.sleeping_until.is_none() {
                self.consult()?;
            }
            let t_download = self.in_flight.map_or(f64::INFINITY, |j| j.finish);
            let t_play = match self.playback {
                Playback::Playing { ends_at, .. } => ends_at,
                Playback::Waiting { .. } => f64::INFINITY,
            };
            let t_wake = self.sleeping_until.unwrap_or(f64::INFINITY);
            let next = t_download.min(t_play).min(t_wake);
            if next.is_infinite() {
                let video = self.state.current_index;
                let chunk = match self.playback {
                    Playback::Waiting { chunk, .. } | Playback::Playing { chunk, .. } => chunk,
                };
                return Err(SessionAbort::Starvation {
                    t: self.now(),
                    video,
                    chunk,
                });
            }
            self.state.wall_clock_s = next;

            if t_download == next {
                let job = self.in_flight.take().expect("in flight");
                self.complete_download(job)?;
                self.try_resume();
            }
            if t_play == next {
                self.sleeping_until = None;
                let Playback::Playing { chunk, .. } = self.playback else {
                    unreachable!()
                };
                let video = self.state.current_index;
                let t0 = self.videos()[video].chunk_duration_s();
                self.state.playback_position_s = chunk as f64 * t0;
                if chunk == self.script.swipe_points()[video] {
                    self.timeline.push(TimelineEvent::Swipe { t: next, video });
                    if video + 1 == self.videos().len() {
                        return Ok(next);
                    }
                    self.state.current_index += 1;
                    self.state.playback_position_s = 0.0;
                    let need = self.startup_need(video + 1);
                    self.begin_wait(1, need, true);
                } else {
                    self.begin_wait(chunk + 1, chunk + 1, true);
                }
            }
            if t_wake == next {
                self.sleeping_until = None;
            }
        }
        Err(SessionAbort::EventBudget(MAX_EVENTS))
    }
}

/// Simulates one session of `script` over `trace` under `strategy`.
pub fn run_session(
    script: &SessionScript,
    trace: &ThroughputTrace,
    strategy: &dyn Strategy,
    config: &SessionConfig,
    models: &ModelSet,
) -> std::result::Result<SessionResult, SessionAbort> {
    config.validate()?;
    let videos = script.videos();
    let thresholds = videos
        .iter()
        .map(|v| {
            models
                .get(v.category())
                .thresholds(v.chunk_count(), config.p_th_early, config.p_th_long)
        })
        .collect();
    let mut sim = Sim {
        script,
        trace,
        strategy,
        config,
        models,
        thresholds,
        state: SessionState::new(videos, config.n_pred, config.window_chunks),
        playback: Playback::Waiting {
            chunk: 1,
            need: 1,
            since: 0.0,
            charged: false,
        },
        in_flight: None,
        sleeping_until: None,
        r_last: None,
        rebuffer_flag: false,
        timeline: Vec::new(),
        decisions: Vec::new(),
    };
    let end = sim.run()?;

    // Downloads are not preempted: a chunk still in flight at the final
    // swipe is delivered and paid for.
    if let Some(job) = sim.in_flight.take() {
        if job.finish.is_finite() {
            sim.state.wall_clock_s = job.finish;
            sim.complete_download(job)?;
        }
    }
    sim.state.validate(videos)?;

    let weights = QoEWeights::from(config);
    let mut video_results = Vec::with_capacity(videos.len());
    for (i, v) in videos.iter().enumerate() {
        let watched = script.swipe_points()[i];
        let bitrates = sim.state.buffers[i].bitrates().to_vec();
        let t0 = v.chunk_duration_s();
        let rebuffer_s = sim.state.rebuffering[i][..watched].to_vec();
        let qoe = metrics::qoe_video_with(&bitrates[..watched], &rebuffer_s, weights, config.quality)?;
        let cost_kbit = metrics::cost_video_kbit(&bitrates, t0);
        let watched_kbit = metrics::cost_video_kbit(&bitrates[..watched], t0);
        let waste_kbit = metrics::waste_video_kbit(&bitrates, watched, t0)?;
        video_results.push(VideoResult {
            id: v.id().to_string(),
            watched_chunks: watched,
            downloaded_chunks: bitrates.len(),
            bitrates,
            rebuffer_s,
            qoe,
            cost_kbit,
            watched_kbit,
            waste_kbit,
            cost_mbit: kbit_to_mbit(cost_kbit),
            waste_mbit: kbit_to_mbit(waste_kbit),
        });
    }
    let qoes: Vec<f64> = video_results.iter().map(|r| r.qoe).collect();
    let costs: Vec<f64> = video_results.iter().map(|r| r.cost_mbit).collect();
    let utility = metrics::utility(&qoes, &costs, config.w4)?;
    Ok(SessionResult {
        script_id: script.id.clone(),
        strategy: strategy.name().to_string(),
        qoe: qoes.iter().sum(),
        cost_mbit: kbit_to_mbit(video_results.iter().map(|r| r.cost_kbit).sum()),
        waste_mbit: kbit_to_mbit(video_results.iter().map(|r| r.waste_kbit).sum()),
        rebuffer_s: video_results.iter().flat_map(|r| &r.rebuffer_s).sum(),
        utility,
        total_wall_s: end,
        videos: video_results,
        timeline: sim.timeline,
        decisions: sim.decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retention::RetentionModel;
    use crate::strategy::StrategyKind;
    use crate::types::BitrateLadder;

    fn models() -> ModelSet {
        ModelSet::single(RetentionModel::build(&[BehaviorTrace::new("t", "c", 10, 5).unwrap()], "c").unwrap())
    }

    fn video(id: &str, k: usize, ladder: &[u32]) -> VideoSpec {
        VideoSpec::new(id, "c", k, 1.0, BitrateLadder::new(ladder.to_vec()).unwrap()).unwrap()
    }

    fn downloads(r: &SessionResult) -> Vec<(usize, usize, f64, f64)> {
        let mut starts = Vec::new();
        let mut out = Vec::new();
        for e in &r.timeline {
            match *e {
                TimelineEvent::DownloadStart { t, video, chunk, .. } => starts.push((video, chunk, t)),
                TimelineEvent::DownloadEnd { t, video, chunk, .. } => {
                    let (_, _, s) = *starts.iter().find(|(v, c, _)| (*v, *c) == (video, chunk)).unwrap();
                    out.push((video, chunk, s, t));
                }
                _ => {}
            }
        }
        out
    }

    #[test]
    fn script_validation() {
        let v = video("a", 3, &[750]);
        assert!(SessionScript::new("s", vec![], vec![]).is_err());
        assert!(SessionScript::new("s", vec![v.clone()], vec![4]).is_err());
        assert!(SessionScript::new("s", vec![v.clone()], vec![0]).is_err());
        assert!(SessionScript::new("s", vec![v.clone()], vec![1, 2]).is_err());
        assert!(SessionScript::new("s", vec![v], vec![3]).is_ok());
    }

    #[test]
    fn fast_channel_timeline() {
        let script = SessionScript::new("s", vec![video("a", 2, &[750])], vec![2]).unwrap();
        let trace = ThroughputTrace::constant(2000.0).unwrap();
        let r = run_session(
            &script,
            &trace,
            &StrategyKind::NextOne,
            &SessionConfig::default(),
            &models(),
        )
        .unwrap();
        assert_eq!(downloads(&r), vec![(0, 1, 0.0, 0.375), (0, 2, 0.375, 0.75)]);
        assert_eq!(r.total_wall_s, 2.375);
        assert_eq!(r.rebuffer_s, 0.0);
        assert_eq!(r.videos[0].watched_chunks, 2);
        assert_eq!(r.videos[0].downloaded_chunks, 2);
    }

    #[test]
    fn slow_channel_stalls_on_second_chunk() {
        let script = SessionScript::new("s", vec![video("a", 2, &[750])], vec![2]).unwrap();
        let trace = ThroughputTrace::constant(500.0).unwrap();
        let r = run_session(
            &script,
            &trace,
            &StrategyKind::NextOne,
            &SessionConfig::default(),
            &models(),
        )
        .unwrap();
        assert_eq!(downloads(&r), vec![(0, 1, 0.0, 1.5), (0, 2, 1.5, 3.0)]);
        // Chunk 1 plays 1.5..2.5, chunk 2 arrives at 3.0.
        assert_eq!(r.videos[0].rebuffer_s, vec![0.0, 0.5]);
        assert_eq!(r.total_wall_s, 4.0);
    }

    #[test]
    fn swipe_after_first_chunk_wastes_preloaded_tail() {
        let script = SessionScript::new("s", vec![video("a", 3, &[1000]), video("b", 3, &[1000])], vec![1, 1]).unwrap();
        let trace = ThroughputTrace::constant(4000.0).unwrap();
        let r = run_session(
            &script,
            &trace,
            &StrategyKind::NextOne,
            &SessionConfig::default(),
            &models(),
        )
        .unwrap();
        // Video a fully arrives by 0.75 s, before the swipe at 1.25 s.
        assert_eq!(r.videos[0].downloaded_chunks, 3);
        assert_eq!(r.videos[0].waste_kbit, 2000);
        assert_eq!(r.videos[1].waste_kbit, 2000);
        assert_eq!(r.rebuffer_s, 0.0);
    }

    #[test]
    fn in_flight_chunk_of_departed_video_is_waste() {
        let script = SessionScript::new("s", vec![video("a", 4, &[1000]), video("b", 1, &[1000])], vec![1, 1]).unwrap();
        // Each chunk takes 0.75 s. Chunk a2 starts at 0.75 and a3 at 1.5,
        // which straddles the swipe at 1.75.
        let trace = ThroughputTrace::constant(4000.0 / 3.0).unwrap();
        let r = run_session(
            &script,
            &trace,
            &StrategyKind::NextOne,
            &SessionConfig::default(),
            &models(),
        )
        .unwrap();
        let a = &r.videos[0];
        assert!(a.downloaded_chunks >= 3, "{a:?}");
        assert_eq!(a.waste_kbit, 1000 * (a.downloaded_chunks as u64 - 1));
        assert_eq!(a.cost_kbit, a.watched_kbit + a.waste_kbit);
    }

    #[test]
    fn startup_wait_of_later_video_counts_as_rebuffer() {
        let script = SessionScript::new("s", vec![video("a", 1, &[1000]), video("b", 1, &[1000])], vec![1, 1]).unwrap();
        // Fix-B with next threshold 1 still has to fetch b1 after a1.
        let trace = ThroughputTrace::constant(500.0).unwrap();
        let r = run_session(
            &script,
            &trace,
            &StrategyKind::FixB { current: 1, next: 1 },
            &SessionConfig::default(),
            &models(),
        )
        .unwrap();
        // a1 arrives at 2, plays 2..3; b1 downloads 2..4.
        assert_eq!(r.videos[0].rebuffer_s, vec![0.0]);
        assert_eq!(r.videos[1].rebuffer_s, vec![1.0]);
        assert_eq!(r.total_wall_s, 5.0);
    }

    #[test]
    fn dead_channel_aborts_with_starvation() {
        let script = SessionScript::new("s", vec![video("a", 2, &[750])], vec![2]).unwrap();
        let trace = ThroughputTrace::new(vec![(0.0, 1000.0), (1.0, 0.0)]).unwrap();
        let e = run_session(
            &script,
            &trace,
            &StrategyKind::Dtaap,
            &SessionConfig::default(),
            &models(),
        )
        .unwrap_err();
        assert!(
            matches!(e, SessionAbort::Starvation { video: 0, chunk: 2, .. }),
            "{e:?}"
        );
    }

    #[test]
    fn invalid_config_is_rejected() {
        let script = SessionScript::new("s", vec![video("a", 2, &[750])], vec![2]).unwrap();
        let trace = ThroughputTrace::constant(1000.0).unwrap();
        let cfg = SessionConfig {
            n_pred: 1,
            ..Default::default()
        };
        assert!(matches!(
            run_session(&script, &trace, &StrategyKind::Dtaap, &cfg, &models()),
            Err(SessionAbort::Invalid(_))
        ));
    }

    struct Rogue;
    impl Strategy for Rogue {
        fn name(&self) -> &str {
            "rogue"
        }
        fn decide(&self, ctx: &StrategyContext<'_>) -> crate::strategy::Decision {
            let p = ctx.current();
            let chunk =
                ChunkRef::new(p.video_index, p.video, p.video.chunk_count(), p.video.ladder().lowest()).unwrap();
            crate::strategy::Decision {
                action: Action::Download(chunk),
                thresholds: vec![1; ctx.players.len()],
            }
        }
    }

    #[test]
    fn out_of_order_download_is_an_invalid_action() {
        let script = SessionScript::new("s", vec![video("a", 3, &[750])], vec![3]).unwrap();
        let trace = ThroughputTrace::constant(1000.0).unwrap();
        let e = run_session(&script, &trace, &Rogue, &SessionConfig::default(), &models()).unwrap_err();
        assert!(matches!(e, SessionAbort::InvalidAction { .. }), "{e:?}");
    }

    #[test]
    fn sampled_script_maps_fractions() {
        use rand::SeedableRng;
        let behavior = vec![BehaviorTrace::new("t", "c", 10, 5).unwrap()];
        let videos = vec![video("a", 4, &[750]), video("b", 7, &[750])];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = SessionScript::sample("s", videos, &behavior, &mut rng).unwrap();
        assert_eq!(s.swipe_points(), &[2, 4]);
    }
}
