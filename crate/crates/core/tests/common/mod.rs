#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shortvid::engine::TimelineEvent;
use shortvid::prelude::*;
use shortvid::retention::ModelSet;

pub const TICKS_PER_S: u64 = 64;

/// Baseline rules re-derived for the oracle. Only the rules whose inputs
/// stay exact under a constant channel are mirrored here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OraclePolicy {
    FixB(usize, usize),
    NextOne,
    Network,
}

impl OraclePolicy {
    pub fn all() -> [OraclePolicy; 5] {
        [
            Self::FixB(1, 1),
            Self::FixB(2, 1),
            Self::FixB(4, 2),
            Self::NextOne,
            Self::Network,
        ]
    }

    pub fn kind(self) -> StrategyKind {
        match self {
            Self::FixB(current, next) => StrategyKind::FixB { current, next },
            Self::NextOne => StrategyKind::NextOne,
            Self::Network => StrategyKind::Network,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Play {
    Waiting {
        chunk: usize,
        need: usize,
        since: u64,
        charged: bool,
    },
    Playing {
        chunk: usize,
        end: u64,
    },
}

struct Job {
    video: usize,
    chunk: usize,
    bitrate: u32,
    start: u64,
    remaining_kbit: f64,
}

pub struct OracleRun {
    pub timeline: Vec<TimelineEvent>,
    /// Stall seconds per video and chunk.
    pub rebuffer: Vec<Vec<f64>>,
    pub bitrates: Vec<Vec<u32>>,
    pub end_s: f64,
}

fn secs(tick: u64) -> f64 {
    tick as f64 / TICKS_PER_S as f64
}

fn highest_at_most(ladder: &[u32], c: f64) -> u32 {
    ladder
        .iter()
        .rev()
        .copied()
        .find(|&r| f64::from(r) <= c)
        .unwrap_or(ladder[0])
}

/// Steps a constant-bandwidth session forward in 1/64 s ticks and writes
/// down everything that happens. Chunk durations are 1 s and every size and
/// rate must be chosen so that all event times land on ticks.
pub struct Oracle<'a> {
    pub chunks: &'a [usize],
    pub swipes: &'a [usize],
    pub ladder: &'a [u32],
    pub bandwidth_kbps: f64,
    pub b0: usize,
    pub t_sleep_ticks: u64,
    pub n_pred: usize,
    pub window: usize,
    pub policy: OraclePolicy,
}

impl Oracle<'_> {
    pub fn run(&self) -> OracleRun {
        let n = self.chunks.len();
        let mut got: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut rebuffer_ticks: Vec<Vec<u64>> = self.chunks.iter().map(|&k| vec![0; k]).collect();
        let mut timeline = Vec::new();
        let mut samples: Vec<f64> = Vec::new();
        let mut cur = 0usize;
        let mut play = Play::Waiting {
            chunk: 1,
            need: self.b0.min(self.chunks[0]),
            since: 0,
            charged: false,
        };
        let mut job: Option<Job> = None;
        let mut sleep_until: Option<u64> = None;
        let mut finished_at: Option<u64> = None;
        let per_tick = self.bandwidth_kbps / TICKS_PER_S as f64;

        let mut tick = 0u64;
        loop {
            assert!(tick < 1_000_000, "oracle ran away");
            if let Some(j) = &job {
                if j.remaining_kbit <= 0.0 {
                    assert_eq!(j.remaining_kbit, 0.0, "download did not end on a tick");
                    let j = job.take().unwrap();
                    got[j.video].push(j.bitrate);
                    samples.push(f64::from(j.bitrate) / secs(tick - j.start));
                    timeline.push(TimelineEvent::DownloadEnd {
                        t: secs(tick),
                        video: j.video,
                        chunk: j.chunk,
                        bitrate_kbps: j.bitrate,
                    });
                    if finished_at.is_some() {
                        break;
                    }
                    resume(&mut play, cur, &got, tick, &mut rebuffer_ticks, &mut timeline);
                }
            }
            if finished_at.is_some() {
                if job.is_none() {
                    break;
                }
            } else {
                if let Play::Playing { chunk, end } = play {
                    if end == tick {
                        sleep_until = None;
                        if chunk == self.swipes[cur] {
                            timeline.push(TimelineEvent::Swipe {
                                t: secs(tick),
                                video: cur,
                            });
                            if cur + 1 == n {
                                finished_at = Some(tick);
                                if job.is_none() {
                                    break;
                                }
                            } else {
                                cur += 1;
                                let need = self.b0.min(self.chunks[cur]);
                                wait(&mut play, cur, &got, 1, need, tick, &mut timeline);
                                resume(&mut play, cur, &got, tick, &mut rebuffer_ticks, &mut timeline);
                            }
                        } else {
                            wait(&mut play, cur, &got, chunk + 1, chunk + 1, tick, &mut timeline);
                            resume(&mut play, cur, &got, tick, &mut rebuffer_ticks, &mut timeline);
                        }
                    }
                }
                if finished_at.is_none() {
                    if sleep_until == Some(tick) {
                        sleep_until = None;
                    }
                    if job.is_none() && sleep_until.is_none() {
                        match self.decide(cur, play, tick, &got, &samples) {
                            Some((video, bitrate)) => {
                                let chunk = got[video].len() + 1;
                                timeline.push(TimelineEvent::DownloadStart {
                                    t: secs(tick),
                                    video,
                                    chunk,
                                    bitrate_kbps: bitrate,
                                });
                                job = Some(Job {
                                    video,
                                    chunk,
                                    bitrate,
                                    start: tick,
                                    remaining_kbit: f64::from(bitrate),
                                });
                            }
                            None => {
                                assert!(matches!(play, Play::Playing { .. }), "sleeping through a stall");
                                sleep_until = Some(tick + self.t_sleep_ticks);
                            }
                        }
                    }
                }
            }
            if let Some(j) = &mut job {
                j.remaining_kbit -= per_tick;
            }
            tick += 1;
        }
        OracleRun {
            timeline,
            rebuffer: rebuffer_ticks
                .iter()
                .map(|v| v.iter().map(|&t| secs(t)).collect())
                .collect(),
            bitrates: got,
            end_s: secs(finished_at.unwrap()),
        }
    }

    /// `Some((video, bitrate))` to download, `None` to sleep.
    fn decide(&self, cur: usize, play: Play, tick: u64, got: &[Vec<u32>], samples: &[f64]) -> Option<(usize, u32)> {
        let live = cur..(cur + self.n_pred).min(self.chunks.len());
        let window = &samples[samples.len().saturating_sub(self.window)..];
        if samples.is_empty() && got[cur].len() < self.chunks[cur] {
            return Some((cur, self.ladder[0]));
        }
        let c_ave = if window.is_empty() {
            0.0
        } else {
            window.iter().sum::<f64>() / window.len() as f64
        };
        let c_pred = samples.last().map_or(0.0, |&last| 0.5 * c_ave + 0.5 * last);
        let played = match play {
            Play::Waiting { chunk, .. } => (chunk - 1) as f64,
            Play::Playing { chunk, end } => chunk as f64 - (end - tick) as f64 / TICKS_PER_S as f64,
        };
        let r_min = f64::from(self.ladder[0]);
        let c_min = r_min * (1 + self.b0) as f64;
        let (b_c, b_next) = match self.policy {
            OraclePolicy::FixB(c, n) => (c.max(self.b0), n),
            OraclePolicy::NextOne => (usize::MAX, usize::MAX),
            OraclePolicy::Network => {
                if c_pred >= c_min {
                    (2.max(self.b0), 1)
                } else if c_pred <= r_min {
                    (6, 3)
                } else {
                    (4, 2)
                }
            }
        };
        for v in live {
            let have = got[v].len();
            if have == self.chunks[v] {
                continue;
            }
            let (level, limit) = if v == cur {
                ((have as f64 - played).max(0.0), b_c)
            } else {
                (have as f64, b_next)
            };
            if limit == usize::MAX || level < limit as f64 {
                return Some((v, highest_at_most(self.ladder, c_ave)));
            }
        }
        None
    }
}

fn wait(
    play: &mut Play,
    cur: usize,
    got: &[Vec<u32>],
    chunk: usize,
    need: usize,
    tick: u64,
    timeline: &mut Vec<TimelineEvent>,
) {
    *play = Play::Waiting {
        chunk,
        need,
        since: tick,
        charged: true,
    };
    if got[cur].len() < need {
        timeline.push(TimelineEvent::StallStart {
            t: secs(tick),
            video: cur,
            chunk,
        });
    }
}

fn resume(
    play: &mut Play,
    cur: usize,
    got: &[Vec<u32>],
    tick: u64,
    rebuffer: &mut [Vec<u64>],
    timeline: &mut Vec<TimelineEvent>,
) {
    if let Play::Waiting {
        chunk,
        need,
        since,
        charged,
    } = *play
    {
        if got[cur].len() >= need {
            if charged && tick > since {
                rebuffer[cur][chunk - 1] += tick - since;
                timeline.push(TimelineEvent::StallEnd {
                    t: secs(tick),
                    video: cur,
                    chunk,
                });
            }
            *play = Play::Playing {
                chunk,
                end: tick + TICKS_PER_S,
            };
            timeline.push(TimelineEvent::ChunkPlay {
                t: secs(tick),
                video: cur,
                chunk,
            });
        }
    }
}

/// Every script of `1..=max_videos` videos with `1..=max_chunks` chunks
/// each and every possible swipe point: `(chunk counts, swipe points)`.
pub fn enumerate_scripts(max_videos: usize, max_chunks: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut frontier: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new())];
    for _ in 0..max_videos {
        let mut next = Vec::new();
        for (ks, ss) in &frontier {
            for k in 1..=max_chunks {
                for s in 1..=k {
                    let mut ks = ks.clone();
                    let mut ss = ss.clone();
                    ks.push(k);
                    ss.push(s);
                    next.push((ks, ss));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn uniform_models() -> ModelSet {
    let traces: Vec<_> = (1..=10)
        .map(|k| BehaviorTrace::new(format!("t{k}"), "c", 10, k).unwrap())
        .collect();
    ModelSet::build(&traces).unwrap()
}

/// A random session: videos with random shapes and ladders, swiped at
/// random chunks.
pub fn random_script<R: Rng>(rng: &mut R, id: &str, max_videos: usize) -> SessionScript {
    let ladders = [
        BitrateLadder::evaluation(),
        BitrateLadder::new(vec![300, 750, 1200, 1850, 2850]).unwrap(),
        BitrateLadder::new(vec![500]).unwrap(),
    ];
    let durations = [0.5, 1.0, 2.0, 1.5];
    let categories = ["a", "b", "c"];
    let n = rng.gen_range(1..=max_videos);
    let videos: Vec<VideoSpec> = (0..n)
        .map(|i| {
            VideoSpec::new(
                format!("{id}-v{i}"),
                categories[rng.gen_range(0..categories.len())],
                rng.gen_range(1..=30),
                durations[rng.gen_range(0..durations.len())],
                ladders[rng.gen_range(0..ladders.len())].clone(),
            )
            .unwrap()
        })
        .collect();
    let swipes = videos.iter().map(|v| rng.gen_range(1..=v.chunk_count())).collect();
    SessionScript::new(id, videos, swipes).unwrap()
}

pub fn random_models<R: Rng>(rng: &mut R) -> ModelSet {
    let mut traces = Vec::new();
    for cat in ["a", "b", "c"] {
        for i in 0..rng.gen_range(1..40) {
            let total = rng.gen_range(1..=40);
            traces.push(BehaviorTrace::new(format!("{cat}{i}"), cat, total, rng.gen_range(1..=total)).unwrap());
        }
    }
    ModelSet::build(&traces).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
