//! Retention- and throughput-driven buffer control with buffer-aware
//! bitrate adaptation.
//!
//! Two buffer depths are maintained. The current video keeps `B_c` chunks
//! ahead of the playhead; every recommended video keeps `B_next` chunks
//! from its start. Both shrink as throughput improves and as the viewer's
//! history says swipes come early.

use super::{bootstrap, scan, Decision, StrategyContext};
use crate::retention::RetentionThresholds;
use crate::types::BitrateLadder;

fn ceil_div(a: usize, b: usize) -> i64 {
    a.div_ceil(b) as i64
}

/// Buffer depth for the current video.
///
/// ```text
/// 1 + ceil(K_long / K)                          if C >= C_min
/// 2 + ceil(K_long / K) - ceil(K_early / K)      if R < C < C_min
/// 3 + ceil(K_long / K) - ceil(K_early / K)      otherwise
/// ```
///
/// `c` is the predicted throughput and `r_last` the bitrate of the last
/// downloaded chunk. The result is never below one chunk.
pub fn buffer_threshold_current(c: f64, c_min: f64, r_last: f64, th: RetentionThresholds, chunk_count: usize) -> usize {
    let long = ceil_div(th.k_long, chunk_count);
    let early = ceil_div(th.k_early, chunk_count);
    let depth = if c >= c_min {
        1 + long
    } else if c > r_last {
        2 + long - early
    } else {
        3 + long - early
    };
    depth.max(1) as usize
}

/// Buffer depth for each recommended video.
///
/// ```text
/// 1 + K_min                                     if C >= C_min
/// 2 + K_min - floor(K_early / (2 + K_min))      if R < C < C_min
/// 3 + K_min - floor(K_early / (3 + K_min))      otherwise
/// ```
///
/// `c` is the average throughput. Clamped to at least one chunk.
pub fn buffer_threshold_next(c: f64, c_min: f64, r_last: f64, th: RetentionThresholds) -> usize {
    let k_min = th.k_min as i64;
    let k_early = th.k_early as i64;
    let depth = if c >= c_min {
        1 + k_min
    } else if c > r_last {
        2 + k_min - k_early / (2 + k_min)
    } else {
        3 + k_min - k_early / (3 + k_min)
    };
    depth.max(1) as usize
}

/// Bitrate for the current video's next chunk.
///
/// After a stall the bitrate drops to the highest level the predicted
/// throughput sustains, and always at least one level below `r_last` when
/// such a level exists. Otherwise the bitrate moves at most one level: down
/// when throughput falls short and the buffer is under `gamma1 * B_c`, up
/// when throughput has headroom and the buffer is over `gamma2 * B_c`. A
/// step up never goes past the highest level the predicted throughput
/// sustains.
#[allow(clippy::too_many_arguments)]
pub fn current_bitrate(
    ladder: &BitrateLadder,
    c_pred: f64,
    r_last: u32,
    rebuffered: bool,
    buffered: f64,
    b_th_current: usize,
    gamma1: f64,
    gamma2: f64,
) -> u32 {
    // r_last may come from another video's ladder.
    let last = ladder.highest_at_most(f64::from(r_last));
    let depth = b_th_current as f64;
    if rebuffered {
        ladder.highest_at_most(c_pred).min(ladder.step_down(last))
    } else if c_pred < f64::from(r_last) && buffered < gamma1 * depth {
        ladder.step_down(last)
    } else if c_pred > f64::from(r_last) && buffered > gamma2 * depth {
        ladder.step_up(last).min(ladder.highest_at_most(c_pred)).max(last)
    } else {
        last
    }
}

/// Bitrate for a recommended video: the highest level the average throughput
/// covers.
pub fn recommended_bitrate(ladder: &BitrateLadder, c_ave: f64) -> u32 {
    ladder.highest_at_most(c_ave)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitrateTarget {
    Current,
    /// Live player index (>= 1).
    Recommended(usize),
}

/// `(B_c, B_next per recommended player)` for this context, or `None` before
/// the first throughput sample.
pub fn dtaap_thresholds(ctx: &StrategyContext<'_>) -> Option<Vec<usize>> {
    let (c_pred, c_ave, r_last) = ctx.warmed_up()?;
    let r_last = f64::from(r_last);
    let cur = ctx.current();
    let mut out = Vec::with_capacity(ctx.players.len());
    out.push(buffer_threshold_current(
        c_pred,
        ctx.c_min,
        r_last,
        cur.thresholds,
        cur.video.chunk_count(),
    ));
    out.extend(
        ctx.players[1..]
            .iter()
            .map(|p| buffer_threshold_next(c_ave, ctx.c_min, r_last, p.thresholds)),
    );
    Some(out)
}

pub fn dtaap_bitrate(ctx: &StrategyContext<'_>, target: BitrateTarget) -> u32 {
    let Some((c_pred, c_ave, r_last)) = ctx.warmed_up() else {
        let j = match target {
            BitrateTarget::Current => 0,
            BitrateTarget::Recommended(j) => j,
        };
        return ctx.players[j].video.ladder().lowest();
    };
    match target {
        BitrateTarget::Current => {
            let cur = ctx.current();
            let b_c = buffer_threshold_current(
                c_pred,
                ctx.c_min,
                f64::from(r_last),
                cur.thresholds,
                cur.video.chunk_count(),
            );
            current_bitrate(
                cur.video.ladder(),
                c_pred,
                r_last,
                ctx.rebuffer_flag,
                cur.buffered,
                b_c,
                ctx.config.gamma1,
                ctx.config.gamma2,
            )
        }
        BitrateTarget::Recommended(j) => recommended_bitrate(ctx.players[j].video.ladder(), c_ave),
    }
}

pub fn dtaap_decide(ctx: &StrategyContext<'_>) -> Decision {
    if let Some(d) = bootstrap(ctx) {
        return d;
    }
    // No throughput sample yet and nothing left to bootstrap: keep one chunk
    // per player at the lowest level.
    let Some(thresholds) = dtaap_thresholds(ctx) else {
        return scan(ctx, vec![1; ctx.players.len()], |j| {
            ctx.players[j].video.ladder().lowest()
        });
    };
    scan(ctx, thresholds, |j| {
        if j == 0 {
            dtaap_bitrate(ctx, BitrateTarget::Current)
        } else {
            dtaap_bitrate(ctx, BitrateTarget::Recommended(j))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::Action;
    use super::*;

    #[test]
    fn current_threshold_branches() {
        let t = th(1, 2, 8);
        // C >= C_min
        assert_eq!(buffer_threshold_current(2000.0, 1500.0, 1200.0, t, 10), 2);
        assert_eq!(buffer_threshold_current(1500.0, 1500.0, 1200.0, t, 10), 2);
        // R < C < C_min
        assert_eq!(buffer_threshold_current(1400.0, 1500.0, 1200.0, t, 10), 2);
        // C <= R
        assert_eq!(buffer_threshold_current(1200.0, 1500.0, 1200.0, t, 10), 3);
        assert_eq!(buffer_threshold_current(800.0, 1500.0, 1200.0, t, 10), 3);
    }

    #[test]
    fn next_threshold_branches() {
        assert_eq!(buffer_threshold_next(2000.0, 1500.0, 1200.0, th(2, 2, 1)), 3);
        assert_eq!(buffer_threshold_next(1400.0, 1500.0, 1200.0, th(2, 2, 1)), 4);
        assert_eq!(buffer_threshold_next(1000.0, 1500.0, 1200.0, th(2, 8, 1)), 4);
    }

    #[test]
    fn next_threshold_never_drops_below_one_chunk() {
        // 2 + 1 - floor(30 / 3) = -7 before clamping.
        assert_eq!(buffer_threshold_next(1400.0, 1500.0, 1200.0, th(1, 30, 1)), 1);
    }

    #[test]
    fn bitrate_after_rebuffer() {
        let l = BitrateLadder::evaluation();
        assert_eq!(current_bitrate(&l, 1000.0, 1200, true, 0.0, 2, 0.5, 0.8), 750);
        // Throughput would sustain r_last, but a stall forces one level down.
        assert_eq!(current_bitrate(&l, 5000.0, 1850, true, 0.0, 2, 0.5, 0.8), 1200);
        assert_eq!(current_bitrate(&l, 5000.0, 750, true, 0.0, 2, 0.5, 0.8), 750);
    }

    #[test]
    fn bitrate_steps_one_level() {
        let l = BitrateLadder::evaluation();
        // up: c_pred > r_last and 3 > 0.8 * 3
        assert_eq!(current_bitrate(&l, 1850.0, 1200, false, 3.0, 3, 0.5, 0.8), 1850);
        assert_eq!(current_bitrate(&l, 9000.0, 750, false, 3.0, 3, 0.5, 0.8), 1200);
        // down: c_pred < r_last and 1 < 0.5 * 3
        assert_eq!(current_bitrate(&l, 100.0, 1850, false, 1.0, 3, 0.5, 0.8), 1200);
        // up, but not past what c_pred covers
        assert_eq!(current_bitrate(&l, 1000.0, 750, false, 3.0, 3, 0.5, 0.8), 750);
        assert_eq!(current_bitrate(&l, 1500.0, 750, false, 3.0, 3, 0.5, 0.8), 1200);
        // hold: c_pred < r_last but buffer healthy
        assert_eq!(current_bitrate(&l, 100.0, 1850, false, 2.0, 3, 0.5, 0.8), 1850);
        // hold: c_pred > r_last but buffer not deep enough
        assert_eq!(current_bitrate(&l, 9000.0, 750, false, 2.0, 3, 0.5, 0.8), 750);
    }

    #[test]
    fn recommended_matches_average() {
        let l = BitrateLadder::evaluation();
        assert_eq!(recommended_bitrate(&l, 1300.0), 1200);
        assert_eq!(recommended_bitrate(&l, 500.0), 750);
    }

    #[test]
    fn decide_downloads_current_below_threshold() {
        let f = Fixture::new(&[10, 8, 8, 8, 8]);
        let ctx = f.ctx(&[(3, 1), (0, 0), (0, 0), (0, 0), (0, 0)], th(1, 2, 8));
        let d = dtaap_decide(&ctx);
        assert_eq!(d.thresholds[0], 2);
        match d.action {
            Action::Download(c) => assert_eq!((c.video_index(), c.chunk_index()), (0, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decide_moves_to_first_recommended_player() {
        let f = Fixture::new(&[10, 8, 8, 8, 8]);
        let ctx = f.ctx(&[(3, 2), (0, 0), (0, 0), (0, 0), (0, 0)], th(2, 2, 8));
        let d = dtaap_decide(&ctx);
        assert_eq!(d.thresholds[1], 3);
        match d.action {
            Action::Download(c) => assert_eq!((c.video_index(), c.chunk_index(), c.bitrate_kbps()), (1, 1, 1850)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decide_sleeps_when_everyone_is_full() {
        let f = Fixture::new(&[10, 8, 8, 8, 8]);
        let ctx = f.ctx(&[(3, 2), (3, 3), (3, 3), (3, 3), (3, 3)], th(2, 2, 8));
        assert_eq!(dtaap_decide(&ctx).action, Action::Sleep(0.5));
    }

    #[test]
    fn complete_current_video_is_skipped() {
        let f = Fixture::new(&[2, 8]);
        let ctx = f.ctx(&[(2, 1), (0, 0)], th(2, 2, 2));
        match dtaap_decide(&ctx).action {
            Action::Download(c) => assert_eq!(c.video_index(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn context_bitrate_for_both_targets() {
        let f = Fixture::new(&[10, 8]);
        let mut ctx = f.ctx(&[(3, 3), (0, 0)], th(1, 2, 8));
        ctx.c_pred = Some(1850.0);
        ctx.c_ave = Some(1300.0);
        ctx.c_min = 1500.0;
        ctx.r_last = Some(1200);
        // B_c = 2 in the ample branch; 3 > 0.8 * 2 so step up.
        assert_eq!(dtaap_bitrate(&ctx, BitrateTarget::Current), 1850);
        assert_eq!(dtaap_bitrate(&ctx, BitrateTarget::Recommended(1)), 1200);
        ctx.rebuffer_flag = true;
        ctx.c_pred = Some(1000.0);
        assert_eq!(dtaap_bitrate(&ctx, BitrateTarget::Current), 750);
    }
}
