//! Reference strategies: fixed buffers, download-current-first,
//! throughput-regime buffers, and a retention-capped buffer.

use super::{bootstrap, scan, Decision, StrategyContext};
use crate::throughput::{classify_regime, Regime};

fn average_bitrate(ctx: &StrategyContext<'_>, j: usize) -> u32 {
    let ladder = ctx.players[j].video.ladder();
    ladder.highest_at_most(ctx.c_ave.unwrap_or(0.0))
}

/// Constant depth `b_c` for the current video and `b_next` for every
/// recommended one.
pub fn fixb_decide(ctx: &StrategyContext<'_>, b_c: usize, b_next: usize) -> Decision {
    if let Some(d) = bootstrap(ctx) {
        return d;
    }
    let mut thresholds = vec![b_next; ctx.players.len()];
    thresholds[0] = b_c;
    scan(ctx, thresholds, |j| average_bitrate(ctx, j))
}

/// Finish the current video, then fill the recommended videos in order.
pub fn nextone_decide(ctx: &StrategyContext<'_>) -> Decision {
    if let Some(d) = bootstrap(ctx) {
        return d;
    }
    let thresholds = ctx.players.iter().map(|p| p.video.chunk_count()).collect();
    scan(ctx, thresholds, |j| average_bitrate(ctx, j))
}

/// `(B_c, B_next)` for each throughput regime.
pub fn network_thresholds(regime: Regime) -> (usize, usize) {
    match regime {
        Regime::Ample => (2, 1),
        Regime::Constrained => (4, 2),
        Regime::Starved => (6, 3),
    }
}

/// Buffer depths picked by the regime of the predicted throughput.
pub fn networkbased_decide(ctx: &StrategyContext<'_>) -> Decision {
    if let Some(d) = bootstrap(ctx) {
        return d;
    }
    let c_pred = ctx.c_pred.unwrap_or(0.0);
    let r_min = f64::from(ctx.current().video.ladder().lowest());
    let (b_c, b_next) = network_thresholds(classify_regime(c_pred, r_min, ctx.c_min.max(r_min)));
    let mut thresholds = vec![b_next; ctx.players.len()];
    thresholds[0] = b_c;
    scan(ctx, thresholds, |j| average_bitrate(ctx, j))
}

/// Largest chunk `k` whose retention exceeds one half; at least 1.
pub fn pdas_cap(ctx: &StrategyContext<'_>, j: usize) -> usize {
    let p = &ctx.players[j];
    let total = p.video.chunk_count();
    (1..=total)
        .take_while(|&k| p.model.retention(k, total).unwrap_or(0.0) > 0.5)
        .last()
        .unwrap_or(1)
}

/// Buffers capped where retention falls below one half; bitrate matched to
/// the average throughput scaled by retention at the chunk being fetched.
pub fn pdas_lite_decide(ctx: &StrategyContext<'_>) -> Decision {
    if let Some(d) = bootstrap(ctx) {
        return d;
    }
    let thresholds = (0..ctx.players.len()).map(|j| pdas_cap(ctx, j)).collect();
    let c_ave = ctx.c_ave.unwrap_or(0.0);
    scan(ctx, thresholds, |j| {
        let p = &ctx.players[j];
        let total = p.video.chunk_count();
        let k = p.next_needed().min(total);
        let retention = p.model.retention(k, total).unwrap_or(0.0);
        p.video.ladder().highest_at_most(c_ave * retention)
    })
}
