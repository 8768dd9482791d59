//! Trace-driven simulation of short-video preloading.
//!
//! A viewer scrolls through a list of short videos. While they watch, the
//! player downloads chunks for the current video and for the next few
//! recommended ones. Every preloaded chunk of a video the viewer swipes away
//! from is wasted bandwidth, and every chunk that is missing when the
//! playhead reaches it is a stall. This crate models that trade-off:
//!
//! - [`trace`]: bandwidth and viewing-behavior traces, synthetic scenarios,
//!   and download timing over a piecewise-constant channel;
//! - [`retention`]: a per-category swipe model and the chunk thresholds
//!   derived from it;
//! - [`throughput`]: throughput prediction and the smooth-playback bound;
//! - [`strategy`]: DTAAP and the reference strategies;
//! - [`engine`]: the discrete-event session simulator;
//! - [`metrics`]: QoE, bandwidth cost and waste, utility;
//! - [`batch`] and [`workload`]: evaluation matrices and synthetic inputs.
//!
//! ```
//! use shortvid::prelude::*;
//!
//! let ladder = BitrateLadder::evaluation();
//! let videos = vec![
//!     VideoSpec::new("a", "news", 4, 1.0, ladder.clone()).unwrap(),
//!     VideoSpec::new("b", "news", 6, 1.0, ladder).unwrap(),
//! ];
//! let script = SessionScript::new("demo", videos, vec![2, 6]).unwrap();
//! let behavior = vec![BehaviorTrace::new("t1", "news", 10, 3).unwrap()];
//! let models = ModelSet::build(&behavior).unwrap();
//! let trace = ThroughputTrace::constant(3000.0).unwrap();
//!
//! let result = run_session(&script, &trace, &StrategyKind::Dtaap, &SessionConfig::default(), &models).unwrap();
//! assert_eq!(result.videos[0].watched_chunks, 2);
//! assert_eq!(result.rebuffer_s, 0.0);
//! ```

pub mod batch;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod retention;
pub mod strategy;
pub mod throughput;
pub mod trace;
pub mod types;
pub mod workload;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::batch::{run_batch, BatchReport, LabeledTrace};
    pub use crate::engine::{run_session, SessionAbort, SessionResult, SessionScript};
    pub use crate::retention::{ModelSet, RetentionModel, RetentionThresholds};
    pub use crate::strategy::{Action, Strategy, StrategyKind};
    pub use crate::trace::{BehaviorTrace, ScenarioKind, ThroughputTrace};
    pub use crate::types::{BitrateLadder, SessionConfig, VideoSpec};
}

// Book chapters are compiled as doctests so their snippets stay runnable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/session-model.md")]
    mod session_model {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/throughput.md")]
    mod throughput {}
    #[doc = include_str!("../../../book/src/retention.md")]
    mod retention {}
    #[doc = include_str!("../../../book/src/dtaap.md")]
    mod dtaap {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
