//! Synthetic workloads: a video catalog, viewer behavior per category, and
//! the session scripts and bandwidth traces of an evaluation matrix.
//!
//! Everything here is seeded and deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::batch::LabeledTrace;
use crate::engine::SessionScript;
use crate::error::Result;
use crate::retention::ModelSet;
use crate::trace::{generate_scenario, BehaviorTrace, ScenarioKind};
use crate::types::{BitrateLadder, VideoSpec};

/// How viewers of one category tend to swipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryProfile {
    pub name: String,
    /// Share of viewings abandoned within the first 5% of the video.
    pub early_swipe: f64,
    /// Share of viewings watched to the end.
    pub completion: f64,
}

impl CategoryProfile {
    pub fn new(name: impl Into<String>, early_swipe: f64, completion: f64) -> Self {
        assert!(early_swipe >= 0.0 && completion >= 0.0 && early_swipe + completion <= 1.0);
        Self {
            name: name.into(),
            early_swipe,
            completion,
        }
    }

    /// Watched fraction of one viewing, in (0, 1].
    pub fn sample_fraction<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if u < self.early_swipe {
            rng.gen_range(0.0..0.05)
        } else if u < self.early_swipe + self.completion {
            1.0
        } else {
            rng.gen_range(0.05..1.0)
        }
    }

    /// Swipe chunk of one viewing of a `total`-chunk video.
    pub fn sample_swipe<R: Rng + ?Sized>(&self, total: usize, rng: &mut R) -> usize {
        ((self.sample_fraction(rng) * total as f64).ceil() as usize).clamp(1, total)
    }
}

/// The default viewer populations, from quick swipers to viewers who
/// finish most videos.
pub fn default_profiles() -> Vec<CategoryProfile> {
    vec![
        CategoryProfile::new("quick", 0.5, 0.1),
        CategoryProfile::new("steady", 0.1, 0.8),
        CategoryProfile::new("browse", 0.25, 0.3),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    pub catalog_size: usize,
    pub min_chunks: usize,
    pub max_chunks: usize,
    pub chunk_duration_s: f64,
    /// Behavior traces per category used to build the retention models.
    pub training_traces_per_category: usize,
    pub videos_per_script: usize,
    pub scripts: usize,
    pub traces_per_scenario: usize,
    pub trace_duration_s: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            catalog_size: 200,
            min_chunks: 5,
            max_chunks: 30,
            chunk_duration_s: 1.0,
            training_traces_per_category: 2000,
            videos_per_script: 20,
            scripts: 50,
            traces_per_scenario: 20,
            trace_duration_s: 900.0,
        }
    }
}

/// Catalog, held-out viewer behavior, retention models, and scripts.
#[derive(Debug, Clone)]
pub struct Workload {
    pub params: WorkloadParams,
    pub profiles: Vec<CategoryProfile>,
    pub catalog: Vec<VideoSpec>,
    pub training: Vec<BehaviorTrace>,
    pub models: ModelSet,
    pub scripts: Vec<SessionScript>,
}

impl Workload {
    pub fn synthetic(seed: u64) -> Result<Self> {
        Self::with_params(seed, WorkloadParams::default(), default_profiles())
    }

    pub fn with_params(seed: u64, params: WorkloadParams, profiles: Vec<CategoryProfile>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let catalog = generate_catalog(&params, &profiles, &mut rng)?;
        let training = generate_behavior(&params, &profiles, "train", &mut rng)?;
        let models = ModelSet::build(&training)?;
        // Script swipe points come from a separate draw of the same
        // populations, not from the traces the models were built on.
        let viewing = generate_behavior(&params, &profiles, "view", &mut rng)?;
        let scripts = (0..params.scripts)
            .map(|i| {
                let videos = (0..params.videos_per_script)
                    .map(|_| catalog[rng.gen_range(0..catalog.len())].clone())
                    .collect();
                SessionScript::sample(format!("s{i:03}"), videos, &viewing, &mut rng)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            params,
            profiles,
            catalog,
            training,
            models,
            scripts,
        })
    }

    /// `traces_per_scenario` traces of `kind`, seeded from `seed`.
    pub fn traces(&self, kind: ScenarioKind, seed: u64) -> Result<Vec<LabeledTrace>> {
        scenario_traces(
            kind,
            seed,
            self.params.traces_per_scenario,
            self.params.trace_duration_s,
        )
    }
}

pub fn generate_catalog<R: Rng + ?Sized>(
    params: &WorkloadParams,
    profiles: &[CategoryProfile],
    rng: &mut R,
) -> Result<Vec<VideoSpec>> {
    (0..params.catalog_size)
        .map(|i| {
            let profile = &profiles[i % profiles.len()];
            VideoSpec::new(
                format!("v{i:04}"),
                profile.name.clone(),
                rng.gen_range(params.min_chunks..=params.max_chunks),
                params.chunk_duration_s,
                BitrateLadder::evaluation(),
            )
        })
        .collect()
}

pub fn generate_behavior<R: Rng + ?Sized>(
    params: &WorkloadParams,
    profiles: &[CategoryProfile],
    prefix: &str,
    rng: &mut R,
) -> Result<Vec<BehaviorTrace>> {
    let mut out = Vec::with_capacity(profiles.len() * params.training_traces_per_category);
    for p in profiles {
        for i in 0..params.training_traces_per_category {
            let total = rng.gen_range(params.min_chunks..=params.max_chunks);
            let swipe = p.sample_swipe(total, rng);
            out.push(BehaviorTrace::new(
                format!("{prefix}-{}-{i}", p.name),
                p.name.clone(),
                total,
                swipe,
            )?);
        }
    }
    Ok(out)
}

/// `count` generated traces of `kind`; trace `i` uses seed `seed + i`.
pub fn scenario_traces(kind: ScenarioKind, seed: u64, count: usize, duration_s: f64) -> Result<Vec<LabeledTrace>> {
    (0..count as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            Ok(LabeledTrace {
                id: format!("{kind}_{s}"),
                scenario: kind.to_string(),
                trace: generate_scenario(kind, s, duration_s)?,
            })
        })
        .collect()
}
