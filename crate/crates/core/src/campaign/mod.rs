//! The testing loop: seed generation, refinement, execution, online training
//! and reporting, plus persistence and replay.

pub mod config;
pub mod io;

pub use config::{CampaignConfig, HazardConfig, Mode, Profile, TesterKind};
pub use io::{
    export_scatter, load_run_dir, read_records, replay, replay_file, report_from_log, run_to_dir, scatter_from_log,
    write_report_csv, EpisodeRecord, ReplaySummary,
};

use crate::arsg::{generate_candidates, select_next, SeedPool};
use crate::error::Result;
use crate::geom::Vec2;
use crate::hazard::{harvest, HazardModel, ReplayBuffer};
use crate::map::{match_to_set, RoadNetwork};
use crate::metrics::{self, EpisodeView, MetricSummary, MATCH_THRESHOLD};
use crate::scenario::{random_chromosome, Chromosome};
use crate::sim::{collided_objects, run_episode, OnlineTester, RandomTester};
use crate::svgd::{refine, RefineDiagnostics};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Instrumentation of which stages ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub episodes: usize,
    pub arsg_selections: usize,
    pub svgd_refinements: usize,
    pub train_steps: usize,
}

/// One row of the per-episode table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub repetition: usize,
    pub episode: usize,
    pub violated: bool,
    pub frames: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionReport {
    pub repetition: usize,
    pub summary: MetricSummary,
    pub counters: Counters,
    pub wall_time: f64,
}

/// Metrics averaged over repetitions. Optional metrics average over the
/// repetitions where they are defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSummary {
    pub episodes: f64,
    pub violations: f64,
    pub violation_rate: f64,
    pub top10_rounds: Option<f64>,
    pub parameter_distance: Option<f64>,
    pub map_coverage: f64,
    pub trajectory_coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub map: String,
    pub mode: Mode,
    pub tester: TesterKind,
    pub repetitions: Vec<RepetitionReport>,
    pub episodes: Vec<EpisodeRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

impl CampaignReport {
    pub fn mean(&self) -> MeanSummary {
        let r = &self.repetitions;
        let avg = |f: fn(&MetricSummary) -> f64| mean(r.iter().map(|x| f(&x.summary))).unwrap_or(0.0);
        MeanSummary {
            episodes: avg(|s| s.episodes as f64),
            violations: avg(|s| s.violations as f64),
            violation_rate: avg(|s| s.violation_rate),
            top10_rounds: mean(r.iter().filter_map(|x| x.summary.top10_rounds.map(|v| v as f64))),
            parameter_distance: mean(r.iter().filter_map(|x| x.summary.parameter_distance)),
            map_coverage: avg(|s| s.map_coverage),
            trajectory_coverage: avg(|s| s.trajectory_coverage),
        }
    }

    pub fn counters(&self) -> Counters {
        self.repetitions.iter().fold(Counters::default(), |a, r| Counters {
            episodes: a.episodes + r.counters.episodes,
            arsg_selections: a.arsg_selections + r.counters.arsg_selections,
            svgd_refinements: a.svgd_refinements + r.counters.svgd_refinements,
            train_steps: a.train_steps + r.counters.train_steps,
        })
    }
}

/// What metrics keep of an episode once its record has been written.
pub(crate) struct Digest {
    pub(crate) violated: bool,
    pub(crate) seed: Chromosome,
    /// Waypoints first touched in this episode, as positions.
    pub(crate) touched: Vec<Vec2>,
}

impl EpisodeView for Digest {
    fn violated(&self) -> bool {
        self.violated
    }

    fn seed(&self) -> &Chromosome {
        &self.seed
    }

    fn object_positions(&self) -> Box<dyn Iterator<Item = Vec2> + '_> {
        Box::new(self.touched.iter().copied())
    }
}

/// Result of one repetition.
pub struct RepetitionOutcome {
    pub report: RepetitionReport,
    pub rows: Vec<EpisodeRow>,
    pub model: HazardModel,
}

/// RNG for repetition `rep`: one ChaCha stream per repetition of the campaign seed.
pub fn repetition_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Runs one repetition, handing every record to `sink` as soon as it exists.
pub fn run_repetition(
    config: &CampaignConfig,
    network: &RoadNetwork,
    rep: usize,
    sink: &mut dyn FnMut(&EpisodeRecord) -> Result<()>,
) -> Result<RepetitionOutcome> {
    config.validate()?;
    let started = std::time::Instant::now();
    let mut rng = repetition_rng(config.seed, rep);
    let mut model = HazardModel::new(&mut rng);
    let mut pool = SeedPool::new(config.candidates)?;
    let mut buffer = ReplayBuffer::new(config.hazard.buffer_capacity);
    let mut tester: Box<dyn OnlineTester> = match config.tester {
        TesterKind::Gradient => Box::new(config.gradient),
        TesterKind::Random => Box::new(RandomTester {
            limits: config.gradient.limits,
        }),
    };
    let mut counters = Counters::default();
    let mut digests = Vec::with_capacity(config.episodes());
    let mut rows = Vec::with_capacity(config.episodes());
    let mut waypoint_hits = BTreeSet::new();

    for episode in 0..config.episodes() {
        let (seed, refine_diag): (Chromosome, Option<RefineDiagnostics>) = match config.mode {
            Mode::Ptop => {
                let cands =
                    generate_candidates(network, config.objects, config.candidates, &config.kind_mix, &mut rng)?;
                let (chosen, _) = select_next(&cands, &pool, network, &mut rng);
                counters.arsg_selections += 1;
                let (refined, d) = refine(&chosen, &model, network, &config.svgd, &mut rng)?;
                counters.svgd_refinements += 1;
                (refined, Some(d))
            }
            Mode::NoArsg => {
                let raw = random_chromosome(network, config.objects, &config.kind_mix, &mut rng)?;
                let (refined, d) = refine(&raw, &model, network, &config.svgd, &mut rng)?;
                counters.svgd_refinements += 1;
                (refined, Some(d))
            }
            Mode::Random => (
                random_chromosome(network, config.objects, &config.kind_mix, &mut rng)?,
                None,
            ),
        };

        let result = run_episode(&seed, tester.as_mut(), network, &model, &config.episode, &mut rng)?;
        if config.mode == Mode::Ptop {
            pool.record_executed(&result.seed, network);
        }

        let f0 = &result.trace.frames[0];
        let lane = &network.lanes[network.lane_at(f0.ego.position, f0.ego.heading)];
        buffer.extend(harvest(
            &result.trace,
            &collided_objects(&result.trace),
            lane,
            &network.omega,
        ));
        for _ in 0..config.hazard.steps_per_episode {
            if buffer.is_empty() {
                break;
            }
            let batch = buffer.sample_batch(config.hazard.batch_size, &mut rng);
            model.train_step(&batch, config.hazard.learning_rate)?;
            counters.train_steps += 1;
        }
        counters.episodes += 1;

        let mut touched = Vec::new();
        for p in result.object_positions() {
            if let Some(i) = match_to_set(p, &network.waypoints, MATCH_THRESHOLD) {
                if waypoint_hits.insert(i) {
                    touched.push(network.waypoints[i]);
                }
            }
        }
        rows.push(EpisodeRow {
            repetition: rep,
            episode,
            violated: result.violated(),
            frames: result.trace.len(),
            wall_time: result.wall_time,
        });
        let record = EpisodeRecord {
            repetition: rep,
            episode,
            seed: result.seed,
            violations: result.violations,
            refine: refine_diag,
            trace: result.trace,
        };
        sink(&record)?;
        digests.push(Digest {
            violated: !record.violations.is_empty(),
            seed: record.seed,
            touched,
        });
    }

    Ok(RepetitionOutcome {
        report: RepetitionReport {
            repetition: rep,
            summary: metrics::summarize(&digests, network),
            counters,
            wall_time: started.elapsed().as_secs_f64(),
        },
        rows,
        model,
    })
}

fn assemble(config: &CampaignConfig, outcomes: Vec<RepetitionOutcome>) -> (CampaignReport, Vec<HazardModel>) {
    let mut report = CampaignReport {
        map: config.map.clone(),
        mode: config.mode,
        tester: config.tester,
        repetitions: Vec::new(),
        episodes: Vec::new(),
    };
    let mut models = Vec::new();
    for o in outcomes {
        report.repetitions.push(o.report);
        report.episodes.extend(o.rows);
        models.push(o.model);
    }
    (report, models)
}

/// Runs every repetition (concurrently) without writing anything.
pub fn run_campaign(config: &CampaignConfig, network: &RoadNetwork) -> Result<CampaignReport> {
    run_campaign_with(config, network, |_| Ok(())).map(|(r, _)| r)
}

/// Like [`run_campaign`] but hands each record to `sink`, which must be safe
/// to call from several repetitions at once. Returns the final models too.
pub fn run_campaign_with<F>(
    config: &CampaignConfig,
    network: &RoadNetwork,
    sink: F,
) -> Result<(CampaignReport, Vec<HazardModel>)>
where
    F: Fn(&EpisodeRecord) -> Result<()> + Sync,
{
    config.validate()?;
    let outcomes = (0..config.repetitions())
        .into_par_iter()
        .map(|rep| run_repetition(config, network, rep, &mut |r| sink(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, outcomes))
}
