//! Campaign artifacts: the episode log, report and scatter CSVs, replay.

use super::{run_campaign_with, CampaignConfig, CampaignReport, Counters, Digest, Mode, RepetitionReport};
use crate::error::{Error, Result};
use crate::map::{match_to_set, RoadNetwork};
use crate::metrics::{self, MATCH_THRESHOLD};
use crate::scenario::{relative_state, Chromosome};
use crate::sim::{detect_violations, EpisodeResult, ViolationRecord};
use crate::svgd::RefineDiagnostics;
use crate::trace::EpisodeTrace;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const REPORT_FILE: &str = "report.csv";
pub const SCATTER_REL_FILE: &str = "scatter_rel.csv";
pub const SCATTER_ABS_FILE: &str = "scatter_abs.csv";
pub const CHECKPOINT_FILE: &str = "hazard.ckpt";
pub const CONFIG_FILE: &str = "config.toml";
pub const MAP_FILE: &str = "map.json";
pub const TIMING_FILE: &str = "timing.csv";

/// One line of `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub repetition: usize,
    pub episode: usize,
    pub seed: Chromosome,
    pub violations: Vec<ViolationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<RefineDiagnostics>,
    pub trace: EpisodeTrace,
}

impl EpisodeRecord {
    pub fn violated(&self) -> bool {
        !self.violations.is_empty()
    }

    pub fn to_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Record fields needed for scatter plots; the trace is skipped unparsed.
#[derive(Deserialize)]
struct SeedLine {
    seed: Chromosome,
    violations: Vec<ViolationRecord>,
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: &str, lineno: usize) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Parse {
        field: format!("line {}: {}", lineno + 1, e.path()),
        message: e.inner().to_string(),
    })
}

fn for_each_line<T: for<'de> Deserialize<'de>>(path: &Path, mut f: impl FnMut(usize, T) -> Result<()>) -> Result<()> {
    let reader = BufReader::new(File::open(path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        f(i, parse_line(&line, i)?)?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for_each_line(path, |_, r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Re-detects violations on the stored trace and checks them against the record.
pub fn replay(record: &EpisodeRecord, network: &RoadNetwork, motionless_seconds: f64) -> Result<EpisodeResult> {
    if record.trace.frames.is_empty() {
        return Err(Error::Integrity(format!(
            "repetition {} episode {}: empty trace",
            record.repetition, record.episode
        )));
    }
    let found = detect_violations(&record.trace, network, motionless_seconds);
    if found != record.violations {
        return Err(Error::Integrity(format!(
            "repetition {} episode {}: stored violations {:?} but trace yields {:?}",
            record.repetition, record.episode, record.violations, found
        )));
    }
    Ok(EpisodeResult {
        seed: record.seed.clone(),
        trace: record.trace.clone(),
        violations: found,
        wall_time: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplaySummary {
    pub records: usize,
    pub violating: usize,
}

/// Replays every record in a log; stops at the first mismatch.
pub fn replay_file(path: &Path, network: &RoadNetwork, motionless_seconds: f64) -> Result<ReplaySummary> {
    let mut s = ReplaySummary {
        records: 0,
        violating: 0,
    };
    for_each_line(path, |_, r: EpisodeRecord| {
        replay(&r, network, motionless_seconds)?;
        s.records += 1;
        s.violating += usize::from(r.violated());
        Ok(())
    })?;
    Ok(s)
}

/// Config and map saved next to a run's episode log.
pub fn load_run_dir(dir: &Path) -> Result<(CampaignConfig, RoadNetwork)> {
    let config = CampaignConfig::from_toml(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let network = crate::map::load_map(&fs::read_to_string(dir.join(MAP_FILE))?)?;
    Ok((config, network))
}

/// Scatter CSVs of initial object positions: ego-relative `(Δs, Δd)` and
/// absolute `(x, y)`. Takes `(episode index, seed)` of violating episodes.
pub fn export_scatter<'a>(violating: impl IntoIterator<Item = (usize, &'a Chromosome)>) -> Result<(String, String)> {
    let mut rel = csv::Writer::from_writer(Vec::new());
    let mut abs = csv::Writer::from_writer(Vec::new());
    rel.write_record(["episode", "object", "delta_s", "delta_d"])?;
    abs.write_record(["episode", "object", "x", "y"])?;
    for (episode, seed) in violating {
        let ego = seed.ego_pose();
        for (i, o) in seed.dynamics_gene.iter().enumerate() {
            let p = relative_state(ego, o.pose());
            let (e, i) = (episode.to_string(), i.to_string());
            rel.write_record([&e, &i, &p.delta_s.to_string(), &p.delta_d.to_string()])?;
            abs.write_record([&e, &i, &o.position.x.to_string(), &o.position.y.to_string()])?;
        }
    }
    let done = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    };
    Ok((done(rel)?, done(abs)?))
}

/// Scatter CSVs for a saved episode log. Episode numbers are 0-based line indices.
pub fn scatter_from_log(path: &Path) -> Result<(String, String)> {
    let mut seeds = Vec::new();
    for_each_line(path, |i, l: SeedLine| {
        if !l.violations.is_empty() {
            seeds.push((i, l.seed));
        }
        Ok(())
    })?;
    export_scatter(seeds.iter().map(|(i, s)| (*i, s)))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per repetition plus a `mean` row. Wall time is left out so the
/// file is reproducible byte for byte.
pub fn write_report_csv<W: Write>(report: &CampaignReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "map",
        "mode",
        "tester",
        "repetition",
        "episodes",
        "violations",
        "violation_rate",
        "top10_rounds",
        "parameter_distance",
        "map_coverage",
        "trajectory_coverage",
        "arsg_selections",
        "svgd_refinements",
    ])?;
    let head = [report.map.clone(), report.mode.to_string(), report.tester.to_string()];
    for r in &report.repetitions {
        let s = &r.summary;
        let mut row = head.to_vec();
        row.extend([
            r.repetition.to_string(),
            s.episodes.to_string(),
            s.violations.to_string(),
            s.violation_rate.to_string(),
            opt(s.top10_rounds),
            opt(s.parameter_distance),
            s.map_coverage.to_string(),
            s.trajectory_coverage.to_string(),
            r.counters.arsg_selections.to_string(),
            r.counters.svgd_refinements.to_string(),
        ]);
        w.write_record(&row)?;
    }
    let m = report.mean();
    let c = report.counters();
    let n = report.repetitions.len().max(1) as f64;
    let mut row = head.to_vec();
    row.extend([
        "mean".to_string(),
        m.episodes.to_string(),
        m.violations.to_string(),
        m.violation_rate.to_string(),
        opt(m.top10_rounds),
        opt(m.parameter_distance),
        m.map_coverage.to_string(),
        m.trajectory_coverage.to_string(),
        (c.arsg_selections as f64 / n).to_string(),
        (c.svgd_refinements as f64 / n).to_string(),
    ]);
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// Rebuilds the campaign report from a saved episode log.
pub fn report_from_log(path: &Path, config: &CampaignConfig, network: &RoadNetwork) -> Result<CampaignReport> {
    let mut per_rep: Vec<(Vec<Digest>, BTreeSet<usize>, Counters)> = Vec::new();
    let mut rows = Vec::new();
    for_each_line(path, |_, r: EpisodeRecord| {
        if per_rep.len() <= r.repetition {
            per_rep.resize_with(r.repetition + 1, Default::default);
        }
        let (digests, hits, counters) = &mut per_rep[r.repetition];
        let mut touched = Vec::new();
        for p in r.trace.frames.iter().flat_map(|f| f.objects.iter().map(|o| o.position)) {
            if let Some(i) = match_to_set(p, &network.waypoints, MATCH_THRESHOLD) {
                if hits.insert(i) {
                    touched.push(network.waypoints[i]);
                }
            }
        }
        counters.episodes += 1;
        counters.arsg_selections += usize::from(config.mode == Mode::Ptop);
        counters.svgd_refinements += usize::from(r.refine.is_some());
        rows.push(super::EpisodeRow {
            repetition: r.repetition,
            episode: r.episode,
            violated: r.violated(),
            frames: r.trace.len(),
            wall_time: 0.0,
        });
        digests.push(Digest {
            violated: r.violated(),
            seed: r.seed,
            touched,
        });
        Ok(())
    })?;
    Ok(CampaignReport {
        map: config.map.clone(),
        mode: config.mode,
        tester: config.tester,
        repetitions: per_rep
            .into_iter()
            .enumerate()
            .map(|(rep, (digests, _, counters))| RepetitionReport {
                repetition: rep,
                summary: metrics::summarize(&digests, network),
                counters,
                wall_time: 0.0,
            })
            .collect(),
        episodes: rows,
    })
}

fn part_path(out: &Path, rep: usize) -> PathBuf {
    out.join(format!("episodes.rep{rep}.part"))
}

/// Runs a campaign and writes every artifact into `out`.
pub fn run_to_dir(config: &CampaignConfig, network: &RoadNetwork, out: &Path) -> Result<CampaignReport> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let config = config.resolved();
    fs::write(out.join(CONFIG_FILE), config.to_toml()?)?;
    fs::write(out.join(MAP_FILE), network.to_json()?)?;

    let reps = config.repetitions();
    let writers = (0..reps)
        .map(|r| Ok(Mutex::new(BufWriter::new(File::create(part_path(out, r))?))))
        .collect::<Result<Vec<_>>>()?;
    let outcome = run_campaign_with(&config, network, |rec| {
        let mut w = writers[rec.repetition].lock().expect("log writer poisoned");
        writeln!(w, "{}", rec.to_line()?)?;
        Ok(())
    });
    // partial logs are kept even when a repetition failed
    let mut log = BufWriter::new(File::create(out.join(EPISODES_FILE))?);
    for (r, w) in writers.into_iter().enumerate() {
        w.into_inner().expect("log writer poisoned").flush()?;
        let path = part_path(out, r);
        std::io::copy(&mut File::open(&path)?, &mut log)?;
        fs::remove_file(path)?;
    }
    log.flush()?;
    drop(log);
    let (report, models) = outcome?;

    write_report_csv(&report, File::create(out.join(REPORT_FILE))?)?;
    let (rel, abs) = scatter_from_log(&out.join(EPISODES_FILE))?;
    fs::write(out.join(SCATTER_REL_FILE), rel)?;
    fs::write(out.join(SCATTER_ABS_FILE), abs)?;
    for (r, m) in models.iter().enumerate() {
        let name = if r == 0 {
            CHECKPOINT_FILE.to_string()
        } else {
            format!("hazard.rep{r}.ckpt")
        };
        fs::write(out.join(name), m.to_bytes())?;
    }
    let mut timing = csv::Writer::from_path(out.join(TIMING_FILE))?;
    timing.write_record(["repetition", "episode", "frames", "wall_time"])?;
    for row in &report.episodes {
        timing.write_record([
            row.repetition.to_string(),
            row.episode.to_string(),
            row.frames.to_string(),
            row.wall_time.to_string(),
        ])?;
    }
    timing.flush()?;
    Ok(report)
}
