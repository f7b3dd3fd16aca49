use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use scenseed::campaign::{self, io, CampaignConfig, Mode, TesterKind};
use scenseed::map::BuiltinMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "scenseed",
    version,
    about = "Scenario seeding campaigns for a stand-in driving policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write its artifacts.
    Run {
        /// Campaign config (TOML). A relative map path resolves against its directory.
        #[arg(long)]
        config: PathBuf,
        /// ptop, no_arsg or random.
        #[arg(long)]
        mode: Option<Mode>,
        /// gradient or random.
        #[arg(long)]
        tester: Option<TesterKind>,
        /// Episodes per repetition.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check the stored violations of an episode log.
    Replay {
        #[arg(long = "in")]
        input: PathBuf,
        /// Map file; defaults to the map.json next to the log.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Recompute report.csv from a run directory.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write scatter CSVs of violating seeds from a run directory.
    Scatter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in map as JSON.
    GenMap {
        /// straight, grid4, ring or rural.
        #[arg(long)]
        kind: BuiltinMap,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(
    config: &Path,
    mode: Option<Mode>,
    tester: Option<TesterKind>,
    episodes: Option<usize>,
    reps: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = CampaignConfig::from_toml(&text).with_context(|| format!("parsing {}", config.display()))?;
    cfg.mode = mode.unwrap_or(cfg.mode);
    cfg.tester = tester.unwrap_or(cfg.tester);
    cfg.episodes = episodes.or(cfg.episodes);
    cfg.repetitions = reps.or(cfg.repetitions);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    let network = cfg.load_network(config.parent())?;
    let report = campaign::run_to_dir(&cfg, &network, out)?;
    let m = report.mean();
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!(
        "{} {} on {}: {} reps x {} episodes",
        cfg.mode,
        cfg.tester,
        cfg.map,
        cfg.repetitions(),
        cfg.episodes()
    );
    println!("violation rate       {:.4}", m.violation_rate);
    println!("top-10 rounds        {}", fmt(m.top10_rounds));
    println!("parameter distance   {}", fmt(m.parameter_distance));
    println!("map coverage         {:.4}", m.map_coverage);
    println!("trajectory coverage  {:.4}", m.trajectory_coverage);
    println!("artifacts in {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            mode,
            tester,
            episodes,
            reps,
            seed,
            out,
        } => run(&config, mode, tester, episodes, reps, seed, &out)?,
        Command::Replay { input, map } => {
            let dir = input.parent().unwrap_or(Path::new("."));
            let (motionless, network) = match map {
                Some(m) => {
                    let cfg = fs::read_to_string(dir.join(io::CONFIG_FILE))
                        .ok()
                        .and_then(|t| CampaignConfig::from_toml(&t).ok())
                        .unwrap_or_default();
                    (
                        cfg.episode.motionless_seconds,
                        scenseed::map::load_map(&fs::read_to_string(m)?)?,
                    )
                }
                None => {
                    let (cfg, net) =
                        io::load_run_dir(dir).context("loading config.toml and map.json next to the log")?;
                    (cfg.episode.motionless_seconds, net)
                }
            };
            let s = campaign::replay_file(&input, &network, motionless)?;
            println!("{} records replayed, {} violating, all match", s.records, s.violating);
        }
        Command::Metrics { input, out } => {
            let (cfg, network) = io::load_run_dir(&input)?;
            let report = campaign::report_from_log(&input.join(io::EPISODES_FILE), &cfg, &network)?;
            campaign::write_report_csv(&report, fs::File::create(&out)?)?;
        }
        Command::Scatter { input, out } => {
            let log = input.join(io::EPISODES_FILE);
            if !log.exists() {
                bail!("no {} in {}", io::EPISODES_FILE, input.display());
            }
            let (rel, abs) = campaign::scatter_from_log(&log)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join(io::SCATTER_REL_FILE), rel)?;
            fs::write(out.join(io::SCATTER_ABS_FILE), abs)?;
        }
        Command::GenMap { kind, out } => {
            fs::write(&out, kind.build().to_json()?)?;
        }
    }
    Ok(())
}
