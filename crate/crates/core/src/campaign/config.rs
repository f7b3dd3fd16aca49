//! Campaign configuration, read from TOML.

use crate::error::{Error, Result};
use crate::hazard::{DEFAULT_BATCH_SIZE, DEFAULT_CAPACITY, DEFAULT_LEARNING_RATE, DEFAULT_STEPS_PER_EPISODE};
use crate::map::{load_map, BuiltinMap, RoadNetwork};
use crate::scenario::{KindMix, DEFAULT_OBJECT_COUNT};
use crate::sim::{EpisodeConfig, GradientTester};
use crate::svgd::RefinerConfig;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// How seeds are produced before each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Adaptive random selection followed by SVGD refinement.
    Ptop,
    /// Random seeds, still refined.
    NoArsg,
    /// Random seeds straight to the simulator.
    Random,
}

/// Which online tester drives the objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterKind {
    Gradient,
    Random,
}

/// Episode and repetition counts used when the config leaves them out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// 400 episodes, 4 repetitions.
    #[default]
    Full,
    /// 50 episodes, 2 repetitions.
    Ci,
}

impl Profile {
    pub fn counts(self) -> (usize, usize) {
        match self {
            Self::Full => (400, 4),
            Self::Ci => (50, 2),
        }
    }
}

macro_rules! str_enum {
    ($t:ty { $($name:literal => $v:expr),+ $(,)? }) => {
        impl $t {
            pub fn name(self) -> &'static str {
                $(if self == $v { return $name; })+
                unreachable!()
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($v),)+
                    _ => Err(Error::Config(format!("unknown {} `{s}`", stringify!($t).to_lowercase()))),
                }
            }
        }
    };
}

str_enum!(Mode { "ptop" => Mode::Ptop, "no_arsg" => Mode::NoArsg, "random" => Mode::Random });
str_enum!(TesterKind { "gradient" => TesterKind::Gradient, "random" => TesterKind::Random });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps_per_episode: usize,
    pub buffer_capacity: usize,
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            steps_per_episode: DEFAULT_STEPS_PER_EPISODE,
            buffer_capacity: DEFAULT_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Built-in map name or path to a map JSON file.
    pub map: String,
    pub mode: Mode,
    pub tester: TesterKind,
    pub profile: Profile,
    pub episodes: Option<usize>,
    pub repetitions: Option<usize>,
    pub seed: u64,
    pub objects: usize,
    pub kind_mix: KindMix,
    /// Candidate-set size for adaptive selection.
    pub candidates: usize,
    pub svgd: RefinerConfig,
    pub episode: EpisodeConfig,
    pub hazard: HazardConfig,
    pub gradient: GradientTester,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            map: BuiltinMap::Grid4.name().to_string(),
            mode: Mode::Ptop,
            tester: TesterKind::Gradient,
            profile: Profile::Full,
            episodes: None,
            repetitions: None,
            seed: 0,
            objects: DEFAULT_OBJECT_COUNT,
            kind_mix: KindMix::default(),
            candidates: crate::arsg::DEFAULT_CANDIDATES,
            svgd: RefinerConfig::default(),
            episode: EpisodeConfig::default(),
            hazard: HazardConfig::default(),
            gradient: GradientTester::default(),
        }
    }
}

impl CampaignConfig {
    /// Small profile for continuous integration.
    pub fn ci() -> Self {
        Self {
            profile: Profile::Ci,
            ..Self::default()
        }
    }

    pub fn from_toml(source: &str) -> Result<Self> {
        let de = toml::Deserializer::new(source);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            field: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn episodes(&self) -> usize {
        self.episodes.unwrap_or(self.profile.counts().0)
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions.unwrap_or(self.profile.counts().1)
    }

    /// Copy with profile defaults written out.
    pub fn resolved(&self) -> Self {
        Self {
            episodes: Some(self.episodes()),
            repetitions: Some(self.repetitions()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes() == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if self.repetitions() == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.candidates == 0 {
            return Err(Error::Config("candidates must be >= 1".into()));
        }
        if self.hazard.batch_size == 0 || self.hazard.buffer_capacity == 0 {
            return Err(Error::Config(
                "hazard batch size and buffer capacity must be >= 1".into(),
            ));
        }
        if self.hazard.learning_rate.is_nan() || self.hazard.learning_rate <= 0.0 {
            return Err(Error::Config("hazard learning rate must be > 0".into()));
        }
        if self.episode.dt.is_nan() || self.episode.dt <= 0.0 || self.episode.horizon == 0 {
            return Err(Error::Config("episode dt and horizon must be positive".into()));
        }
        self.kind_mix.validate()?;
        self.svgd.validate()
    }

    /// Loads the configured map. Relative paths resolve against `base`.
    pub fn load_network(&self, base: Option<&Path>) -> Result<RoadNetwork> {
        if let Ok(b) = self.map.parse::<BuiltinMap>() {
            return Ok(b.build());
        }
        let path = match base {
            Some(dir) => dir.join(&self.map),
            None => self.map.clone().into(),
        };
        load_map(&std::fs::read_to_string(&path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let c = CampaignConfig::from_toml("").unwrap();
        assert_eq!((c.episodes(), c.repetitions()), (400, 4));
        let c = CampaignConfig::from_toml("profile = \"ci\"\nepisodes = 7").unwrap();
        assert_eq!((c.episodes(), c.repetitions()), (7, 2));
    }

    #[test]
    fn parse_errors_name_the_field() {
        match CampaignConfig::from_toml("[svgd]\nstep = \"big\"") {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "svgd.step"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            CampaignConfig::from_toml("bogus = 1"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            CampaignConfig::from_toml("episodes = 0"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn toml_round_trip() {
        let c = CampaignConfig {
            mode: Mode::NoArsg,
            seed: 9,
            ..CampaignConfig::ci()
        }
        .resolved();
        let back = CampaignConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!("no_arsg".parse::<Mode>().unwrap(), Mode::NoArsg);
        assert!("x".parse::<TesterKind>().is_err());
    }
}
