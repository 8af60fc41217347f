//! Run configuration: one TOML file with a section per component.
//!
//! Every field has a default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{HppoConfig, PolicyKind};
use crate::channel::ChannelParams;
use crate::env::{Env, EnvConfig};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::seeds::SeedSets;

/// Environment variable that overrides `run.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "V2I_COOP_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Train,
    Eval,
    Sweep,
    InspectScenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Bandwidth,
    Period,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Used when no subcommand is given on the command line.
    pub command: Option<Command>,
    pub run_id: String,
    /// Test episodes per policy for `eval` and per sweep point for `sweep`.
    pub episodes: usize,
    pub output_dir: PathBuf,
    pub policies: Vec<PolicyKind>,
    /// Defaults to `<output_dir>/hppo.ckpt`.
    pub checkpoint: Option<PathBuf>,
    pub sweep_axis: SweepAxis,
    pub bandwidths_hz: Vec<f64>,
    pub periods_ms: Vec<u32>,
    /// Also write per-step logs of the first `log_episodes` episodes of every policy.
    pub log_episodes: usize,
}

/// 2.5 MHz to 3.5 MHz in 0.1 MHz steps.
pub fn default_bandwidths_hz() -> Vec<f64> {
    (25..=35).map(|i| i as f64 * 1e5).collect()
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: None,
            run_id: "run".into(),
            episodes: 300,
            output_dir: PathBuf::from("out"),
            policies: PolicyKind::ALL.to_vec(),
            checkpoint: None,
            sweep_axis: SweepAxis::Bandwidth,
            bandwidths_hz: default_bandwidths_hz(),
            periods_ms: vec![100, 150, 180, 200],
            log_episodes: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub channel: ChannelParams,
    pub env: EnvConfig,
    pub hppo: HppoConfig,
    pub seeds: SeedSets,
    pub run: RunSection,
}

const HEADER: &str = "\
# v2i-coop run configuration.
# Sections: [scenario] world generation, [channel] radio model,
# [env] timing, feature size and reward, [hppo] learner, [seeds] seed sets,
# [run] command options. Omitted fields take their defaults.
";

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.env.validate()?;
        self.hppo.validate()?;
        if self.seeds.train_scenarios == 0 {
            return Err(Error::InvalidConfig("seeds.train_scenarios must be positive".into()));
        }
        if self.run.policies.is_empty() {
            return Err(Error::InvalidConfig("run.policies must not be empty".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(format!("{HEADER}\n{}", toml::to_string(self)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.run
            .checkpoint
            .clone()
            .unwrap_or_else(|| self.run.output_dir.join("hppo.ckpt"))
    }

    pub fn make_env(&self) -> Result<Env> {
        Env::new(self.scenario.clone(), self.channel.clone(), self.env.clone())
    }
}
