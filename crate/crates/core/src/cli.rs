//! Command-line entry points: `train`, `eval`, `sweep`, `inspect-scenario`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::agents::{Hppo, PolicyKind};
use crate::config::{Command, RunConfig, SweepAxis, OUTPUT_DIR_ENV};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::metrics::{
    episode_log_rows, summarize, write_csv, ConfidenceRow, EpisodeLogRow, MetricsRow, TrainingRow,
    ValidationRow,
};
use crate::par::Exec;
use crate::runner::{evaluate, make_policy, run_episode_traced};
use crate::scenario::{export_scenario, generate_scenario};
use crate::seeds::{EpisodeSeeds, Split};
use crate::train::train;

#[derive(Debug, Parser)]
#[command(name = "v2i-coop", version, about = "RSU-assisted collaborative perception simulator and HPPO trainer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CliCommand>,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for the seed sets and the learner.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training episodes for `train`, test episodes per policy otherwise.
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Policies to evaluate; repeat the flag for several.
    #[arg(long, global = true, value_enum)]
    pub policy: Vec<PolicyKind>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Run every episode on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CliCommand {
    /// Train HPPO and write a checkpoint plus the training curves.
    Train,
    /// Evaluate policies on the test seeds.
    Eval,
    /// Evaluate every policy across bandwidths or frame periods.
    Sweep {
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
    },
    /// Write one generated world as TOML.
    InspectScenario {
        /// Test-split index of the world.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

impl Cli {
    /// Loads the config file and applies the command-line overrides.
    pub fn resolve(&self) -> Result<(Command, RunConfig)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds.base_seed = s;
            cfg.hppo.seed = s;
        }
        let command = match &self.command {
            Some(CliCommand::Train) => Command::Train,
            Some(CliCommand::Eval) => Command::Eval,
            Some(CliCommand::Sweep { axis }) => {
                if let Some(a) = axis {
                    cfg.run.sweep_axis = *a;
                }
                Command::Sweep
            }
            Some(CliCommand::InspectScenario { .. }) => Command::InspectScenario,
            None => cfg
                .run
                .command
                .ok_or_else(|| Error::InvalidConfig("no command given and run.command is unset".into()))?,
        };
        if let Some(n) = self.episodes {
            match command {
                Command::Train => cfg.hppo.train_episodes = n,
                _ => cfg.run.episodes = n,
            }
        }
        if !self.policy.is_empty() {
            cfg.run.policies = self.policy.clone();
        }
        if let Some(c) = &self.checkpoint {
            cfg.run.checkpoint = Some(c.clone());
        }
        if let Some(o) = &self.out {
            cfg.run.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok((command, cfg))
    }

    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Auto
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let (command, cfg) = cli.resolve()?;
    let exec = cli.exec();
    match command {
        Command::Train => cmd_train(&cfg, exec).map(|_| ()),
        Command::Eval => cmd_eval(&cfg, exec).map(|_| ()),
        Command::Sweep => cmd_sweep(&cfg, cfg.run.sweep_axis, exec).map(|_| ()),
        Command::InspectScenario => {
            let index = match &cli.command {
                Some(CliCommand::InspectScenario { index }) => *index,
                _ => 0,
            };
            let path = cmd_inspect(&cfg, index)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot create {}: {e}", dir.display())))
    })
}

/// Trains and writes `hppo.ckpt` (best validation weights), `training.csv`,
/// `validation.csv` and the resolved `config.toml`.
pub fn cmd_train(cfg: &RunConfig, exec: Exec) -> Result<Hppo> {
    let out = &cfg.run.output_dir;
    prepare_out(out)?;
    cfg.save(&out.join("config.toml"))?;
    let env = cfg.make_env()?;
    let outcome = train(&env, cfg.hppo.clone(), &cfg.seeds, exec, |rec, val| {
        if let Some(v) = val {
            eprintln!(
                "episode {:>6}  batch return {:>9.3}  validation return {:>9.3} ± {:.3}  ap50 {:.4}",
                rec.episode, rec.mean_return, v.mean_return, v.se_return, v.mean_ap50
            );
        }
    })?;
    let ckpt = cfg.checkpoint_path();
    if let Some(parent) = ckpt.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_out(parent)?;
    }
    outcome.best.save(&ckpt)?;
    let training: Vec<TrainingRow> = outcome.records.iter().map(TrainingRow::from).collect();
    let validation: Vec<ValidationRow> = outcome.validation.iter().map(ValidationRow::from).collect();
    write_csv(&out.join("training.csv"), &training)?;
    write_csv(&out.join("validation.csv"), &validation)?;
    Ok(outcome.best)
}

fn load_agent(cfg: &RunConfig, env: &Env) -> Result<Option<Hppo>> {
    if !cfg.run.policies.contains(&PolicyKind::Hppo) {
        return Ok(None);
    }
    let path = cfg.checkpoint_path();
    if !path.exists() {
        return Err(Error::Checkpoint(format!(
            "{} not found; run `train` first or pass --checkpoint",
            path.display()
        )));
    }
    let agent = Hppo::load(&path, cfg.hppo.clone())?;
    if agent.space != crate::agents::ActionSpace::for_env(env) {
        return Err(Error::Checkpoint(format!(
            "{} was trained for a different action space",
            path.display()
        )));
    }
    Ok(Some(agent))
}

/// Every configured policy on the same seeds under one environment.
fn evaluate_all(
    cfg: &RunConfig,
    env: &Env,
    agent: Option<&Hppo>,
    seeds: &[EpisodeSeeds],
    exec: Exec,
) -> Result<Vec<MetricsRow>> {
    let bw = env.channel.total_bandwidth_hz;
    let period = env.config.period_ms;
    let mut rows = Vec::new();
    for &kind in &cfg.run.policies {
        let m = evaluate(env, kind, agent, seeds, exec)?;
        for (i, (s, m)) in seeds.iter().zip(&m).enumerate() {
            rows.push(MetricsRow::from_metrics(&cfg.run.run_id, s.index, bw, period, kind.name(), i, m));
        }
    }
    Ok(rows)
}

/// Writes `metrics.csv` and `summary.csv`, plus `episode_log.csv` and
/// `confidence.csv` for the first `run.log_episodes` episodes.
pub fn cmd_eval(cfg: &RunConfig, exec: Exec) -> Result<Vec<MetricsRow>> {
    let out = &cfg.run.output_dir;
    prepare_out(out)?;
    let env = cfg.make_env()?;
    let agent = load_agent(cfg, &env)?;
    let seeds = cfg.seeds.first(Split::Test, cfg.run.episodes);
    let rows = evaluate_all(cfg, &env, agent.as_ref(), &seeds, exec)?;
    write_csv(&out.join("metrics.csv"), &rows)?;
    write_csv(&out.join("summary.csv"), &summarize(&rows))?;

    let n_log = cfg.run.log_episodes.min(seeds.len());
    if n_log > 0 {
        let mut log: Vec<EpisodeLogRow> = Vec::new();
        let mut conf: Vec<ConfidenceRow> = Vec::new();
        for &kind in &cfg.run.policies {
            for (i, s) in seeds.iter().take(n_log).enumerate() {
                let mut e = env.clone();
                let mut policy = make_policy(kind, agent.as_ref(), s)?;
                let (_, trace) = run_episode_traced(&mut e, policy.as_mut(), s)?;
                log.extend(episode_log_rows(kind.name(), i, &trace));
                if i == 0 {
                    conf.extend(trace.cav.iter().map(ConfidenceRow::from));
                }
            }
        }
        write_csv(&out.join("episode_log.csv"), &log)?;
        write_csv(&out.join("confidence.csv"), &conf)?;
    }
    Ok(rows)
}

/// Writes `sweep_<axis>.csv` and `sweep_<axis>_summary.csv`.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, exec: Exec) -> Result<Vec<MetricsRow>> {
    let out = &cfg.run.output_dir;
    prepare_out(out)?;
    let base_env = cfg.make_env()?;
    let agent = load_agent(cfg, &base_env)?;
    let seeds = cfg.seeds.first(Split::Test, cfg.run.episodes);
    let points: Vec<RunConfig> = match axis {
        SweepAxis::Bandwidth => cfg
            .run
            .bandwidths_hz
            .iter()
            .map(|&bw| {
                let mut c = cfg.clone();
                c.channel.total_bandwidth_hz = bw;
                c
            })
            .collect(),
        SweepAxis::Period => cfg
            .run
            .periods_ms
            .iter()
            .map(|&p| {
                let mut c = cfg.clone();
                c.env.period_ms = p;
                c
            })
            .collect(),
    };
    let mut rows = Vec::new();
    for point in &points {
        point.validate()?;
        let env = point.make_env()?;
        rows.extend(evaluate_all(point, &env, agent.as_ref(), &seeds, exec)?);
    }
    let name = match axis {
        SweepAxis::Bandwidth => "sweep_bandwidth",
        SweepAxis::Period => "sweep_period",
    };
    write_csv(&out.join(format!("{name}.csv")), &rows)?;
    write_csv(&out.join(format!("{name}_summary.csv")), &summarize(&rows))?;
    Ok(rows)
}

/// Writes the world of test episode `index` to `scenario_<index>.toml`.
pub fn cmd_inspect(cfg: &RunConfig, index: u64) -> Result<PathBuf> {
    let out = &cfg.run.output_dir;
    prepare_out(out)?;
    let mut sc = cfg.scenario.clone();
    sc.seed = cfg.seeds.eval(Split::Test, index).scenario;
    let scenario = generate_scenario(&sc)?;
    let path = out.join(format!("scenario_{index}.toml"));
    std::fs::write(&path, export_scenario(&scenario)?)?;
    Ok(path)
}
