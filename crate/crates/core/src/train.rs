//! The HPPO training loop: batches of sampled rollouts, one PPO update per
//! batch, periodic greedy validation on held-out worlds.

use crate::agents::hppo::{rollout_rng, LayerStats, TrajectoryBuffer};
use crate::agents::{ActionSpace, Hppo, HppoConfig, PolicyKind};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::runner::{evaluate, mean_se};
use crate::seeds::SeedSets;

/// One PPO update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    /// Episodes completed when the update ran.
    pub episode: usize,
    /// Mean sampled-policy return over the batch.
    pub mean_return: f64,
    pub rb: LayerStats,
    pub power: LayerStats,
}

/// Greedy validation after `episode` training episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPoint {
    pub episode: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub mean_ap50: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights with the best validation return seen (the initialization if
    /// validation never ran).
    pub best: Hppo,
    pub last: Hppo,
    pub records: Vec<TrainRecord>,
    pub validation: Vec<ValidationPoint>,
}

pub fn validate(agent: &Hppo, template: &Env, seeds: &SeedSets, exec: Exec, episode: usize) -> Result<ValidationPoint> {
    let m = evaluate(template, PolicyKind::Hppo, Some(agent), &seeds.validation_set(), exec)?;
    let (mean_return, se_return) = mean_se(&m.iter().map(|x| x.episode_return).collect::<Vec<_>>());
    let (mean_ap50, _) = mean_se(&m.iter().map(|x| x.ap50).collect::<Vec<_>>());
    Ok(ValidationPoint {
        episode,
        mean_return,
        se_return,
        mean_ap50,
    })
}

/// Collects `episodes` sampled rollouts starting at `first`, in parallel,
/// and concatenates them in episode order.
fn collect(
    agent: &Hppo,
    template: &Env,
    seeds: &SeedSets,
    first: usize,
    episodes: usize,
    exec: Exec,
) -> Result<(TrajectoryBuffer, Vec<f64>)> {
    let rollouts = par::map_range_with(exec, episodes, |i| {
        let ep = (first + i) as u64;
        let s = seeds.train(ep);
        let mut env = template.clone();
        let mut rng = rollout_rng(agent.config.seed, ep);
        agent.collect_episode(&mut env, s.scenario, s.channel, &mut rng)
    });
    let mut buffer = TrajectoryBuffer::new(agent.space);
    let mut returns = Vec::with_capacity(episodes);
    for r in rollouts {
        let r = r?;
        buffer.append(&r.buffer);
        returns.push(r.episode_return);
    }
    Ok((buffer, returns))
}

/// Trains from scratch. `on_update` sees every record as it is produced.
pub fn train(
    template: &Env,
    config: HppoConfig,
    seeds: &SeedSets,
    exec: Exec,
    mut on_update: impl FnMut(&TrainRecord, Option<&ValidationPoint>),
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut agent = Hppo::new(config.clone(), ActionSpace::for_env(template));

    // Observation statistics from the untrained policy, drawn from worlds
    // past the end of the training budget so they do not repeat a batch.
    if config.warmup_episodes > 0 && config.train_episodes > 0 {
        let (warm, _) = collect(&agent, template, seeds, config.train_episodes, config.warmup_episodes, exec)?;
        agent.fit_normalizers(&warm);
    }

    let mut records = Vec::new();
    let mut validation = Vec::new();
    let mut best: Option<(f64, Hppo)> = None;
    let interval = config.update_interval_episodes;
    let mut done = 0;
    while done < config.train_episodes {
        let n = interval.min(config.train_episodes - done);
        let (mut buffer, returns) = collect(&agent, template, seeds, done, n, exec)?;
        let stats = agent.update(&mut buffer)?;
        done += n;
        let rec = TrainRecord {
            episode: done,
            mean_return: returns.iter().sum::<f64>() / n as f64,
            rb: stats.rb,
            power: stats.power,
        };
        if !(rec.mean_return.is_finite() && rec.rb.critic_loss.is_finite() && rec.power.critic_loss.is_finite()) {
            return Err(Error::NonFinite(format!("training statistics after episode {done}")));
        }
        let crossed = config.validation_interval > 0
            && (done / config.validation_interval) > ((done - n) / config.validation_interval);
        let point = if crossed {
            let p = validate(&agent, template, seeds, exec, done)?;
            if best.as_ref().is_none_or(|(r, _)| p.mean_return > *r) {
                best = Some((p.mean_return, agent.clone()));
            }
            validation.push(p);
            Some(p)
        } else {
            None
        };
        on_update(&rec, point.as_ref());
        records.push(rec);
    }
    Ok(TrainOutcome {
        best: best.map(|(_, a)| a).unwrap_or_else(|| agent.clone()),
        last: agent,
        records,
        validation,
    })
}
