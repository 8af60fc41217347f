//! Hierarchical PPO: an RB-allocation layer followed by a power-control layer.
//!
//! Each layer owns an actor over its joint categorical action space, a
//! separate critic, Adam state, and an observation normalizer. The power layer
//! sees the RB layer's decision as a one-hot suffix of its state. Both layers
//! are trained on the same shared reward but updated independently.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ppo::{
    clip_is_inactive, clipped_objective, compute_advantages, normalize_advantages,
    sample_categorical, RunningNorm,
};
use super::{ActionSpace, DecisionContext, Policy};
use crate::channel::Allocation;
use crate::env::{power_state_dim, rb_state_dim, Env, StepState};
use crate::error::{Error, Result};
use crate::nn::{argmax, log_softmax, softmax, Adam, Dense, DenseNet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HppoConfig {
    pub hidden_sizes: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub clip_eps: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub update_interval_episodes: usize,
    pub train_episodes: usize,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Random-policy episodes used to seed the observation normalizers.
    pub warmup_episodes: usize,
    pub validation_interval: usize,
    /// Samples per gradient work item.
    pub grad_chunk: usize,
    pub seed: u64,
}

impl Default for HppoConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![500, 250, 125],
            actor_lr: 1e-4,
            critic_lr: 3e-4,
            clip_eps: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            update_interval_episodes: 10,
            train_episodes: 2000,
            minibatch_size: 100,
            epochs: 4,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            warmup_episodes: 2,
            validation_interval: 100,
            grad_chunk: 50,
            seed: 0,
        }
    }
}

impl HppoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must lie in (0, 1)");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if self.update_interval_episodes == 0 || self.minibatch_size == 0 || self.epochs == 0 {
            return bad("update interval, minibatch size and epochs must be positive");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden sizes must be positive");
        }
        if !(self.max_grad_norm > 0.0) || !(self.entropy_coef >= 0.0) {
            return bad("max_grad_norm must be positive and entropy_coef non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Rb,
    Power,
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Rb => "rb",
            Layer::Power => "power",
        }
    }
}

pub enum Mode<'r> {
    Sample(&'r mut ChaCha8Rng),
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActOutput {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoLayer {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub norm: RunningNorm,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl PpoLayer {
    fn new(state_dim: usize, n_actions: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        let actor = DenseNet::new(&[sizes.as_slice(), &[n_actions]].concat(), rng);
        let critic = DenseNet::new(&[sizes.as_slice(), &[1]].concat(), rng);
        Self {
            actor_opt: Adam::new(&actor),
            critic_opt: Adam::new(&critic),
            norm: RunningNorm::new(state_dim),
            actor,
            critic,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn logits(&self, state: &[f64]) -> Vec<f64> {
        self.actor.forward(&self.norm.apply(state))
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.critic.forward(&self.norm.apply(state))[0]
    }

    pub fn act(&self, state: &[f64], mode: Mode<'_>) -> ActOutput {
        let x = self.norm.apply(state);
        let logits = self.actor.forward(&x);
        let value = self.critic.forward(&x)[0];
        let action = match mode {
            Mode::Greedy => argmax(&logits),
            Mode::Sample(rng) => sample_categorical(&softmax(&logits), rng),
        };
        ActOutput {
            action,
            log_prob: log_softmax(&logits)[action],
            value,
        }
    }

    fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite()
    }
}

/// Transitions of one layer, in time order across episodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerBuffer {
    pub state_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
}

impl LayerBuffer {
    pub fn new(state_dim: usize) -> Self {
        Self {
            state_dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn push(&mut self, state: &[f64], out: ActOutput, reward: f64, done: bool) {
        debug_assert_eq!(state.len(), self.state_dim);
        self.states.extend_from_slice(state);
        self.actions.push(out.action);
        self.log_probs.push(out.log_prob);
        self.values.push(out.value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    pub fn append(&mut self, other: &LayerBuffer) {
        self.states.extend_from_slice(&other.states);
        self.actions.extend_from_slice(&other.actions);
        self.log_probs.extend_from_slice(&other.log_probs);
        self.values.extend_from_slice(&other.values);
        self.rewards.extend_from_slice(&other.rewards);
        self.dones.extend_from_slice(&other.dones);
    }

    pub fn clear(&mut self) {
        let d = self.state_dim;
        *self = Self::new(d);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBuffer {
    pub rb: LayerBuffer,
    pub power: LayerBuffer,
    pub episodes: usize,
}

impl TrajectoryBuffer {
    pub fn new(space: ActionSpace) -> Self {
        Self {
            rb: LayerBuffer::new(rb_state_dim(space.n_links, space.n_rbs)),
            power: LayerBuffer::new(power_state_dim(space.n_links, space.n_rbs)),
            episodes: 0,
        }
    }

    pub fn layer(&self, layer: Layer) -> &LayerBuffer {
        match layer {
            Layer::Rb => &self.rb,
            Layer::Power => &self.power,
        }
    }

    pub fn append(&mut self, other: &TrajectoryBuffer) {
        self.rb.append(&other.rb);
        self.power.append(&other.power);
        self.episodes += other.episodes;
    }

    pub fn clear(&mut self) {
        self.rb.clear();
        self.power.clear();
        self.episodes = 0;
    }

    pub fn len(&self) -> usize {
        self.rb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rb.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LayerStats {
    /// Mean clipped surrogate objective over all minibatches.
    pub actor_objective: f64,
    pub critic_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub rb: LayerStats,
    pub power: LayerStats,
}

/// One collected training episode.
#[derive(Debug, Clone)]
pub struct EpisodeRollout {
    pub buffer: TrajectoryBuffer,
    pub episode_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hppo {
    pub config: HppoConfig,
    pub space: ActionSpace,
    pub rb: PpoLayer,
    pub power: PpoLayer,
    pub updates: u64,
}

impl Hppo {
    pub fn new(config: HppoConfig, space: ActionSpace) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let rb = PpoLayer::new(
            rb_state_dim(space.n_links, space.n_rbs),
            space.n_rb_actions(),
            &config.hidden_sizes,
            &mut rng,
        );
        let power = PpoLayer::new(
            power_state_dim(space.n_links, space.n_rbs),
            space.n_power_actions(),
            &config.hidden_sizes,
            &mut rng,
        );
        Self {
            config,
            space,
            rb,
            power,
            updates: 0,
        }
    }

    pub fn layer(&self, layer: Layer) -> &PpoLayer {
        match layer {
            Layer::Rb => &self.rb,
            Layer::Power => &self.power,
        }
    }

    fn layer_mut(&mut self, layer: Layer) -> &mut PpoLayer {
        match layer {
            Layer::Rb => &mut self.rb,
            Layer::Power => &mut self.power,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rb.is_finite() && self.power.is_finite()
    }

    pub fn ppo_act(&self, layer: Layer, state: &[f64], mode: Mode<'_>) -> ActOutput {
        self.layer(layer).act(state, mode)
    }

    /// Greedy decision with the environment's power levels.
    pub fn decide_in(&self, env: &Env, state: &StepState) -> Allocation {
        let rb = self.ppo_act(Layer::Rb, &state.s_eta, Mode::Greedy).action;
        let rbs = self.space.decode_rb(rb);
        let s_p = state.power_state(&rbs, self.space.n_rbs);
        let p = self.ppo_act(Layer::Power, &s_p, Mode::Greedy).action;
        self.space.allocation(rb, p, &env.channel)
    }

    /// Plays one full period with sampled actions and records both layers' transitions.
    pub fn collect_episode(
        &self,
        env: &mut Env,
        scenario_seed: u64,
        channel_seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<EpisodeRollout> {
        let mut buffer = TrajectoryBuffer::new(self.space);
        let mut state = env.reset(scenario_seed, channel_seed)?;
        let mut total = 0.0;
        loop {
            let rb_out = self.ppo_act(Layer::Rb, &state.s_eta, Mode::Sample(rng));
            let rbs = self.space.decode_rb(rb_out.action);
            let s_p = state.power_state(&rbs, self.space.n_rbs);
            let p_out = self.ppo_act(Layer::Power, &s_p, Mode::Sample(rng));
            let alloc = self.space.allocation(rb_out.action, p_out.action, &env.channel);
            let out = env.step(&alloc)?;
            total += out.reward;
            buffer.rb.push(&state.s_eta, rb_out, out.reward, out.done);
            buffer.power.push(&s_p, p_out, out.reward, out.done);
            match out.next {
                Some(next) => state = next,
                None => break,
            }
        }
        buffer.episodes = 1;
        Ok(EpisodeRollout {
            buffer,
            episode_return: total,
        })
    }

    /// Seeds both observation normalizers from recorded states.
    pub fn fit_normalizers(&mut self, buffer: &TrajectoryBuffer) {
        self.rb.norm.update(&buffer.rb.states);
        self.power.norm.update(&buffer.power.states);
    }

    /// PPO update of both layers, RB layer first, then clears the buffer.
    pub fn update(&mut self, buffer: &mut TrajectoryBuffer) -> Result<UpdateStats> {
        let seed = self.config.seed ^ 0x5eed_0f0f_u64.wrapping_mul(self.updates + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rb = self.update_layer(Layer::Rb, &buffer.rb, &mut rng)?;
        let power = self.update_layer(Layer::Power, &buffer.power, &mut rng)?;
        // Normalizers move only after both layers trained on the stats they sampled with.
        self.fit_normalizers(buffer);
        self.updates += 1;
        buffer.clear();
        Ok(UpdateStats { rb, power })
    }

    /// Clipped-surrogate ascent for the actor and MSE descent for the critic of one layer.
    pub fn update_layer(
        &mut self,
        layer: Layer,
        data: &LayerBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<LayerStats> {
        let n = data.len();
        if n == 0 {
            return Ok(LayerStats::default());
        }
        let cfg = self.config.clone();
        let mut values = data.values.clone();
        values.push(0.0);
        let (mut adv, returns) =
            compute_advantages(&data.rewards, &values, &data.dones, cfg.gamma, cfg.gae_lambda);
        normalize_advantages(&mut adv);

        let net = self.layer_mut(layer);
        let d = net.state_dim();
        let n_actions = net.n_actions();
        let states = net.norm.apply(&data.states);
        let mut order: Vec<usize> = (0..n).collect();
        let (mut obj_sum, mut critic_sum, mut batches) = (0.0, 0.0, 0usize);

        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for mb in order.chunks(cfg.minibatch_size) {
                let m = mb.len();
                let mut x = Vec::with_capacity(m * d);
                for &i in mb {
                    x.extend_from_slice(&states[i * d..(i + 1) * d]);
                }
                let acts: Vec<usize> = mb.iter().map(|&i| data.actions[i]).collect();
                let old: Vec<f64> = mb.iter().map(|&i| data.log_probs[i]).collect();
                let a: Vec<f64> = mb.iter().map(|&i| adv[i]).collect();
                let ret: Vec<f64> = mb.iter().map(|&i| returns[i]).collect();
                let inv = 1.0 / m as f64;

                let (mut g_actor, obj) = net.actor.batch_gradients(&x, m, cfg.grad_chunk, |out, range| {
                    let mut grad = vec![0.0; out.len()];
                    let mut obj = 0.0;
                    for (row, i) in range.enumerate() {
                        let logits = &out[row * n_actions..(row + 1) * n_actions];
                        let logp = log_softmax(logits);
                        let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                        let ratio = (logp[acts[i]] - old[i]).exp();
                        obj += clipped_objective(ratio, a[i], cfg.clip_eps) * inv;
                        let g = &mut grad[row * n_actions..(row + 1) * n_actions];
                        if clip_is_inactive(ratio, a[i], cfg.clip_eps) && a[i] != 0.0 {
                            // d(-r·A)/dz = -r·A·(onehot - p)
                            let coef = -ratio * a[i] * inv;
                            for (j, gj) in g.iter_mut().enumerate() {
                                let onehot = if j == acts[i] { 1.0 } else { 0.0 };
                                *gj += coef * (onehot - p[j]);
                            }
                        }
                        if cfg.entropy_coef > 0.0 {
                            let h: f64 = -p.iter().zip(&logp).map(|(pi, li)| pi * li).sum::<f64>();
                            for (j, gj) in g.iter_mut().enumerate() {
                                // d(-c·H)/dz_j = c·p_j·(log p_j + H)
                                *gj += cfg.entropy_coef * inv * p[j] * (logp[j] + h);
                            }
                        }
                    }
                    (grad, obj)
                });
                g_actor.clip_norm(cfg.max_grad_norm);
                if !g_actor.is_zero() {
                    net.actor_opt.step(&mut net.actor, &g_actor, cfg.actor_lr);
                }

                let (mut g_critic, closs) = net.critic.batch_gradients(&x, m, cfg.grad_chunk, |out, range| {
                    let mut grad = vec![0.0; out.len()];
                    let mut loss = 0.0;
                    for (row, i) in range.enumerate() {
                        let e = out[row] - ret[i];
                        grad[row] = 2.0 * e * inv;
                        loss += e * e * inv;
                    }
                    (grad, loss)
                });
                g_critic.clip_norm(cfg.max_grad_norm);
                net.critic_opt.step(&mut net.critic, &g_critic, cfg.critic_lr);

                obj_sum += obj;
                critic_sum += closs;
                batches += 1;
            }
        }
        if !net.is_finite() {
            return Err(Error::NonFinite(format!("{} layer parameters", layer.name())));
        }
        Ok(LayerStats {
            actor_objective: obj_sum / batches as f64,
            critic_loss: critic_sum / batches as f64,
        })
    }

    // ------------------------------------------------------------------
    // Checkpoints

    pub const CHECKPOINT_MAGIC: &'static str = "v2i-coop-checkpoint";
    pub const CHECKPOINT_VERSION: u32 = 1;

    fn manifest_line(tag: &str, net: &DenseNet) -> String {
        let mut dims = vec![net.input_dim()];
        dims.extend(net.layers.iter().map(|l| l.out_dim));
        let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        format!("{tag} {}\n", dims.join(","))
    }

    /// Writes a versioned text header with the shape manifest, followed by
    /// every parameter as little-endian `f64` in manifest order.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let s = &self.space;
        let mut header = format!(
            "{} v{}\nspace {} {} {}\nupdates {}\n",
            Self::CHECKPOINT_MAGIC,
            Self::CHECKPOINT_VERSION,
            s.n_links,
            s.n_rbs,
            s.n_levels,
            self.updates
        );
        for layer in [Layer::Rb, Layer::Power] {
            let l = self.layer(layer);
            header += &Self::manifest_line(&format!("{} actor", layer.name()), &l.actor);
            header += &Self::manifest_line(&format!("{} critic", layer.name()), &l.critic);
            header += &format!("{} norm {}\n", layer.name(), l.norm.dim());
        }
        header += "end\n";
        w.write_all(header.as_bytes())?;
        let mut body = Vec::new();
        for layer in [Layer::Rb, Layer::Power] {
            let l = self.layer(layer);
            for v in l
                .actor
                .params_flat()
                .into_iter()
                .chain(l.critic.params_flat())
                .chain([l.norm.count])
                .chain(l.norm.mean.iter().copied())
                .chain(l.norm.var.iter().copied())
            {
                body.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&body)?;
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_checkpoint(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path, config: HppoConfig) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::read_checkpoint(f, config)
    }

    pub fn read_checkpoint<R: Read>(r: R, config: HppoConfig) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut r = BufReader::new(r);
        let mut line = String::new();
        let mut next_line = |r: &mut BufReader<R>| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Checkpoint("truncated header".into()));
            }
            Ok(line.trim_end().to_string())
        };
        let magic = next_line(&mut r)?;
        let expected = format!("{} v{}", Self::CHECKPOINT_MAGIC, Self::CHECKPOINT_VERSION);
        if magic != expected {
            return Err(bad(format!("unsupported header {magic:?}")));
        }
        let nums = |s: &str| -> Result<Vec<usize>> {
            s.split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map_err(|_| Error::Checkpoint(format!("bad number {t:?}"))))
                .collect()
        };
        let space_line = next_line(&mut r)?;
        let sp = nums(space_line.strip_prefix("space ").ok_or_else(|| bad("missing space".into()))?)?;
        if sp.len() != 3 {
            return Err(bad("space line needs three numbers".into()));
        }
        let space = ActionSpace::new(sp[0], sp[1], sp[2]);
        let updates_line = next_line(&mut r)?;
        let updates: u64 = updates_line
            .strip_prefix("updates ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("missing updates".into()))?;

        let mut shapes: Vec<(String, Vec<usize>)> = Vec::new();
        loop {
            let l = next_line(&mut r)?;
            if l == "end" {
                break;
            }
            let mut parts = l.splitn(3, ' ');
            let (a, b, c) = (parts.next(), parts.next(), parts.next());
            match (a, b, c) {
                (Some(layer), Some(kind), Some(dims)) => {
                    shapes.push((format!("{layer} {kind}"), nums(dims)?));
                }
                _ => return Err(bad(format!("bad manifest line {l:?}"))),
            }
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() % 8 != 0 {
            return Err(bad("parameter block is not a whole number of f64".into()));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = values.by_ref().take(n).collect();
            if v.len() != n {
                return Err(Error::Checkpoint("parameter block too short".into()));
            }
            Ok(v)
        };
        let find = |key: &str| -> Result<Vec<usize>> {
            shapes
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| Error::Checkpoint(format!("manifest lacks {key}")))
        };
        let build = |dims: &[usize]| -> Result<DenseNet> {
            if dims.len() < 2 {
                return Err(Error::Checkpoint("network needs at least two sizes".into()));
            }
            let n = dims.len() - 1;
            let layers = (0..n)
                .map(|i| {
                    let act = if i + 1 == n {
                        crate::nn::Activation::Identity
                    } else {
                        crate::nn::Activation::Relu
                    };
                    Dense::zeros(dims[i], dims[i + 1], act)
                })
                .collect();
            DenseNet::from_layers(layers)
        };
        let mut layers = Vec::new();
        for layer in [Layer::Rb, Layer::Power] {
            let mut actor = build(&find(&format!("{} actor", layer.name()))?)?;
            let mut critic = build(&find(&format!("{} critic", layer.name()))?)?;
            let norm_dim = find(&format!("{} norm", layer.name()))?;
            let norm_dim = *norm_dim.first().ok_or_else(|| bad("bad norm line".into()))?;
            actor.set_params_flat(&take(actor.n_params())?)?;
            critic.set_params_flat(&take(critic.n_params())?)?;
            let count = take(1)?[0];
            let mean = take(norm_dim)?;
            let var = take(norm_dim)?;
            if actor.input_dim() != norm_dim || critic.input_dim() != norm_dim {
                return Err(bad(format!("{} layer dimensions disagree", layer.name())));
            }
            layers.push(PpoLayer {
                actor_opt: Adam::new(&actor),
                critic_opt: Adam::new(&critic),
                norm: RunningNorm { count, mean, var },
                actor,
                critic,
            });
        }
        if values.next().is_some() {
            return Err(bad("trailing data after parameters".into()));
        }
        let power = layers.pop().unwrap();
        let rb = layers.pop().unwrap();
        if rb.n_actions() != space.n_rb_actions() || power.n_actions() != space.n_power_actions() {
            return Err(bad("action heads do not match the action space".into()));
        }
        let mut config = config;
        config.hidden_sizes = rb.actor.shape_manifest()[1..]
            .iter()
            .map(|&(i, _)| i)
            .collect();
        Ok(Self {
            config,
            space,
            rb,
            power,
            updates,
        })
    }
}

/// Greedy HPPO as an evaluation policy.
pub struct GreedyHppo<'a>(pub &'a Hppo);

impl Policy for GreedyHppo<'_> {
    fn allocate(&mut self, ctx: &DecisionContext<'_>) -> Allocation {
        let agent = self.0;
        let rb = agent.ppo_act(Layer::Rb, &ctx.state.s_eta, Mode::Greedy).action;
        let rbs = agent.space.decode_rb(rb);
        let s_p = ctx.state.power_state(&rbs, agent.space.n_rbs);
        let p = agent.ppo_act(Layer::Power, &s_p, Mode::Greedy).action;
        agent.space.allocation(rb, p, ctx.params)
    }

    fn is_learning(&self) -> bool {
        true
    }
}

/// Draws a `u64` seed stream for rollouts from a base seed and an index.
pub fn rollout_rng(base: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(base);
    r.set_stream(index);
    let _: u64 = r.random();
    r
}
