//! Allocation policies: three heuristics and the hierarchical PPO agent.

use serde::{Deserialize, Serialize};

use crate::channel::{Allocation, ChannelParams, Gains};
use crate::env::{Env, StepState};
use crate::perception::ConfidenceLedger;

pub mod baselines;
pub mod hppo;
pub mod ppo;

pub use baselines::{act_max_features, act_max_rate, act_random, MaxFeatures, MaxRate, RandomPolicy};
pub use hppo::{Hppo, HppoConfig, Layer, Mode, UpdateStats};

/// Joint discrete action spaces. Every link is placed on exactly one RB;
/// silence is expressed through the zero power level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub n_links: usize,
    pub n_rbs: usize,
    pub n_levels: usize,
}

impl ActionSpace {
    pub fn new(n_links: usize, n_rbs: usize, n_levels: usize) -> Self {
        Self {
            n_links,
            n_rbs,
            n_levels,
        }
    }

    pub fn for_env(env: &Env) -> Self {
        Self::new(env.n_cavs(), env.n_rbs(), env.channel.power_levels_dbm.len())
    }

    /// `K^M`.
    pub fn n_rb_actions(&self) -> usize {
        self.n_rbs.pow(self.n_links as u32)
    }

    /// `L^M`.
    pub fn n_power_actions(&self) -> usize {
        self.n_levels.pow(self.n_links as u32)
    }

    fn digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
        (0..n)
            .map(|_| {
                let d = index % base;
                index /= base;
                d
            })
            .collect()
    }

    fn undigits(digits: &[usize], base: usize) -> usize {
        digits.iter().rev().fold(0, |acc, &d| acc * base + d)
    }

    /// Link `m`'s RB is digit `m` (least significant first) of the index in base `K`.
    pub fn decode_rb(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.n_rb_actions());
        Self::digits(index, self.n_rbs, self.n_links)
    }

    pub fn encode_rb(&self, rbs: &[usize]) -> usize {
        Self::undigits(rbs, self.n_rbs)
    }

    pub fn decode_power(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.n_power_actions());
        Self::digits(index, self.n_levels, self.n_links)
    }

    pub fn encode_power(&self, levels: &[usize]) -> usize {
        Self::undigits(levels, self.n_levels)
    }

    pub fn allocation(&self, rb_index: usize, power_index: usize, params: &ChannelParams) -> Allocation {
        Allocation::from_levels(
            &self.decode_rb(rb_index),
            &self.decode_power(power_index),
            params,
        )
    }
}

/// What a policy may look at when deciding a step.
pub struct DecisionContext<'a> {
    pub state: &'a StepState,
    /// Gains at the step's first sub-step.
    pub gains: &'a Gains,
    pub ledger: &'a ConfidenceLedger,
    pub params: &'a ChannelParams,
    pub space: ActionSpace,
}

impl<'a> DecisionContext<'a> {
    pub fn new(env: &'a Env, state: &'a StepState, gains: &'a Gains) -> Self {
        Self {
            state,
            gains,
            ledger: env.ledger(),
            params: &env.channel,
            space: ActionSpace::for_env(env),
        }
    }
}

pub trait Policy {
    fn allocate(&mut self, ctx: &DecisionContext<'_>) -> Allocation;

    fn is_learning(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    MaxRate,
    MaxFeatures,
    Hppo,
}

impl PolicyKind {
    pub const BASELINES: [PolicyKind; 3] = [PolicyKind::Random, PolicyKind::MaxRate, PolicyKind::MaxFeatures];
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Random,
        PolicyKind::MaxRate,
        PolicyKind::MaxFeatures,
        PolicyKind::Hppo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::MaxRate => "max_rate",
            PolicyKind::MaxFeatures => "max_features",
            PolicyKind::Hppo => "hppo",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
