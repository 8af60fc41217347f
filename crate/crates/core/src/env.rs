//! The resource-allocation MDP over one perception period.
//!
//! An episode is one period of `T` decision steps. Each step the RSU picks an
//! RB and a power level per link; the step is then played out over `T_s`
//! sub-steps of independent small-scale fading, the resulting feature budgets
//! drive top-k uploads from every CAV, and the RSU re-fuses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    link_rates, realize_channel, step_budget, Allocation, ChannelParams, ChannelRealization, Gains,
};
use crate::error::{contract, Error, Result};
use crate::perception::{
    detection_loss, detection_report, select_top, ConfidenceLedger, DetectionLoss,
    DetectionReport, LossWeights, SelectionMask,
};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub period_ms: u32,
    pub step_ms: u32,
    pub substep_ms: u32,
    /// Feature channels per BEV cell, `C`.
    pub feature_channels: usize,
    /// Bits per feature value, `Q`.
    pub quant_bits: usize,
    /// Reward weight per Mbps of sum rate.
    pub lambda_rate: f64,
    pub lambda_det: f64,
    pub loss_weights: LossWeights,
    /// Confidence threshold for pseudo-detections.
    pub conf_thresh: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            period_ms: 200,
            step_ms: 5,
            substep_ms: 1,
            feature_channels: 4608,
            quant_bits: 32,
            lambda_rate: 0.025,
            lambda_det: 20.0,
            loss_weights: LossWeights::default(),
            conf_thresh: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.step_ms == 0 || self.substep_ms == 0 || self.period_ms == 0 {
            return bad("durations must be positive");
        }
        if self.period_ms % self.step_ms != 0 {
            return bad("period must be a whole number of steps");
        }
        if self.step_ms % self.substep_ms != 0 {
            return bad("step must be a whole number of sub-steps");
        }
        if self.feature_channels == 0 || self.quant_bits == 0 {
            return bad("feature size C·Q must be positive");
        }
        if !(self.lambda_rate >= 0.0 && self.lambda_det >= 0.0) {
            return bad("reward weights must be non-negative");
        }
        let w = &self.loss_weights;
        if !(w.cls >= 0.0 && w.loc >= 0.0 && w.dir >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if !(self.conf_thresh > 0.0 && self.conf_thresh < 1.0) {
            return bad("conf_thresh must lie in (0, 1)");
        }
        Ok(())
    }

    /// Decision steps per period, `T`.
    pub fn n_steps(&self) -> usize {
        (self.period_ms / self.step_ms) as usize
    }

    /// Sub-steps per step, `T_s`.
    pub fn n_substeps(&self) -> usize {
        (self.step_ms / self.substep_ms) as usize
    }

    pub fn substep_seconds(&self) -> f64 {
        self.substep_ms as f64 / 1000.0
    }
}

/// Observation for the RB layer: per CAV `[α dB, |h|² per RB, feature value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub s_eta: Vec<f64>,
}

impl StepState {
    /// Power-layer observation: `s_eta` followed by the one-hot RB choice of every link.
    pub fn power_state(&self, rbs: &[usize], n_rbs: usize) -> Vec<f64> {
        let mut s = self.s_eta.clone();
        for &k in rbs {
            for j in 0..n_rbs {
                s.push(if j == k { 1.0 } else { 0.0 });
            }
        }
        s
    }
}

pub fn rb_state_dim(n_cavs: usize, n_rbs: usize) -> usize {
    n_cavs * (2 + n_rbs)
}

pub fn power_state_dim(n_cavs: usize, n_rbs: usize) -> usize {
    rb_state_dim(n_cavs, n_rbs) + n_cavs * n_rbs
}

/// `λ_rate · Σ R̄_m [Mbps] − λ_det · (L_after − L_before)`.
pub fn compute_reward(
    mean_rates_bps: &[f64],
    loss_before: f64,
    loss_after: f64,
    lambda_rate: f64,
    lambda_det: f64,
) -> f64 {
    let sum_mbps: f64 = mean_rates_bps.iter().sum::<f64>() / 1e6;
    lambda_rate * sum_mbps - lambda_det * (loss_after - loss_before)
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// 0-based index of the step just played.
    pub step: usize,
    pub allocation: Allocation,
    /// Mean rate over the step's sub-steps, per link.
    pub mean_rates_bps: Vec<f64>,
    /// Unfloored feature budget per link.
    pub budgets: Vec<f64>,
    pub masks: Vec<SelectionMask>,
    pub cells_sent: Vec<usize>,
    pub loss_before: DetectionLoss,
    pub loss_after: DetectionLoss,
}

impl StepInfo {
    pub fn sum_rate_mbps(&self) -> f64 {
        self.mean_rates_bps.iter().sum::<f64>() / 1e6
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reward: f64,
    /// `None` once the period is over.
    pub next: Option<StepState>,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct Env {
    pub scenario_config: ScenarioConfig,
    pub channel: ChannelParams,
    pub config: EnvConfig,
    scenario: Option<Scenario>,
    realization: Option<ChannelRealization>,
    ledger: Option<ConfidenceLedger>,
    loss: DetectionLoss,
    initial_loss: DetectionLoss,
    t: usize,
}

impl Env {
    pub fn new(
        scenario_config: ScenarioConfig,
        channel: ChannelParams,
        config: EnvConfig,
    ) -> Result<Self> {
        scenario_config.validate()?;
        channel.validate()?;
        config.validate()?;
        Ok(Self {
            scenario_config,
            channel,
            config,
            scenario: None,
            realization: None,
            ledger: None,
            loss: DetectionLoss::default(),
            initial_loss: DetectionLoss::default(),
            t: 0,
        })
    }

    pub fn n_cavs(&self) -> usize {
        self.scenario_config.n_cavs
    }

    pub fn n_rbs(&self) -> usize {
        self.channel.n_rbs
    }

    pub fn n_steps(&self) -> usize {
        self.config.n_steps()
    }

    /// Generates a fresh world from `scenario_seed` and a fresh fading
    /// realization from `channel_seed`.
    pub fn reset(&mut self, scenario_seed: u64, channel_seed: u64) -> Result<StepState> {
        let cfg = ScenarioConfig {
            seed: scenario_seed,
            ..self.scenario_config.clone()
        };
        let scenario = generate_scenario(&cfg)?;
        self.reset_with(scenario, channel_seed)
    }

    /// Starts an episode on a prepared scenario.
    pub fn reset_with(&mut self, scenario: Scenario, channel_seed: u64) -> Result<StepState> {
        if scenario.n_cavs() != self.n_cavs() {
            return Err(contract(format!(
                "scenario has {} CAVs, environment expects {}",
                scenario.n_cavs(),
                self.n_cavs()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(channel_seed);
        let realization = realize_channel(
            &scenario,
            &self.channel,
            self.config.n_steps(),
            self.config.n_substeps(),
            &mut rng,
        );
        let ledger = ConfidenceLedger::from_scenario(&scenario);
        self.loss = detection_loss(&ledger.rsu_conf, &scenario, &self.config.loss_weights);
        self.initial_loss = self.loss;
        self.scenario = Some(scenario);
        self.realization = Some(realization);
        self.ledger = Some(ledger);
        self.t = 0;
        Ok(self.observe())
    }

    fn expect_started(&self) -> (&Scenario, &ChannelRealization, &ConfidenceLedger) {
        match (&self.scenario, &self.realization, &self.ledger) {
            (Some(s), Some(r), Some(l)) => (s, r, l),
            _ => panic!("environment used before reset"),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        self.expect_started().0
    }

    pub fn realization(&self) -> &ChannelRealization {
        self.expect_started().1
    }

    pub fn ledger(&self) -> &ConfidenceLedger {
        self.expect_started().2
    }

    /// Index of the next step to play.
    pub fn current_step(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.n_steps()
    }

    pub fn current_loss(&self) -> DetectionLoss {
        self.loss
    }

    pub fn initial_loss(&self) -> DetectionLoss {
        self.initial_loss
    }

    /// Gains at the first sub-step of the upcoming step: what the RSU knows when deciding.
    pub fn decision_gains(&self) -> Gains {
        let t = self.t.min(self.config.n_steps().saturating_sub(1));
        self.realization().gains(t, 0)
    }

    pub fn observe(&self) -> StepState {
        let (_, real, ledger) = self.expect_started();
        let t = self.t.min(self.config.n_steps().saturating_sub(1));
        let k = self.n_rbs();
        let mut s = Vec::with_capacity(rb_state_dim(self.n_cavs(), k));
        for m in 0..self.n_cavs() {
            s.push(real.alpha_db[m]);
            for j in 0..k {
                s.push(real.h2(t, 0, m, j));
            }
            s.push(ledger.feature_value(m));
        }
        StepState { s_eta: s }
    }

    /// Plays one step with the given allocation.
    pub fn step(&mut self, alloc: &Allocation) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(contract("step called after the period ended"));
        }
        if alloc.n_links() != self.n_cavs() {
            return Err(contract("allocation size differs from the number of links"));
        }
        alloc.validate(&self.channel)?;
        let t = self.t;
        let n_links = self.n_cavs();
        let n_sub = self.config.n_substeps();
        let dt = self.config.substep_seconds();

        let real = self.realization.as_ref().expect("reset");
        let mut per_sub_rates = vec![Vec::with_capacity(n_sub); n_links];
        for ts in 0..n_sub {
            let gains = real.gains(t, ts);
            for (m, r) in link_rates(alloc, &gains, &self.channel).into_iter().enumerate() {
                per_sub_rates[m].push(r);
            }
        }
        let budgets: Vec<f64> = per_sub_rates
            .iter()
            .map(|r| step_budget(r, dt, self.config.feature_channels, self.config.quant_bits))
            .collect();
        let mean_rates: Vec<f64> = per_sub_rates
            .iter()
            .map(|r| r.iter().sum::<f64>() / n_sub as f64)
            .collect();

        // Every CAV selects against the same request map, then the RSU fuses once.
        let ledger = self.ledger.as_mut().expect("reset");
        let masks: Vec<SelectionMask> = (0..n_links)
            .map(|m| select_top(&ledger.gain(m), budgets[m]))
            .collect();
        for (m, mask) in masks.iter().enumerate() {
            ledger.commit(m, mask)?;
        }
        ledger.apply_fusion();
        let scenario = self.scenario.as_ref().expect("reset");
        let loss_before = self.loss;
        let loss_after = detection_loss(&ledger.rsu_conf, scenario, &self.config.loss_weights);
        self.loss = loss_after;
        let reward = compute_reward(
            &mean_rates,
            loss_before.det,
            loss_after.det,
            self.config.lambda_rate,
            self.config.lambda_det,
        );
        self.t += 1;
        let done = self.is_done();
        let next = if done { None } else { Some(self.observe()) };
        let cells_sent = masks.iter().map(|m| m.count()).collect();
        Ok(StepOutcome {
            reward,
            next,
            done,
            info: StepInfo {
                step: t,
                allocation: alloc.clone(),
                mean_rates_bps: mean_rates,
                budgets,
                masks,
                cells_sent,
                loss_before,
                loss_after,
            },
        })
    }

    /// Loss and AP of the RSU's current fused map.
    pub fn report(&self) -> DetectionReport {
        let (scenario, _, ledger) = self.expect_started();
        detection_report(
            &ledger.rsu_conf,
            scenario,
            &self.config.loss_weights,
            self.config.conf_thresh,
        )
    }
}
