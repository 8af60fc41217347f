//! V2I link model: large-scale and small-scale fading, co-channel
//! interference, Shannon rate per resource block, and feature budgets.
//!
//! All arithmetic after allocation time is in linear watts.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::scenario::{Scenario, RSU};

/// Any transmit power level at or below this maps to exactly zero watts.
pub const ZERO_POWER_DBM: f64 = -100.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Transmit power in watts, with the silence level mapped to exactly zero.
pub fn tx_power_watts(dbm: f64) -> f64 {
    if dbm <= ZERO_POWER_DBM {
        0.0
    } else {
        dbm_to_watts(dbm)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Reference point for the default noise density: -114 dBm over a 1.5 MHz RB.
const REF_NOISE_DBM: f64 = -114.0;
const REF_NOISE_BW_HZ: f64 = 1.5e6;

fn default_noise_psd_dbm_hz() -> f64 {
    REF_NOISE_DBM - 10.0 * REF_NOISE_BW_HZ.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub n_rbs: usize,
    /// System bandwidth, split evenly over the RBs.
    pub total_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub pathloss_a: f64,
    pub pathloss_b: f64,
    pub shadow_sigma_db: f64,
    pub rsu_antenna_gain_dbi: f64,
    pub vehicle_antenna_gain_dbi: f64,
    pub rsu_noise_figure_db: f64,
    pub vehicle_noise_figure_db: f64,
    pub vehicle_antenna_height: f64,
    /// Discrete transmit power levels; index 0 is conventionally the maximum.
    pub power_levels_dbm: Vec<f64>,
    pub p_max_dbm: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_hz: 5.9e9,
            n_rbs: 2,
            total_bandwidth_hz: 3.0e6,
            noise_psd_dbm_hz: default_noise_psd_dbm_hz(),
            pathloss_a: 128.1,
            pathloss_b: 37.6,
            shadow_sigma_db: 8.0,
            rsu_antenna_gain_dbi: 8.0,
            vehicle_antenna_gain_dbi: 3.0,
            rsu_noise_figure_db: 5.0,
            vehicle_noise_figure_db: 9.0,
            vehicle_antenna_height: 1.5,
            power_levels_dbm: vec![23.0, 10.5, -100.0],
            p_max_dbm: 23.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_rbs == 0 {
            return bad("n_rbs must be at least 1");
        }
        if !(self.total_bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if self.power_levels_dbm.is_empty() {
            return bad("at least one power level is required");
        }
        if self
            .power_levels_dbm
            .iter()
            .any(|&p| !(p >= ZERO_POWER_DBM && p <= self.p_max_dbm))
        {
            return bad("power levels must lie in [-100 dBm, p_max]");
        }
        if !(self.noise_power_w() > 0.0) || !self.noise_power_w().is_finite() {
            return bad("noise power must be positive");
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return bad("shadow_sigma_db must be non-negative");
        }
        Ok(())
    }

    /// Bandwidth of one RB, `W_B`.
    pub fn rb_bandwidth_hz(&self) -> f64 {
        self.total_bandwidth_hz / self.n_rbs as f64
    }

    /// `σ² = N_0 · W_B` in watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.rb_bandwidth_hz()
    }

    /// Net fixed gain folded into the large-scale fading: antenna gains minus noise figures.
    pub fn fixed_offset_db(&self) -> f64 {
        self.rsu_antenna_gain_dbi + self.vehicle_antenna_gain_dbi
            - self.rsu_noise_figure_db
            - self.vehicle_noise_figure_db
    }

    /// Index of the strongest power level.
    pub fn max_power_level(&self) -> usize {
        argmax_by(&self.power_levels_dbm)
    }

    /// Index of the weakest power level (the silence level when it is -100 dBm).
    pub fn min_power_level(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.power_levels_dbm.iter().enumerate() {
            if p < self.power_levels_dbm[best] {
                best = i;
            }
        }
        best
    }

    /// Log-distance path loss in dB; distances below 1 m are clamped.
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        self.pathloss_a + self.pathloss_b * (distance_m.max(1.0) / 1000.0).log10()
    }

    /// `α = 10^{-(PL + X - G + NF)/10}`.
    pub fn large_scale_gain(&self, distance_m: f64, shadow_db: f64) -> f64 {
        db_to_linear(-(self.path_loss_db(distance_m) + shadow_db) + self.fixed_offset_db())
    }
}

fn argmax_by(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-link, per-RB power gains for one sub-step, link-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    n_links: usize,
    n_rbs: usize,
    values: Vec<f64>,
}

impl Gains {
    pub fn new(n_links: usize, n_rbs: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_links * n_rbs);
        Self {
            n_links,
            n_rbs,
            values,
        }
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[m * self.n_rbs + k]
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Fading for one perception period.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_steps: usize,
    n_substeps: usize,
    n_links: usize,
    n_rbs: usize,
    /// Large-scale linear gain per link, fixed for the period.
    pub alpha: Vec<f64>,
    /// Same as `alpha`, in dB.
    pub alpha_db: Vec<f64>,
    /// `|h|²` indexed `[step][substep][link][rb]`.
    h2: Vec<f64>,
}

impl ChannelRealization {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_substeps(&self) -> usize {
        self.n_substeps
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn n_rbs(&self) -> usize {
        self.n_rbs
    }

    #[inline]
    fn offset(&self, t: usize, ts: usize) -> usize {
        ((t * self.n_substeps) + ts) * self.n_links * self.n_rbs
    }

    #[inline]
    pub fn h2(&self, t: usize, ts: usize, m: usize, k: usize) -> f64 {
        self.h2[self.offset(t, ts) + m * self.n_rbs + k]
    }

    /// All small-scale draws in storage order.
    pub fn h2_samples(&self) -> &[f64] {
        &self.h2
    }

    /// `g_m^k(t, t_s) = α_m |h_m^k(t, t_s)|²` for every link and RB.
    pub fn gains(&self, t: usize, ts: usize) -> Gains {
        let base = self.offset(t, ts);
        let width = self.n_links * self.n_rbs;
        let values = self.h2[base..base + width]
            .iter()
            .enumerate()
            .map(|(i, &h)| self.alpha[i / self.n_rbs] * h)
            .collect();
        Gains::new(self.n_links, self.n_rbs, values)
    }
}

/// Link distance between the RSU antenna and a CAV antenna, meters.
pub fn link_distance(scenario: &Scenario, params: &ChannelParams, cav: usize) -> f64 {
    let ground = scenario.ground_distance_to_rsu(cav + 1);
    let dh = scenario.config.rsu_height - params.vehicle_antenna_height;
    ground.hypot(dh)
}

/// Draws shadowing once per link and i.i.d. unit-mean exponential `|h|²`
/// for every (step, sub-step, link, RB).
pub fn realize_channel<R: Rng + ?Sized>(
    scenario: &Scenario,
    params: &ChannelParams,
    n_steps: usize,
    n_substeps: usize,
    rng: &mut R,
) -> ChannelRealization {
    debug_assert!(scenario.agents.len() > RSU);
    let n_links = scenario.n_cavs();
    let n_rbs = params.n_rbs;
    let shadow = Normal::new(0.0, params.shadow_sigma_db.max(0.0)).expect("finite sigma");
    let mut alpha = Vec::with_capacity(n_links);
    let mut alpha_db = Vec::with_capacity(n_links);
    for m in 0..n_links {
        let x = if params.shadow_sigma_db > 0.0 {
            shadow.sample(rng)
        } else {
            0.0
        };
        let a = params.large_scale_gain(link_distance(scenario, params, m), x);
        alpha.push(a);
        alpha_db.push(10.0 * a.log10());
    }
    let n = n_steps * n_substeps * n_links * n_rbs;
    let h2 = (0..n)
        .map(|_| {
            let v: f64 = Exp1.sample(rng);
            // Exp1 can return exactly 0 with vanishing probability; gains stay positive.
            v.max(f64::MIN_POSITIVE)
        })
        .collect();
    ChannelRealization {
        n_steps,
        n_substeps,
        n_links,
        n_rbs,
        alpha,
        alpha_db,
        h2,
    }
}

/// Joint spectrum and power decision for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Assigned RB per link; `None` means the link is not scheduled.
    pub rb: Vec<Option<usize>>,
    pub power_dbm: Vec<f64>,
    power_w: Vec<f64>,
}

impl Allocation {
    pub fn new(rb: Vec<Option<usize>>, power_dbm: Vec<f64>) -> Self {
        assert_eq!(rb.len(), power_dbm.len());
        let power_w = power_dbm.iter().map(|&p| tx_power_watts(p)).collect();
        Self {
            rb,
            power_dbm,
            power_w,
        }
    }

    /// Every link on an RB, with power given as level indices.
    pub fn from_levels(rbs: &[usize], levels: &[usize], params: &ChannelParams) -> Self {
        Self::new(
            rbs.iter().map(|&k| Some(k)).collect(),
            levels.iter().map(|&l| params.power_levels_dbm[l]).collect(),
        )
    }

    pub fn n_links(&self) -> usize {
        self.rb.len()
    }

    #[inline]
    pub fn eta(&self, m: usize, k: usize) -> bool {
        self.rb[m] == Some(k)
    }

    #[inline]
    pub fn power_w(&self, m: usize) -> f64 {
        self.power_w[m]
    }

    /// Checks one-RB-per-link and power-level membership.
    pub fn validate(&self, params: &ChannelParams) -> Result<()> {
        for (m, (rb, &p)) in self.rb.iter().zip(&self.power_dbm).enumerate() {
            if let Some(k) = rb {
                if *k >= params.n_rbs {
                    return Err(contract(format!("link {m} assigned RB {k} of {}", params.n_rbs)));
                }
            }
            if !params.power_levels_dbm.contains(&p) || p > params.p_max_dbm {
                return Err(contract(format!("link {m} power {p} dBm is not an allowed level")));
            }
        }
        Ok(())
    }
}

/// Co-channel interference at link `m` on RB `k`.
pub fn interference_power(alloc: &Allocation, gains: &Gains, m: usize, k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..alloc.n_links() {
        if j != m && alloc.eta(j, k) {
            total += alloc.power_w(j) * gains.get(j, k);
        }
    }
    total
}

/// Achievable rate of link `m` in bits/s, summed over its RBs.
pub fn link_rate(alloc: &Allocation, gains: &Gains, m: usize, params: &ChannelParams) -> f64 {
    let wb = params.rb_bandwidth_hz();
    let noise = params.noise_power_w();
    let mut rate = 0.0;
    for k in 0..gains.n_rbs() {
        if alloc.eta(m, k) {
            let sinr = alloc.power_w(m) * gains.get(m, k)
                / (interference_power(alloc, gains, m, k) + noise);
            rate += wb * (1.0 + sinr).log2();
        }
    }
    rate
}

pub fn link_rates(alloc: &Allocation, gains: &Gains, params: &ChannelParams) -> Vec<f64> {
    (0..alloc.n_links())
        .map(|m| link_rate(alloc, gains, m, params))
        .collect()
}

pub fn sum_rate(alloc: &Allocation, gains: &Gains, params: &ChannelParams) -> f64 {
    (0..alloc.n_links())
        .map(|m| link_rate(alloc, gains, m, params))
        .sum()
}

/// Features a link can upload in one step: `Σ R·Δt_s / (C·Q)`, unfloored.
pub fn step_budget(rates: &[f64], dt_s: f64, channels: usize, quant_bits: usize) -> f64 {
    let bits_per_feature = (channels * quant_bits) as f64;
    rates.iter().map(|r| r * dt_s / bits_per_feature).sum()
}
