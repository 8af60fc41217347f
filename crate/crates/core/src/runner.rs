//! Episode playback and paired multi-seed evaluation.

use crate::agents::hppo::GreedyHppo;
use crate::agents::{DecisionContext, Hppo, MaxFeatures, MaxRate, Policy, PolicyKind, RandomPolicy};
use crate::env::{Env, StepInfo};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::seeds::{derive_seed, EpisodeSeeds};

/// End-of-period metrics of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeMetrics {
    pub episode_return: f64,
    /// Mean over steps of the sub-step-averaged sum rate.
    pub sum_rate_mbps: f64,
    pub l_det: f64,
    pub l_cls: f64,
    pub ap50: f64,
    pub ap70: f64,
}

/// Per-step trace of one CAV, for confidence trajectory dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavTrace {
    pub step: usize,
    pub cav: usize,
    /// Sum of the CAV's not-yet-sent confidence after the step.
    pub total_confidence: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeTrace {
    pub steps: Vec<StepInfo>,
    pub rewards: Vec<f64>,
    pub cav: Vec<CavTrace>,
}

/// A policy instance for one episode. Random draws are keyed by the
/// episode's channel seed so reruns replay exactly.
pub fn make_policy<'a>(
    kind: PolicyKind,
    agent: Option<&'a Hppo>,
    seeds: &EpisodeSeeds,
) -> Result<Box<dyn Policy + 'a>> {
    Ok(match kind {
        PolicyKind::Random => Box::new(RandomPolicy::new(derive_seed(seeds.channel, &[0x72616e64]))),
        PolicyKind::MaxRate => Box::new(MaxRate),
        PolicyKind::MaxFeatures => Box::new(MaxFeatures),
        PolicyKind::Hppo => {
            let agent = agent.ok_or_else(|| Error::Checkpoint("hppo policy needs a trained agent".into()))?;
            Box::new(GreedyHppo(agent))
        }
    })
}

pub fn run_episode(env: &mut Env, policy: &mut dyn Policy, seeds: &EpisodeSeeds) -> Result<EpisodeMetrics> {
    run_inner(env, policy, seeds, None)
}

pub fn run_episode_traced(
    env: &mut Env,
    policy: &mut dyn Policy,
    seeds: &EpisodeSeeds,
) -> Result<(EpisodeMetrics, EpisodeTrace)> {
    let mut trace = EpisodeTrace::default();
    let m = run_inner(env, policy, seeds, Some(&mut trace))?;
    Ok((m, trace))
}

fn run_inner(
    env: &mut Env,
    policy: &mut dyn Policy,
    seeds: &EpisodeSeeds,
    mut trace: Option<&mut EpisodeTrace>,
) -> Result<EpisodeMetrics> {
    let mut state = env.reset(seeds.scenario, seeds.channel)?;
    let mut ret = 0.0;
    let mut rate_sum = 0.0;
    let mut steps = 0usize;
    loop {
        let gains = env.decision_gains();
        let alloc = {
            let ctx = DecisionContext::new(env, &state, &gains);
            policy.allocate(&ctx)
        };
        let out = env.step(&alloc)?;
        ret += out.reward;
        rate_sum += out.info.sum_rate_mbps();
        steps += 1;
        if let Some(t) = trace.as_deref_mut() {
            let ledger = env.ledger();
            for m in 0..env.n_cavs() {
                t.cav.push(CavTrace {
                    step: out.info.step,
                    cav: m,
                    total_confidence: ledger.remaining_conf[m].total(),
                    rate_bps: out.info.mean_rates_bps[m],
                });
            }
            t.rewards.push(out.reward);
            t.steps.push(out.info.clone());
        }
        match out.next {
            Some(s) => state = s,
            None => break,
        }
    }
    let report = env.report();
    let m = EpisodeMetrics {
        episode_return: ret,
        sum_rate_mbps: rate_sum / steps.max(1) as f64,
        l_det: report.loss.det,
        l_cls: report.loss.cls,
        ap50: report.ap50,
        ap70: report.ap70,
    };
    if !(m.episode_return.is_finite() && m.l_det.is_finite()) {
        return Err(Error::NonFinite("episode metrics".into()));
    }
    Ok(m)
}

/// Runs `kind` on every seed, one fresh environment per episode.
pub fn evaluate(
    template: &Env,
    kind: PolicyKind,
    agent: Option<&Hppo>,
    seeds: &[EpisodeSeeds],
    exec: Exec,
) -> Result<Vec<EpisodeMetrics>> {
    if kind == PolicyKind::Hppo && agent.is_none() {
        return Err(Error::Checkpoint("hppo policy needs a trained agent".into()));
    }
    par::map_range_with(exec, seeds.len(), |i| {
        let mut env = template.clone();
        let mut policy = make_policy(kind, agent, &seeds[i])?;
        run_episode(&mut env, policy.as_mut(), &seeds[i])
    })
    .into_iter()
    .collect()
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of paired differences `a - b`.
pub fn paired_diff(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_se(&d)
}
