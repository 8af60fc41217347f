mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use v2i_coop::channel::{
    interference_power, link_rate, realize_channel, step_budget, Allocation, ChannelParams, Gains, ZERO_POWER_DBM,
};
use v2i_coop::scenario::{generate_scenario, ScenarioConfig};

const LEVELS: [f64; 3] = [23.0, 10.5, ZERO_POWER_DBM];

fn gains_strategy(n: usize, k: usize) -> impl Strategy<Value = Gains> {
    prop::collection::vec(1e-14f64..1e-8, n * k).prop_map(move |v| Gains::new(n, k, v))
}

fn alloc_strategy(n: usize, k: usize) -> impl Strategy<Value = Allocation> {
    (
        prop::collection::vec(prop::option::weighted(0.85, 0..k), n),
        prop::collection::vec(0usize..3, n),
    )
        .prop_map(|(rb, lv)| Allocation::new(rb, lv.into_iter().map(|l| LEVELS[l]).collect()))
}

proptest! {
    #[test]
    fn rate_is_zero_exactly_when_silent(g in gains_strategy(4, 2), a in alloc_strategy(4, 2)) {
        let p = ChannelParams::default();
        for m in 0..4 {
            let silent = a.rb[m].is_none() || a.power_dbm[m] <= ZERO_POWER_DBM;
            let r = link_rate(&a, &g, m, &p);
            prop_assert_eq!(r == 0.0, silent, "link {} rate {}", m, r);
            prop_assert!(r >= 0.0);
        }
    }

    #[test]
    fn rate_rises_with_own_gain_and_falls_with_interference(
        g in gains_strategy(4, 2),
        a in alloc_strategy(4, 2),
        m in 0usize..4,
        factor in 1.01f64..10.0,
    ) {
        let p = ChannelParams::default();
        let base = link_rate(&a, &g, m, &p);
        if let (Some(k), true) = (a.rb[m], a.power_dbm[m] > ZERO_POWER_DBM) {
            let mut v = g.as_slice().to_vec();
            v[m * 2 + k] *= factor;
            let stronger = Gains::new(4, 2, v);
            prop_assert!(link_rate(&a, &stronger, m, &p) > base);
        }
        for j in (0..4).filter(|&j| j != m) {
            let mut louder = a.clone();
            louder.power_dbm[j] = 23.0;
            prop_assert!(link_rate(&louder, &g, m, &p) <= base);
            let mut quieter = a.clone();
            quieter.power_dbm[j] = ZERO_POWER_DBM;
            prop_assert!(link_rate(&quieter, &g, m, &p) >= base);
        }
    }

    #[test]
    fn doubling_bandwidth_without_interference(gain in 1e-14f64..1e-8, bw in 1e6f64..1e7) {
        let p1 = ChannelParams { total_bandwidth_hz: bw, ..Default::default() };
        let p2 = ChannelParams { total_bandwidth_hz: 2.0 * bw, ..Default::default() };
        let a = Allocation::new(vec![Some(0)], vec![23.0]);
        let g = Gains::new(1, 2, vec![gain, gain]);
        let snr = a.power_w(0) * gain / p1.noise_power_w();
        let expected = 2.0 * (1.0 + snr / 2.0).log2() / (1.0 + snr).log2();
        let ratio = link_rate(&a, &g, 0, &p2) / link_rate(&a, &g, 0, &p1);
        prop_assert!(common::rel_err(ratio, expected) < 1e-12, "{} vs {}", ratio, expected);
    }

    #[test]
    fn interference_sums_co_channel_links(g in gains_strategy(4, 2), a in alloc_strategy(4, 2), m in 0usize..4, k in 0usize..2) {
        let mut want = 0.0;
        for j in 0..4 {
            if j != m && a.rb[j] == Some(k) {
                want += a.power_w(j) * g.get(j, k);
            }
        }
        prop_assert!(common::rel_err(interference_power(&a, &g, m, k), want) < 1e-12);
    }

    #[test]
    fn budget_is_linear_in_each_rate(
        rates in prop::collection::vec(0.0f64..5e7, 1..8),
        i in 0usize..8,
        scale in 0.0f64..4.0,
        extra in 0.0f64..5e7,
    ) {
        let i = i % rates.len();
        let f = |r: &[f64]| step_budget(r, 1e-3, 4608, 32);
        let mut scaled = rates.clone();
        scaled[i] = scale * rates[i] + extra;
        let mut unit = vec![0.0; rates.len()];
        unit[i] = 1.0;
        let mut zeroed = rates.clone();
        zeroed[i] = 0.0;
        let predicted = f(&zeroed) + (scale * rates[i] + extra) * f(&unit);
        prop_assert!((f(&scaled) - predicted).abs() <= 1e-9 * predicted.abs().max(1.0));
    }
}

#[test]
fn small_scale_fading_has_unit_mean_and_no_substep_memory() {
    let scenario = generate_scenario(&ScenarioConfig { seed: 3, ..Default::default() }).unwrap();
    let params = ChannelParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // 4 links × 2 RBs × 25,000 steps × 5 sub-steps = 10⁶ draws.
    let real = realize_channel(&scenario, &params, 25_000, 5, &mut rng);
    let h = real.h2_samples();
    assert_eq!(h.len(), 1_000_000);
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean |h|² = {mean}");

    // Lag-1 autocorrelation of each (link, RB) series across sub-steps.
    let var = h.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / h.len() as f64;
    let mut num = 0.0;
    let mut pairs = 0usize;
    for t in 0..real.n_steps() {
        for ts in 1..real.n_substeps() {
            for m in 0..real.n_links() {
                for k in 0..real.n_rbs() {
                    num += (real.h2(t, ts, m, k) - mean) * (real.h2(t, ts - 1, m, k) - mean);
                    pairs += 1;
                }
            }
        }
    }
    let rho = num / pairs as f64 / var;
    assert!(rho.abs() < 0.01, "lag-1 autocorrelation {rho}");
}
