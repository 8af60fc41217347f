use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, DecisionContext, Policy};
use crate::channel::{sum_rate, Allocation, ChannelParams, Gains};
use crate::perception::ConfidenceLedger;

/// Independent uniform RB and power level per link.
pub fn act_random<R: Rng + ?Sized>(space: ActionSpace, params: &ChannelParams, rng: &mut R) -> Allocation {
    let mut rbs = Vec::with_capacity(space.n_links);
    let mut levels = Vec::with_capacity(space.n_links);
    for _ in 0..space.n_links {
        rbs.push(rng.random_range(0..space.n_rbs));
        levels.push(rng.random_range(0..space.n_levels));
    }
    Allocation::from_levels(&rbs, &levels, params)
}

/// Exhaustive search over every joint RB and power assignment for the
/// largest sum rate on the given gains. Ties keep the lowest joint index
/// (`rb_index · L^M + power_index`).
pub fn act_max_rate(space: ActionSpace, gains: &Gains, params: &ChannelParams) -> Allocation {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for rb in 0..space.n_rb_actions() {
        for p in 0..space.n_power_actions() {
            let alloc = space.allocation(rb, p, params);
            let r = sum_rate(&alloc, gains, params);
            if r > best.0 {
                best = (r, rb, p);
            }
        }
    }
    space.allocation(best.1, best.2, params)
}

/// The two CAVs with the most cells of positive remaining confidence get RB 0
/// and RB 1 at maximum power; the rest stay silent. Ties favor lower CAV indices.
pub fn act_max_features(space: ActionSpace, ledger: &ConfidenceLedger, params: &ChannelParams) -> Allocation {
    assert!(space.n_rbs >= 2, "max-features needs at least two RBs");
    let mut order: Vec<(usize, usize)> = (0..space.n_links)
        .map(|m| (m, ledger.remaining_count(m)))
        .collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let silent = params.min_power_level();
    let mut rbs = vec![0; space.n_links];
    let mut levels = vec![silent; space.n_links];
    for (rank, &(m, _)) in order.iter().take(2).enumerate() {
        rbs[m] = rank;
        levels[m] = params.max_power_level();
    }
    Allocation::from_levels(&rbs, &levels, params)
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn allocate(&mut self, ctx: &DecisionContext<'_>) -> Allocation {
        act_random(ctx.space, ctx.params, &mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaxRate;

impl Policy for MaxRate {
    fn allocate(&mut self, ctx: &DecisionContext<'_>) -> Allocation {
        act_max_rate(ctx.space, ctx.gains, ctx.params)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaxFeatures;

impl Policy for MaxFeatures {
    fn allocate(&mut self, ctx: &DecisionContext<'_>) -> Allocation {
        act_max_features(ctx.space, ctx.ledger, ctx.params)
    }
}
