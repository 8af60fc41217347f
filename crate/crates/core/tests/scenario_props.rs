use proptest::prelude::*;
use v2i_coop::scenario::{generate_scenario, line_walk, sensing_quality_grid, visibility_grid, ScenarioConfig};

fn config(seed: u64, n_objects: usize, decay: f64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        n_objects,
        sensing_decay: decay,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), n in 0usize..20) {
        let a = generate_scenario(&config(seed, n, 40.0)).unwrap();
        let b = generate_scenario(&config(seed, n, 40.0)).unwrap();
        prop_assert_eq!(&a, &b);
        for agent in 0..a.agents.len() {
            prop_assert_eq!(&a.visibility[agent], &visibility_grid(&b, agent));
            prop_assert_eq!(&a.quality[agent], &sensing_quality_grid(&b, agent));
        }
    }

    #[test]
    fn occluded_cells_are_invisible(seed in any::<u64>(), n in 1usize..20) {
        let s = generate_scenario(&config(seed, n, 40.0)).unwrap();
        let (h, w) = s.shape();
        for agent in 0..s.agents.len() {
            let origin = s.agent_cell(agent);
            for r in 0..h {
                for c in 0..w {
                    let path = line_walk(origin, (r, c));
                    if path.len() < 3 {
                        continue;
                    }
                    let own = s.labels[(r, c)];
                    let blocked = path[1..path.len() - 1]
                        .iter()
                        .any(|&p| s.labels[p].is_some() && s.labels[p] != own);
                    if blocked {
                        prop_assert!(!s.visibility[agent][(r, c)], "agent {agent} sees ({r},{c}) through an object");
                        prop_assert_eq!(s.quality[agent][(r, c)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn quality_decays_along_rays(seed in any::<u64>(), n in 0usize..20, decay in 1.0f64..200.0) {
        let s = generate_scenario(&config(seed, n, decay)).unwrap();
        let (h, w) = s.shape();
        for agent in 0..s.agents.len() {
            let origin = s.agent_cell(agent);
            let q = &s.quality[agent];
            // Every cell on the walk toward a target is at most as far as the target.
            for r in (0..h).step_by(3) {
                for c in (0..w).step_by(3) {
                    if !s.visibility[agent][(r, c)] {
                        continue;
                    }
                    for p in line_walk(origin, (r, c)) {
                        if s.visibility[agent][p] {
                            prop_assert!(q[(r, c)] <= q[p], "farther cell ({r},{c}) beats {p:?}");
                        }
                    }
                }
            }
        }
    }
}
