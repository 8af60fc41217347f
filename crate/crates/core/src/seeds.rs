//! Seed bookkeeping for the train / validation / test scenario sets.
//!
//! Every episode is identified by a pair of seeds: one for the world and one
//! for the fading realization. Seeds are hashed from a base seed, a split tag
//! and an index, so the three sets never overlap and any episode can be
//! replayed on its own.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    fn tag(self) -> u64 {
        match self {
            Split::Train => 0x7472_6169_6e00_0001,
            Split::Validation => 0x7661_6c69_6400_0002,
            Split::Test => 0x7465_7374_0000_0003,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpisodeSeeds {
    /// Position within its split; reported as the `seed` column of metrics.
    pub index: u64,
    pub scenario: u64,
    pub channel: u64,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(base), |acc, &p| mix64(acc ^ p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSets {
    pub base_seed: u64,
    /// Distinct training worlds; training episodes cycle through them.
    pub train_scenarios: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SeedSets {
    fn default() -> Self {
        Self {
            base_seed: 0,
            train_scenarios: 2578,
            validation: 15,
            test: 300,
        }
    }
}

impl SeedSets {
    /// Seeds of one evaluation episode. Channel draws are tied to the world,
    /// so every policy sees the same fading on the same index.
    pub fn eval(&self, split: Split, index: u64) -> EpisodeSeeds {
        EpisodeSeeds {
            index,
            scenario: derive_seed(self.base_seed, &[split.tag(), index, 0]),
            channel: derive_seed(self.base_seed, &[split.tag(), index, 1]),
        }
    }

    /// Training episode `episode`: worlds cycle, fading is fresh every episode.
    pub fn train(&self, episode: u64) -> EpisodeSeeds {
        let world = episode % self.train_scenarios.max(1) as u64;
        EpisodeSeeds {
            index: episode,
            scenario: derive_seed(self.base_seed, &[Split::Train.tag(), world, 0]),
            channel: derive_seed(self.base_seed, &[Split::Train.tag(), episode, 2]),
        }
    }

    pub fn validation_set(&self) -> Vec<EpisodeSeeds> {
        self.first(Split::Validation, self.validation)
    }

    pub fn test_set(&self) -> Vec<EpisodeSeeds> {
        self.first(Split::Test, self.test)
    }

    pub fn first(&self, split: Split, n: usize) -> Vec<EpisodeSeeds> {
        (0..n as u64).map(|i| self.eval(split, i)).collect()
    }
}
