//! Simulator and hierarchical PPO trainer for RSU-assisted V2I collaborative
//! perception with rate-limited feature sharing.

pub mod agents;
pub mod channel;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod perception;
pub mod runner;
pub mod scenario;
pub mod seeds;
pub mod train;

pub use error::{Error, Result};
