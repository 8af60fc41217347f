//! CSV outputs. Every file starts with one `#` comment line naming the
//! schema and its version, followed by a normal CSV header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::runner::{mean_se, CavTrace, EpisodeMetrics, EpisodeTrace};
use crate::train::{TrainRecord, ValidationPoint};

pub const SCHEMA_VERSION: u32 = 1;

/// One evaluated episode of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    /// Index of the episode's world within its seed split.
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub period_ms: u32,
    pub policy: String,
    pub episode: usize,
    pub mean_return: f64,
    pub sum_rate_mbps: f64,
    #[serde(rename = "L_det")]
    pub l_det: f64,
    #[serde(rename = "L_cls")]
    pub l_cls: f64,
    pub ap50: f64,
    pub ap70: f64,
}

impl MetricsRow {
    pub fn from_metrics(
        run_id: &str,
        seed: u64,
        bandwidth_hz: f64,
        period_ms: u32,
        policy: &str,
        episode: usize,
        m: &EpisodeMetrics,
    ) -> Self {
        Self {
            run_id: run_id.to_string(),
            seed,
            bandwidth_hz,
            period_ms,
            policy: policy.to_string(),
            episode,
            mean_return: m.episode_return,
            sum_rate_mbps: m.sum_rate_mbps,
            l_det: m.l_det,
            l_cls: m.l_cls,
            ap50: m.ap50,
            ap70: m.ap70,
        }
    }
}

/// Mean and standard error per (bandwidth, period, policy) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub bandwidth_hz: f64,
    pub period_ms: u32,
    pub policy: String,
    pub episodes: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub sum_rate_mbps: f64,
    pub se_sum_rate_mbps: f64,
    #[serde(rename = "L_det")]
    pub l_det: f64,
    #[serde(rename = "se_L_det")]
    pub se_l_det: f64,
    #[serde(rename = "L_cls")]
    pub l_cls: f64,
    #[serde(rename = "se_L_cls")]
    pub se_l_cls: f64,
    pub ap50: f64,
    pub se_ap50: f64,
    pub ap70: f64,
    pub se_ap70: f64,
}

/// Groups rows by (bandwidth, period, policy) in first-appearance order.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(u64, u32, &str)> = Vec::new();
    for r in rows {
        let k = (r.bandwidth_hz.to_bits(), r.period_ms, r.policy.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(bw, period, policy)| {
            let g: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.bandwidth_hz.to_bits() == bw && r.period_ms == period && r.policy == policy)
                .collect();
            let col = |f: fn(&MetricsRow) -> f64| mean_se(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (mean_return, se_return) = col(|r| r.mean_return);
            let (sum_rate_mbps, se_sum_rate_mbps) = col(|r| r.sum_rate_mbps);
            let (l_det, se_l_det) = col(|r| r.l_det);
            let (l_cls, se_l_cls) = col(|r| r.l_cls);
            let (ap50, se_ap50) = col(|r| r.ap50);
            let (ap70, se_ap70) = col(|r| r.ap70);
            SummaryRow {
                run_id: g[0].run_id.clone(),
                bandwidth_hz: f64::from_bits(bw),
                period_ms: period,
                policy: policy.to_string(),
                episodes: g.len(),
                mean_return,
                se_return,
                sum_rate_mbps,
                se_sum_rate_mbps,
                l_det,
                se_l_det,
                l_cls,
                se_l_cls,
                ap50,
                se_ap50,
                ap70,
                se_ap70,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub episode: usize,
    pub mean_return: f64,
    pub rb_actor_obj: f64,
    pub rb_critic_loss: f64,
    pub power_actor_obj: f64,
    pub power_critic_loss: f64,
}

impl From<&TrainRecord> for TrainingRow {
    fn from(r: &TrainRecord) -> Self {
        Self {
            episode: r.episode,
            mean_return: r.mean_return,
            rb_actor_obj: r.rb.actor_objective,
            rb_critic_loss: r.rb.critic_loss,
            power_actor_obj: r.power.actor_objective,
            power_critic_loss: r.power.critic_loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub episode: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub ap50: f64,
}

impl From<&ValidationPoint> for ValidationRow {
    fn from(v: &ValidationPoint) -> Self {
        Self {
            episode: v.episode,
            mean_return: v.mean_return,
            se_return: v.se_return,
            ap50: v.mean_ap50,
        }
    }
}

/// Per-step, per-link log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLogRow {
    pub policy: String,
    pub episode: usize,
    pub step: usize,
    pub cav: usize,
    pub rb: Option<usize>,
    pub power_dbm: f64,
    pub rate_bps: f64,
    pub budget: f64,
    pub cells_sent: usize,
    #[serde(rename = "L_det")]
    pub l_det: f64,
    #[serde(rename = "L_cls")]
    pub l_cls: f64,
    pub reward: f64,
}

pub fn episode_log_rows(policy: &str, episode: usize, trace: &EpisodeTrace) -> Vec<EpisodeLogRow> {
    let mut rows = Vec::new();
    for (info, &reward) in trace.steps.iter().zip(&trace.rewards) {
        for m in 0..info.allocation.n_links() {
            rows.push(EpisodeLogRow {
                policy: policy.to_string(),
                episode,
                step: info.step,
                cav: m,
                rb: info.allocation.rb[m],
                power_dbm: info.allocation.power_dbm[m],
                rate_bps: info.mean_rates_bps[m],
                budget: info.budgets[m],
                cells_sent: info.cells_sent[m],
                l_det: info.loss_after.det,
                l_cls: info.loss_after.cls,
                reward,
            });
        }
    }
    rows
}

/// Remaining confidence and rate of one CAV after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRow {
    pub step: usize,
    pub cav_id: usize,
    pub total_confidence: f64,
    pub rate_bps: f64,
}

impl From<&CavTrace> for ConfidenceRow {
    fn from(t: &CavTrace) -> Self {
        Self {
            step: t.step,
            cav_id: t.cav,
            total_confidence: t.total_confidence,
            rate_bps: t.rate_bps,
        }
    }
}

/// A CSV row type with a named, versioned schema.
pub trait Record: Serialize + for<'de> Deserialize<'de> {
    const SCHEMA: &'static str;
    /// Header names, in serialization order.
    const COLUMNS: &'static [&'static str];
}

macro_rules! record {
    ($t:ty, $schema:literal, [$($c:literal),* $(,)?]) => {
        impl Record for $t {
            const SCHEMA: &'static str = $schema;
            const COLUMNS: &'static [&'static str] = &[$($c),*];
        }
    };
}

record!(MetricsRow, "metrics", [
    "run_id", "seed", "bandwidth_hz", "period_ms", "policy", "episode", "mean_return",
    "sum_rate_mbps", "L_det", "L_cls", "ap50", "ap70",
]);
record!(SummaryRow, "summary", [
    "run_id", "bandwidth_hz", "period_ms", "policy", "episodes", "mean_return", "se_return",
    "sum_rate_mbps", "se_sum_rate_mbps", "L_det", "se_L_det", "L_cls", "se_L_cls", "ap50",
    "se_ap50", "ap70", "se_ap70",
]);
record!(TrainingRow, "training", [
    "episode", "mean_return", "rb_actor_obj", "rb_critic_loss", "power_actor_obj", "power_critic_loss",
]);
record!(ValidationRow, "validation", ["episode", "mean_return", "se_return", "ap50"]);
record!(EpisodeLogRow, "episode-log", [
    "policy", "episode", "step", "cav", "rb", "power_dbm", "rate_bps", "budget", "cells_sent",
    "L_det", "L_cls", "reward",
]);
record!(ConfidenceRow, "confidence", ["step", "cav_id", "total_confidence", "rate_bps"]);

fn schema_line<T: Record>() -> String {
    format!("# v2i-coop {} v{SCHEMA_VERSION}", T::SCHEMA)
}

/// Writes the schema comment line, the header, then the rows.
pub fn write_csv<T: Record>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let mut out = BufWriter::new(file);
    write_csv_to(&mut out, rows)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv_to<W: Write, T: Record>(mut out: W, rows: &[T]) -> Result<()> {
    writeln!(out, "{}", schema_line::<T>())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
    w.write_record(T::COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`], checking the schema line.
pub fn read_csv<T: Record>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let expected = schema_line::<T>();
    if first.trim_end() != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected {expected:?}, found {first:?}"),
        });
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}
