//! Confidence-map bookkeeping for collaborative perception.
//!
//! The neural backbone is replaced by a probabilistic surrogate: each agent's
//! confidence map mixes its sensing quality on occupied cells with clutter on
//! free cells, and the RSU fuses received CAV cells by noisy-OR. Detection
//! quality is scored by a surrogate detection loss and by grid-IoU average
//! precision over connected components of the fused map.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::grid::Grid;
use crate::scenario::Scenario;

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` inside the classification loss.
pub const BCE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap(pub Grid<f64>);

impl ConfidenceMap {
    pub fn new(values: Grid<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask(pub Grid<bool>);

impl SelectionMask {
    pub fn empty(h: usize, w: usize) -> Self {
        Self(Grid::filled(h, w, false))
    }

    pub fn count(&self) -> usize {
        self.0.count_ones()
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.0
    }
}

/// `C = q·o + ν·(1 - o)`.
pub fn local_confidence(
    quality: &Grid<f64>,
    occupancy: &Grid<bool>,
    clutter: &Grid<f64>,
) -> ConfidenceMap {
    assert!(quality.same_shape(occupancy) && quality.same_shape(clutter));
    let data = quality
        .iter()
        .zip(occupancy.iter())
        .zip(clutter.iter())
        .map(|((&q, &o), &nu)| if o { q } else { nu })
        .collect();
    ConfidenceMap(Grid::from_vec(quality.height(), quality.width(), data))
}

/// Perception gain `remaining ⊙ (1 - rsu_conf)`.
pub fn gain_map(remaining: &ConfidenceMap, rsu_conf: &ConfidenceMap) -> Grid<f64> {
    remaining.0.zip_map(&rsu_conf.0, |&c, &r| c * (1.0 - r))
}

pub fn feature_value(gain: &Grid<f64>) -> f64 {
    gain.sum()
}

/// Marks the `⌊budget⌋` cells of largest strictly positive gain.
///
/// Ties go to the earlier cell in row-major order. Zero-gain cells are never
/// selected, so fewer cells than the budget may be marked.
pub fn select_top(gain: &Grid<f64>, budget: f64) -> SelectionMask {
    let (h, w) = gain.shape();
    let mut mask = SelectionMask::empty(h, w);
    let k = if budget.is_finite() && budget > 0.0 {
        budget.floor() as usize
    } else if budget == f64::INFINITY {
        usize::MAX
    } else {
        0
    };
    if k == 0 {
        return mask;
    }
    let mut positive: Vec<(usize, f64)> = gain
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < positive.len() {
        positive.select_nth_unstable_by(k - 1, order);
        positive.truncate(k);
    }
    let cells = mask.0.as_mut_slice();
    for (i, _) in positive {
        cells[i] = true;
    }
    mask
}

/// Per-period confidence state shared by the RSU and the CAVs.
///
/// CAV `m` here is link `m`, i.e. scenario agent `m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceLedger {
    pub rsu_local: ConfidenceMap,
    pub base_conf: Vec<ConfidenceMap>,
    pub remaining_conf: Vec<ConfidenceMap>,
    /// Cells each CAV has uploaded this period; also the RSU's received coverage.
    pub cum_mask: Vec<Grid<bool>>,
    pub rsu_conf: ConfidenceMap,
    pub request: Grid<f64>,
}

impl ConfidenceLedger {
    pub fn new(rsu_local: ConfidenceMap, base_conf: Vec<ConfidenceMap>) -> Self {
        let (h, w) = rsu_local.0.shape();
        let request = rsu_local.0.map(|&c| 1.0 - c);
        Self {
            remaining_conf: base_conf.clone(),
            cum_mask: vec![Grid::filled(h, w, false); base_conf.len()],
            rsu_conf: rsu_local.clone(),
            rsu_local,
            base_conf,
            request,
        }
    }

    /// Builds the period's starting ledger from every agent's local confidence.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let maps: Vec<ConfidenceMap> = (0..scenario.agents.len())
            .map(|a| {
                local_confidence(
                    &scenario.quality[a],
                    &scenario.occupancy,
                    &scenario.clutter[a],
                )
            })
            .collect();
        let mut it = maps.into_iter();
        let rsu = it.next().expect("scenario has an RSU");
        Self::new(rsu, it.collect())
    }

    pub fn n_cavs(&self) -> usize {
        self.base_conf.len()
    }

    pub fn received(&self, cav: usize) -> &Grid<bool> {
        &self.cum_mask[cav]
    }

    pub fn gain(&self, cav: usize) -> Grid<f64> {
        self.remaining_conf[cav]
            .0
            .zip_map(&self.request, |&c, &r| c * r)
    }

    pub fn feature_value(&self, cav: usize) -> f64 {
        self.remaining_conf[cav]
            .0
            .iter()
            .zip(self.request.iter())
            .map(|(&c, &r)| c * r)
            .sum()
    }

    /// Cells with strictly positive remaining confidence.
    pub fn remaining_count(&self, cav: usize) -> usize {
        self.remaining_conf[cav].0.iter().filter(|&&v| v > 0.0).count()
    }

    /// Records an upload. A cell may be uploaded at most once per period.
    pub fn commit(&mut self, cav: usize, mask: &SelectionMask) -> Result<()> {
        let cum = &self.cum_mask[cav];
        if !mask.0.same_shape(cum) {
            return Err(contract("mask shape differs from the ledger"));
        }
        if mask.0.iter().zip(cum.iter()).any(|(&a, &b)| a && b) {
            return Err(contract(format!("CAV {cav} re-sends an already uploaded cell")));
        }
        let remaining = self.remaining_conf[cav].0.as_mut_slice();
        let cum = self.cum_mask[cav].as_mut_slice();
        for (i, &sel) in mask.0.iter().enumerate() {
            if sel {
                cum[i] = true;
                remaining[i] = 0.0;
            }
        }
        Ok(())
    }

    /// Replaces the RSU confidence by the fusion of everything received so far.
    pub fn apply_fusion(&mut self) -> &ConfidenceMap {
        let fused = fuse_confidence(self);
        self.request = fused.0.map(|&c| 1.0 - c);
        self.rsu_conf = fused;
        &self.rsu_conf
    }
}

/// Noisy-OR of the RSU's own map with every received CAV cell.
pub fn fuse_confidence(ledger: &ConfidenceLedger) -> ConfidenceMap {
    let mut miss: Vec<f64> = ledger.rsu_local.0.iter().map(|&c| 1.0 - c).collect();
    let mut touched = vec![false; miss.len()];
    for (conf, recv) in ledger.base_conf.iter().zip(&ledger.cum_mask) {
        for (i, (&c, &r)) in conf.0.iter().zip(recv.iter()).enumerate() {
            if r {
                miss[i] *= 1.0 - c;
                touched[i] = true;
            }
        }
    }
    // Cells with nothing received keep the RSU's value bit for bit; the max
    // guards the noisy-OR against rounding below the RSU's own value.
    let (h, w) = ledger.rsu_local.0.shape();
    let fused = ledger
        .rsu_local
        .0
        .iter()
        .zip(miss)
        .zip(touched)
        .map(|((&c, m), t)| if t { (1.0 - m).max(c) } else { c })
        .collect();
    ConfidenceMap(Grid::from_vec(h, w, fused))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub cls: f64,
    pub loc: f64,
    pub dir: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            cls: 1.0,
            loc: 2.0,
            dir: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionLoss {
    pub det: f64,
    pub cls: f64,
    pub loc: f64,
    pub dir: f64,
}

/// Mean fused confidence over each object's footprint.
pub fn object_scores(fused: &ConfidenceMap, scenario: &Scenario) -> Vec<f64> {
    scenario
        .objects
        .iter()
        .map(|o| o.footprint.iter().map(|&c| fused.0[c]).sum::<f64>() / o.footprint.len() as f64)
        .collect()
}

pub fn detection_loss(
    fused: &ConfidenceMap,
    scenario: &Scenario,
    weights: &LossWeights,
) -> DetectionLoss {
    assert!(fused.0.same_shape(&scenario.occupancy));
    let n = fused.0.len() as f64;
    let cls = fused
        .0
        .iter()
        .zip(scenario.occupancy.iter())
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n;
    let scores = object_scores(fused, scenario);
    let (loc, dir) = if scores.is_empty() {
        (0.0, 0.0)
    } else {
        let miss = scores.iter().map(|s| 1.0 - s).sum::<f64>() / scores.len() as f64;
        (miss * scenario.config.cell_size, miss)
    };
    DetectionLoss {
        det: weights.cls * cls + weights.loc * loc + weights.dir * dir,
        cls,
        loc,
        dir,
    }
}

/// A pseudo-detection: one 4-connected component of above-threshold cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub cells: Vec<usize>,
    pub score: f64,
}

/// Connected components of `fused ≥ threshold`, in row-major order of their first cell.
pub fn pseudo_detections(fused: &ConfidenceMap, threshold: f64) -> Vec<Detection> {
    let g = &fused.0;
    let (h, w) = g.shape();
    let mut seen = vec![false; h * w];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if seen[start] || g.as_slice()[start] < threshold {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut cells = Vec::new();
        while let Some(i) = queue.pop_front() {
            cells.push(i);
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if !seen[j] && g.as_slice()[j] >= threshold {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        cells.sort_unstable();
        let score = cells.iter().map(|&i| g.as_slice()[i]).sum::<f64>() / cells.len() as f64;
        out.push(Detection { cells, score });
    }
    out
}

/// All-point interpolated area under a precision-recall curve built from
/// detections already sorted by descending score.
pub fn interpolated_ap(is_tp: &[bool], n_ground_truth: usize) -> f64 {
    if n_ground_truth == 0 {
        return if is_tp.is_empty() { 1.0 } else { 0.0 };
    }
    let mut recall = Vec::with_capacity(is_tp.len());
    let mut precision = Vec::with_capacity(is_tp.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &hit in is_tp {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / n_ground_truth as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.into_iter().zip(precision) {
        if r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = r;
        }
    }
    ap
}

/// Grid-IoU average precision of the fused map against the object footprints.
pub fn average_precision(
    fused: &ConfidenceMap,
    scenario: &Scenario,
    conf_thresh: f64,
    iou_thresh: f64,
) -> f64 {
    average_precision_multi(fused, scenario, conf_thresh, &[iou_thresh])[0]
}

/// Same as [`average_precision`] for several IoU thresholds at once.
pub fn average_precision_multi(
    fused: &ConfidenceMap,
    scenario: &Scenario,
    conf_thresh: f64,
    iou_thresholds: &[f64],
) -> Vec<f64> {
    let mut dets = pseudo_detections(fused, conf_thresh);
    // Stable: equal scores keep row-major discovery order.
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    let n_gt = scenario.objects.len();
    let gt_sizes: Vec<usize> = scenario.objects.iter().map(|o| o.footprint.len()).collect();
    let labels = scenario.labels.as_slice();
    // IoU of each detection with each ground truth.
    let ious: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| {
            let mut inter = vec![0usize; n_gt];
            for &i in &d.cells {
                if let Some(id) = labels[i] {
                    inter[id as usize] += 1;
                }
            }
            inter
                .iter()
                .zip(&gt_sizes)
                .map(|(&n, &g)| {
                    if n == 0 {
                        0.0
                    } else {
                        n as f64 / (d.cells.len() + g - n) as f64
                    }
                })
                .collect()
        })
        .collect();
    iou_thresholds
        .iter()
        .map(|&thr| {
            let mut matched = vec![false; n_gt];
            let hits: Vec<bool> = ious
                .iter()
                .map(|row| {
                    let mut best: Option<usize> = None;
                    for (j, &iou) in row.iter().enumerate() {
                        if !matched[j] && iou >= thr && best.is_none_or(|b| iou > row[b]) {
                            best = Some(j);
                        }
                    }
                    if let Some(j) = best {
                        matched[j] = true;
                        true
                    } else {
                        false
                    }
                })
                .collect();
            interpolated_ap(&hits, n_gt)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub fused_conf: ConfidenceMap,
    pub loss: DetectionLoss,
    pub ap50: f64,
    pub ap70: f64,
    pub per_object_scores: Vec<f64>,
}

pub fn detection_report(
    fused: &ConfidenceMap,
    scenario: &Scenario,
    weights: &LossWeights,
    conf_thresh: f64,
) -> DetectionReport {
    let ap = average_precision_multi(fused, scenario, conf_thresh, &[0.5, 0.7]);
    DetectionReport {
        fused_conf: fused.clone(),
        loss: detection_loss(fused, scenario, weights),
        ap50: ap[0],
        ap70: ap[1],
        per_object_scores: object_scores(fused, scenario),
    }
}
