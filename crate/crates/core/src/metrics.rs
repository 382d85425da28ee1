//! Layout quality: distance preservation, ordering stability and how
//! faithfully rectangle overlaps reproduce region intersections.

use crate::dataset::{MovingRegionDataset, Timestep};
use crate::geometry::{min_distance, ConvexPolygon};
use crate::layout::{Layout, OVERLAP_TOL};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

pub const DEFAULT_SAMPLE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Largest number of observation pairs used by the stress metric.
    pub sample_budget: usize,
    pub seed: u64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub stress: f64,
    pub crossing_metric: f64,
    pub jump_distance: f64,
    /// Mean `I / w` over intersecting pairs; absent without any.
    pub intersection_area_ratio_error: Option<f64>,
    /// Share of represented overlaps that are spurious; absent without any overlap.
    pub spurious_intersection_error: Option<f64>,
    /// Seconds per timestep when the layout recorded them.
    pub per_timestep_runtimes: Vec<f64>,
    pub stress_pairs: usize,
    pub stress_sampled: bool,
}

pub fn compute_metrics(dataset: &MovingRegionDataset, layout: &Layout) -> MetricsReport {
    compute_metrics_with(dataset, layout, &MetricsOptions::default())
}

pub fn compute_metrics_with(dataset: &MovingRegionDataset, layout: &Layout, options: &MetricsOptions) -> MetricsReport {
    let stress = stress(dataset, layout, options.sample_budget, options.seed);
    MetricsReport {
        stress: stress.value,
        crossing_metric: crossing_metric(layout),
        jump_distance: jump_distance(layout),
        intersection_area_ratio_error: intersection_area_ratio_error(layout),
        spurious_intersection_error: spurious_intersection_error(layout),
        per_timestep_runtimes: layout.runtimes.clone().unwrap_or_default(),
        stress_pairs: stress.pairs,
        stress_sampled: stress.sampled,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressResult {
    pub value: f64,
    pub pairs: usize,
    pub sampled: bool,
}

/// Plot-space box of a rectangle: `[t ± fill/2] × [bottom, top]`.
#[derive(Debug, Clone, Copy)]
struct PlotBox {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn box_distance(a: &PlotBox, b: &PlotBox) -> f64 {
    let dx = (a.x0 - b.x1).max(b.x0 - a.x1).max(0.0);
    let dy = (a.y0 - b.y1).max(b.y0 - a.y1).max(0.0);
    dx.hypot(dy)
}

/// `√(‖D − D̂‖² / ‖D‖²)` with both matrices scaled by their maxima. `D` holds
/// region distances between all observations (time ignored), `D̂` distances
/// between the plotted rectangles. Pairs are sampled uniformly with
/// replacement when there are more than `sample_budget`.
pub fn stress(dataset: &MovingRegionDataset, layout: &Layout, sample_budget: usize, seed: u64) -> StressResult {
    let fill = layout.config.column_fill;
    let mut regions: Vec<ConvexPolygon> = Vec::new();
    let mut boxes: Vec<PlotBox> = Vec::new();
    for rect in &layout.rects {
        let Some(obs) = dataset.object(&rect.object_id).and_then(|o| o.observations.get(&rect.timestep)) else {
            continue;
        };
        regions.push(obs.region());
        let t = rect.timestep as f64;
        boxes.push(PlotBox {
            x0: t - fill / 2.0,
            x1: t + fill / 2.0,
            y0: rect.bottom(),
            y1: rect.top(),
        });
    }
    let n = regions.len();
    let total = n * n.saturating_sub(1) / 2;
    if total == 0 {
        return StressResult {
            value: 0.0,
            pairs: 0,
            sampled: false,
        };
    }

    let sampled = total > sample_budget;
    let pairs: Vec<(usize, usize)> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sample_budget)
            .map(|_| loop {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    break (a.min(b), a.max(b));
                }
            })
            .collect()
    } else {
        (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect()
    };

    let distances: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| (min_distance(&regions[a], &regions[b]), box_distance(&boxes[a], &boxes[b])))
        .collect();
    let d_max = distances.iter().map(|d| d.0).fold(0.0, f64::max);
    let p_max = distances.iter().map(|d| d.1).fold(0.0, f64::max);
    let scale = |v: f64, m: f64| if m > 0.0 { v / m } else { 0.0 };
    let (mut num, mut den) = (0.0, 0.0);
    for &(d, p) in &distances {
        let (d, p) = (scale(d, d_max), scale(p, p_max));
        num += (d - p).powi(2);
        den += d * d;
    }
    let value = if den > 0.0 {
        (num / den).sqrt()
    } else if num > 0.0 {
        1.0
    } else {
        0.0
    };
    StressResult {
        value,
        pairs: distances.len(),
        sampled,
    }
}

/// Per timestep, object id → layout center.
fn columns(layout: &Layout) -> BTreeMap<Timestep, HashMap<&str, f64>> {
    let mut cols: BTreeMap<Timestep, HashMap<&str, f64>> = layout.timesteps.iter().map(|&t| (t, HashMap::new())).collect();
    for r in &layout.rects {
        cols.entry(r.timestep).or_default().insert(r.object_id.as_str(), r.y_center);
    }
    cols
}

/// Ranks (1-based, bottom to top) of the given objects within one column.
fn ranks<'a>(ids: &[&'a str], column: &HashMap<&str, f64>) -> HashMap<&'a str, usize> {
    let mut sorted: Vec<&str> = ids.to_vec();
    sorted.sort_by(|a, b| column[a].total_cmp(&column[b]).then_with(|| a.cmp(b)));
    sorted.into_iter().enumerate().map(|(r, id)| (id, r + 1)).collect()
}

fn consecutive_average(layout: &Layout, per_pair: impl Fn(&HashMap<&str, f64>, &HashMap<&str, f64>, &[&str]) -> f64) -> f64 {
    let cols = columns(layout);
    let cols: Vec<&HashMap<&str, f64>> = cols.values().collect();
    if cols.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for w in cols.windows(2) {
        let mut common: Vec<&str> = w[0].keys().filter(|id| w[1].contains_key(*id)).copied().collect();
        common.sort_unstable();
        sum += per_pair(w[0], w[1], &common);
    }
    sum / (cols.len() - 1) as f64
}

/// Mean number of object pairs whose vertical order flips between
/// consecutive timesteps.
pub fn crossing_metric(layout: &Layout) -> f64 {
    consecutive_average(layout, |before, after, common| {
        let mut swaps = 0usize;
        for (x, a) in common.iter().enumerate() {
            for b in &common[x + 1..] {
                let d0 = before[a] - before[b];
                let d1 = after[a] - after[b];
                if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
                    swaps += 1;
                }
            }
        }
        swaps as f64
    })
}

/// Mean total rank displacement between consecutive timesteps.
pub fn jump_distance(layout: &Layout) -> f64 {
    consecutive_average(layout, |before, after, common| {
        let r0 = ranks(common, before);
        let r1 = ranks(common, after);
        common.iter().map(|id| r0[id].abs_diff(r1[id]) as f64).sum()
    })
}

pub fn intersection_area_ratio_error(layout: &Layout) -> Option<f64> {
    let ratios: Vec<f64> = layout
        .slices
        .iter()
        .flat_map(|s| s.pairs.iter())
        .filter(|p| p.is_a())
        .map(|p| p.achieved / p.w)
        .collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}

pub fn spurious_intersection_error(layout: &Layout) -> Option<f64> {
    let (mut spurious, mut overlaps) = (0usize, 0usize);
    for pair in layout.slices.iter().flat_map(|s| s.pairs.iter()) {
        if pair.achieved > OVERLAP_TOL {
            overlaps += 1;
            if !pair.is_a() {
                spurious += 1;
            }
        }
    }
    (overlaps > 0).then(|| spurious as f64 / overlaps as f64)
}
