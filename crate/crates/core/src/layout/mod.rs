//! Ribbon layout: area-scaled rectangles per timestep, placed by one MIQP
//! per intersection group, then packed and linked across timesteps.

mod crossings;
mod pack;
mod problem;

pub use crossings::flag_spurious_crossings;
pub use pack::{pack_groups, stacking_order, GroupExtent};
pub use problem::{build_group_problem, partition_groups, GroupPair, GroupProblem, GroupWeights, PairVars};

use crate::dataset::{MovingRegionDataset, Timestep};
use crate::geometry::{intersection_area, ConvexPolygon};
use crate::miqp::{self, BranchOptions, MiqpSolution, SolveStatus, SolverError};
use crate::projection::{project, ProjectionConfig, ProjectionError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Overlap length above which two rectangles count as intersecting.
pub const OVERLAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Fraction of a column occupied by the rectangles.
    pub column_fill: f64,
    pub max_group_binaries: usize,
    /// Box on every layout position; keeps the big-M constants valid.
    pub y_bounds: [f64; 2],
    /// Branch-and-bound node budget per group.
    pub max_nodes: usize,
    pub projection: ProjectionConfig,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            column_fill: 0.6,
            max_group_binaries: 30,
            y_bounds: [-1.0, 2.0],
            max_nodes: 50_000,
            projection: ProjectionConfig::default(),
        }
    }
}

impl LayoutConfig {
    pub fn check(&self) -> Result<(), LayoutError> {
        let bad = |m: String| Err(LayoutError::InvalidConfig(m));
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be positive, got {}", self.lambda1));
        }
        if !(self.lambda2 > 0.0 && self.lambda2.is_finite()) {
            return bad(format!("lambda2 must be positive, got {}", self.lambda2));
        }
        if !(self.column_fill > 0.0 && self.column_fill <= 1.0) {
            return bad(format!("column_fill must be in (0, 1], got {}", self.column_fill));
        }
        let [lo, hi] = self.y_bounds;
        if !(lo <= 0.0 && hi >= 1.0 && lo.is_finite() && hi.is_finite()) {
            return bad("y_bounds must contain [0, 1]".into());
        }
        if self.max_nodes == 0 {
            return bad("max_nodes must be positive".into());
        }
        self.projection.check()?;
        Ok(())
    }

    fn weights(&self) -> GroupWeights {
        GroupWeights {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            y_bounds: self.y_bounds,
        }
    }
}

/// Knobs that change how a layout is computed but not what it contains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionOptions {
    /// Worker threads for the per-timestep solves; `None` uses all cores.
    pub jobs: Option<usize>,
    /// Keep per-timestep wall-clock times in [`Layout::runtimes`].
    pub record_timings: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("invalid layout config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("group needs {binaries} binaries, above the limit of {limit}")]
    GroupTooLarge { binaries: usize, limit: usize },
    #[error("solver failed at timestep {timestep}: {source}")]
    Solver { timestep: Timestep, source: SolverError },
    #[error("{} timesteps failed: {}", .0.len(), describe_failures(.0))]
    Timesteps(Vec<LayoutError>),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

fn describe_failures(errors: &[LayoutError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonRect {
    pub object_id: String,
    pub timestep: Timestep,
    pub y_center: f64,
    pub height: f64,
    pub y_prime: f64,
}

impl RibbonRect {
    pub fn bottom(&self) -> f64 {
        self.y_center - self.height / 2.0
    }

    pub fn top(&self) -> f64 {
        self.y_center + self.height / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonLink {
    pub object_id: String,
    pub from: Timestep,
    pub to: Timestep,
    pub spurious_crossings: Vec<String>,
}

impl RibbonLink {
    pub fn is_spurious(&self) -> bool {
        !self.spurious_crossings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceStatus {
    Optimal,
    /// Node budget ran out; best incumbent kept.
    IterationLimit,
    /// Oversized group solved by relaxation and rounding.
    Heuristic,
}

/// Outcome for one pair of objects that share a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: String,
    pub j: String,
    /// Scaled 2D intersection area.
    pub w: f64,
    /// Achieved vertical overlap of the two rectangles.
    pub achieved: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<u8>,
    /// One rectangle contains the other, so the linear surrogate overstates the overlap.
    #[serde(default)]
    pub contained: bool,
}

impl PairRecord {
    pub fn is_a(&self) -> bool {
        self.k.is_some()
    }

    pub fn is_spurious(&self) -> bool {
        self.c == Some(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub members: Vec<String>,
    pub status: SliceStatus,
    pub binaries: usize,
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<f64>,
    /// Displacement of the members from `y′`, packing shift included.
    pub f3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSliceSolution {
    pub timestep: Timestep,
    pub groups: Vec<GroupSummary>,
    pub pairs: Vec<PairRecord>,
    /// `Σk / |A|` over every A-pair of the timestep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    /// `Σc / |B|` over every within-group B-pair of the timestep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<f64>,
    pub f3: f64,
    /// Mean of the per-group `F1`, over groups with A-pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_group_mean: Option<f64>,
    /// Mean of the per-group `F2`, over groups with B-pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2_group_mean: Option<f64>,
    pub spurious_count: usize,
    pub status: SliceStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub timesteps: Vec<Timestep>,
    pub rects: Vec<RibbonRect>,
    pub links: Vec<RibbonLink>,
    pub slices: Vec<TimeSliceSolution>,
    pub area_scale: f64,
    pub config: LayoutConfig,
    /// Seconds spent on each timestep, in `timesteps` order, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<Vec<f64>>,
}

impl Layout {
    pub fn rects_at(&self, t: Timestep) -> impl Iterator<Item = &RibbonRect> {
        self.rects.iter().filter(move |r| r.timestep == t)
    }

    pub fn rect(&self, object_id: &str, t: Timestep) -> Option<&RibbonRect> {
        self.rects.iter().find(|r| r.timestep == t && r.object_id == object_id)
    }

    pub fn slice(&self, t: Timestep) -> Option<&TimeSliceSolution> {
        self.slices.iter().find(|s| s.timestep == t)
    }

    /// Lowest bottom and highest top over all rectangles.
    pub fn y_range(&self) -> Option<(f64, f64)> {
        if self.rects.is_empty() {
            return None;
        }
        let lo = self.rects.iter().map(RibbonRect::bottom).fold(f64::INFINITY, f64::min);
        let hi = self.rects.iter().map(RibbonRect::top).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

/// Rectangle heights `a / A_M` keyed like the dataset, plus `A_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledHeights {
    pub heights: Vec<BTreeMap<Timestep, f64>>,
    pub area_scale: f64,
}

pub fn scale_heights(dataset: &MovingRegionDataset) -> ScaledHeights {
    let mut totals: BTreeMap<Timestep, f64> = BTreeMap::new();
    for (_, t, obs) in dataset.observations() {
        *totals.entry(t).or_default() += obs.area();
    }
    let area_scale = totals.values().copied().fold(0.0, f64::max);
    let heights = dataset
        .objects
        .iter()
        .map(|o| o.observations.iter().map(|(&t, obs)| (t, obs.area() / area_scale)).collect())
        .collect();
    ScaledHeights { heights, area_scale }
}

/// Everything [`optimize_timestep`] needs about one column, in local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepInput {
    pub timestep: Timestep,
    pub ids: Vec<String>,
    pub y_prime: Vec<f64>,
    pub heights: Vec<f64>,
    /// Symmetric scaled intersection areas; zero on the diagonal.
    pub w: Vec<Vec<f64>>,
}

/// Vertical overlap of two rectangles given by centers and heights.
pub fn overlap(y_i: f64, h_i: f64, y_j: f64, h_j: f64) -> f64 {
    let top = (y_i + h_i / 2.0).min(y_j + h_j / 2.0);
    let bottom = (y_i - h_i / 2.0).max(y_j - h_j / 2.0);
    (top - bottom).max(0.0)
}

/// Solves one column and returns its summary plus the final centers.
pub fn optimize_timestep(input: &TimestepInput, config: &LayoutConfig) -> Result<(TimeSliceSolution, Vec<f64>), LayoutError> {
    let n = input.ids.len();
    let t = input.timestep;
    let groups = partition_groups(&input.w);
    let mut y = input.y_prime.clone();
    let mut statuses = Vec::with_capacity(groups.len());

    for members in &groups {
        if members.len() < 2 {
            statuses.push((SliceStatus::Optimal, 0, 0));
            continue;
        }
        let yp: Vec<f64> = members.iter().map(|&m| input.y_prime[m]).collect();
        let h: Vec<f64> = members.iter().map(|&m| input.heights[m]).collect();
        let w: Vec<Vec<f64>> = members.iter().map(|&a| members.iter().map(|&b| input.w[a][b]).collect()).collect();
        let gp = problem::assemble(&yp, &h, &w, config.weights());
        let binaries = gp.problem.num_binary;
        let (values, status, nodes) = if binaries <= config.max_group_binaries {
            let options = BranchOptions {
                max_nodes: config.max_nodes,
                ..Default::default()
            };
            let sol = miqp::solve_with(&gp.problem, &options).map_err(|source| LayoutError::Solver { timestep: t, source })?;
            match sol.status {
                SolveStatus::Optimal => (sol.values, SliceStatus::Optimal, sol.nodes_explored),
                SolveStatus::IterationLimit if !sol.values.is_empty() => {
                    (sol.values, SliceStatus::IterationLimit, sol.nodes_explored)
                }
                _ => {
                    let values = round_relaxation(&gp, t)?;
                    (values, SliceStatus::Heuristic, sol.nodes_explored)
                }
            }
        } else {
            (round_relaxation(&gp, t)?, SliceStatus::Heuristic, 0)
        };
        for (&m, &v) in members.iter().zip(gp.positions(&values)) {
            y[m] = v;
        }
        statuses.push((status, binaries, nodes));
    }

    // rigid shifts so that groups never overlap
    if groups.len() > 1 {
        let extents: Vec<GroupExtent> = groups
            .iter()
            .map(|members| {
                let centers: Vec<f64> = members.iter().map(|&m| y[m]).collect();
                let h: Vec<f64> = members.iter().map(|&m| input.heights[m]).collect();
                let key = members.iter().map(|&m| input.ids[m].as_str()).min().unwrap_or_default().to_string();
                GroupExtent::of(&centers, &h, key)
            })
            .collect();
        let packed = pack_groups(&extents);
        for ((members, extent), center) in groups.iter().zip(&extents).zip(packed) {
            let shift = center - extent.mean;
            for &m in members {
                y[m] += shift;
            }
        }
    }

    let mut pairs = Vec::new();
    let mut summaries = Vec::with_capacity(groups.len());
    let (mut k_sum, mut a_count, mut c_sum, mut b_count) = (0.0, 0usize, 0usize, 0usize);
    let (mut f1_groups, mut f2_groups) = (Vec::new(), Vec::new());
    for (members, &(status, binaries, nodes)) in groups.iter().zip(&statuses) {
        let (mut gk, mut ga, mut gc, mut gb) = (0.0, 0usize, 0usize, 0usize);
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let (hi, hj, wij) = (input.heights[i], input.heights[j], input.w[i][j]);
                let achieved = overlap(y[i], hi, y[j], hj);
                let surrogate = (hi + hj) / 2.0 - (y[i] - y[j]).abs();
                let contained = achieved > OVERLAP_TOL && surrogate > achieved + 1e-12;
                let (k, c) = if wij > 0.0 {
                    // the smallest k the constraints admit at these positions
                    let k = (surrogate / wij).clamp(1.0, ((hi + hj) / 2.0 / wij).max(1.0));
                    gk += k;
                    ga += 1;
                    (Some(k), None)
                } else {
                    let c = u8::from(achieved > OVERLAP_TOL);
                    gc += c as usize;
                    gb += 1;
                    (None, Some(c))
                };
                pairs.push(PairRecord {
                    i: input.ids[i].clone(),
                    j: input.ids[j].clone(),
                    w: wij,
                    achieved,
                    k,
                    c,
                    contained,
                });
            }
        }
        let f1 = (ga > 0).then(|| gk / ga as f64);
        let f2 = (gb > 0).then(|| gc as f64 / gb as f64);
        f1_groups.extend(f1);
        f2_groups.extend(f2);
        k_sum += gk;
        a_count += ga;
        c_sum += gc;
        b_count += gb;
        summaries.push(GroupSummary {
            members: members.iter().map(|&m| input.ids[m].clone()).collect(),
            status,
            binaries,
            nodes,
            f1,
            f2,
            f3: members.iter().map(|&m| (y[m] - input.y_prime[m]).powi(2)).sum(),
        });
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let status = summaries.iter().map(|g| g.status).max().unwrap_or(SliceStatus::Optimal);
    let slice = TimeSliceSolution {
        timestep: t,
        f1: (a_count > 0).then(|| k_sum / a_count as f64),
        f2: (b_count > 0).then(|| c_sum as f64 / b_count as f64),
        f3: (0..n).map(|m| (y[m] - input.y_prime[m]).powi(2)).sum(),
        f1_group_mean: mean(&f1_groups),
        f2_group_mean: mean(&f2_groups),
        spurious_count: c_sum,
        status,
        groups: summaries,
        pairs,
    };
    Ok((slice, y))
}

/// Relaxation, then ordering binaries from the relaxed positions and
/// spurious binaries by thresholding, then the QP with binaries pinned.
/// Falls back to allowing every spurious overlap, which is always feasible.
fn round_relaxation(gp: &GroupProblem, t: Timestep) -> Result<Vec<f64>, LayoutError> {
    let err = |source| LayoutError::Solver { timestep: t, source };
    let p = &gp.problem;
    let relaxed = miqp::solve_qp(p).map_err(err)?;
    if relaxed.status != SolveStatus::Optimal {
        return Err(err(SolverError::Backend("relaxation has no solution".into())));
    }
    let y = gp.positions(&relaxed.values);
    let mut lo = p.lower.clone();
    let mut hi = p.upper.clone();
    for pair in &gp.pairs {
        let above = if y[pair.i] == y[pair.j] {
            pair.i < pair.j
        } else {
            y[pair.i] > y[pair.j]
        };
        let o = if above { 1.0 } else { 0.0 };
        lo[pair.order] = o;
        hi[pair.order] = o;
        if let PairVars::B { c } = pair.vars {
            let v = if relaxed.values[c] >= 0.5 { 1.0 } else { 0.0 };
            lo[c] = v;
            hi[c] = v;
        }
    }
    let first: MiqpSolution = miqp::solve_bounded(p, &lo, &hi).map_err(err)?;
    if first.status == SolveStatus::Optimal {
        return Ok(first.values);
    }
    for pair in &gp.pairs {
        if let PairVars::B { c } = pair.vars {
            lo[c] = 1.0;
            hi[c] = 1.0;
        }
    }
    let fallback = miqp::solve_bounded(p, &lo, &hi).map_err(err)?;
    if fallback.status == SolveStatus::Optimal {
        Ok(fallback.values)
    } else {
        Err(err(SolverError::Backend("rounded problem has no solution".into())))
    }
}

pub fn compute_layout(dataset: &MovingRegionDataset, config: &LayoutConfig) -> Result<Layout, LayoutError> {
    compute_layout_with(dataset, config, &ExecutionOptions::default())
}

pub fn compute_layout_with(
    dataset: &MovingRegionDataset,
    config: &LayoutConfig,
    options: &ExecutionOptions,
) -> Result<Layout, LayoutError> {
    config.check()?;
    let projection = project(dataset, &config.projection)?;
    let scaled = scale_heights(dataset);
    let regions: Vec<BTreeMap<Timestep, ConvexPolygon>> = dataset
        .objects
        .iter()
        .map(|o| o.observations.iter().map(|(&t, obs)| (t, obs.region())).collect())
        .collect();

    let solve_column = |&t: &Timestep| -> Result<(TimeSliceSolution, Vec<f64>, Vec<usize>, f64), LayoutError> {
        let start = Instant::now();
        let observed = dataset.observed_at(t);
        let n = observed.len();
        let mut w = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let area = intersection_area(&regions[observed[a]][&t], &regions[observed[b]][&t]);
                let v = area / scaled.area_scale;
                w[a][b] = v;
                w[b][a] = v;
            }
        }
        let input = TimestepInput {
            timestep: t,
            ids: observed.iter().map(|&i| dataset.objects[i].id.clone()).collect(),
            y_prime: observed.iter().map(|&i| projection.values[i][&t]).collect(),
            heights: observed.iter().map(|&i| scaled.heights[i][&t]).collect(),
            w,
        };
        let (slice, y) = optimize_timestep(&input, config)?;
        Ok((slice, y, observed, start.elapsed().as_secs_f64()))
    };

    let results: Vec<_> = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| LayoutError::Pool(e.to_string()))?
            .install(|| dataset.timesteps.par_iter().map(solve_column).collect()),
        None => dataset.timesteps.par_iter().map(solve_column).collect(),
    };

    let mut failures = Vec::new();
    let mut slices = Vec::with_capacity(results.len());
    let mut runtimes = Vec::with_capacity(results.len());
    let mut positions: Vec<BTreeMap<Timestep, f64>> = vec![BTreeMap::new(); dataset.objects.len()];
    for (res, &t) in results.into_iter().zip(&dataset.timesteps) {
        match res {
            Ok((slice, y, observed, secs)) => {
                for (&i, v) in observed.iter().zip(y) {
                    positions[i].insert(t, v);
                }
                slices.push(slice);
                runtimes.push(secs);
            }
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        return Err(if failures.len() == 1 {
            failures.remove(0)
        } else {
            LayoutError::Timesteps(failures)
        });
    }

    let mut rects = Vec::with_capacity(dataset.num_observations());
    let mut links = Vec::new();
    for (i, object) in dataset.objects.iter().enumerate() {
        for (&t, &y) in &positions[i] {
            rects.push(RibbonRect {
                object_id: object.id.clone(),
                timestep: t,
                y_center: y,
                height: scaled.heights[i][&t],
                y_prime: projection.values[i][&t],
            });
        }
        let ts: Vec<Timestep> = positions[i].keys().copied().collect();
        for pair in ts.windows(2) {
            links.push(RibbonLink {
                object_id: object.id.clone(),
                from: pair[0],
                to: pair[1],
                spurious_crossings: Vec::new(),
            });
        }
    }

    let mut layout = Layout {
        timesteps: dataset.timesteps.clone(),
        rects,
        links,
        slices,
        area_scale: scaled.area_scale,
        config: config.clone(),
        runtimes: options.record_timings.then_some(runtimes),
    };
    flag_spurious_crossings(&mut layout, dataset);
    Ok(layout)
}
