//! Initial one-dimensional positions for every observation.
//!
//! A single transformation is fitted over all observations of the dataset
//! (time ignored), so the same 2D location maps to the same 1D position at
//! every timestep. Outputs are min-max normalized to `[0, 1]`.

mod curve;
mod force;

pub use curve::{hilbert_index, morton_index};

use crate::dataset::{MovingRegionDataset, Timestep};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMethod {
    PcaCentroids,
    ForceDirected,
    Hilbert,
    Morton,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::PcaCentroids => "pca-centroids",
            ProjectionMethod::ForceDirected => "force-directed",
            ProjectionMethod::Hilbert => "hilbert",
            ProjectionMethod::Morton => "morton",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pca" | "pca-centroids" => Ok(Self::PcaCentroids),
            "force" | "force-directed" => Ok(Self::ForceDirected),
            "hilbert" => Ok(Self::Hilbert),
            "morton" => Ok(Self::Morton),
            other => Err(format!("unknown projection '{other}'")),
        }
    }
}

/// Pairwise distance used by the force-directed projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    Centroid,
    Region,
}

impl FromStr for DistanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centroid" => Ok(Self::Centroid),
            "region" => Ok(Self::Region),
            other => Err(format!("unknown distance mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    pub distance_mode: DistanceMode,
    pub curve_order: u32,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Random starts for the force-directed descent, on top of one start from the
    /// principal-axis scores; the lowest-stress run wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            method: ProjectionMethod::PcaCentroids,
            distance_mode: DistanceMode::Region,
            curve_order: 10,
            iterations: 500,
            learning_rate: 0.1,
            restarts: 4,
            seed: 0,
        }
    }
}

impl ProjectionConfig {
    pub fn check(&self) -> Result<(), ProjectionError> {
        if !(4..=16).contains(&self.curve_order) {
            return Err(ProjectionError::InvalidConfig(format!(
                "curve_order must be in [4, 16], got {}",
                self.curve_order
            )));
        }
        if self.iterations == 0 {
            return Err(ProjectionError::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ProjectionError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(ProjectionError::InvalidConfig("restarts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("invalid projection config: {0}")]
    InvalidConfig(String),
    #[error("dataset has no observations")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// `values[i][t]` is the position of object `i` (dataset order) at timestep `t`.
    pub values: Vec<BTreeMap<Timestep, f64>>,
    pub object_ids: Vec<String>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl ProjectionResult {
    pub fn get(&self, object_id: &str, t: Timestep) -> Option<f64> {
        let i = self.object_ids.iter().position(|id| id == object_id)?;
        self.values[i].get(&t).copied()
    }

    pub fn is_degenerate(&self) -> bool {
        self.diagnostics.get("degenerate").copied().unwrap_or(0.0) > 0.0
    }
}

/// Affine min-max map onto `[0, 1]`; constant input maps to 0.5 everywhere.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 1e-12 * hi.abs().max(lo.abs()).max(1.0)) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

/// Observations in a fixed order: objects in dataset order, timesteps ascending.
pub(crate) fn observation_keys(dataset: &MovingRegionDataset) -> Vec<(usize, Timestep)> {
    dataset.observations().map(|(i, t, _)| (i, t)).collect()
}

pub fn project(dataset: &MovingRegionDataset, config: &ProjectionConfig) -> Result<ProjectionResult, ProjectionError> {
    config.check()?;
    let keys = observation_keys(dataset);
    if keys.is_empty() {
        return Err(ProjectionError::Empty);
    }
    let centroids: Vec<Point> = dataset.observations().map(|(_, _, obs)| obs.centroid()).collect();
    let mut diagnostics = BTreeMap::new();

    let raw: Vec<f64> = match config.method {
        ProjectionMethod::PcaCentroids => pca_first_component(&centroids, &mut diagnostics),
        ProjectionMethod::ForceDirected => {
            let warm = pca_first_component(&centroids, &mut BTreeMap::new());
            force::stress_embedding(dataset, &centroids, &warm, config, &mut diagnostics)
        }
        ProjectionMethod::Hilbert | ProjectionMethod::Morton => {
            curve::curve_positions(&centroids, config.method, config.curve_order)
        }
    };

    let degenerate = centroids.iter().all(|c| c.distance(centroids[0]) <= 1e-12);
    let normalized = if degenerate {
        vec![0.5; raw.len()]
    } else {
        normalize(&raw)
    };
    diagnostics.insert("degenerate".into(), if degenerate { 1.0 } else { 0.0 });

    let mut values = vec![BTreeMap::new(); dataset.objects.len()];
    for (&(i, t), v) in keys.iter().zip(normalized) {
        values[i].insert(t, v);
    }
    Ok(ProjectionResult {
        values,
        object_ids: dataset.objects.iter().map(|o| o.id.clone()).collect(),
        diagnostics,
    })
}

/// Scores along the leading principal axis, oriented so that scores correlate
/// non-negatively with x (with y when the axis is vertical).
fn pca_first_component(points: &[Point], diagnostics: &mut BTreeMap<String, f64>) -> Vec<f64> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in points {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    // eigen-decomposition of the 2x2 scatter matrix
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let l1 = 0.5 * tr + disc;
    let l2 = (det / l1).max(0.0);
    let mut axis = if sxy.abs() > 1e-300 {
        Point::new(l1 - syy, sxy)
    } else if sxx >= syy {
        Point::new(1.0, 0.0)
    } else {
        Point::new(0.0, 1.0)
    };
    let len = axis.norm();
    axis = if len > 0.0 { axis * (1.0 / len) } else { Point::new(1.0, 0.0) };
    if axis.x < 0.0 || (axis.x == 0.0 && axis.y < 0.0) {
        axis = axis * -1.0;
    }
    if tr > 0.0 {
        diagnostics.insert("explained_variance_ratio".into(), l1 / (l1 + l2));
    }
    diagnostics.insert("axis_x".into(), axis.x);
    diagnostics.insert("axis_y".into(), axis.y);
    points.iter().map(|&p| (p - mean).dot(axis)).collect()
}
