//! One-dimensional stress embedding by plain gradient descent.
//!
//! Minimizes raw metric stress `Σ_{i<j} (|x_i − x_j| − d_ij)²` over all
//! observations, with distances scaled so the largest one is 1.

use super::ProjectionConfig;
use crate::dataset::MovingRegionDataset;
use crate::geometry::{min_distance, ConvexPolygon, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

use super::DistanceMode;

pub(super) fn stress_embedding(
    dataset: &MovingRegionDataset,
    centroids: &[Point],
    warm_start: &[f64],
    config: &ProjectionConfig,
    diagnostics: &mut BTreeMap<String, f64>,
) -> Vec<f64> {
    let n = centroids.len();
    let dist = distance_matrix(dataset, centroids, config.distance_mode);
    let max = dist.iter().copied().fold(0.0, f64::max);
    if n < 2 || max <= 0.0 {
        diagnostics.insert("stress".into(), 0.0);
        return vec![0.0; n];
    }
    let dist: Vec<f64> = dist.iter().map(|d| d / max).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let warm_span = warm_start.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for restart in 0..=config.restarts {
        // the extra start descends from the rescaled principal-axis scores
        let mut x: Vec<f64> = if restart == config.restarts {
            if warm_span <= 0.0 {
                continue;
            }
            warm_start.iter().map(|v| 0.5 * v / warm_span).collect()
        } else {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.5 * z
                })
                .collect()
        };
        let mut grad = vec![0.0; n];
        for _ in 0..config.iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                for j in (i + 1)..n {
                    let diff = x[i] - x[j];
                    let residual = diff.abs() - dist[i * n + j];
                    let g = 2.0 * residual * diff.signum();
                    grad[i] += g;
                    grad[j] -= g;
                }
            }
            let step = config.learning_rate / n as f64;
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= step * gi;
            }
        }
        let s = stress(&x, &dist);
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, x));
        }
    }
    let (s, x) = best.expect("at least one restart");
    diagnostics.insert("stress".into(), s);
    x
}

fn stress(x: &[f64], dist: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += ((x[i] - x[j]).abs() - dist[i * n + j]).powi(2);
        }
    }
    s
}

fn distance_matrix(dataset: &MovingRegionDataset, centroids: &[Point], mode: DistanceMode) -> Vec<f64> {
    let n = centroids.len();
    let mut d = vec![0.0; n * n];
    match mode {
        DistanceMode::Centroid => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = centroids[i].distance(centroids[j]);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
        }
        DistanceMode::Region => {
            let regions: Vec<ConvexPolygon> = dataset.observations().map(|(_, _, o)| o.region()).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = min_distance(&regions[i], &regions[j]);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
        }
    }
    d
}
