//! Per-group MIQP construction.
//!
//! Variables, in order: `y` (one per member), `k` (one per A-pair), then the
//! binaries `o` (one ordering selector per pair) and `c` (one per B-pair).
//! `o = 1` selects "i above j" for the disjunctions.

use super::LayoutError;
use crate::miqp::{MiqpProblem, Relation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairVars {
    /// Pair with positive intersection; index of its `k` variable.
    A { k: usize },
    /// Disjoint pair; index of its `c` variable.
    B { c: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPair {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub order: usize,
    pub vars: PairVars,
}

/// A group problem together with the variable map needed to decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProblem {
    pub problem: MiqpProblem,
    pub pairs: Vec<GroupPair>,
    pub num_members: usize,
    pub num_a: usize,
    pub num_b: usize,
}

impl GroupProblem {
    pub fn positions<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        &values[..self.num_members]
    }
}

/// Parameters shared by all group problems of a layout run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub y_bounds: [f64; 2],
}

/// Builds the group MIQP, refusing groups whose binary count exceeds `max_binaries`.
pub fn build_group_problem(
    y_prime: &[f64],
    heights: &[f64],
    w: &[Vec<f64>],
    weights: GroupWeights,
    max_binaries: usize,
) -> Result<GroupProblem, LayoutError> {
    let n = y_prime.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let num_b = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| w[i][j] <= 0.0)
        .count();
    let binaries = pairs + num_b;
    if binaries > max_binaries {
        return Err(LayoutError::GroupTooLarge {
            binaries,
            limit: max_binaries,
        });
    }
    Ok(assemble(y_prime, heights, w, weights))
}

/// Longest separation `|y_i − y_j|` any feasible point can have: shortest
/// paths through A-edges of length `H − w`, capped by the box diameter.
fn separation_bounds(heights: &[f64], w: &[Vec<f64>], cap: f64) -> Vec<Vec<f64>> {
    let n = heights.len();
    let mut d = vec![vec![cap; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if i != j && w[i][j] > 0.0 {
                let len = ((heights[i] + heights[j]) / 2.0 - w[i][j]).max(0.0);
                d[i][j] = d[i][j].min(len);
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub(crate) fn assemble(y_prime: &[f64], heights: &[f64], w: &[Vec<f64>], weights: GroupWeights) -> GroupProblem {
    let n = y_prime.len();
    let mut pair_list = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pair_list.push((i, j, w[i][j]));
        }
    }
    let num_a = pair_list.iter().filter(|p| p.2 > 0.0).count();
    let num_b = pair_list.len() - num_a;
    let nc = n + num_a;
    let nb = pair_list.len() + num_b;
    let mut problem = MiqpProblem::new(nc, nb);

    let [lo, hi] = weights.y_bounds;
    let sep = separation_bounds(heights, w, hi - lo);

    for (i, &yp) in y_prime.iter().enumerate() {
        problem.quadratic[(i, i)] = 2.0;
        problem.linear[i] = -2.0 * yp;
        problem.constant += yp * yp;
        problem.lower[i] = lo;
        problem.upper[i] = hi;
    }

    let mut pairs = Vec::with_capacity(pair_list.len());
    let (mut next_k, mut next_c) = (n, nc + pair_list.len());
    for (p, &(i, j, wij)) in pair_list.iter().enumerate() {
        let o = nc + p;
        let half = (heights[i] + heights[j]) / 2.0;
        if wij > 0.0 {
            let k = next_k;
            next_k += 1;
            problem.lower[k] = 1.0;
            problem.upper[k] = (half / wij).max(1.0);
            problem.linear[k] = weights.lambda1 / num_a as f64;
            let reach = half - wij;
            let big_m = reach + sep[i][j];
            // |y_i − y_j| ≤ H − w
            problem.add_constraint(&[(i, 1.0), (j, -1.0)], Relation::LessEqual, reach);
            problem.add_constraint(&[(i, -1.0), (j, 1.0)], Relation::LessEqual, reach);
            // |y_i − y_j| ≥ H − k·w, one side selected by o
            problem.add_constraint(&[(i, -1.0), (j, 1.0), (k, -wij), (o, big_m)], Relation::LessEqual, big_m - half);
            problem.add_constraint(&[(i, 1.0), (j, -1.0), (k, -wij), (o, -big_m)], Relation::LessEqual, -half);
            pairs.push(GroupPair {
                i,
                j,
                w: wij,
                order: o,
                vars: PairVars::A { k },
            });
        } else {
            let c = next_c;
            next_c += 1;
            problem.linear[c] = weights.lambda2 / num_b as f64;
            let big_m = half + sep[i][j];
            // |y_i − y_j| ≥ (1 − c)·H, one side selected by o
            problem.add_constraint(&[(i, -1.0), (j, 1.0), (c, -half), (o, big_m)], Relation::LessEqual, big_m - half);
            problem.add_constraint(&[(i, 1.0), (j, -1.0), (c, -half), (o, -big_m)], Relation::LessEqual, -half);
            pairs.push(GroupPair {
                i,
                j,
                w: wij,
                order: o,
                vars: PairVars::B { c },
            });
        }
    }
    GroupProblem {
        problem,
        pairs,
        num_members: n,
        num_a,
        num_b,
    }
}

/// Connected components of the graph with an edge wherever `w > 0`.
/// Members are sorted and groups are ordered by their smallest member.
pub fn partition_groups(w: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = w.len();
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(u) = stack.pop() {
            members.push(u);
            for v in 0..n {
                if !seen[v] && (w[u][v] > 0.0 || w[v][u] > 0.0) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}
