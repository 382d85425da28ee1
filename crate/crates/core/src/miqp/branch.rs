//! Best-first branch-and-bound over the binary variables.

use super::qp::solve_bounded;
use super::{MiqpProblem, MiqpSolution, SolveStatus, SolverError, INTEGRALITY_TOL};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Largest binary count [`brute_force_solve`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchOptions {
    /// Node budget; exceeding it returns the incumbent with `IterationLimit`.
    pub max_nodes: usize,
    /// Nodes whose bound is within `gap_rel·max(1, |incumbent|)` of the incumbent are pruned.
    pub gap_rel: f64,
    /// Variables tried first when several binaries are fractional.
    /// Lower values branch earlier; defaults to index order.
    pub priority: Option<Vec<u32>>,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            max_nodes: 50_000,
            gap_rel: 1e-7,
            priority: None,
        }
    }
}

struct Node {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    relaxed: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve(problem: &MiqpProblem) -> Result<MiqpSolution, SolverError> {
    solve_with(problem, &BranchOptions::default())
}

/// Branch-and-bound with explicit options.
pub fn solve_with(problem: &MiqpProblem, options: &BranchOptions) -> Result<MiqpSolution, SolverError> {
    problem.check()?;
    if let Some(p) = &options.priority {
        if p.len() != problem.num_binary {
            return Err(SolverError::Malformed("priority length must equal the binary count".into()));
        }
    }
    let root = solve_bounded(problem, &problem.lower, &problem.upper)?;
    if problem.num_binary == 0 || root.status != SolveStatus::Optimal {
        return Ok(root);
    }
    let root_bound = root.objective_value;
    let mut nodes = 1usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;

    let prune_tol = |inc: f64| options.gap_rel * inc.abs().max(1.0);
    // integral relaxations are re-solved with the binaries pinned so the
    // returned point satisfies the constraints at exactly 0/1
    let offer = |values: &[f64], incumbent: &mut Option<(Vec<f64>, f64)>, nodes: &mut usize| -> Result<(), SolverError> {
        let (lo, hi) = rounded_bounds(problem, values);
        let leaf = solve_bounded(problem, &lo, &hi)?;
        *nodes += 1;
        if leaf.status == SolveStatus::Optimal
            && incumbent.as_ref().is_none_or(|(_, best)| leaf.objective_value < *best)
        {
            *incumbent = Some((leaf.values, leaf.objective_value));
        }
        Ok(())
    };

    if problem.is_integral(&root.values) {
        offer(&root.values, &mut incumbent, &mut nodes)?;
        if let Some((values, _)) = incumbent {
            return Ok(finish(problem, values, nodes, root_bound));
        }
    }

    // rounding heuristic for an early incumbent
    offer(&root.values, &mut incumbent, &mut nodes)?;

    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        bound: root_bound,
        id: 0,
        lower: problem.lower.clone(),
        upper: problem.upper.clone(),
        relaxed: root.values,
    });

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - prune_tol(*best) {
                break;
            }
        }
        if nodes >= options.max_nodes {
            hit_limit = true;
            break;
        }
        let Some(var) = branching_variable(problem, &node.relaxed, options.priority.as_deref()) else {
            continue;
        };
        // explore the side the relaxation leans towards first
        let first = if node.relaxed[var] >= 0.5 { 1.0 } else { 0.0 };
        for value in [first, 1.0 - first] {
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[var] = value;
            upper[var] = value;
            let child = solve_bounded(problem, &lower, &upper)?;
            nodes += 1;
            if child.status != SolveStatus::Optimal {
                continue;
            }
            if let Some((_, best)) = &incumbent {
                if child.objective_value >= best - prune_tol(*best) {
                    continue;
                }
            }
            if problem.is_integral(&child.values) {
                offer(&child.values, &mut incumbent, &mut nodes)?;
                continue;
            }
            heap.push(Node {
                bound: child.objective_value,
                id: next_id,
                lower,
                upper,
                relaxed: child.values,
            });
            next_id += 1;
        }
    }

    match incumbent {
        Some((values, _)) => {
            let mut sol = finish(problem, values, nodes, root_bound);
            if hit_limit {
                sol.status = SolveStatus::IterationLimit;
            }
            Ok(sol)
        }
        None if hit_limit => Ok(MiqpSolution {
            values: Vec::new(),
            objective_value: f64::INFINITY,
            status: SolveStatus::IterationLimit,
            nodes_explored: nodes,
            root_bound,
        }),
        None => {
            let mut s = MiqpSolution::infeasible(nodes);
            s.root_bound = root_bound;
            Ok(s)
        }
    }
}

fn finish(problem: &MiqpProblem, values: Vec<f64>, nodes: usize, root_bound: f64) -> MiqpSolution {
    let objective_value = problem.objective(&values);
    MiqpSolution {
        values,
        objective_value,
        status: SolveStatus::Optimal,
        nodes_explored: nodes,
        root_bound,
    }
}

fn rounded_bounds(problem: &MiqpProblem, relaxed: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = problem.lower.clone();
    let mut hi = problem.upper.clone();
    for j in problem.binary_range() {
        let v = relaxed[j].round().clamp(problem.lower[j], problem.upper[j]);
        lo[j] = v;
        hi[j] = v;
    }
    (lo, hi)
}

/// Most fractional binary among the highest-priority fractional ones.
fn branching_variable(problem: &MiqpProblem, relaxed: &[f64], priority: Option<&[u32]>) -> Option<usize> {
    let nc = problem.num_continuous;
    let mut best: Option<(u32, f64, usize)> = None;
    for j in problem.binary_range() {
        let frac = relaxed[j].min(1.0 - relaxed[j]);
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        let prio = priority.map_or(0, |p| p[j - nc]);
        let better = match best {
            None => true,
            Some((bp, bf, _)) => prio < bp || (prio == bp && frac > bf + 1e-12),
        };
        if better {
            best = Some((prio, frac, j));
        }
    }
    best.map(|(_, _, j)| j)
}

/// Exact optimum by solving the QP for every binary assignment.
pub fn brute_force_solve(problem: &MiqpProblem) -> Result<MiqpSolution, SolverError> {
    problem.check()?;
    let k = problem.num_binary;
    if k > BRUTE_FORCE_LIMIT {
        return Err(SolverError::TooManyBinaries {
            count: k,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let nc = problem.num_continuous;
    let mut best: Option<MiqpSolution> = None;
    let mut nodes = 0;
    for mask in 0u32..(1u32 << k) {
        let mut lo = problem.lower.clone();
        let mut hi = problem.upper.clone();
        let mut allowed = true;
        for b in 0..k {
            let v = f64::from((mask >> b) & 1);
            if v < problem.lower[nc + b] || v > problem.upper[nc + b] {
                allowed = false;
                break;
            }
            lo[nc + b] = v;
            hi[nc + b] = v;
        }
        if !allowed {
            continue;
        }
        let s = solve_bounded(problem, &lo, &hi)?;
        nodes += 1;
        if s.status == SolveStatus::Optimal
            && best.as_ref().is_none_or(|b| s.objective_value < b.objective_value)
        {
            best = Some(s);
        }
    }
    Ok(match best {
        Some(mut s) => {
            s.nodes_explored = nodes;
            s.root_bound = f64::NEG_INFINITY;
            s
        }
        None => MiqpSolution::infeasible(nodes),
    })
}
