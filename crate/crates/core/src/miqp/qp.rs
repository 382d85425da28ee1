//! Convex QP relaxation, solved with the Clarabel interior-point method.
//!
//! Variables whose bounds coincide are substituted out before the call so that
//! branch-and-bound nodes with fixed binaries become smaller, well-posed QPs.

use super::{MiqpProblem, MiqpSolution, Relation, SolveStatus, SolverError, FEAS_TOL};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

/// Solves the continuous relaxation: binaries are treated as variables in `[lo, hi]`.
pub fn solve_qp(problem: &MiqpProblem) -> Result<MiqpSolution, SolverError> {
    problem.check()?;
    solve_bounded(problem, &problem.lower, &problem.upper)
}

const FIXED_TOL: f64 = 1e-12;

/// Relaxation with overridden bounds; `problem` must already be checked.
pub(crate) fn solve_bounded(
    problem: &MiqpProblem,
    lower: &[f64],
    upper: &[f64],
) -> Result<MiqpSolution, SolverError> {
    let n = problem.num_vars();
    let nc = problem.num_continuous;
    let mut values = vec![0.0; n];
    let mut free: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        if upper[j] - lower[j] <= FIXED_TOL {
            values[j] = lower[j];
        } else {
            free.push(j);
        }
    }

    // reduced linear term and constant with the fixed values substituted
    let mut q_red: Vec<f64> = free.iter().map(|&j| problem.linear[j]).collect();
    for (r, &j) in free.iter().enumerate() {
        if j < nc {
            for k in 0..nc {
                if upper[k] - lower[k] <= FIXED_TOL {
                    q_red[r] += problem.quadratic[(j, k)] * values[k];
                }
            }
        }
    }

    // constraints in Clarabel form: A x + s = b, s in cone
    let mut eq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut le_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &problem.constraints {
        let fixed_part: f64 = (0..n)
            .filter(|&j| upper[j] - lower[j] <= FIXED_TOL)
            .map(|j| c.coefficients[j] * values[j])
            .sum();
        let row: Vec<f64> = free.iter().map(|&j| c.coefficients[j]).collect();
        let rhs = c.rhs - fixed_part;
        if row.iter().all(|&a| a == 0.0) {
            let violated = match c.relation {
                Relation::LessEqual => rhs < -FEAS_TOL,
                Relation::Equal => rhs.abs() > FEAS_TOL,
            };
            if violated {
                return Ok(MiqpSolution::infeasible(1));
            }
            continue;
        }
        match c.relation {
            Relation::Equal => eq_rows.push((row, rhs)),
            Relation::LessEqual => le_rows.push((row, rhs)),
        }
    }
    for (r, &j) in free.iter().enumerate() {
        if lower[j].is_finite() {
            let mut row = vec![0.0; free.len()];
            row[r] = -1.0;
            le_rows.push((row, -lower[j]));
        }
        if upper[j].is_finite() {
            let mut row = vec![0.0; free.len()];
            row[r] = 1.0;
            le_rows.push((row, upper[j]));
        }
    }

    if !free.is_empty() {
        let m = free.len();
        let p = upper_triangle(problem, &free);
        let rows: Vec<&(Vec<f64>, f64)> = eq_rows.iter().chain(le_rows.iter()).collect();
        let a = dense_to_csc(rows.iter().map(|(r, _)| r.as_slice()), rows.len(), m);
        let b: Vec<f64> = rows.iter().map(|(_, rhs)| *rhs).collect();
        let mut cones = Vec::new();
        if !eq_rows.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(eq_rows.len()));
        }
        if !le_rows.is_empty() {
            cones.push(SupportedConeT::NonnegativeConeT(le_rows.len()));
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(200)
            .tol_gap_abs(1e-10)
            .tol_gap_rel(1e-10)
            .tol_feas(1e-10)
            .presolve_enable(false)
            .build()
            .map_err(|e| SolverError::Backend(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &q_red, &a, &b, &cones, settings)
            .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {}
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                return Ok(MiqpSolution::infeasible(1));
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                return Err(SolverError::Malformed("objective is unbounded below".into()));
            }
            _ => {
                return Ok(MiqpSolution {
                    values: Vec::new(),
                    objective_value: f64::INFINITY,
                    status: SolveStatus::IterationLimit,
                    nodes_explored: 1,
                    root_bound: f64::NEG_INFINITY,
                });
            }
        }
        for (r, &j) in free.iter().enumerate() {
            values[j] = solver.solution.x[r].clamp(lower[j], upper[j]);
        }
    }

    if problem.max_violation_within(&values, lower, upper) > 1e-6 {
        // the backend reported success on a problem it could not satisfy
        return Ok(MiqpSolution::infeasible(1));
    }
    let objective_value = problem.objective(&values);
    Ok(MiqpSolution {
        values,
        objective_value,
        status: SolveStatus::Optimal,
        nodes_explored: 1,
        root_bound: objective_value,
    })
}

fn upper_triangle(problem: &MiqpProblem, free: &[usize]) -> CscMatrix<f64> {
    let nc = problem.num_continuous;
    let m = free.len();
    let mut colptr = Vec::with_capacity(m + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for (c, &jc) in free.iter().enumerate() {
        for (r, &jr) in free.iter().enumerate().take(c + 1) {
            if jr < nc && jc < nc {
                let v = problem.quadratic[(jr, jc)];
                if v != 0.0 {
                    rowval.push(r);
                    nzval.push(v);
                }
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, m, colptr, rowval, nzval)
}

fn dense_to_csc<'a>(rows: impl Iterator<Item = &'a [f64]>, nrows: usize, ncols: usize) -> CscMatrix<f64> {
    let rows: Vec<&[f64]> = rows.collect();
    let mut colptr = Vec::with_capacity(ncols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for c in 0..ncols {
        for (r, row) in rows.iter().enumerate() {
            if row[c] != 0.0 {
                rowval.push(r);
                nzval.push(row[c]);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(nrows, ncols, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miqp::MiqpProblem;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn unconstrained_parabola() {
        // (x - 1)^2 = x^2 - 2x + 1
        let mut p = MiqpProblem::new(1, 0);
        p.quadratic[(0, 0)] = 2.0;
        p.linear[0] = -2.0;
        p.constant = 1.0;
        let s = solve_qp(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(s.values[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(s.objective_value, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn active_lower_constraint() {
        let mut p = MiqpProblem::new(1, 0);
        p.quadratic[(0, 0)] = 2.0;
        p.add_constraint(&[(0, -1.0)], Relation::LessEqual, -2.0);
        let s = solve_qp(&p).unwrap();
        assert_abs_diff_eq!(s.values[0], 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(s.objective_value, 4.0, epsilon = 1e-7);
        assert!(p.max_violation(&s.values) <= FEAS_TOL);
    }

    #[test]
    fn infeasible_constraints() {
        let mut p = MiqpProblem::new(1, 0);
        p.quadratic[(0, 0)] = 2.0;
        p.add_constraint(&[(0, 1.0)], Relation::LessEqual, 0.0);
        p.add_constraint(&[(0, -1.0)], Relation::LessEqual, -1.0);
        assert_eq!(solve_qp(&p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn equality_and_fixed_variables() {
        // min x^2 + y^2 s.t. x + y = 1, y fixed to 0.25 by bounds
        let mut p = MiqpProblem::new(2, 0);
        p.quadratic = DMatrix::identity(2, 2) * 2.0;
        p.add_constraint(&[(0, 1.0), (1, 1.0)], Relation::Equal, 1.0);
        p.lower[1] = 0.25;
        p.upper[1] = 0.25;
        let s = solve_qp(&p).unwrap();
        assert_abs_diff_eq!(s.values[0], 0.75, epsilon = 1e-7);
        assert_eq!(s.values[1], 0.25);
        // fully fixed and violating an equality: infeasible without calling the backend
        p.lower[0] = 0.5;
        p.upper[0] = 0.5;
        assert_eq!(solve_qp(&p).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn pure_linear_objective_with_box() {
        let mut p = MiqpProblem::new(2, 0);
        p.linear = vec![1.0, -1.0];
        p.lower = vec![-1.0, -1.0];
        p.upper = vec![2.0, 3.0];
        let s = solve_qp(&p).unwrap();
        assert_abs_diff_eq!(s.values[0], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.values[1], 3.0, epsilon = 1e-6);
    }

    /// Long-run projected gradient on a box-constrained strictly convex QP.
    fn projected_gradient(q: &DMatrix<f64>, c: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
        let n = c.len();
        let lipschitz = q.symmetric_eigenvalues().max();
        let step = 1.0 / lipschitz;
        let mut x: Vec<f64> = (0..n).map(|i| 0.5 * (lo[i] + hi[i])).collect();
        for _ in 0..200_000 {
            let mut next = x.clone();
            for i in 0..n {
                let g: f64 = (0..n).map(|j| q[(i, j)] * x[j]).sum::<f64>() + c[i];
                next[i] = (x[i] - step * g).clamp(lo[i], hi[i]);
            }
            let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if moved < 1e-15 {
                break;
            }
        }
        x
    }

    #[test]
    fn random_box_qps_match_projected_gradient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let n = rng.random_range(1..=5usize);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let q = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..2.0)).collect();
            let mut p = MiqpProblem::new(n, 0);
            p.quadratic = q.clone();
            p.linear = c.clone();
            p.lower = lo.clone();
            p.upper = hi.clone();
            let s = solve_qp(&p).unwrap();
            let oracle = projected_gradient(&q, &c, &lo, &hi);
            let f_oracle = p.objective(&oracle);
            assert!((s.objective_value - f_oracle).abs() < 1e-6, "{} vs {}", s.objective_value, f_oracle);
            for (a, b) in s.values.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}
