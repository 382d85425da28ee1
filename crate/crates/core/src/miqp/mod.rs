//! Small dense mixed-integer quadratic programs.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    ½ xᶜᵀ Q xᶜ + qᵀ x + constant
//!     subject to  aᵢᵀ x ≤ bᵢ  or  aᵢᵀ x = bᵢ
//!                 lo ≤ x ≤ hi
//!                 x_b ∈ {0, 1}
//! ```
//!
//! where the continuous variables `xᶜ` come first and the binaries `x_b`
//! last. [`solve_qp`] solves the convex relaxation, [`solve`] runs best-first
//! branch-and-bound over the binaries and [`brute_force_solve`] enumerates
//! every binary assignment (a test oracle for small problems).

mod branch;
mod qp;

pub use branch::{brute_force_solve, solve, solve_with, BranchOptions, BRUTE_FORCE_LIMIT};
pub use qp::solve_qp;
pub(crate) use qp::solve_bounded;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Constraint satisfaction tolerance for returned solutions.
pub const FEAS_TOL: f64 = 1e-8;
/// Distance from {0, 1} under which a relaxed binary counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    LessEqual,
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpProblem {
    pub num_continuous: usize,
    pub num_binary: usize,
    /// Hessian over the continuous variables (`num_continuous` square).
    pub quadratic: DMatrix<f64>,
    /// Linear objective over all variables.
    pub linear: Vec<f64>,
    pub constant: f64,
    pub constraints: Vec<LinearConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiqpSolution {
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub nodes_explored: usize,
    /// Objective of the root relaxation; a lower bound on the optimum.
    pub root_bound: f64,
}

impl MiqpSolution {
    pub(crate) fn infeasible(nodes: usize) -> Self {
        Self {
            values: Vec::new(),
            objective_value: f64::INFINITY,
            status: SolveStatus::Infeasible,
            nodes_explored: nodes,
            root_bound: f64::INFINITY,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("quadratic term is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotConvex(f64),
    #[error("{count} binaries exceed the limit of {limit}")]
    TooManyBinaries { count: usize, limit: usize },
    #[error("QP backend failed: {0}")]
    Backend(String),
}

impl MiqpProblem {
    /// An unconstrained problem with all-zero objective over the given variables.
    /// Binaries get bounds `[0, 1]`, continuous variables are unbounded.
    pub fn new(num_continuous: usize, num_binary: usize) -> Self {
        let n = num_continuous + num_binary;
        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        for j in num_continuous..n {
            lower[j] = 0.0;
            upper[j] = 1.0;
        }
        Self {
            num_continuous,
            num_binary,
            quadratic: DMatrix::zeros(num_continuous, num_continuous),
            linear: vec![0.0; n],
            constant: 0.0,
            constraints: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_continuous + self.num_binary
    }

    pub fn binary_range(&self) -> std::ops::Range<usize> {
        self.num_continuous..self.num_vars()
    }

    /// Adds `Σ coeffs[j]·x[var_j] (relation) rhs` given as sparse `(var, coeff)` terms.
    pub fn add_constraint(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coefficients = vec![0.0; self.num_vars()];
        for &(j, c) in terms {
            coefficients[j] += c;
        }
        self.constraints.push(LinearConstraint {
            coefficients,
            relation,
            rhs,
        });
    }

    /// Checks dimensions, bounds and convexity.
    pub fn check(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        let nc = self.num_continuous;
        if self.quadratic.nrows() != nc || self.quadratic.ncols() != nc {
            return Err(SolverError::Malformed(format!(
                "quadratic term is {}x{}, expected {nc}x{nc}",
                self.quadratic.nrows(),
                self.quadratic.ncols()
            )));
        }
        if self.linear.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::Malformed("vector lengths do not match the variable count".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(SolverError::Malformed(format!("constraint {i} has wrong length")));
            }
            if !c.rhs.is_finite() || c.coefficients.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::Malformed(format!("constraint {i} is not finite")));
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(SolverError::Malformed(format!("variable {j} has empty bounds")));
            }
        }
        for j in self.binary_range() {
            if self.lower[j] < 0.0 || self.upper[j] > 1.0 {
                return Err(SolverError::Malformed(format!("binary {j} has bounds outside [0, 1]")));
            }
        }
        if nc > 0 {
            let sym = (&self.quadratic + self.quadratic.transpose()) * 0.5;
            if (&sym - &self.quadratic).amax() > 1e-12 * (1.0 + self.quadratic.amax()) {
                return Err(SolverError::Malformed("quadratic term is not symmetric".into()));
            }
            let min_eig = sym.symmetric_eigenvalues().min();
            if min_eig < -1e-8 {
                return Err(SolverError::NotConvex(min_eig));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let nc = self.num_continuous;
        let mut quad = 0.0;
        for i in 0..nc {
            for j in 0..nc {
                quad += x[i] * self.quadratic[(i, j)] * x[j];
            }
        }
        0.5 * quad + self.linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }

    /// Largest constraint or bound violation of `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.max_violation_within(x, &self.lower, &self.upper)
    }

    pub(crate) fn max_violation_within(&self, x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coefficients.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::LessEqual => lhs - c.rhs,
                Relation::Equal => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(lower[j] - v).max(v - upper[j]);
        }
        worst
    }

    pub(crate) fn is_integral(&self, x: &[f64]) -> bool {
        self.binary_range()
            .all(|j| x[j].min(1.0 - x[j]).abs() <= INTEGRALITY_TOL)
    }
}
