//! Binary integer linear programs: maximize `c·x` subject to linear rows, `x ∈ {0,1}ⁿ`.
//!
//! [`solve_branch_and_bound`] is the production solver (LP-relaxation bounds from a
//! bounded-variable simplex, best-bound search); [`solve_exhaustive`] enumerates
//! every assignment for small instances and serves as the reference.

mod bnb;
mod exhaustive;
mod greedy;
mod lp_format;
mod simplex;

pub use bnb::{solve_branch_and_bound, BnbOptions};
pub use exhaustive::{solve_exhaustive, MAX_EXHAUSTIVE_VARS};
pub use greedy::{greedy_max_coverage, GreedyCover};
pub use lp_format::write_lp_format;
pub use simplex::{solve_lp_relaxation, LpOutcome, LpSolution};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when re-verifying an assignment against a row.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("exhaustive search refused: {n} variables exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("search limit reached before any feasible assignment was found")]
    LimitNoIncumbent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// One constraint row, stored sparsely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// Lazy rows are left out of LP relaxations until violated; they are always
    /// enforced on returned assignments.
    #[serde(default)]
    pub lazy: bool,
}

impl Row {
    pub fn new(terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self {
            terms,
            sense,
            rhs,
            lazy: false,
        }
    }

    /// Row from a dense coefficient vector (zeros dropped).
    pub fn dense(coefs: &[f64], sense: Sense, rhs: f64) -> Self {
        let terms = coefs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i, c))
            .collect();
        Self::new(terms, sense, rhs)
    }

    pub fn lazy(mut self) -> Self {
        self.lazy = true;
        self
    }

    pub fn activity(&self, x: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|(i, _)| x[*i])
            .map(|(_, c)| c)
            .sum()
    }

    pub fn activity_frac(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(i, c)| c * x[*i]).sum()
    }

    /// Amount by which `activity` violates the row (0 when satisfied).
    pub fn violation(&self, activity: f64) -> f64 {
        match self.sense {
            Sense::Le => (activity - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - activity).max(0.0),
            Sense::Eq => (activity - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilpProblem {
    pub n: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
}

impl BilpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            n: objective.len(),
            objective,
            rows: Vec::new(),
            names: None,
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn validate(&self) -> Result<(), BilpError> {
        if self.objective.len() != self.n {
            return Err(BilpError::Malformed(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.n
            )));
        }
        if let Some(c) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(BilpError::Malformed(format!(
                "objective coefficient {c} is not finite"
            )));
        }
        if let Some(names) = &self.names {
            if names.len() != self.n {
                return Err(BilpError::Malformed(format!(
                    "{} names for {} variables",
                    names.len(),
                    self.n
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(BilpError::Malformed(format!(
                    "row {r} has a non-finite right-hand side"
                )));
            }
            for &(i, c) in &row.terms {
                if i >= self.n {
                    return Err(BilpError::Malformed(format!(
                        "row {r} references variable {i} of {}",
                        self.n
                    )));
                }
                if !c.is_finite() {
                    return Err(BilpError::Malformed(format!(
                        "row {r} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum()
    }

    /// Largest row violation of `x` over all rows, lazy ones included.
    pub fn max_violation(&self, x: &[bool]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.violation(r.activity(x)))
            .fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        x.len() == self.n && self.max_violation(x) <= VERIFY_TOL
    }

    /// True when every objective coefficient is an integer, so optimal values are too.
    pub fn integral_objective(&self) -> bool {
        self.objective
            .iter()
            .all(|c| c.fract() == 0.0 && c.abs() < 1e15)
    }

    pub fn var_name(&self, i: usize) -> String {
        match &self.names {
            Some(n) => n[i].clone(),
            None => format!("x{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BilpStatus {
    Optimal,
    /// A limit was hit; `gap` bounds the distance to optimal.
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilpSolution {
    pub x: Vec<bool>,
    pub objective: f64,
    pub status: BilpStatus,
    /// Best proven upper bound on the optimum.
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub wall_time: Duration,
}

impl BilpSolution {
    pub(crate) fn infeasible(n: usize, nodes: u64, wall_time: Duration) -> Self {
        Self {
            x: vec![false; n],
            objective: f64::NEG_INFINITY,
            status: BilpStatus::Infeasible,
            bound: f64::NEG_INFINITY,
            gap: 0.0,
            nodes,
            wall_time,
        }
    }

    pub fn support(&self) -> Vec<usize> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Lexicographic order with variable 0 most significant (`false < true`).
pub(crate) fn lex_less(a: &[bool], b: &[bool]) -> bool {
    a < b
}
