use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::simplex::{solve_bounded, LpOutcome, FEAS_TOL};
use super::{lex_less, BilpError, BilpProblem, BilpSolution, BilpStatus, Row};

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOptions {
    /// Stop after this many LP evaluations (deterministic).
    pub node_limit: Option<u64>,
    /// Stop after this much wall time (not deterministic; prefer `node_limit`).
    pub time_limit: Option<Duration>,
    /// Absolute optimality gap at which a node is pruned.
    pub gap_abs: f64,
    /// Feasible starting assignment; ignored if infeasible.
    pub warm_start: Option<Vec<bool>>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            node_limit: None,
            time_limit: None,
            gap_abs: 1e-9,
            warm_start: None,
        }
    }
}

struct Node {
    bound: f64,
    id: u64,
    fix: Vec<i8>,
    branch: usize,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // max-heap: higher bound first, then older node
    fn cmp(&self, o: &Self) -> Ordering {
        self.bound
            .total_cmp(&o.bound)
            .then_with(|| o.id.cmp(&self.id))
    }
}

enum Eval {
    Infeasible,
    /// LP optimum is integral and verified.
    Integral(Vec<bool>),
    Fractional {
        bound: f64,
        branch: usize,
        rounded: Vec<bool>,
    },
}

struct Search<'a> {
    p: &'a BilpProblem,
    active: Vec<bool>,
    incumbent: Option<(Vec<bool>, f64)>,
    integral: bool,
    gap_abs: f64,
    nodes: u64,
}

impl Search<'_> {
    fn offer(&mut self, x: Vec<bool>) {
        if !self.p.is_feasible(&x) {
            return;
        }
        let v = self.p.objective_value(&x);
        let replace = match &self.incumbent {
            None => true,
            Some((bx, bv)) => v > bv + 1e-9 || ((v - bv).abs() <= 1e-9 && lex_less(&x, bx)),
        };
        if replace {
            self.incumbent = Some((x, v));
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((_, z)) if self.integral => (bound + INT_TOL).floor() <= z + 0.5,
            Some((_, z)) => bound <= z + self.gap_abs,
        }
    }

    fn eval(&mut self, fix: &[i8]) -> Result<Eval, BilpError> {
        self.nodes += 1;
        let n = self.p.n;
        let lb: Vec<f64> = fix
            .iter()
            .map(|&f| if f == 1 { 1.0 } else { 0.0 })
            .collect();
        let ub: Vec<f64> = fix
            .iter()
            .map(|&f| if f == 0 { 0.0 } else { 1.0 })
            .collect();
        loop {
            let rows: Vec<&Row> = self
                .p
                .rows
                .iter()
                .zip(&self.active)
                .filter(|(_, &a)| a)
                .map(|(r, _)| r)
                .collect();
            let sol = match solve_bounded(n, &self.p.objective, &rows, &lb, &ub)? {
                LpOutcome::Infeasible => return Ok(Eval::Infeasible),
                LpOutcome::Optimal(s) => s,
            };
            // constraint generation on lazy rows
            let mut added = false;
            for (r, row) in self.p.rows.iter().enumerate() {
                if !self.active[r] && row.violation(row.activity_frac(&sol.x)) > FEAS_TOL {
                    self.active[r] = true;
                    added = true;
                }
            }
            if added {
                continue;
            }
            let rounded: Vec<bool> = sol.x.iter().map(|&v| v > 0.5).collect();
            let near_integral = sol.x.iter().all(|&v| v.min(1.0 - v).abs() <= INT_TOL);
            if near_integral && self.p.is_feasible(&rounded) {
                return Ok(Eval::Integral(rounded));
            }
            // most fractional free variable; ties go to the smallest index
            let mut branch = usize::MAX;
            let mut best = -1.0;
            for (j, &v) in sol.x.iter().enumerate() {
                if fix[j] >= 0 {
                    continue;
                }
                let f = v.min(1.0 - v).max(0.0);
                if f > best + 1e-12 {
                    best = f;
                    branch = j;
                }
            }
            if branch == usize::MAX {
                // every variable fixed, yet the rounded point failed verification
                return Ok(Eval::Infeasible);
            }
            return Ok(Eval::Fractional {
                bound: sol.objective,
                branch,
                rounded,
            });
        }
    }
}

/// Best-bound branch and bound over LP relaxations.
///
/// Returns `Optimal` when the search closes, `Feasible` with a gap when a limit
/// stops it, and `Infeasible` when no assignment satisfies the rows.
pub fn solve_branch_and_bound(
    p: &BilpProblem,
    opts: &BnbOptions,
) -> Result<BilpSolution, BilpError> {
    p.validate()?;
    let start = Instant::now();
    let mut s = Search {
        p,
        active: p.rows.iter().map(|r| !r.lazy).collect(),
        incumbent: None,
        integral: p.integral_objective(),
        gap_abs: opts.gap_abs.max(1e-12),
        nodes: 0,
    };
    if let Some(w) = &opts.warm_start {
        if w.len() == p.n {
            s.offer(w.clone());
        }
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let root_fix = vec![-1i8; p.n];
    let mut push =
        |s: &mut Search, heap: &mut BinaryHeap<Node>, fix: Vec<i8>| -> Result<(), BilpError> {
            match s.eval(&fix)? {
                Eval::Infeasible => {}
                Eval::Integral(x) => s.offer(x),
                Eval::Fractional {
                    bound,
                    branch,
                    rounded,
                } => {
                    s.offer(rounded);
                    if !s.prunable(bound) {
                        heap.push(Node {
                            bound,
                            id: next_id,
                            fix,
                            branch,
                        });
                        next_id += 1;
                    }
                }
            }
            Ok(())
        };
    push(&mut s, &mut heap, root_fix)?;

    let mut limit_hit = false;
    while let Some(node) = heap.pop() {
        if s.prunable(node.bound) {
            continue;
        }
        let over_nodes = opts.node_limit.is_some_and(|l| s.nodes >= l);
        let over_time = opts.time_limit.is_some_and(|l| start.elapsed() >= l);
        if over_nodes || over_time {
            heap.push(node);
            limit_hit = true;
            break;
        }
        for val in [1i8, 0] {
            let mut fix = node.fix.clone();
            fix[node.branch] = val;
            push(&mut s, &mut heap, fix)?;
        }
    }

    let wall_time = start.elapsed();
    let nodes = s.nodes;
    match s.incumbent {
        None if limit_hit => Err(BilpError::LimitNoIncumbent),
        None => Ok(BilpSolution::infeasible(p.n, nodes, wall_time)),
        Some((x, z)) => {
            let open = heap
                .iter()
                .filter(|n| !s_prunable_static(n.bound, z, s.integral, s.gap_abs))
                .map(|n| n.bound)
                .fold(f64::NEG_INFINITY, f64::max);
            let (status, bound) = if limit_hit && open > z {
                (BilpStatus::Feasible, open)
            } else {
                (BilpStatus::Optimal, z)
            };
            Ok(BilpSolution {
                objective: p.objective_value(&x),
                x,
                status,
                bound,
                gap: (bound - z).max(0.0),
                nodes,
                wall_time,
            })
        }
    }
}

fn s_prunable_static(bound: f64, z: f64, integral: bool, gap_abs: f64) -> bool {
    if integral {
        (bound + INT_TOL).floor() <= z + 0.5
    } else {
        bound <= z + gap_abs
    }
}
