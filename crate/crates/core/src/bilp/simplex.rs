//! Dense-tableau bounded-variable primal simplex for the LP relaxation.
//!
//! Every row gets a slack (`[0,∞)` for ≤, `(-∞,0]` for ≥, `[0,0]` for =) so the
//! system is `A x + s = b` with box bounds on all columns. Rows the starting point
//! violates get an artificial column; phase 1 drives those to zero.

use super::{BilpError, BilpProblem, Row, Sense};

pub const PIVOT_TOL: f64 = 1e-9;
pub const FEAS_TOL: f64 = 1e-7;
const COST_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

/// Solves the relaxation of `p` with `0 ≤ x ≤ 1`, lazy rows included.
pub fn solve_lp_relaxation(p: &BilpProblem) -> Result<LpOutcome, BilpError> {
    p.validate()?;
    let rows: Vec<&Row> = p.rows.iter().collect();
    solve_bounded(p.n, &p.objective, &rows, &vec![0.0; p.n], &vec![1.0; p.n])
}

struct Tableau {
    m: usize,
    ncol: usize,
    /// Row-major `m × ncol`, holds `B⁻¹ [A | I | Art]`.
    t: Vec<f64>,
    rhs: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Identity columns of the original system (slack block) for recomputing `B⁻¹`.
    slack0: usize,
    pivots: usize,
    bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncol + j]
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncol..(i + 1) * self.ncol];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Recomputes basic values from the nonbasic ones using the stored `B⁻¹`.
    fn refresh_basics(&mut self, a: &[Vec<(usize, f64)>]) {
        // residual r = b - (A x_N + I s_N + Art a_N) over the original system
        let mut r = self.rhs.clone();
        for (row, terms) in a.iter().enumerate() {
            for &(j, v) in terms {
                if !self.is_basic[j] {
                    r[row] -= v * self.x[j];
                }
            }
        }
        for i in 0..self.m {
            let binv = &self.t[i * self.ncol + self.slack0..i * self.ncol + self.slack0 + self.m];
            let v: f64 = binv.iter().zip(&r).map(|(b, r)| b * r).sum();
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let ncol = self.ncol;
        let piv = self.at(r, q);
        {
            let row = &mut self.t[r * ncol..(r + 1) * ncol];
            for v in row.iter_mut() {
                *v /= piv;
            }
        }
        // the pivot row is usually sparse; only its nonzeros take part in the update
        let nz: Vec<(usize, f64)> = self.t[r * ncol..(r + 1) * ncol]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * ncol + q];
            if f != 0.0 {
                let row = &mut self.t[i * ncol..(i + 1) * ncol];
                for &(j, p) in &nz {
                    row[j] -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for &(j, p) in &nz {
                d[j] -= f * p;
            }
            d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Maximizes `c·x` from the current basis.
    fn run(
        &mut self,
        c: &[f64],
        a: &[Vec<(usize, f64)>],
        max_iter: usize,
    ) -> Result<(), BilpError> {
        let mut d = self.reduced_costs(c);
        let mut iters = 0usize;
        loop {
            iters += 1;
            if iters > max_iter {
                return Err(BilpError::IterationLimit);
            }
            if iters % 200 == 0 {
                // periodic refresh keeps drift in the cost row and values bounded
                d = self.reduced_costs(c);
                self.refresh_basics(a);
            }
            // entering column
            let mut q = usize::MAX;
            let mut best = 0.0;
            let mut dir = 0.0;
            for j in 0..self.ncol {
                if self.is_basic[j] || self.ub[j] - self.lb[j] <= 0.0 {
                    continue;
                }
                let at_lb = self.x[j] <= self.lb[j];
                let at_ub = self.x[j] >= self.ub[j];
                let (eligible, dj) = if d[j] > COST_TOL && !at_ub {
                    (true, 1.0)
                } else if d[j] < -COST_TOL && !at_lb {
                    (true, -1.0)
                } else {
                    (false, 0.0)
                };
                if !eligible {
                    continue;
                }
                if self.bland {
                    q = j;
                    dir = dj;
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    q = j;
                    dir = dj;
                }
            }
            if q == usize::MAX {
                return Ok(());
            }

            // ratio test
            let mut step = self.ub[q] - self.lb[q];
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = dir * self.at(i, q);
                let b = self.basis[i];
                let lim = if alpha > PIVOT_TOL {
                    if self.lb[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[b] - self.lb[b]) / alpha).max(0.0)
                } else if alpha < -PIVOT_TOL {
                    if self.ub[b] == f64::INFINITY {
                        continue;
                    }
                    ((self.ub[b] - self.x[b]) / -alpha).max(0.0)
                } else {
                    continue;
                };
                let take = if lim < step - 1e-12 {
                    true
                } else if lim <= step + 1e-12 {
                    match leave {
                        // a tie with the bound flip keeps the flip
                        None => false,
                        Some((li, _)) if self.bland => b < self.basis[li],
                        Some(_) => alpha.abs() > leave_alpha,
                    }
                } else {
                    false
                };
                if take {
                    step = step.min(lim);
                    leave = Some((i, if alpha > 0.0 { self.lb[b] } else { self.ub[b] }));
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Err(BilpError::Unbounded);
            }
            if step <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > BLAND_AFTER {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }

            // move
            if step > 0.0 {
                self.x[q] += dir * step;
                for i in 0..self.m {
                    let a = self.at(i, q);
                    if a != 0.0 {
                        self.x[self.basis[i]] -= dir * step * a;
                    }
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                }
                Some((r, bound)) => {
                    let b = self.basis[r];
                    self.pivot(r, q, &mut d);
                    self.x[b] = bound;
                }
            }
        }
    }
}

/// Bounded LP: maximize `c·x` over `rows` with `lb ≤ x ≤ ub`.
pub(crate) fn solve_bounded(
    n: usize,
    c: &[f64],
    rows: &[&Row],
    lb: &[f64],
    ub: &[f64],
) -> Result<LpOutcome, BilpError> {
    let m = rows.len();
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return Ok(LpOutcome::Infeasible);
    }
    let x_start: Vec<f64> = lb.to_vec();
    // residual per row with structurals at their lower bounds
    let mut art_rows: Vec<(usize, f64)> = Vec::new();
    let mut slack_val = vec![0.0; m];
    let mut slack_lb = vec![0.0; m];
    let mut slack_ub = vec![0.0; m];
    for (r, row) in rows.iter().enumerate() {
        let act: f64 = row.terms.iter().map(|&(j, v)| v * x_start[j]).sum();
        let v = row.rhs - act;
        let (sl, su) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        slack_lb[r] = sl;
        slack_ub[r] = su;
        let clamped = v.clamp(sl, su);
        slack_val[r] = clamped;
        if (v - clamped).abs() > FEAS_TOL * 0.01 {
            art_rows.push((r, (v - clamped).signum()));
        }
    }
    let nart = art_rows.len();
    let slack0 = n;
    let art0 = n + m;
    let ncol = n + m + nart;

    // original sparse columns by row, for value refreshes
    let mut a: Vec<Vec<(usize, f64)>> = rows.iter().map(|r| r.terms.clone()).collect();
    for (r, terms) in a.iter_mut().enumerate() {
        terms.push((slack0 + r, 1.0));
    }
    for (k, &(r, sgn)) in art_rows.iter().enumerate() {
        a[r].push((art0 + k, sgn));
    }

    let mut t = vec![0.0; m * ncol];
    let mut basis = vec![0usize; m];
    let mut is_basic = vec![false; ncol];
    let mut lbs = vec![0.0; ncol];
    let mut ubs = vec![0.0; ncol];
    let mut x = vec![0.0; ncol];
    lbs[..n].copy_from_slice(lb);
    ubs[..n].copy_from_slice(ub);
    x[..n].copy_from_slice(&x_start);
    for r in 0..m {
        lbs[slack0 + r] = slack_lb[r];
        ubs[slack0 + r] = slack_ub[r];
        x[slack0 + r] = slack_val[r];
    }
    for k in 0..nart {
        lbs[art0 + k] = 0.0;
        ubs[art0 + k] = f64::INFINITY;
    }
    // initial basis: the artificial where present, else the slack. Each row of
    // the tableau is B⁻¹ times the original row; with an artificial of sign σ as
    // basic, B⁻¹ for that row is 1/σ = σ.
    let art_of: std::collections::HashMap<usize, (usize, f64)> = art_rows
        .iter()
        .enumerate()
        .map(|(k, &(r, s))| (r, (art0 + k, s)))
        .collect();
    for (r, terms) in a.iter().enumerate() {
        let scale = art_of.get(&r).map_or(1.0, |&(_, s)| s);
        for &(j, v) in terms {
            t[r * ncol + j] += scale * v;
        }
        let bvar = art_of.get(&r).map_or(slack0 + r, |&(col, _)| col);
        basis[r] = bvar;
        is_basic[bvar] = true;
    }
    let mut tab = Tableau {
        m,
        ncol,
        t,
        rhs: rows.iter().map(|r| r.rhs).collect(),
        lb: lbs,
        ub: ubs,
        x,
        basis,
        is_basic,
        slack0,
        pivots: 0,
        bland: false,
        degenerate_run: 0,
    };
    tab.refresh_basics(&a);
    let max_iter = 50 * (ncol + m) + 1000;

    if nart > 0 {
        let mut c1 = vec![0.0; ncol];
        for k in 0..nart {
            c1[art0 + k] = -1.0;
        }
        tab.run(&c1, &a, max_iter)?;
        tab.refresh_basics(&a);
        let infeas: f64 = (0..nart).map(|k| tab.x[art0 + k]).sum();
        if infeas > FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        for k in 0..nart {
            tab.ub[art0 + k] = 0.0;
            if !tab.is_basic[art0 + k] {
                tab.x[art0 + k] = 0.0;
            }
        }
        tab.bland = false;
        tab.degenerate_run = 0;
    }

    let mut c2 = vec![0.0; ncol];
    c2[..n].copy_from_slice(c);
    tab.run(&c2, &a, max_iter)?;
    tab.refresh_basics(&a);

    let mut xs: Vec<f64> = tab.x[..n].to_vec();
    for (v, (&l, &u)) in xs.iter_mut().zip(lb.iter().zip(ub)) {
        *v = v.clamp(l, u);
    }
    // a final primal check guards against drift in long degenerate runs
    for row in rows {
        if row.violation(row.activity_frac(&xs)) > 1e-5 {
            log::debug!("simplex: final residual above tolerance");
            break;
        }
    }
    let objective = c.iter().zip(&xs).map(|(c, x)| c * x).sum();
    Ok(LpOutcome::Optimal(LpSolution {
        x: xs,
        objective,
        pivots: tab.pivots,
    }))
}

#[cfg(test)]
mod tests {
    use super::super::{BilpProblem, Row, Sense};
    use super::*;

    fn lp(p: &BilpProblem) -> LpSolution {
        match solve_lp_relaxation(p).unwrap() {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => panic!("infeasible"),
        }
    }

    #[test]
    fn knapsack_relaxation() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4 ; the LP takes c, a, then 1/3 of b
        let mut p = BilpProblem::new(vec![5.0, 4.0, 3.0]);
        p.push(Row::dense(&[2.0, 3.0, 1.0], Sense::Le, 4.0));
        let s = lp(&p);
        assert!((s.objective - (8.0 + 4.0 / 3.0)).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn equality_and_ge_need_phase_one() {
        // max -x1 - x2 - x3 s.t. x1 + x2 + x3 = 2, x1 >= 0.5 (fractional data)
        let mut p = BilpProblem::new(vec![-1.0, -1.0, -1.0]);
        p.push(Row::dense(&[1.0, 1.0, 1.0], Sense::Eq, 2.0));
        p.push(Row::dense(&[1.0, 0.0, 0.0], Sense::Ge, 0.5));
        let s = lp(&p);
        assert!((s.objective + 2.0).abs() < 1e-9);
        assert!(s.x[0] >= 0.5 - 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut p = BilpProblem::new(vec![1.0, 1.0]);
        p.push(Row::dense(&[1.0, 1.0], Sense::Ge, 3.0));
        assert_eq!(solve_lp_relaxation(&p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn negative_rhs_le_row() {
        // x1 - x2 <= -1 forces x1 = 0, x2 = 1
        let mut p = BilpProblem::new(vec![1.0, 0.0]);
        p.push(Row::dense(&[1.0, -1.0], Sense::Le, -1.0));
        let s = lp(&p);
        assert!(s.objective.abs() < 1e-9);
        assert!((s.x[1] - 1.0).abs() < 1e-9);
    }
}
