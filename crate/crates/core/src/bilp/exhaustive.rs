use std::time::Instant;

use super::{lex_less, BilpError, BilpProblem, BilpSolution, BilpStatus, VERIFY_TOL};

pub const MAX_EXHAUSTIVE_VARS: usize = 24;

/// Enumerates all `2ⁿ` assignments in Gray-code order, updating row activities
/// incrementally. Equal objectives resolve to the lexicographically smallest
/// assignment (variable 0 most significant).
pub fn solve_exhaustive(p: &BilpProblem) -> Result<BilpSolution, BilpError> {
    p.validate()?;
    if p.n > MAX_EXHAUSTIVE_VARS {
        return Err(BilpError::TooLarge {
            n: p.n,
            max: MAX_EXHAUSTIVE_VARS,
        });
    }
    let start = Instant::now();
    let n = p.n;
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, row) in p.rows.iter().enumerate() {
        for &(i, c) in &row.terms {
            cols[i].push((r, c));
        }
    }
    let mut act = vec![0.0f64; p.rows.len()];
    let violated = |r: usize, a: f64| p.rows[r].violation(a) > VERIFY_TOL;
    let mut n_viol = (0..p.rows.len()).filter(|&r| violated(r, 0.0)).count();
    let mut x = vec![false; n];
    let mut obj = 0.0f64;
    let mut best: Option<(Vec<bool>, f64)> = None;

    let consider = |x: &[bool], obj: f64, best: &mut Option<(Vec<bool>, f64)>| {
        let better = match best {
            None => true,
            Some((bx, bv)) => obj > *bv + 1e-9 || ((obj - *bv).abs() <= 1e-9 && lex_less(x, bx)),
        };
        if better {
            *best = Some((x.to_vec(), obj));
        }
    };
    if n_viol == 0 {
        consider(&x, obj, &mut best);
    }
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let sign = if x[j] { -1.0 } else { 1.0 };
        x[j] = !x[j];
        obj += sign * p.objective[j];
        for &(r, c) in &cols[j] {
            let was = violated(r, act[r]);
            act[r] += sign * c;
            let now = violated(r, act[r]);
            match (was, now) {
                (true, false) => n_viol -= 1,
                (false, true) => n_viol += 1,
                _ => {}
            }
        }
        if n_viol == 0 {
            consider(&x, obj, &mut best);
        }
    }

    let nodes = 1u64 << n;
    Ok(match best {
        None => BilpSolution::infeasible(n, nodes, start.elapsed()),
        Some((x, _)) => {
            let v = p.objective_value(&x);
            BilpSolution {
                x,
                objective: v,
                status: BilpStatus::Optimal,
                bound: v,
                gap: 0.0,
                nodes,
                wall_time: start.elapsed(),
            }
        }
    })
}
