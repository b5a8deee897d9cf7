use std::fmt::Write;

use super::BilpProblem;

fn term(out: &mut String, first: bool, c: f64, name: &str) {
    if c < 0.0 {
        let _ = write!(out, " - {} {}", -c, name);
    } else if first {
        let _ = write!(out, " {c} {name}");
    } else {
        let _ = write!(out, " + {c} {name}");
    }
}

/// The problem in CPLEX LP text format, readable by most MILP solvers.
pub fn write_lp_format(p: &BilpProblem) -> String {
    let mut out = String::from("Maximize\n obj:");
    let mut first = true;
    for (i, &c) in p.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &p.var_name(i));
            first = false;
        }
    }
    if first {
        out.push_str(" 0 x1");
    }
    out.push_str("\nSubject To\n");
    for (r, row) in p.rows.iter().enumerate() {
        let _ = write!(out, " c{}:", r + 1);
        let mut first = true;
        for &(i, c) in &row.terms {
            term(&mut out, first, c, &p.var_name(i));
            first = false;
        }
        if first {
            out.push_str(" 0 x1");
        }
        let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
    }
    out.push_str("Binaries\n");
    for i in 0..p.n {
        let _ = writeln!(out, " {}", p.var_name(i));
    }
    out.push_str("End\n");
    out
}
