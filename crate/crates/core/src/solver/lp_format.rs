//! CPLEX-style LP text output, mainly for debugging models.

use std::collections::HashSet;
use std::fmt::Write;

use super::{LinearProgram, RowSense};

fn sanitize(name: &str, fallback: String, used: &mut HashSet<String>) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s = fallback;
    }
    while !used.insert(s.clone()) {
        s.push('_');
    }
    s
}

fn term(out: &mut String, first: bool, a: f64, name: &str) {
    if first {
        if a < 0.0 {
            let _ = write!(out, " - {} {}", -a, name);
        } else {
            let _ = write!(out, " {} {}", a, name);
        }
    } else if a < 0.0 {
        let _ = write!(out, " - {} {}", -a, name);
    } else {
        let _ = write!(out, " + {} {}", a, name);
    }
}

/// Renders `lp` in LP file format. `integers` are listed under `General`.
pub fn write_lp_format(lp: &LinearProgram, integers: &[usize]) -> String {
    let mut used = HashSet::new();
    let names: Vec<String> = lp
        .vars
        .iter()
        .enumerate()
        .map(|(j, v)| sanitize(&v.name, format!("x{j}"), &mut used))
        .collect();
    let mut out = String::from("Minimize\n obj:");
    let mut first = true;
    for (j, v) in lp.vars.iter().enumerate() {
        if v.cost != 0.0 {
            term(&mut out, first, v.cost, &names[j]);
            first = false;
        }
    }
    if lp.objective_offset != 0.0 {
        let _ = write!(out, " + {} constant", lp.objective_offset);
        first = false;
    }
    if first {
        out.push_str(" 0 ");
        out.push_str(names.first().map_or("x0", |s| s.as_str()));
    }
    out.push_str("\nSubject To\n");
    for (i, r) in lp.rows.iter().enumerate() {
        let name = sanitize(&r.name, format!("c{i}"), &mut used);
        let _ = write!(out, " {name}:");
        let mut first = true;
        for &(j, a) in &r.coefs {
            term(&mut out, first, a, &names[j]);
            first = false;
        }
        if first {
            out.push_str(" 0 x0");
        }
        let op = match r.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs);
    }
    out.push_str("Bounds\n");
    if lp.objective_offset != 0.0 {
        out.push_str(" constant = 1\n");
    }
    for (j, v) in lp.vars.iter().enumerate() {
        let n = &names[j];
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {n} free");
            }
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {n} = {}", v.lower);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {n} <= {}", v.lower, v.upper);
            }
            (true, false) => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " {n} >= {}", v.lower);
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {n} <= {}", v.upper);
            }
        }
    }
    if !integers.is_empty() {
        out.push_str("General\n");
        for &j in integers {
            let _ = writeln!(out, " {}", names[j]);
        }
    }
    out.push_str("End\n");
    out
}
