//! CPLEX-style LP text.

use std::fmt::Write;

use super::{num, MipDocument, VarKind};

const TERMS_PER_LINE: usize = 6;

fn terms(doc: &MipDocument, terms: &[(usize, f64)], out: &mut String) {
    if terms.is_empty() {
        // an empty left-hand side still needs a variable
        let _ = write!(out, " 0 {}", doc.variables[0].name);
        return;
    }
    for (n, &(v, c)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        let name = &doc.variables[v].name;
        if n == 0 && sign == "+" {
            if mag == 1.0 {
                let _ = write!(out, " {name}");
            } else {
                let _ = write!(out, " {} {name}", num(mag));
            }
        } else if mag == 1.0 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {} {name}", num(mag));
        }
    }
}

pub(super) fn write(doc: &MipDocument) -> String {
    let mut out = String::new();
    out.push_str("\\ weighted throughput model\n");
    let _ = writeln!(out, "\\ objective offset {}", num(doc.offset));
    out.push_str("Minimize\n obj:");
    terms(doc, &doc.objective, &mut out);
    out.push_str("\nSubject To\n");
    let mut family = 0;
    for row in &doc.rows {
        if row.family != family {
            family = row.family;
            let _ = writeln!(out, "\\ family {family}");
        }
        let _ = write!(out, " {}:", row.name);
        terms(doc, &row.terms, &mut out);
        let _ = writeln!(out, " {} {}", row.sense.lp(), num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &doc.variables {
        if let (VarKind::Continuous, Some(u)) = (v.kind, v.upper) {
            let _ = writeln!(out, " 0 <= {} <= {}", v.name, num(u));
        }
    }
    out.push_str("Binaries\n");
    for (n, v) in doc.variables.iter().filter(|v| v.kind == VarKind::Binary).enumerate() {
        out.push(' ');
        out.push_str(&v.name);
        if n % TERMS_PER_LINE == TERMS_PER_LINE - 1 {
            out.push('\n');
        }
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("End\n");
    out
}
