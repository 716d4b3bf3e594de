//! Fixed-format MPS with generated eight-character names. Comment lines map
//! them back to the long names.

use std::fmt::Write;

use super::{num, MipDocument, Sense, VarKind};

const OBJ: &str = "obj";

/// Fits a number into the twelve-character numeric field.
fn field_num(v: f64) -> String {
    let s = num(v);
    if s.len() <= 12 {
        return s;
    }
    let int_digits = format!("{:.0}", v.abs()).len() + usize::from(v < 0.0);
    if int_digits < 11 {
        let decimals = 11 - int_digits;
        let s = format!("{v:.decimals$}");
        if s.len() <= 12 {
            return s;
        }
    }
    (1..=6)
        .rev()
        .map(|p| format!("{v:.p$e}"))
        .find(|s| s.len() <= 12)
        .unwrap_or_else(|| format!("{v:.0e}"))
}

fn line(out: &mut String, fields: [&str; 6]) {
    let s = format!(
        " {:<2} {:<8}  {:<8}  {:<12}   {:<8}  {:<12}",
        fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]
    );
    out.push_str(s.trim_end());
    out.push('\n');
}

pub(super) fn write(doc: &MipDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* weighted throughput model, objective offset {}", num(doc.offset));
    for (i, v) in doc.variables.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", MipDocument::short_column(i), v.name);
    }
    for (r, row) in doc.rows.iter().enumerate() {
        let _ = writeln!(out, "* {} {} family {}", MipDocument::short_row(r), row.name, row.family);
    }
    out.push_str("NAME          DWSRP\nROWS\n");
    line(&mut out, ["N", OBJ, "", "", "", ""]);
    for (r, row) in doc.rows.iter().enumerate() {
        let t = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        line(&mut out, [t, &MipDocument::short_row(r), "", "", "", ""]);
    }

    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); doc.variables.len()];
    for &(v, c) in &doc.objective {
        columns[v].push((OBJ.to_string(), c));
    }
    for (r, row) in doc.rows.iter().enumerate() {
        for &(v, c) in &row.terms {
            columns[v].push((MipDocument::short_row(r), c));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (v, entries) in columns.iter().enumerate() {
        let binary = doc.variables[v].kind == VarKind::Binary;
        if binary != in_int {
            let tag = if binary { "'INTORG'" } else { "'INTEND'" };
            let name = format!("M{marker:07}");
            marker += 1;
            line(&mut out, ["", &name, "'MARKER'", "", tag, ""]);
            in_int = binary;
        }
        let col = MipDocument::short_column(v);
        if entries.is_empty() {
            line(&mut out, ["", &col, OBJ, "0", "", ""]);
        }
        for pair in entries.chunks(2) {
            let a = field_num(pair[0].1);
            match pair.get(1) {
                Some((r2, c2)) => line(&mut out, ["", &col, &pair[0].0, &a, r2, &field_num(*c2)]),
                None => line(&mut out, ["", &col, &pair[0].0, &a, "", ""]),
            }
        }
    }
    if in_int {
        line(&mut out, ["", &format!("M{marker:07}"), "'MARKER'", "", "'INTEND'", ""]);
    }

    out.push_str("RHS\n");
    for (r, row) in doc.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            line(&mut out, ["", "RHS", &MipDocument::short_row(r), &field_num(row.rhs), "", ""]);
        }
    }
    out.push_str("BOUNDS\n");
    for (v, var) in doc.variables.iter().enumerate() {
        let col = MipDocument::short_column(v);
        match (var.kind, var.upper) {
            (VarKind::Binary, _) => line(&mut out, ["BV", "BND", &col, "", "", ""]),
            (VarKind::Continuous, Some(u)) => line(&mut out, ["UP", "BND", &col, &field_num(u), "", ""]),
            (VarKind::Continuous, None) => {}
        }
    }
    out.push_str("ENDATA\n");
    out
}
