//! Text export of the built model in the LP interchange format, so the
//! problem can be cross-checked against external solvers. Output is
//! byte-deterministic for a fixed model.

use super::model::{MilpModel, RowSense, VarKind, VarRef};

fn var_name(v: &VarRef) -> String {
    match v {
        VarRef::X(l) => format!("x_{}_{}_{}_{}", l.from, l.from_if, l.to, l.to_if),
        VarRef::XTask(l, b) => {
            format!("xb_{}_{}_{}_{}_t{}", l.from, l.from_if, l.to, l.to_if, b)
        }
        VarRef::YBs(n, b) => format!("y_{n}_t{b}"),
        VarRef::YCloud(b) => format!("y_cloud_t{b}"),
        VarRef::W(p, b) => format!("w_{p}_t{b}"),
        VarRef::Z(l) => format!("z_{}_{}_{}_{}", l.from, l.from_if, l.to, l.to_if),
        VarRef::U(l, b) => format!("u_{}_{}_{}_{}_t{}", l.from, l.from_if, l.to, l.to_if, b),
    }
}

fn push_term(out: &mut String, line_len: &mut usize, coef: f64, name: &str, first: bool) {
    let piece = if first {
        if coef == 1.0 {
            name.to_string()
        } else if coef == -1.0 {
            format!("- {name}")
        } else {
            format!("{coef} {name}")
        }
    } else if coef >= 0.0 {
        if coef == 1.0 {
            format!(" + {name}")
        } else {
            format!(" + {coef} {name}")
        }
    } else if coef == -1.0 {
        format!(" - {name}")
    } else {
        format!(" - {} {name}", -coef)
    };
    if *line_len + piece.len() > 200 {
        out.push_str("\n ");
        *line_len = 1;
    }
    *line_len += piece.len();
    out.push_str(&piece);
}

/// Serializes the model. Variables with a zero objective coefficient are
/// still declared through the bounds and binary sections.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ mmWave backhaul offloading, step-1 model\n");
    out.push_str("Minimize\n obj:");
    let mut line_len = 5;
    let mut first = true;
    for v in &model.vars {
        if v.objective != 0.0 {
            push_term(&mut out, &mut line_len, v.objective, &var_name(&v.var), first);
            first = false;
        }
    }
    if first {
        out.push_str(" 0 x_dummy");
    }
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        out.push_str(&format!(" {}:", row.name));
        let mut line_len = row.name.len() + 2;
        let mut first = true;
        for &(j, coef) in &row.terms {
            push_term(
                &mut out,
                &mut line_len,
                coef,
                &var_name(&model.vars[j].var),
                first,
            );
            first = false;
        }
        let sense = match row.sense {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        };
        out.push_str(&format!(" {} {}\n", sense, row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        if v.kind == VarKind::Continuous {
            out.push_str(&format!(
                " {} <= {} <= {}\n",
                v.lower,
                var_name(&v.var),
                v.upper
            ));
        }
    }
    out.push_str("Binaries\n");
    let mut line_len = 0usize;
    for v in &model.vars {
        if v.kind == VarKind::Binary {
            let name = var_name(&v.var);
            if line_len + name.len() + 1 > 200 {
                out.push('\n');
                line_len = 0;
            }
            out.push(' ');
            out.push_str(&name);
            line_len += name.len() + 1;
        }
    }
    out.push_str("\nEnd\n");
    out
}
