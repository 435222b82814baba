//! Pretty-printer producing text that parses back to the same tree.

use std::fmt::Write;

use super::ast::*;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
        _ => 5,
    }
}

fn num(v: f64) -> String {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        format!("-{}", -v)
    } else {
        format!("{v}")
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Num(v) => out.push_str(&num(*v)),
        Expr::Var(n) => out.push_str(n),
        Expr::Primed(n) => {
            out.push_str(n);
            out.push('\'');
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_child(out, inner, level(inner) < 3);
        }
        Expr::Binary(BinOp::Pow, a, b) => {
            write_child(out, a, level(a) <= 4);
            out.push_str(" ^ ");
            write_child(out, b, level(b) < 3);
        }
        Expr::Binary(op, a, b) => {
            let p = level(e);
            write_child(out, a, level(a) < p);
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, b, level(b) <= p);
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

pub fn formula_to_string(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, f);
    s
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a, op, b) => {
            out.push('(');
            write_expr(out, a);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b);
            out.push(')');
        }
        Formula::And(v) if v.is_empty() => out.push_str("true"),
        Formula::Or(v) if v.is_empty() => out.push_str("false"),
        Formula::And(v) | Formula::Or(v) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in v {
                out.push(' ');
                write_formula(out, g);
            }
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(out, g);
            out.push(')');
        }
    }
}

fn dist_to_string(d: &RvDecl) -> String {
    let prefix = if d.jump_flag { "j" } else { "" };
    match &d.distribution {
        DistributionAst::Bernoulli(p) => format!("{prefix}B({})", num(*p)),
        DistributionAst::Uniform(a, b) => format!("{prefix}U({}, {})", num(*a), num(*b)),
        DistributionAst::Normal(m, s) => format!("{prefix}N({}, {})", num(*m), num(*s)),
        DistributionAst::Exponential(r) => format!("{prefix}E({})", num(*r)),
        DistributionAst::Discrete(entries) => {
            let body: Vec<String> = entries
                .iter()
                .map(|(v, p)| format!("{}: {}", num(*v), expr_to_string(p)))
                .collect();
            format!("{prefix}DD({})", body.join(", "))
        }
    }
}

pub fn pretty_print(m: &ModelAst) -> SourceText {
    let mut out = String::new();
    for (name, body) in &m.macros {
        let _ = writeln!(out, "#define {name} {body}");
    }
    if !m.macros.is_empty() {
        out.push('\n');
    }
    for rv in &m.rv_decls {
        let _ = writeln!(out, "{} {};", dist_to_string(rv), rv.name);
    }
    for v in &m.var_decls {
        let _ = writeln!(out, "[{}, {}] {};", num(v.lo), num(v.hi), v.name);
    }
    for mode in &m.modes {
        let _ = writeln!(out, "\n{{ mode {};", mode.id);
        out.push_str("  invt:\n");
        for inv in &mode.invariants {
            let _ = writeln!(out, "    {};", formula_to_string(inv));
        }
        out.push_str("  flow:\n");
        for (var, rhs) in &mode.flows {
            let _ = writeln!(out, "    d/dt[{var}] = {};", expr_to_string(rhs));
        }
        if !mode.jumps.is_empty() || !mode.commands.is_empty() {
            out.push_str("  jump:\n");
        }
        for j in &mode.jumps {
            out.push_str("    ");
            if let Some(l) = &j.label {
                let _ = write!(out, "{l}: ");
            }
            let _ = writeln!(
                out,
                "{} ==> @{} {};",
                formula_to_string(&j.guard),
                j.target,
                formula_to_string(&j.reset)
            );
        }
        for c in &command_lines(mode) {
            out.push_str(c);
        }
        out.push_str("}\n");
    }
    let _ = writeln!(out, "\ninit:\n@{} {};", m.init.0, formula_to_string(&m.init.1));
    out.push_str("\ngoal:\n");
    for (id, g) in &m.goals {
        let _ = writeln!(out, "@{id} {};", formula_to_string(g));
    }
    SourceText::new(out, "<pretty>")
}

fn command_lines(mode: &ModeAst) -> Vec<String> {
    mode.commands
        .iter()
        .map(|c| {
            let mut s = String::from("    ");
            if let Some(l) = &c.label {
                let _ = write!(s, "{l}: ");
            }
            let _ = write!(s, "{} ==>", formula_to_string(&c.guard));
            for (i, b) in c.branches.iter().enumerate() {
                if i > 0 {
                    s.push_str("\n        +");
                }
                let _ = write!(s, " {} : @{} {}", expr_to_string(&b.prob), b.target, formula_to_string(&b.reset));
            }
            s.push_str(";\n");
            s
        })
        .collect()
}
