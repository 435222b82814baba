//! Interval arithmetic, interval evaluation of terms and formulas, and
//! HC4 contraction.

mod arith;
mod constraint;
mod term;

pub use arith::{Interval, WIDEN_ULPS};
pub use constraint::{fixpoint, hc4_revise, relative_shrink, Atom, Constraint, Truth, FIXPOINT_TOL, MAX_PASSES};
pub use term::{Binary, CompileError, Node, Term, Unary};

use thiserror::Error;

use crate::dsl::{Expr, Formula};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("`{0}` is undefined on the whole box")]
    DomainError(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Box dimensions are named by `names`; unprimed references only.
fn slot<'a>(names: &'a [&'a str]) -> impl Fn(&str, bool) -> Option<usize> + 'a {
    move |n, primed| if primed { None } else { names.iter().position(|m| *m == n) }
}

pub fn box_width(b: &[Interval]) -> f64 {
    b.iter().map(Interval::width).fold(0.0, f64::max)
}

pub fn box_is_empty(b: &[Interval]) -> bool {
    b.iter().any(Interval::is_empty)
}

/// Enclosure of `e` over the box.
pub fn eval_expr(e: &Expr, names: &[&str], b: &[Interval]) -> Result<Interval, IntervalError> {
    let t = Term::compile(e, &slot(names))?;
    let v = t.eval(b);
    if v.is_empty() && !box_is_empty(b) {
        return Err(IntervalError::DomainError(t.text().to_string()));
    }
    Ok(v)
}

pub fn eval_formula(f: &Formula, names: &[&str], b: &[Interval]) -> Result<Truth, IntervalError> {
    Ok(Constraint::compile(f, &slot(names))?.eval(b))
}

/// Contracts `b` by the formula; returns the narrowed box (empty components
/// when infeasible).
pub fn contract_formula(f: &Formula, names: &[&str], b: &[Interval]) -> Result<Vec<Interval>, IntervalError> {
    let c = Constraint::compile(f, &slot(names))?;
    let mut out = b.to_vec();
    if !c.contract(&mut out) {
        out.iter_mut().for_each(|x| *x = Interval::EMPTY);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_model, SourceText};

    fn formula(src: &str) -> Formula {
        let text = format!("[-100,100] x; [-100,100] y; [0,1] time; {{ mode 1; invt: {src}; flow: }} init: @1 true; goal: @1 true;");
        parse_model(&SourceText::inline(text)).unwrap().modes[0].invariants[0].clone()
    }

    fn expr(src: &str) -> Expr {
        match formula(&format!("({src}) = 0")) {
            Formula::Atom(e, ..) => e,
            f => panic!("{f:?}"),
        }
    }

    const XY: [&str; 2] = ["x", "y"];

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn eval_sum() {
        let v = eval_expr(&expr("x + y"), &XY, &[iv(1.0, 2.0), iv(3.0, 4.0)]).unwrap();
        assert!(iv(4.0, 6.0).subset_of(&v) && v.subset_of(&iv(3.999999, 6.000001)));
    }

    #[test]
    fn eval_quadratic_against_sampling() {
        let e = expr("x ^ 2 - 2 * x");
        let v = eval_expr(&e, &XY, &[iv(0.0, 1.0), iv(0.0, 0.0)]).unwrap();
        assert!(iv(-1.0, 0.0).subset_of(&v));
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            assert!(v.contains(x * x - 2.0 * x));
        }
    }

    #[test]
    fn domain_error_only_when_wholly_outside() {
        let b = [iv(-2.0, -1.0), iv(0.0, 1.0)];
        assert!(matches!(eval_expr(&expr("log(x)"), &XY, &b), Err(IntervalError::DomainError(_))));
        assert!(eval_expr(&expr("log(y)"), &XY, &b).is_ok());
    }

    #[test]
    fn three_valued() {
        let f = formula("(x >= 0)");
        let t = |lo, hi| eval_formula(&f, &XY, &[iv(lo, hi), iv(0.0, 0.0)]).unwrap();
        assert_eq!(t(1.0, 2.0), Truth::True);
        assert_eq!(t(-2.0, -1.0), Truth::False);
        assert_eq!(t(-1.0, 1.0), Truth::Unknown);
    }

    #[test]
    fn revise_square() {
        let out = contract_formula(&formula("(x ^ 2 <= 4)"), &XY, &[iv(0.0, 10.0), iv(0.0, 1.0)]).unwrap();
        assert!(out[0].lo == 0.0 && (out[0].hi - 2.0).abs() < 1e-9, "{}", out[0]);
    }

    #[test]
    fn revise_infeasible() {
        let out = contract_formula(&formula("(x >= 5)"), &XY, &[iv(0.0, 3.0), iv(0.0, 1.0)]).unwrap();
        assert!(box_is_empty(&out));
    }

    #[test]
    fn revise_projection() {
        let out = contract_formula(&formula("(x + y = 0)"), &XY, &[iv(-1.0, 1.0), iv(0.0, 2.0)]).unwrap();
        assert!((out[0].lo + 1.0).abs() < 1e-9 && out[0].hi.abs() < 1e-9, "{}", out[0]);
        assert!(out[1].lo.abs() < 1e-9 && (out[1].hi - 1.0).abs() < 1e-9, "{}", out[1]);
    }

    #[test]
    fn weakened_atom_display() {
        let c = Constraint::compile(&formula("(x > 0)"), &slot(&XY)).unwrap().weaken(0.001);
        assert_eq!(c.to_string(), "(x > -0.001)");
    }

    #[test]
    fn negation_and_disjunction() {
        let f = formula("(not (or (x < 1) (x > 2)))");
        let out = contract_formula(&f, &XY, &[iv(0.0, 5.0), iv(0.0, 1.0)]).unwrap();
        assert!(out[0].subset_of(&iv(0.999, 2.001)));
        let f = formula("(or (x <= -50) (x >= 50))");
        let out = contract_formula(&f, &XY, &[iv(-60.0, 55.0), iv(0.0, 1.0)]).unwrap();
        assert_eq!(out[0], iv(-60.0, 55.0));
        let out = contract_formula(&f, &XY, &[iv(-10.0, 55.0), iv(0.0, 1.0)]).unwrap();
        assert!(out[0].lo >= 49.99);
    }

    #[test]
    fn affine_terms() {
        for (src, affine) in [("2 * x - y / 4 + 3", true), ("-(x + 1) * 5", true), ("x * y", false), ("x ^ 2", false), ("sin(x)", false), ("exp(1) * x", true), ("1 / x", false)] {
            assert_eq!(Term::compile(&expr(src), &slot(&XY)).unwrap().is_affine(), affine, "{src}");
        }
        let c = |src: &str| Constraint::compile(&formula(src), &slot(&XY)).unwrap();
        assert!(c("(and (x >= 0) (y <= x + 1))").is_convex());
        assert!(!c("(or (x >= 0) (y <= 1))").is_convex());
        assert!(!c("x * x <= 1").is_convex());
    }

    #[test]
    fn directional_derivatives() {
        let at = |src: &str, x: f64, y: f64| {
            let t = Term::compile(&expr(src), &slot(&XY)).unwrap();
            t.directional(&[Interval::point(x), Interval::point(y)], &[Interval::point(1.0), Interval::point(2.0)])
        };
        for (src, x, y, want) in [
            ("x * y", 3.0, 4.0, 4.0 + 3.0 * 2.0),
            ("exp(x) - y ^ 3", 0.0, 1.0, 1.0 - 6.0),
            ("sin(x) / y", 0.0, 2.0, 0.5),
            ("sqrt(x) + log(y)", 4.0, 1.0, 0.25 + 2.0),
        ] {
            let d = at(src, x, y).unwrap();
            assert!(d.contains(want) && d.width() < 1e-9, "{src}: {d}");
        }
        assert!(at("abs(x)", 0.0, 0.0).is_none());
        assert!(at("abs(x)", -1.0, 0.0).unwrap().contains(-1.0));
    }
}
