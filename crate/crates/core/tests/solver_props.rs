mod common;

use common::rk4;
use proptest::prelude::*;
use stochreach::dsl::{BinOp, Expr, Formula, RelOp};
use stochreach::interval::{Constraint, Interval, Term};
use stochreach::solver::{delta_weaken, enclose_flow, FlowSettings};

fn slot(n: &str, _: bool) -> Option<usize> {
    ["x", "y"].iter().position(|m| *m == n)
}

fn var(i: usize) -> Expr {
    Expr::var(["x", "y"][i])
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn poly() -> impl Strategy<Value = Expr> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0).prop_map(|(a, b, c, d)| {
        let xy = Expr::bin(BinOp::Mul, var(0), var(1));
        let sq = Expr::bin(BinOp::Pow, var(0), num(2.0));
        [Expr::bin(BinOp::Mul, num(a), var(0)), Expr::bin(BinOp::Mul, num(b), var(1)), Expr::bin(BinOp::Mul, num(c), xy), Expr::bin(BinOp::Mul, num(d), sq)]
            .into_iter()
            .reduce(|l, r| Expr::bin(BinOp::Add, l, r))
            .unwrap()
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    let atom = (poly(), prop::sample::select(vec![RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge, RelOp::Eq]), -3.0f64..3.0)
        .prop_map(|(e, op, c)| Formula::atom(e, op, num(c)));
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::Or),
            inner.prop_map(|f| Formula::Not(Box::new(f))),
        ]
    })
}

fn field_of(exprs: &[Expr]) -> Vec<Term> {
    exprs.iter().map(|e| Term::compile(e, &slot).unwrap()).collect()
}

/// Point evaluation straight from the expression tree.
fn eval(e: &Expr, x: &[f64]) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Var(n) => x[slot(n, false).unwrap()],
        Expr::Binary(op, a, b) => stochreach::dsl::apply_binop(*op, eval(a, x), eval(b, x)),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weakening_is_implied(f in formula(), delta in 0.0f64..0.5, pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 50)) {
        let c = Constraint::compile(&f, &slot).unwrap();
        let w = delta_weaken(&c, delta);
        for (x, y) in pts {
            if c.holds_at(&[x, y]) {
                prop_assert!(w.holds_at(&[x, y]), "{c} holds at ({x}, {y}) but {w} does not");
            }
        }
    }

    #[test]
    fn weakened_equality_accepts_band(c in -3.0f64..3.0, delta in 0.001f64..0.5, s in -1.0f64..1.0) {
        let f = Formula::atom(var(0), RelOp::Eq, num(c));
        let w = delta_weaken(&Constraint::compile(&f, &slot).unwrap(), delta);
        prop_assert!(w.holds_at(&[c + 0.999 * s * delta, 0.0]));
        prop_assert!(!w.holds_at(&[c + 1.001 * delta * s.signum(), 0.0]) || s == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn enclosure_contains_trajectories(fx in poly(), fy in poly(), x0 in -0.5f64..0.5, y0 in -0.5f64..0.5, w in 0.0f64..0.2,
                                       t_end in 0.05f64..0.6, seeds in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 100)) {
        let exprs = [fx, fy];
        let init = [Interval::new(x0, x0 + w), Interval::new(y0, y0 + w)];
        let domain = [Interval::new(-1e6, 1e6), Interval::new(-1e6, 1e6)];
        let Ok(enc) = enclose_flow(&field_of(&exprs), &init, t_end, &domain, &FlowSettings::uniform(0.02, 20)) else {
            return Ok(());
        };
        prop_assert_eq!(enc.tiles.first().unwrap().time.lo, 0.0);
        prop_assert_eq!(enc.tiles.last().unwrap().time.hi, t_end);
        for pair in enc.tiles.windows(2) {
            prop_assert_eq!(pair[0].time.hi, pair[1].time.lo);
        }
        let f = |x: &[f64]| exprs.iter().map(|e| eval(e, x)).collect::<Vec<f64>>();
        for (a, b) in seeds {
            let mut x = vec![x0 + a * w, y0 + b * w];
            for tile in &enc.tiles {
                let check = |x: &[f64], t: f64| -> Result<(), TestCaseError> {
                    if x.iter().any(|v| !v.is_finite() || v.abs() > 1e5) {
                        return Ok(());
                    }
                    for (i, v) in x.iter().enumerate() {
                        let s = tile.state[i];
                        let slack = 1e-7 * (1.0 + v.abs());
                        prop_assert!(s.lo - slack <= *v && *v <= s.hi + slack, "component {i} = {v} at t = {t} outside {s}");
                    }
                    Ok(())
                };
                check(&x, tile.time.lo)?;
                let len = tile.time.width();
                x = rk4(&f, &x, len, ((len / 1e-4).ceil() as usize).max(1));
                check(&x, tile.time.hi)?;
            }
        }
    }
}
