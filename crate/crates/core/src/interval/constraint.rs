//! Atoms `t > -slack` / `t >= -slack`, formulas over them, three-valued
//! evaluation and HC4 contraction.

use std::fmt;

use super::arith::Interval;
use super::term::{CompileError, Term};
use crate::dsl::{Formula, RelOp};

/// Relative shrink below which contraction stops.
pub const FIXPOINT_TOL: f64 = 1e-12;
/// Upper bound on forward-backward passes per contraction.
pub const MAX_PASSES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }
}

/// `term > -slack` when strict, `term >= -slack` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub term: Term,
    pub strict: bool,
    pub slack: f64,
}

impl Atom {
    pub fn new(term: Term, strict: bool) -> Atom {
        Atom { term, strict, slack: 0.0 }
    }

    /// Admissible values of the term. Strictness is dropped, which is sound
    /// for closed boxes.
    pub fn target(&self) -> Interval {
        Interval::new(-self.slack, f64::INFINITY)
    }

    pub fn eval(&self, b: &[Interval]) -> Truth {
        self.truth_of(&self.term.eval(b))
    }

    fn truth_of(&self, v: &Interval) -> Truth {
        if v.is_empty() {
            // Undefined everywhere on the box.
            return Truth::False;
        }
        let bound = -self.slack;
        let (sure, never) = if self.strict { (v.lo > bound, v.hi <= bound) } else { (v.lo >= bound, v.hi < bound) };
        if sure {
            Truth::True
        } else if never {
            Truth::False
        } else {
            Truth::Unknown
        }
    }

    pub fn holds_at(&self, x: &[f64]) -> bool {
        let v = self.term.eval_point(x);
        if self.strict {
            v > -self.slack
        } else {
            v >= -self.slack
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.strict { ">" } else { ">=" };
        write!(f, "{} {op} {}", self.term.text(), -self.slack + 0.0)
    }
}

/// Formula in negation normal form over [`Atom`]s.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    True,
    False,
    Atom(Atom),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl Constraint {
    /// A conjunction of affine atoms, so its solution set is convex.
    pub fn is_convex(&self) -> bool {
        match self {
            Constraint::True => true,
            Constraint::Atom(a) => a.term.is_affine(),
            Constraint::And(parts) => parts.iter().all(Constraint::is_convex),
            Constraint::False | Constraint::Or(_) => false,
        }
    }

    pub fn compile(f: &Formula, slot: &dyn Fn(&str, bool) -> Option<usize>) -> Result<Constraint, CompileError> {
        Constraint::build(&f.fold(), slot, false)
    }

    fn build(f: &Formula, slot: &dyn Fn(&str, bool) -> Option<usize>, negate: bool) -> Result<Constraint, CompileError> {
        Ok(match f {
            Formula::True => if negate { Constraint::False } else { Constraint::True },
            Formula::False => if negate { Constraint::True } else { Constraint::False },
            Formula::Not(g) => Constraint::build(g, slot, !negate)?,
            Formula::And(v) | Formula::Or(v) => {
                let parts = v.iter().map(|g| Constraint::build(g, slot, negate)).collect::<Result<Vec<_>, _>>()?;
                if matches!(f, Formula::And(_)) != negate {
                    Constraint::all(parts)
                } else {
                    Constraint::any(parts)
                }
            }
            Formula::Atom(lhs, op, rhs) => {
                let l = Term::compile(lhs, slot)?;
                let r = Term::compile(rhs, slot)?;
                let diff = |a: &Term, b: &Term| if b.as_const() == Some(0.0) { a.clone() } else { a.minus(b) };
                let ge = |strict| Constraint::Atom(Atom::new(diff(&l, &r), strict));
                let le = |strict| Constraint::Atom(Atom::new(diff(&r, &l), strict));
                match (op, negate) {
                    (RelOp::Ge, false) | (RelOp::Lt, true) => ge(false),
                    (RelOp::Gt, false) | (RelOp::Le, true) => ge(true),
                    (RelOp::Le, false) | (RelOp::Gt, true) => le(false),
                    (RelOp::Lt, false) | (RelOp::Ge, true) => le(true),
                    (RelOp::Eq, false) => Constraint::all(vec![ge(false), le(false)]),
                    (RelOp::Eq, true) => Constraint::any(vec![ge(true), le(true)]),
                }
            }
        })
    }

    pub fn all(parts: Vec<Constraint>) -> Constraint {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Constraint::True => {}
                Constraint::False => return Constraint::False,
                Constraint::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Constraint::True,
            1 => out.pop().unwrap(),
            _ => Constraint::And(out),
        }
    }

    pub fn any(parts: Vec<Constraint>) -> Constraint {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Constraint::False => {}
                Constraint::True => return Constraint::True,
                Constraint::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Constraint::False,
            1 => out.pop().unwrap(),
            _ => Constraint::Or(out),
        }
    }

    /// Replaces every atom `t ⋈ 0` by `t ⋈ -delta`.
    pub fn weaken(&self, delta: f64) -> Constraint {
        match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => Constraint::Atom(Atom { slack: delta, ..a.clone() }),
            Constraint::And(v) => Constraint::And(v.iter().map(|c| c.weaken(delta)).collect()),
            Constraint::Or(v) => Constraint::Or(v.iter().map(|c| c.weaken(delta)).collect()),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Atom(a) => out.push(a),
            Constraint::And(v) | Constraint::Or(v) => v.iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn eval(&self, b: &[Interval]) -> Truth {
        match self {
            Constraint::True => Truth::True,
            Constraint::False => Truth::False,
            Constraint::Atom(a) => a.eval(b),
            Constraint::And(v) => {
                let mut t = Truth::True;
                for c in v {
                    t = t.and(c.eval(b));
                    if t == Truth::False {
                        break;
                    }
                }
                t
            }
            Constraint::Or(v) => {
                let mut t = Truth::False;
                for c in v {
                    t = t.or(c.eval(b));
                    if t == Truth::True {
                        break;
                    }
                }
                t
            }
        }
    }

    pub fn holds_at(&self, x: &[f64]) -> bool {
        match self {
            Constraint::True => true,
            Constraint::False => false,
            Constraint::Atom(a) => a.holds_at(x),
            Constraint::And(v) => v.iter().all(|c| c.holds_at(x)),
            Constraint::Or(v) => v.iter().any(|c| c.holds_at(x)),
        }
    }

    /// Narrows `b` without removing any point that satisfies the constraint.
    /// Returns `false` when the box becomes empty.
    pub fn contract(&self, b: &mut [Interval]) -> bool {
        match self {
            Constraint::True => true,
            Constraint::False => false,
            Constraint::Atom(a) => hc4_revise(a, b),
            Constraint::And(v) => fixpoint(b, |b| v.iter().all(|c| c.contract(b))),
            Constraint::Or(v) => {
                let mut hull: Option<Vec<Interval>> = None;
                for c in v {
                    let mut branch = b.to_vec();
                    if c.contract(&mut branch) {
                        hull = Some(match hull {
                            None => branch,
                            Some(h) => h.iter().zip(&branch).map(|(x, y)| x.hull(y)).collect(),
                        });
                    }
                }
                match hull {
                    Some(h) => {
                        b.copy_from_slice(&h);
                        true
                    }
                    None => false,
                }
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => write!(f, "true"),
            Constraint::False => write!(f, "false"),
            Constraint::Atom(a) => write!(f, "({a})"),
            Constraint::And(v) | Constraint::Or(v) => {
                write!(f, "({}", if matches!(self, Constraint::And(_)) { "and" } else { "or" })?;
                for c in v {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Largest relative narrowing of any component.
pub fn relative_shrink(before: &[Interval], after: &[Interval]) -> f64 {
    before
        .iter()
        .zip(after)
        .map(|(x, y)| {
            let (wx, wy) = (x.width(), y.width());
            if wx == wy {
                0.0
            } else if !wx.is_finite() {
                1.0
            } else {
                (wx - wy) / wx.max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max)
}

/// Repeats `pass` until the box stops shrinking.
pub fn fixpoint(b: &mut [Interval], mut pass: impl FnMut(&mut [Interval]) -> bool) -> bool {
    for _ in 0..MAX_PASSES {
        let before = b.to_vec();
        if !pass(b) {
            return false;
        }
        if relative_shrink(&before, b) < FIXPOINT_TOL {
            break;
        }
    }
    true
}

/// Forward-backward contraction of one atom iterated to a fixpoint.
pub fn hc4_revise(a: &Atom, b: &mut [Interval]) -> bool {
    let target = a.target();
    let mut vals = Vec::with_capacity(a.term.nodes().len());
    let ok = fixpoint(b, |b| {
        a.term.forward(b, &mut vals);
        a.term.backward(&target, b, &mut vals)
    });
    if !ok {
        b.iter_mut().for_each(|x| *x = Interval::EMPTY);
    }
    ok
}
