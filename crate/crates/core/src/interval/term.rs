//! Expressions compiled to a flat node list for forward evaluation and
//! backward projection.

use thiserror::Error;

use super::arith::Interval;
use crate::dsl::{expr_to_string, BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("variable `{0}` has no slot in the box")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unary {
    Neg,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Tan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

/// Children always precede their parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(Unary, usize),
    Binary(Binary, usize, usize),
    PowI(usize, i32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    nodes: Vec<Node>,
    text: String,
}

impl Term {
    /// `slot` maps `(name, primed)` to a box index.
    pub fn compile(e: &Expr, slot: &dyn Fn(&str, bool) -> Option<usize>) -> Result<Term, CompileError> {
        let mut nodes = Vec::new();
        push(&e.fold(), slot, &mut nodes)?;
        Ok(Term { nodes, text: expr_to_string(e) })
    }

    pub fn constant(v: f64) -> Term {
        Term { nodes: vec![Node::Const(v)], text: format!("{v}") }
    }

    /// `self - other`.
    pub fn minus(&self, other: &Term) -> Term {
        let off = self.nodes.len();
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().map(|n| shift(*n, off)));
        nodes.push(Node::Binary(Binary::Sub, off - 1, nodes.len() - 1));
        Term { nodes, text: format!("{} - ({})", self.text, other.text) }
    }

    /// `-self`.
    pub fn negated(&self) -> Term {
        let mut nodes = self.nodes.clone();
        nodes.push(Node::Unary(Unary::Neg, nodes.len() - 1));
        Term { nodes, text: format!("-({})", self.text) }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Var(i) => Some(*i),
            _ => None,
        })
    }

    /// Constant term value, if the term has no variables.
    pub fn as_const(&self) -> Option<f64> {
        match self.nodes.as_slice() {
            [Node::Const(v)] => Some(*v),
            _ => None,
        }
    }

    /// Whether the term is affine in its variables.
    pub fn is_affine(&self) -> bool {
        // 0 constant, 1 affine, 2 anything else
        let mut deg: Vec<u8> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let d = match *n {
                Node::Const(_) => 0,
                Node::Var(_) => 1,
                Node::Unary(Unary::Neg, a) => deg[a],
                Node::Unary(_, a) => if deg[a] == 0 { 0 } else { 2 },
                Node::Binary(Binary::Add | Binary::Sub, a, b) => deg[a].max(deg[b]),
                Node::Binary(Binary::Mul, a, b) => if deg[a] == 0 || deg[b] == 0 { deg[a].max(deg[b]) } else { 2 },
                Node::Binary(Binary::Div, a, b) => if deg[b] == 0 { deg[a] } else { 2 },
                Node::Binary(_, a, b) => if deg[a].max(deg[b]) == 0 { 0 } else { 2 },
                Node::PowI(a, e) => if deg[a] == 0 || e == 1 { deg[a] } else if e == 0 { 0 } else { 2 },
            };
            deg.push(d);
        }
        deg.last().is_none_or(|&d| d <= 1)
    }

    /// Interval value of every node; the root is last.
    pub fn forward(&self, b: &[Interval], vals: &mut Vec<Interval>) {
        vals.clear();
        for n in &self.nodes {
            let v = match *n {
                Node::Const(c) => Interval::point(c),
                Node::Var(i) => b[i],
                Node::Unary(op, a) => unary(op, &vals[a]),
                Node::Binary(op, a, c) => binary(op, &vals[a], &vals[c]),
                Node::PowI(a, k) => vals[a].powi(k),
            };
            vals.push(v);
        }
    }

    pub fn eval(&self, b: &[Interval]) -> Interval {
        let mut vals = Vec::with_capacity(self.nodes.len());
        self.forward(b, &mut vals);
        *vals.last().expect("terms are non-empty")
    }

    /// Enclosure of the derivative of the term along `v` over the box `b`,
    /// or `None` when the term is not smooth there.
    pub fn directional(&self, b: &[Interval], v: &[Interval]) -> Option<Interval> {
        let zero = Interval::point(0.0);
        let mut vals: Vec<Interval> = Vec::with_capacity(self.nodes.len());
        let mut ders: Vec<Interval> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let (x, d) = match *n {
                Node::Const(c) => (Interval::point(c), zero),
                Node::Var(i) => (b[i], v[i]),
                Node::Unary(op, a) => {
                    let (x, da) = (vals[a], ders[a]);
                    let y = unary(op, &x);
                    let d = match op {
                        Unary::Neg => da.neg(),
                        Unary::Exp => y.mul(&da),
                        Unary::Log => da.div(&x),
                        Unary::Sqrt => da.div(&y.mul(&Interval::point(2.0))),
                        Unary::Abs if !x.contains_zero() => if x.lo > 0.0 { da } else { da.neg() },
                        Unary::Abs => return None,
                        Unary::Sin => x.cos().mul(&da),
                        Unary::Cos => x.sin().neg().mul(&da),
                        Unary::Tan => Interval::point(1.0).add(&y.powi(2)).mul(&da),
                    };
                    (y, d)
                }
                Node::Binary(op, a, c) => {
                    let (x, dx, y, dy) = (vals[a], ders[a], vals[c], ders[c]);
                    let r = binary(op, &x, &y);
                    let d = match op {
                        Binary::Add => dx.add(&dy),
                        Binary::Sub => dx.sub(&dy),
                        Binary::Mul => dx.mul(&y).add(&x.mul(&dy)),
                        Binary::Div => dx.sub(&x.div(&y).mul(&dy)).div(&y),
                        Binary::Pow if dy == zero => y.mul(&x.pow(&y.sub(&Interval::point(1.0)))).mul(&dx),
                        _ if dx == zero && dy == zero => zero,
                        _ => return None,
                    };
                    (r, d)
                }
                Node::PowI(a, k) => {
                    let (x, dx) = (vals[a], ders[a]);
                    let d = if k == 0 { zero } else { Interval::point(k as f64).mul(&x.powi(k - 1)).mul(&dx) };
                    (x.powi(k), d)
                }
            };
            vals.push(x);
            ders.push(d);
        }
        ders.last().copied()
    }

    /// Point evaluation at `x`.
    pub fn eval_point(&self, x: &[f64]) -> f64 {
        let mut vals: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match *n {
                Node::Const(c) => c,
                Node::Var(i) => x[i],
                Node::Unary(op, a) => {
                    let a = vals[a];
                    match op {
                        Unary::Neg => -a,
                        Unary::Exp => a.exp(),
                        Unary::Log => a.ln(),
                        Unary::Sqrt => a.sqrt(),
                        Unary::Abs => a.abs(),
                        Unary::Sin => a.sin(),
                        Unary::Cos => a.cos(),
                        Unary::Tan => a.tan(),
                    }
                }
                Node::Binary(op, a, c) => {
                    let (a, c) = (vals[a], vals[c]);
                    match op {
                        Binary::Add => a + c,
                        Binary::Sub => a - c,
                        Binary::Mul => a * c,
                        Binary::Div => a / c,
                        Binary::Pow => a.powf(c),
                        Binary::Min | Binary::Max if a.is_nan() || c.is_nan() => f64::NAN,
                        Binary::Min => a.min(c),
                        Binary::Max => a.max(c),
                    }
                }
                Node::PowI(a, k) => vals[a].powi(k),
            };
            vals.push(v);
        }
        *vals.last().expect("terms are non-empty")
    }

    /// Narrows the root to `target`, then projects back onto the box.
    /// Returns `false` when some node becomes empty.
    pub fn backward(&self, target: &Interval, b: &mut [Interval], vals: &mut [Interval]) -> bool {
        let root = vals.len() - 1;
        vals[root] = vals[root].intersect(target);
        if vals[root].is_empty() {
            return false;
        }
        for idx in (0..self.nodes.len()).rev() {
            let p = vals[idx];
            if p.is_empty() {
                return false;
            }
            match self.nodes[idx] {
                Node::Const(_) => {}
                Node::Var(i) => {
                    b[i] = b[i].intersect(&p);
                    if b[i].is_empty() {
                        return false;
                    }
                    // Several nodes may share a variable; later visits see the update.
                    vals[idx] = b[i];
                }
                Node::Unary(op, a) => {
                    let x = vals[a];
                    let proj = match op {
                        Unary::Neg => p.neg(),
                        Unary::Exp => p.ln(),
                        Unary::Log => p.exp(),
                        Unary::Sqrt => p.intersect(&Interval::NONNEG).powi(2),
                        Unary::Abs => {
                            let q = p.intersect(&Interval::NONNEG);
                            x.intersect(&q).hull(&x.intersect(&q.neg()))
                        }
                        Unary::Sin | Unary::Cos | Unary::Tan => x,
                    };
                    vals[a] = x.intersect(&proj);
                }
                Node::Binary(op, a, c) => {
                    let (x, y) = (vals[a], vals[c]);
                    let (px, py) = match op {
                        Binary::Add => (p.sub(&y), p.sub(&x)),
                        Binary::Sub => (p.add(&y), x.sub(&p)),
                        Binary::Mul => (p.div_rel(&y), p.div_rel(&x)),
                        Binary::Div => (p.mul(&y), x.div_rel(&p)),
                        Binary::Pow => (x, y),
                        Binary::Min => {
                            let floor = Interval::new(p.lo, f64::INFINITY);
                            (floor, floor)
                        }
                        Binary::Max => {
                            let ceil = Interval::new(f64::NEG_INFINITY, p.hi);
                            (ceil, ceil)
                        }
                    };
                    vals[a] = x.intersect(&px);
                    vals[c] = y.intersect(&py);
                    if vals[a].is_empty() || vals[c].is_empty() {
                        return false;
                    }
                    if op == Binary::Mul || op == Binary::Div || op == Binary::Add || op == Binary::Sub {
                        // Second operand narrowed using the first's refined value.
                        let x2 = vals[a];
                        let py2 = match op {
                            Binary::Add => p.sub(&x2),
                            Binary::Sub => x2.sub(&p),
                            Binary::Mul => p.div_rel(&x2),
                            _ => x2.div_rel(&p),
                        };
                        vals[c] = vals[c].intersect(&py2);
                    }
                }
                Node::PowI(a, k) => {
                    let x = vals[a];
                    vals[a] = x.intersect(&root_projection(&p, &x, k));
                }
            }
            if let Node::Unary(_, a) | Node::PowI(a, _) = self.nodes[idx] {
                if vals[a].is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

/// Values `x` in `cur` with `x^k` in `p`.
fn root_projection(p: &Interval, cur: &Interval, k: i32) -> Interval {
    if k <= 0 {
        return *cur;
    }
    if k == 1 {
        return *p;
    }
    let inv = 1.0 / k as f64;
    if k % 2 == 0 {
        let q = p.intersect(&Interval::NONNEG);
        if q.is_empty() {
            return Interval::EMPTY;
        }
        let r = Interval::rounded(q.lo.powf(inv), q.hi.powf(inv)).intersect(&Interval::NONNEG);
        cur.intersect(&r).hull(&cur.intersect(&r.neg()))
    } else {
        let root = |v: f64| v.signum() * v.abs().powf(inv);
        Interval::rounded(root(p.lo), root(p.hi))
    }
}

fn unary(op: Unary, a: &Interval) -> Interval {
    match op {
        Unary::Neg => a.neg(),
        Unary::Exp => a.exp(),
        Unary::Log => a.ln(),
        Unary::Sqrt => a.sqrt(),
        Unary::Abs => a.abs(),
        Unary::Sin => a.sin(),
        Unary::Cos => a.cos(),
        Unary::Tan => a.tan(),
    }
}

fn binary(op: Binary, a: &Interval, b: &Interval) -> Interval {
    match op {
        Binary::Add => a.add(b),
        Binary::Sub => a.sub(b),
        Binary::Mul => a.mul(b),
        Binary::Div => a.div(b),
        Binary::Pow => a.pow(b),
        Binary::Min => a.min(b),
        Binary::Max => a.max(b),
    }
}

fn shift(n: Node, off: usize) -> Node {
    match n {
        Node::Const(_) | Node::Var(_) => n,
        Node::Unary(op, a) => Node::Unary(op, a + off),
        Node::Binary(op, a, b) => Node::Binary(op, a + off, b + off),
        Node::PowI(a, k) => Node::PowI(a + off, k),
    }
}

fn push(e: &Expr, slot: &dyn Fn(&str, bool) -> Option<usize>, out: &mut Vec<Node>) -> Result<usize, CompileError> {
    let node = match e {
        Expr::Num(v) => Node::Const(*v),
        Expr::Var(n) => Node::Var(slot(n, false).ok_or_else(|| CompileError::UnknownVariable(n.clone()))?),
        Expr::Primed(n) => Node::Var(slot(n, true).ok_or_else(|| CompileError::UnknownVariable(format!("{n}'")))?),
        Expr::Neg(a) => Node::Unary(Unary::Neg, push(a, slot, out)?),
        Expr::Binary(BinOp::Pow, a, b) => match b.as_num() {
            Some(k) if k.fract() == 0.0 && k.abs() <= 64.0 => Node::PowI(push(a, slot, out)?, k as i32),
            _ => {
                let a = push(a, slot, out)?;
                Node::Binary(Binary::Pow, a, push(b, slot, out)?)
            }
        },
        Expr::Binary(op, a, b) => {
            let a = push(a, slot, out)?;
            let b = push(b, slot, out)?;
            let op = match op {
                BinOp::Add => Binary::Add,
                BinOp::Sub => Binary::Sub,
                BinOp::Mul => Binary::Mul,
                BinOp::Div => Binary::Div,
                BinOp::Pow => unreachable!("handled above"),
            };
            Node::Binary(op, a, b)
        }
        Expr::Call(f, args) => {
            let ids: Vec<usize> = args.iter().map(|a| push(a, slot, out)).collect::<Result<_, _>>()?;
            match f {
                Func::Min => Node::Binary(Binary::Min, ids[0], ids[1]),
                Func::Max => Node::Binary(Binary::Max, ids[0], ids[1]),
                Func::Sin => Node::Unary(Unary::Sin, ids[0]),
                Func::Cos => Node::Unary(Unary::Cos, ids[0]),
                Func::Tan => Node::Unary(Unary::Tan, ids[0]),
                Func::Exp => Node::Unary(Unary::Exp, ids[0]),
                Func::Log => Node::Unary(Unary::Log, ids[0]),
                Func::Sqrt => Node::Unary(Unary::Sqrt, ids[0]),
                Func::Abs => Node::Unary(Unary::Abs, ids[0]),
            }
        }
    };
    out.push(node);
    Ok(out.len() - 1)
}
