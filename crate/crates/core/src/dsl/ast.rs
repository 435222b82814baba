//! Syntax trees for model files.

use std::collections::BTreeMap;
use std::fmt;

/// Position of a token in its source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Source text plus a label used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceText {
    pub content: String,
    pub origin: String,
}

impl SourceText {
    pub fn new(content: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceText {
            content: content.into(),
            origin: origin.into(),
        }
    }

    pub fn inline(content: impl Into<String>) -> Self {
        Self::new(content, "<inline>")
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Ok(Self::new(content, path.display().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Built-in real functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn apply(self, args: &[f64]) -> f64 {
        match self {
            Func::Sin => args[0].sin(),
            Func::Cos => args[0].cos(),
            Func::Tan => args[0].tan(),
            Func::Exp => args[0].exp(),
            Func::Log => args[0].ln(),
            Func::Sqrt => args[0].sqrt(),
            Func::Abs => args[0].abs(),
            // NaN marks an undefined argument and must propagate.
            Func::Min if args[0].is_nan() || args[1].is_nan() => f64::NAN,
            Func::Max if args[0].is_nan() || args[1].is_nan() => f64::NAN,
            Func::Min => args[0].min(args[1]),
            Func::Max => args[0].max(args[1]),
        }
    }
}

/// Real-valued term.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    /// Post-jump value `x'`; legal only inside resets.
    Primed(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn primed(name: impl Into<String>) -> Expr {
        Expr::Primed(name.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Calls `f` on every variable reference as `(name, primed)`.
    pub fn visit_vars(&self, f: &mut dyn FnMut(&str, bool)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => f(n, false),
            Expr::Primed(n) => f(n, true),
            Expr::Neg(e) => e.visit_vars(f),
            Expr::Binary(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut hit = false;
        self.visit_vars(&mut |n, _| hit |= n == name);
        hit
    }

    /// Rebuilds the tree, replacing leaves through `f`. Returning `None` keeps the leaf.
    pub fn map_vars(&self, f: &dyn Fn(&str, bool) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(n) => f(n, false).unwrap_or_else(|| self.clone()),
            Expr::Primed(n) => f(n, true).unwrap_or_else(|| self.clone()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.map_vars(f))),
            Expr::Binary(op, a, b) => Expr::bin(*op, a.map_vars(f), b.map_vars(f)),
            Expr::Call(func, args) => Expr::Call(*func, args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    /// Folds constant subtrees. Non-finite intermediate results are left unfolded.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Primed(_) => self.clone(),
            Expr::Neg(e) => match e.fold() {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            },
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.fold(), b.fold());
                if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
                    let v = apply_binop(*op, *x, *y);
                    if v.is_finite() {
                        return Expr::Num(v);
                    }
                }
                Expr::bin(*op, a, b)
            }
            Expr::Call(func, args) => {
                let args: Vec<Expr> = args.iter().map(Expr::fold).collect();
                let nums: Option<Vec<f64>> = args.iter().map(Expr::as_num).collect();
                if let Some(nums) = nums {
                    let v = func.apply(&nums);
                    if v.is_finite() {
                        return Expr::Num(v);
                    }
                }
                Expr::Call(*func, args)
            }
        }
    }

    /// Point evaluation; `lookup` resolves `(name, primed)`.
    pub fn eval(&self, lookup: &dyn Fn(&str, bool) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Expr::Num(v) => *v,
            Expr::Var(n) => lookup(n, false)?,
            Expr::Primed(n) => lookup(n, true)?,
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Binary(op, a, b) => apply_binop(*op, a.eval(lookup)?, b.eval(lookup)?),
            Expr::Call(func, args) => {
                let vals: Option<Vec<f64>> = args.iter().map(|a| a.eval(lookup)).collect();
                func.apply(&vals?)
            }
        })
    }
}

pub fn apply_binop(op: BinOp, x: f64, y: f64) -> f64 {
    match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => x / y,
        BinOp::Pow => {
            if y.fract() == 0.0 && y.abs() < i32::MAX as f64 {
                x.powi(y as i32)
            } else {
                x.powf(y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "=",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            RelOp::Lt => lhs < rhs,
            RelOp::Le => lhs <= rhs,
            RelOp::Eq => lhs == rhs,
            RelOp::Ge => lhs >= rhs,
            RelOp::Gt => lhs > rhs,
        }
    }
}

/// Quantifier-free formula.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Atom(Expr, RelOp, Expr),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(lhs: Expr, op: RelOp, rhs: Expr) -> Formula {
        Formula::Atom(lhs, op, rhs)
    }

    /// Conjunction that flattens nested `And`s and drops `True`.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn visit_exprs(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a, _, b) => {
                f(a);
                f(b);
            }
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| g.visit_exprs(f)),
            Formula::Not(g) => g.visit_exprs(f),
        }
    }

    pub fn visit_vars(&self, f: &mut dyn FnMut(&str, bool)) {
        self.visit_exprs(&mut |e| e.visit_vars(f));
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut hit = false;
        self.visit_vars(&mut |n, _| hit |= n == name);
        hit
    }

    pub fn map_vars(&self, f: &dyn Fn(&str, bool) -> Option<Expr>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a, op, b) => Formula::Atom(a.map_vars(f), *op, b.map_vars(f)),
            Formula::And(v) => Formula::And(v.iter().map(|g| g.map_vars(f)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.map_vars(f)).collect()),
            Formula::Not(g) => Formula::Not(Box::new(g.map_vars(f))),
        }
    }

    /// Constant-folds terms and decides ground atoms, simplifying connectives.
    pub fn fold(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a, op, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (&a, &b) {
                    (Expr::Num(x), Expr::Num(y)) => {
                        if op.holds(*x, *y) {
                            Formula::True
                        } else {
                            Formula::False
                        }
                    }
                    _ => Formula::Atom(a, *op, b),
                }
            }
            Formula::And(v) => {
                let mut out = Vec::new();
                for g in v {
                    match g.fold() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(v) => {
                let mut out = Vec::new();
                for g in v {
                    match g.fold() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Not(g) => match g.fold() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                other => Formula::Not(Box::new(other)),
            },
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str, bool) -> Option<f64>) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a, op, b) => op.holds(a.eval(lookup)?, b.eval(lookup)?),
            Formula::And(v) => {
                let mut all = true;
                for g in v {
                    all &= g.eval(lookup)?;
                }
                all
            }
            Formula::Or(v) => {
                let mut any = false;
                for g in v {
                    any |= g.eval(lookup)?;
                }
                any
            }
            Formula::Not(g) => !g.eval(lookup)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionAst {
    Bernoulli(f64),
    Uniform(f64, f64),
    /// Mean and standard deviation.
    Normal(f64, f64),
    Exponential(f64),
    /// `(value, probability)` pairs; probabilities may reference jump random variables.
    Discrete(Vec<(f64, Expr)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RvDecl {
    pub name: String,
    pub distribution: DistributionAst,
    pub jump_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpAst {
    pub label: Option<String>,
    pub guard: Formula,
    pub target: u32,
    pub reset: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchAst {
    pub prob: Expr,
    pub target: u32,
    pub reset: Formula,
}

/// `guard ==> p1 : @q1 reset1 + ... + pm : @qm resetm;`
#[derive(Debug, Clone, PartialEq)]
pub struct CommandAst {
    pub label: Option<String>,
    pub guard: Formula,
    pub branches: Vec<BranchAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeAst {
    pub id: u32,
    pub invariants: Vec<Formula>,
    pub flows: Vec<(String, Expr)>,
    pub jumps: Vec<JumpAst>,
    pub commands: Vec<CommandAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAst {
    /// Macro name to fully expanded body text.
    pub macros: BTreeMap<String, String>,
    pub rv_decls: Vec<RvDecl>,
    pub var_decls: Vec<VarDecl>,
    pub modes: Vec<ModeAst>,
    pub init: (u32, Formula),
    pub goals: Vec<(u32, Formula)>,
}

/// Name of the declared variable that bounds the dwell time of each step.
pub const TIME_VAR: &str = "time";

impl ModelAst {
    pub fn mode(&self, id: u32) -> Option<&ModeAst> {
        self.modes.iter().find(|m| m.id == id)
    }

    pub fn rv(&self, name: &str) -> Option<&RvDecl> {
        self.rv_decls.iter().find(|r| r.name == name)
    }
}
