//! Recursive-descent parser for model files.
//!
//! Relational atoms are infix (`x <= 1.5`); connectives are prefix
//! s-expressions (`(and f g)`); a `;`-terminated statement list is an implicit
//! conjunction. Operator precedence, tightest first: `^` (right-assoc),
//! unary `-`, `* /`, `+ -`.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::error::{DslError, DslErrorKind};
use super::lexer::{tokenize, Tok, Token};
use super::preprocess::preprocess_with_macros;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefCtx {
    /// Guards, invariants, flows, init, goal: system variables and random variables.
    Plain,
    /// Resets: additionally primed system variables.
    Reset,
    /// Probabilities of a `DD(...)`: jump random variables only.
    DistProb,
    /// Branch probabilities of a guarded command: random variables only.
    BranchProb,
    /// Bounds and distribution parameters: no references at all.
    Const,
}

#[derive(Debug, Clone)]
struct Ref {
    name: String,
    primed: bool,
    loc: Loc,
    ctx: RefCtx,
}

#[derive(Debug, Default)]
struct Spans {
    refs: Vec<Ref>,
    decls: Vec<(String, Loc)>,
    mode_decls: Vec<(u32, Loc)>,
    mode_refs: Vec<(u32, Loc)>,
    flow_lhs: Vec<(u32, String, Loc)>,
    dd_decls: Vec<(usize, Loc)>,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    origin: &'a str,
    spans: Spans,
    ctx: RefCtx,
}

type PResult<T> = Result<T, DslError>;

/// Parses already-preprocessed text and resolves every reference.
pub fn parse_model(src: &SourceText) -> Result<ModelAst, DslError> {
    let (ast, spans) = parse_syntax(src)?;
    let mut errs = resolve(&ast, &spans, &src.origin);
    errs.sort_by_key(|e| e.loc);
    match errs.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(ast),
    }
}

/// Parses already-preprocessed text without cross-reference checks.
pub fn parse_model_unchecked(src: &SourceText) -> Result<ModelAst, DslError> {
    parse_syntax(src).map(|(ast, _)| ast)
}

/// All resolution diagnostics for a syntactically valid file, in source order.
pub fn check_model(src: &SourceText) -> Result<Vec<DslError>, DslError> {
    let (ast, spans) = parse_syntax(src)?;
    let mut errs = resolve(&ast, &spans, &src.origin);
    errs.sort_by_key(|e| e.loc);
    Ok(errs)
}

/// Preprocesses and parses raw file text, recording the expanded macros.
pub fn load_model(src: &SourceText) -> Result<ModelAst, DslError> {
    let pre = preprocess_with_macros(src)?;
    let mut ast = parse_model(&pre.text)?;
    ast.macros = pre.macros;
    Ok(ast)
}

fn parse_syntax(src: &SourceText) -> PResult<(ModelAst, Spans)> {
    let toks = tokenize(&src.content, &src.origin)?;
    let mut p = Parser {
        toks,
        pos: 0,
        origin: &src.origin,
        spans: Spans::default(),
        ctx: RefCtx::Plain,
    };
    let ast = p.model()?;
    Ok((ast, p.spans))
}

const DIST_NAMES: [&str; 5] = ["B", "U", "N", "E", "DD"];

fn split_dist_name(name: &str) -> Option<(&str, bool)> {
    if DIST_NAMES.contains(&name) {
        return Some((name, false));
    }
    match name.strip_prefix('j') {
        Some(rest) if DIST_NAMES.contains(&rest) => Some((rest, true)),
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, loc: Loc, kind: DslErrorKind) -> PResult<T> {
        Err(DslError::new(self.origin, loc, kind))
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        self.err(
            self.loc(),
            DslErrorKind::Syntax(format!("expected {what}, found {}", self.peek().describe())),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Loc> {
        if *self.peek() == tok {
            Ok(self.bump().loc)
        } else {
            self.unexpected(what)
        }
    }

    fn is_ident(&self, k: usize, name: &str) -> bool {
        matches!(self.peek_at(k), Tok::Ident(s) if s == name)
    }

    fn is_section(&self, name: &str) -> bool {
        self.is_ident(0, name) && *self.peek_at(1) == Tok::Colon
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Loc)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.bump().loc;
                Ok((s, loc))
            }
            _ => self.unexpected(what),
        }
    }

    fn mode_id(&mut self) -> PResult<(u32, Loc)> {
        let loc = self.loc();
        match *self.peek() {
            Tok::Num(v) if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                self.bump();
                Ok((v as u32, loc))
            }
            _ => self.unexpected("a positive integer mode id"),
        }
    }

    fn model(&mut self) -> PResult<ModelAst> {
        let mut ast = ModelAst {
            macros: BTreeMap::new(),
            rv_decls: Vec::new(),
            var_decls: Vec::new(),
            modes: Vec::new(),
            init: (0, Formula::True),
            goals: Vec::new(),
        };
        let mut have_init = false;
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::LBracket => ast.var_decls.push(self.var_decl()?),
                Tok::LBrace => ast.modes.push(self.mode()?),
                Tok::Ident(name) if name == "init" && *self.peek_at(1) == Tok::Colon => {
                    let loc = self.loc();
                    if have_init {
                        return self.err(loc, DslErrorKind::Syntax("more than one init block".into()));
                    }
                    self.bump();
                    self.bump();
                    ast.init = self.located_formula()?;
                    have_init = true;
                }
                Tok::Ident(name) if name == "goal" && *self.peek_at(1) == Tok::Colon => {
                    self.bump();
                    self.bump();
                    if *self.peek() != Tok::At {
                        return self.unexpected("`@<mode>` after `goal:`");
                    }
                    while *self.peek() == Tok::At {
                        let g = self.located_formula()?;
                        ast.goals.push(g);
                    }
                }
                Tok::Ident(name) if split_dist_name(&name).is_some() && *self.peek_at(1) == Tok::LParen => {
                    let idx = ast.rv_decls.len();
                    let d = self.rv_decl(idx)?;
                    ast.rv_decls.push(d);
                }
                _ => return self.unexpected("a declaration, mode, `init:` or `goal:`"),
            }
        }
        let eof = self.loc();
        if !have_init {
            return self.err(eof, DslErrorKind::MissingInit);
        }
        if ast.goals.is_empty() {
            return self.err(eof, DslErrorKind::MissingGoal);
        }
        Ok(ast)
    }

    /// `@<mode> formula ;`
    fn located_formula(&mut self) -> PResult<(u32, Formula)> {
        self.expect(Tok::At, "`@<mode>`")?;
        let (id, loc) = self.mode_id()?;
        self.spans.mode_refs.push((id, loc));
        self.ctx = RefCtx::Plain;
        let f = self.formula()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok((id, f))
    }

    fn const_expr(&mut self) -> PResult<f64> {
        let loc = self.loc();
        let before = self.spans.refs.len();
        let saved = self.ctx;
        self.ctx = RefCtx::Const;
        let e = self.expr();
        self.ctx = saved;
        let e = e?;
        if let Some(r) = self.spans.refs.get(before) {
            let (name, rloc) = (r.name.clone(), r.loc);
            return self.err(rloc, DslErrorKind::UnknownIdentifier(name));
        }
        match e.fold() {
            Expr::Num(v) => Ok(v),
            _ => self.err(loc, DslErrorKind::Syntax("expected a constant expression".into())),
        }
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let open = self.expect(Tok::LBracket, "`[`")?;
        let lo = self.const_expr()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.const_expr()?;
        self.expect(Tok::RBracket, "`]`")?;
        let (name, loc) = self.ident("a variable name")?;
        self.expect(Tok::Semi, "`;`")?;
        if lo > hi {
            return self.err(
                open,
                DslErrorKind::InvalidDeclaration(format!("bounds of `{name}` have lower > upper")),
            );
        }
        self.spans.decls.push((name.clone(), loc));
        Ok(VarDecl { name, lo, hi })
    }

    fn rv_decl(&mut self, idx: usize) -> PResult<RvDecl> {
        let (dname, dloc) = self.ident("a distribution")?;
        let (kind, jump_flag) = split_dist_name(&dname).expect("checked by caller");
        self.expect(Tok::LParen, "`(`")?;
        let bad = |msg: String| DslError::new(self.origin, dloc, DslErrorKind::InvalidDeclaration(msg));
        let distribution = match kind {
            "DD" => {
                let mut entries = Vec::new();
                loop {
                    let neg = if *self.peek() == Tok::Minus {
                        self.bump();
                        true
                    } else {
                        false
                    };
                    let v = match *self.peek() {
                        Tok::Num(v) => {
                            self.bump();
                            if neg {
                                -v
                            } else {
                                v
                            }
                        }
                        _ => return self.unexpected("a discrete value"),
                    };
                    self.expect(Tok::Colon, "`:`")?;
                    self.ctx = RefCtx::DistProb;
                    let p = self.expr();
                    self.ctx = RefCtx::Plain;
                    entries.push((v, p?));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.spans.dd_decls.push((idx, dloc));
                DistributionAst::Discrete(entries)
            }
            _ => {
                let mut params = vec![self.const_expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    params.push(self.const_expr()?);
                }
                let want = if kind == "U" || kind == "N" { 2 } else { 1 };
                if params.len() != want {
                    return Err(bad(format!("{dname} takes {want} parameter(s), got {}", params.len())));
                }
                match kind {
                    "B" if (0.0..=1.0).contains(&params[0]) => DistributionAst::Bernoulli(params[0]),
                    "B" => return Err(bad(format!("Bernoulli parameter {} outside [0, 1]", params[0]))),
                    "U" if params[0] < params[1] => DistributionAst::Uniform(params[0], params[1]),
                    "U" => return Err(bad(format!("uniform bounds need a < b, got ({}, {})", params[0], params[1]))),
                    "N" if params[1] >= 0.0 => DistributionAst::Normal(params[0], params[1]),
                    "N" => return Err(bad(format!("normal standard deviation {} is negative", params[1]))),
                    "E" if params[0] > 0.0 => DistributionAst::Exponential(params[0]),
                    _ => return Err(bad(format!("exponential rate {} must be positive", params[0]))),
                }
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        let (name, nloc) = self.ident("a random variable name")?;
        self.expect(Tok::Semi, "`;`")?;
        self.spans.decls.push((name.clone(), nloc));
        Ok(RvDecl {
            name,
            distribution,
            jump_flag,
        })
    }

    fn mode(&mut self) -> PResult<ModeAst> {
        self.expect(Tok::LBrace, "`{`")?;
        if !self.is_ident(0, "mode") {
            return self.unexpected("`mode`");
        }
        self.bump();
        let (id, loc) = self.mode_id()?;
        self.spans.mode_decls.push((id, loc));
        self.expect(Tok::Semi, "`;`")?;

        if !self.is_section("invt") {
            return self.unexpected("`invt:`");
        }
        self.bump();
        self.bump();
        let mut invariants = Vec::new();
        while !self.is_section("flow") {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                return self.unexpected("`flow:`");
            }
            self.ctx = RefCtx::Plain;
            invariants.push(self.formula()?);
            self.expect(Tok::Semi, "`;`")?;
        }
        self.bump();
        self.bump();

        let mut flows = Vec::new();
        while !self.is_section("jump") && *self.peek() != Tok::RBrace {
            flows.push(self.flow_stmt(id)?);
        }

        let mut jumps = Vec::new();
        let mut commands = Vec::new();
        if self.is_section("jump") {
            self.bump();
            self.bump();
            while *self.peek() != Tok::RBrace {
                if *self.peek() == Tok::Eof {
                    return self.unexpected("`}`");
                }
                match self.jump_stmt()? {
                    Transition::Jump(j) => jumps.push(j),
                    Transition::Command(c) => commands.push(c),
                }
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(ModeAst {
            id,
            invariants,
            flows,
            jumps,
            commands,
        })
    }

    /// `d/dt[x] = expr;`
    fn flow_stmt(&mut self, mode: u32) -> PResult<(String, Expr)> {
        if !self.is_ident(0, "d") {
            return self.unexpected("`d/dt[<var>]`");
        }
        self.bump();
        self.expect(Tok::Slash, "`/` in `d/dt`")?;
        if !self.is_ident(0, "dt") {
            return self.unexpected("`dt`");
        }
        self.bump();
        self.expect(Tok::LBracket, "`[`")?;
        let (var, loc) = self.ident("a variable name")?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Eq, "`=`")?;
        self.ctx = RefCtx::Plain;
        let rhs = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        self.spans.flow_lhs.push((mode, var.clone(), loc));
        Ok((var, rhs))
    }

    fn jump_stmt(&mut self) -> PResult<Transition> {
        let label = if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
            let (l, _) = self.ident("a label")?;
            self.bump();
            Some(l)
        } else {
            None
        };
        self.ctx = RefCtx::Plain;
        let guard = self.formula()?;
        self.expect(Tok::Arrow, "`==>`")?;
        if *self.peek() == Tok::At {
            let (target, reset) = self.target_and_reset()?;
            self.expect(Tok::Semi, "`;`")?;
            return Ok(Transition::Jump(JumpAst {
                label,
                guard,
                target,
                reset,
            }));
        }
        let mut branches = Vec::new();
        loop {
            self.ctx = RefCtx::BranchProb;
            let prob = self.expr();
            self.ctx = RefCtx::Plain;
            let prob = prob?;
            self.expect(Tok::Colon, "`:` after a branch probability")?;
            let (target, reset) = self.target_and_reset()?;
            branches.push(BranchAst { prob, target, reset });
            if *self.peek() == Tok::Plus {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(Transition::Command(CommandAst { label, guard, branches }))
    }

    fn target_and_reset(&mut self) -> PResult<(u32, Formula)> {
        self.expect(Tok::At, "`@<mode>`")?;
        let (target, loc) = self.mode_id()?;
        self.spans.mode_refs.push((target, loc));
        self.ctx = RefCtx::Reset;
        let reset = self.formula();
        self.ctx = RefCtx::Plain;
        Ok((target, reset?))
    }

    fn formula(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                if let Tok::Ident(kw) = self.peek_at(1).clone() {
                    if matches!(kw.as_str(), "and" | "or" | "not") {
                        return self.connective(&kw);
                    }
                }
                let (pos, nrefs) = (self.pos, self.spans.refs.len());
                let atom_err = match self.atom() {
                    Ok(f) => return Ok(f),
                    Err(e) => e,
                };
                self.pos = pos;
                self.spans.refs.truncate(nrefs);
                self.bump();
                let inner = self.formula().and_then(|f| self.expect(Tok::RParen, "`)`").map(|_| f));
                match inner {
                    Ok(f) => Ok(f),
                    Err(e) if e.loc >= atom_err.loc => Err(e),
                    Err(_) => Err(atom_err),
                }
            }
            _ => self.atom(),
        }
    }

    fn connective(&mut self, kw: &str) -> PResult<Formula> {
        self.bump();
        self.bump();
        let mut parts = Vec::new();
        while *self.peek() != Tok::RParen {
            if *self.peek() == Tok::Eof {
                return self.unexpected("`)`");
            }
            parts.push(self.formula()?);
        }
        let close = self.loc();
        self.bump();
        match kw {
            "not" if parts.len() == 1 => Ok(Formula::Not(Box::new(parts.pop().unwrap()))),
            "not" => self.err(close, DslErrorKind::Syntax("`not` takes exactly one formula".into())),
            _ if parts.is_empty() => self.err(close, DslErrorKind::Syntax(format!("`{kw}` needs at least one formula"))),
            "and" => Ok(Formula::And(parts)),
            _ => Ok(Formula::Or(parts)),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Eq => RelOp::Eq,
            Tok::Ge => RelOp::Ge,
            Tok::Gt => RelOp::Gt,
            _ => return self.unexpected("a relational operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Formula::Atom(lhs, op, rhs))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    if let Some(func) = Func::from_name(&name) {
                        self.bump();
                        let mut args = Vec::new();
                        if *self.peek() != Tok::RParen {
                            args.push(self.expr()?);
                            while *self.peek() == Tok::Comma {
                                self.bump();
                                args.push(self.expr()?);
                            }
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        if args.len() != func.arity() {
                            return self.err(
                                loc,
                                DslErrorKind::Syntax(format!(
                                    "`{name}` takes {} argument(s), got {}",
                                    func.arity(),
                                    args.len()
                                )),
                            );
                        }
                        return Ok(Expr::Call(func, args));
                    }
                    return self.err(loc, DslErrorKind::UnknownIdentifier(name));
                }
                self.spans.refs.push(Ref {
                    name: name.clone(),
                    primed: false,
                    loc,
                    ctx: self.ctx,
                });
                Ok(Expr::Var(name))
            }
            Tok::Primed(name) => {
                self.bump();
                self.spans.refs.push(Ref {
                    name: name.clone(),
                    primed: true,
                    loc,
                    ctx: self.ctx,
                });
                Ok(Expr::Primed(name))
            }
            _ => self.unexpected("an expression"),
        }
    }
}

enum Transition {
    Jump(JumpAst),
    Command(CommandAst),
}

fn resolve(ast: &ModelAst, spans: &Spans, origin: &str) -> Vec<DslError> {
    let mut errs = Vec::new();
    let mut push = |loc: Loc, kind: DslErrorKind| errs.push(DslError::new(origin, loc, kind));

    let mut seen = HashSet::new();
    for (name, loc) in &spans.decls {
        if !seen.insert(name.as_str()) {
            push(*loc, DslErrorKind::InvalidDeclaration(format!("`{name}` declared more than once")));
        }
    }

    let state: HashSet<&str> = ast
        .var_decls
        .iter()
        .map(|v| v.name.as_str())
        .filter(|n| *n != TIME_VAR)
        .collect();
    let rvs: HashMap<&str, bool> = ast.rv_decls.iter().map(|r| (r.name.as_str(), r.jump_flag)).collect();

    for r in &spans.refs {
        let name = r.name.as_str();
        let ok = match (r.ctx, r.primed) {
            (RefCtx::Reset, true) => state.contains(name),
            (_, true) => {
                push(r.loc, DslErrorKind::Syntax(format!("primed variable `{name}'` outside a reset")));
                continue;
            }
            (RefCtx::Plain | RefCtx::Reset, false) => state.contains(name) || rvs.contains_key(name),
            (RefCtx::BranchProb, false) => rvs.contains_key(name),
            (RefCtx::DistProb, false) => match rvs.get(name) {
                Some(true) => true,
                Some(false) => {
                    push(
                        r.loc,
                        DslErrorKind::InvalidDeclaration(format!(
                            "discrete probabilities may only reference j-prefixed random variables, `{name}` is not one"
                        )),
                    );
                    continue;
                }
                None => false,
            },
            (RefCtx::Const, false) => false,
        };
        if !ok {
            let shown = if r.primed { format!("{name}'") } else { name.to_string() };
            push(r.loc, DslErrorKind::UnknownIdentifier(shown));
        }
    }

    let mut modes = HashSet::new();
    for (id, loc) in &spans.mode_decls {
        if !modes.insert(*id) {
            push(*loc, DslErrorKind::DuplicateMode(*id));
        }
    }
    for (id, loc) in &spans.mode_refs {
        if !modes.contains(id) {
            push(*loc, DslErrorKind::UnknownMode(*id));
        }
    }

    let mut flows = HashSet::new();
    for (mode, var, loc) in &spans.flow_lhs {
        if !state.contains(var.as_str()) {
            push(*loc, DslErrorKind::UnknownIdentifier(var.clone()));
        } else if !flows.insert((*mode, var.as_str())) {
            push(
                *loc,
                DslErrorKind::InvalidDeclaration(format!("second flow for `{var}` in mode {mode}")),
            );
        }
    }

    for (idx, loc) in &spans.dd_decls {
        let decl = &ast.rv_decls[*idx];
        if let DistributionAst::Discrete(entries) = &decl.distribution {
            let consts: Option<Vec<f64>> = entries.iter().map(|(_, e)| e.fold().as_num()).collect();
            if let Some(ps) = consts {
                let sum: f64 = ps.iter().sum();
                if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                    push(
                        *loc,
                        DslErrorKind::InvalidDeclaration(format!(
                            "probabilities of `{}` must lie in [0, 1] and sum to 1 (sum is {sum})",
                            decl.name
                        )),
                    );
                }
            }
        }
    }
    errs
}
