//! Hybrid automata with random parameters and probabilistic jumps.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::dsl::{
    BranchAst, CommandAst, DistributionAst, Expr, Formula, JumpAst, ModeAst, ModelAst, RelOp, RvDecl, VarDecl,
    TIME_VAR,
};

/// Tolerance for branch probabilities summing to one.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no `time` declaration bounds the flow duration")]
    MissingTimeBound,
    #[error("mode {0} is referenced but never defined")]
    UnknownMode(u32),
    #[error("cyclic dependence between random variables involving `{0}`")]
    CyclicRvDependence(String),
    #[error("invalid branch probabilities for `{name}`: {detail}")]
    ProbabilityValidationError { name: String, detail: String },
    #[error("sample does not assign random variable `{0}`")]
    IncompleteSample(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Bernoulli(f64),
    Uniform(f64, f64),
    /// Mean and standard deviation.
    Normal(f64, f64),
    /// Rate parameter.
    Exponential(f64),
    /// Values with probability expressions over other random variables.
    Discrete(Vec<(f64, Expr)>),
}

impl Distribution {
    fn from_ast(d: &DistributionAst) -> Distribution {
        match d {
            DistributionAst::Bernoulli(p) => Distribution::Bernoulli(*p),
            DistributionAst::Uniform(a, b) => Distribution::Uniform(*a, *b),
            DistributionAst::Normal(m, s) => Distribution::Normal(*m, *s),
            DistributionAst::Exponential(r) => Distribution::Exponential(*r),
            DistributionAst::Discrete(v) => Distribution::Discrete(v.clone()),
        }
    }

    fn to_ast(&self) -> DistributionAst {
        match self {
            Distribution::Bernoulli(p) => DistributionAst::Bernoulli(*p),
            Distribution::Uniform(a, b) => DistributionAst::Uniform(*a, *b),
            Distribution::Normal(m, s) => DistributionAst::Normal(*m, *s),
            Distribution::Exponential(r) => DistributionAst::Exponential(*r),
            Distribution::Discrete(v) => DistributionAst::Discrete(v.clone()),
        }
    }

    /// Names of random variables the probability expressions depend on.
    pub fn dependencies(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Distribution::Discrete(entries) = self {
            for (_, p) in entries {
                p.visit_vars(&mut |n, _| {
                    out.insert(n.to_string());
                });
            }
        }
        out
    }

    /// Whether every Discrete probability is a literal.
    pub fn is_folded(&self) -> bool {
        match self {
            Distribution::Discrete(entries) => entries.iter().all(|(_, p)| p.as_num().is_some()),
            _ => true,
        }
    }

    /// Substitutes known values into Discrete probabilities and checks that they
    /// form a distribution. Other variants are returned unchanged.
    pub fn resolve(&self, name: &str, values: &dyn Fn(&str) -> Option<f64>) -> Result<Distribution, ModelError> {
        let Distribution::Discrete(entries) = self else {
            return Ok(self.clone());
        };
        let mut out = Vec::with_capacity(entries.len());
        for (v, p) in entries {
            let folded = p.map_vars(&|n, primed| if primed { None } else { values(n).map(Expr::Num) }).fold();
            out.push((*v, folded));
        }
        let probs: Option<Vec<f64>> = out.iter().map(|(_, p)| p.as_num()).collect();
        if let Some(probs) = probs {
            check_probabilities(name, &probs)?;
        }
        Ok(Distribution::Discrete(out))
    }

    /// Whether `x` lies in the support.
    pub fn supports(&self, x: f64) -> bool {
        match self {
            Distribution::Bernoulli(_) => x == 0.0 || x == 1.0,
            Distribution::Uniform(a, b) => *a <= x && x <= *b,
            Distribution::Normal(..) => x.is_finite(),
            Distribution::Exponential(_) => x >= 0.0 && x.is_finite(),
            Distribution::Discrete(entries) => entries.iter().any(|(v, _)| *v == x),
        }
    }
}

fn check_probabilities(name: &str, probs: &[f64]) -> Result<(), ModelError> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ModelError::ProbabilityValidationError {
            name: name.to_string(),
            detail: format!("probability {p} outside [0, 1]"),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(ModelError::ProbabilityValidationError {
            name: name.to_string(),
            detail: format!("probabilities sum to {}", (sum * 1e12).round() / 1e12),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    pub name: String,
    pub distribution: Distribution,
    pub jump_flag: bool,
    /// Introduced by desugaring a guarded command.
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub id: u32,
    pub invariant: Formula,
    /// Right-hand side per state variable, aligned with `HybridModel::vars`.
    /// Variables without a declared flow are constant.
    pub flows: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub source: u32,
    pub guard: Formula,
    pub target: u32,
    pub reset: Formula,
    /// Event label.
    pub label: Option<String>,
    /// Selector variable, for jumps produced from a guarded command.
    pub selector: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub prob: Expr,
    pub target: u32,
    pub reset: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardedCommand {
    pub source: u32,
    pub label: Option<String>,
    pub guard: Formula,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub vars: Vec<Variable>,
    /// Upper bound on the duration of every flow.
    pub time_bound: f64,
    pub modes: Vec<Mode>,
    pub jumps: Vec<Jump>,
    pub commands: Vec<GuardedCommand>,
    pub rvs: Vec<RandomVariable>,
    pub init: (u32, Formula),
    pub goals: Vec<(u32, Formula)>,
}

impl HybridModel {
    pub fn from_ast(ast: &ModelAst) -> Result<HybridModel, ModelError> {
        let time = ast.var_decls.iter().find(|v| v.name == TIME_VAR).ok_or(ModelError::MissingTimeBound)?;
        let vars: Vec<Variable> = ast
            .var_decls
            .iter()
            .filter(|v| v.name != TIME_VAR)
            .map(|v| Variable { name: v.name.clone(), lo: v.lo, hi: v.hi })
            .collect();
        let mut modes = Vec::new();
        let mut jumps = Vec::new();
        let mut commands = Vec::new();
        for m in &ast.modes {
            let flows = vars
                .iter()
                .map(|v| {
                    m.flows.iter().find(|(n, _)| *n == v.name).map(|(_, e)| e.clone()).unwrap_or(Expr::Num(0.0))
                })
                .collect();
            modes.push(Mode { id: m.id, invariant: Formula::and(m.invariants.clone()), flows });
            for j in &m.jumps {
                jumps.push(Jump {
                    source: m.id,
                    guard: j.guard.clone(),
                    target: j.target,
                    reset: j.reset.clone(),
                    label: j.label.clone(),
                    selector: None,
                });
            }
            for c in &m.commands {
                commands.push(GuardedCommand {
                    source: m.id,
                    label: c.label.clone(),
                    guard: c.guard.clone(),
                    branches: c
                        .branches
                        .iter()
                        .map(|b| Branch { prob: b.prob.clone(), target: b.target, reset: b.reset.clone() })
                        .collect(),
                });
            }
        }
        let rvs = ast
            .rv_decls
            .iter()
            .map(|d| RandomVariable {
                name: d.name.clone(),
                distribution: Distribution::from_ast(&d.distribution),
                jump_flag: d.jump_flag,
                synthetic: false,
            })
            .collect();
        let model = HybridModel {
            vars,
            time_bound: time.hi,
            modes,
            jumps,
            commands,
            rvs,
            init: ast.init.clone(),
            goals: ast.goals.clone(),
        };
        let mut referenced = vec![model.init.0];
        referenced.extend(model.goals.iter().map(|g| g.0));
        referenced.extend(model.jumps.iter().map(|j| j.target));
        referenced.extend(model.commands.iter().flat_map(|c| c.branches.iter().map(|b| b.target)));
        if let Some(id) = referenced.into_iter().find(|id| model.mode(*id).is_none()) {
            return Err(ModelError::UnknownMode(id));
        }
        Ok(model)
    }

    /// Rebuilds a syntax tree, e.g. for handing the model to an external tool.
    pub fn to_ast(&self) -> ModelAst {
        let mut var_decls: Vec<VarDecl> =
            self.vars.iter().map(|v| VarDecl { name: v.name.clone(), lo: v.lo, hi: v.hi }).collect();
        var_decls.push(VarDecl { name: TIME_VAR.into(), lo: 0.0, hi: self.time_bound });
        let modes = self
            .modes
            .iter()
            .map(|m| ModeAst {
                id: m.id,
                invariants: match &m.invariant {
                    Formula::True => vec![],
                    Formula::And(parts) => parts.clone(),
                    other => vec![other.clone()],
                },
                flows: self.vars.iter().zip(&m.flows).map(|(v, e)| (v.name.clone(), e.clone())).collect(),
                jumps: self
                    .jumps
                    .iter()
                    .filter(|j| j.source == m.id)
                    .map(|j| JumpAst {
                        label: j.label.clone(),
                        guard: j.guard.clone(),
                        target: j.target,
                        reset: j.reset.clone(),
                    })
                    .collect(),
                commands: self
                    .commands
                    .iter()
                    .filter(|c| c.source == m.id)
                    .map(|c| CommandAst {
                        label: c.label.clone(),
                        guard: c.guard.clone(),
                        branches: c
                            .branches
                            .iter()
                            .map(|b| BranchAst { prob: b.prob.clone(), target: b.target, reset: b.reset.clone() })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        ModelAst {
            macros: Default::default(),
            rv_decls: self
                .rvs
                .iter()
                .map(|r| RvDecl { name: r.name.clone(), distribution: r.distribution.to_ast(), jump_flag: r.jump_flag })
                .collect(),
            var_decls,
            modes,
            init: self.init.clone(),
            goals: self.goals.clone(),
        }
    }

    pub fn mode(&self, id: u32) -> Option<&Mode> {
        self.modes.iter().find(|m| m.id == id)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn rv(&self, name: &str) -> Option<&RandomVariable> {
        self.rvs.iter().find(|r| r.name == name)
    }

    pub fn jumps_from(&self, mode: u32) -> impl Iterator<Item = (usize, &Jump)> {
        self.jumps.iter().enumerate().filter(move |(_, j)| j.source == mode)
    }

    /// Every formula and flow term in the model, for scans.
    fn visit_all_exprs(&self, f: &mut dyn FnMut(&Expr)) {
        for m in &self.modes {
            m.invariant.visit_exprs(f);
            m.flows.iter().for_each(&mut *f);
        }
        for j in &self.jumps {
            j.guard.visit_exprs(f);
            j.reset.visit_exprs(f);
        }
        for c in &self.commands {
            c.guard.visit_exprs(f);
            for b in &c.branches {
                f(&b.prob);
                b.reset.visit_exprs(f);
            }
        }
        self.init.1.visit_exprs(f);
        for (_, g) in &self.goals {
            g.visit_exprs(f);
        }
    }

    /// Whether any random variable name appears in a formula, flow or command.
    pub fn mentions_any_rv(&self) -> bool {
        let names: BTreeSet<&str> = self.rvs.iter().map(|r| r.name.as_str()).collect();
        let mut hit = false;
        self.visit_all_exprs(&mut |e| e.visit_vars(&mut |n, _| hit |= names.contains(n)));
        hit
    }
}

/// A model with every random variable fixed and every command resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteModel(HybridModel);

impl ConcreteModel {
    /// Wraps a model that has no random variables and no commands.
    pub fn new(m: HybridModel) -> Option<ConcreteModel> {
        (m.rvs.is_empty() && m.commands.is_empty()).then_some(ConcreteModel(m))
    }

    pub fn model(&self) -> &HybridModel {
        &self.0
    }

    pub fn into_inner(self) -> HybridModel {
        self.0
    }
}

impl std::ops::Deref for ConcreteModel {
    type Target = HybridModel;
    fn deref(&self) -> &HybridModel {
        &self.0
    }
}

/// One value per random variable, in extraction order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    values: Vec<(String, f64)>,
}

impl Sample {
    pub fn new() -> Sample {
        Sample::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.values.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(n, v)| (n.as_str(), *v))
    }

    /// Exact bit patterns of the values, usable as a cache key.
    pub fn key(&self) -> Vec<u64> {
        self.values.iter().map(|(_, v)| v.to_bits()).collect()
    }
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// All random variables, including selectors of any remaining commands,
/// ordered so each variable follows those its probabilities depend on.
/// Ties keep declaration order.
pub fn extract_rvs(m: &HybridModel) -> Result<Vec<RandomVariable>, ModelError> {
    let all = if m.commands.is_empty() { m.rvs.clone() } else { desugar_pha(m).rvs };
    let index: HashMap<&str, usize> = all.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
    let deps: Vec<Vec<usize>> = all
        .iter()
        .map(|r| r.distribution.dependencies().iter().filter_map(|d| index.get(d.as_str()).copied()).collect())
        .collect();
    let mut done = vec![false; all.len()];
    let mut order = Vec::with_capacity(all.len());
    while order.len() < all.len() {
        let next = (0..all.len()).find(|&i| !done[i] && deps[i].iter().all(|&d| done[d]));
        match next {
            Some(i) => {
                done[i] = true;
                order.push(all[i].clone());
            }
            None => {
                let stuck = (0..all.len()).find(|&i| !done[i]).expect("some variable remains");
                return Err(ModelError::CyclicRvDependence(all[stuck].name.clone()));
            }
        }
    }
    Ok(order)
}

fn fresh_selector(taken: &mut BTreeSet<String>) -> String {
    let mut n = 0;
    loop {
        let name = format!("__sel{n}");
        if taken.insert(name.clone()) {
            return name;
        }
        n += 1;
    }
}

/// Rewrites every guarded command into plain jumps over a fresh selector variable.
pub fn desugar_pha(m: &HybridModel) -> HybridModel {
    let mut out = m.clone();
    let mut taken: BTreeSet<String> = m.rvs.iter().map(|r| r.name.clone()).collect();
    taken.extend(m.vars.iter().map(|v| v.name.clone()));
    for c in std::mem::take(&mut out.commands) {
        let sel = fresh_selector(&mut taken);
        let entries = c.branches.iter().enumerate().map(|(i, b)| ((i + 1) as f64, b.prob.clone())).collect();
        out.rvs.push(RandomVariable {
            name: sel.clone(),
            distribution: Distribution::Discrete(entries),
            jump_flag: false,
            synthetic: true,
        });
        for (i, b) in c.branches.iter().enumerate() {
            let pick = Formula::atom(Expr::var(&sel), RelOp::Eq, Expr::Num((i + 1) as f64));
            out.jumps.push(Jump {
                source: c.source,
                guard: Formula::and(vec![c.guard.clone(), pick]),
                target: b.target,
                reset: b.reset.clone(),
                label: c.label.clone(),
                selector: Some(sel.clone()),
            });
        }
    }
    out
}

/// Substitutes a sample into a model, leaving a random-variable-free automaton.
/// Jumps whose guard folds to false are removed.
pub fn instantiate(m: &HybridModel, s: &Sample) -> Result<ConcreteModel, ModelError> {
    let m = if m.commands.is_empty() { m.clone() } else { desugar_pha(m) };
    for rv in &m.rvs {
        if s.get(&rv.name).is_none() {
            return Err(ModelError::IncompleteSample(rv.name.clone()));
        }
        rv.distribution.resolve(&rv.name, &|n| s.get(n))?;
    }
    let rv_names: BTreeSet<&str> = m.rvs.iter().map(|r| r.name.as_str()).collect();
    let subst = |n: &str, primed: bool| -> Option<Expr> {
        if primed || !rv_names.contains(n) {
            None
        } else {
            s.get(n).map(Expr::Num)
        }
    };
    let formula = |f: &Formula| f.map_vars(&subst).fold();
    let modes = m
        .modes
        .iter()
        .map(|md| Mode {
            id: md.id,
            invariant: formula(&md.invariant),
            flows: md.flows.iter().map(|e| e.map_vars(&subst).fold()).collect(),
        })
        .collect();
    let jumps = m
        .jumps
        .iter()
        .filter_map(|j| {
            let guard = formula(&j.guard);
            (guard != Formula::False).then(|| Jump {
                source: j.source,
                guard,
                target: j.target,
                reset: formula(&j.reset),
                label: j.label.clone(),
                selector: j.selector.clone(),
            })
        })
        .collect();
    Ok(ConcreteModel(HybridModel {
        vars: m.vars.clone(),
        time_bound: m.time_bound,
        modes,
        jumps,
        commands: vec![],
        rvs: vec![],
        init: (m.init.0, formula(&m.init.1)),
        goals: m.goals.iter().map(|(id, g)| (*id, formula(g))).collect(),
    }))
}

/// Static checks. Problems are reported, never raised.
pub fn validate(m: &HybridModel) -> Vec<String> {
    let mut diags = Vec::new();
    let state: BTreeSet<&str> = m.vars.iter().map(|v| v.name.as_str()).collect();
    let rvs: BTreeSet<&str> = m.rvs.iter().map(|r| r.name.as_str()).collect();
    let mut seen = BTreeSet::new();
    for r in &m.rvs {
        if !seen.insert(r.name.as_str()) || state.contains(r.name.as_str()) {
            diags.push(format!("`{}` is declared more than once", r.name));
        }
        match &r.distribution {
            Distribution::Uniform(a, b) if !(a < b) => diags.push(format!("`{}`: uniform bounds {a} >= {b}", r.name)),
            Distribution::Bernoulli(p) if !(0.0..=1.0).contains(p) => {
                diags.push(format!("`{}`: Bernoulli parameter {p} outside [0, 1]", r.name))
            }
            Distribution::Normal(_, s) if !(*s >= 0.0) => {
                diags.push(format!("`{}`: negative standard deviation {s}", r.name))
            }
            Distribution::Exponential(l) if !(*l > 0.0) => diags.push(format!("`{}`: rate {l} is not positive", r.name)),
            Distribution::Discrete(entries) => {
                if entries.is_empty() {
                    diags.push(format!("`{}`: empty discrete distribution", r.name));
                }
                for d in r.distribution.dependencies() {
                    if !rvs.contains(d.as_str()) {
                        diags.push(format!("`{}`: probability refers to `{d}`, which is not a random variable", r.name));
                    }
                }
                if let Err(e) = r.distribution.resolve(&r.name, &|_| None) {
                    diags.push(e.to_string());
                }
            }
            _ => {}
        }
    }
    for v in &m.vars {
        if !(v.lo <= v.hi) {
            diags.push(format!("`{}`: empty bounds [{}, {}]", v.name, v.lo, v.hi));
        }
    }
    let mut mode_ids = BTreeSet::new();
    for md in &m.modes {
        if !mode_ids.insert(md.id) {
            diags.push(format!("mode {} is defined more than once", md.id));
        }
        if md.flows.len() != m.vars.len() {
            diags.push(format!("mode {}: flow field does not cover the state variables", md.id));
        }
        scope(&mut diags, &format!("mode {} invariant", md.id), &md.invariant, &state, &rvs, false);
        for (v, e) in m.vars.iter().zip(&md.flows) {
            scope(&mut diags, &format!("mode {} flow of `{}`", md.id, v.name), &Formula::atom(e.clone(), RelOp::Eq, Expr::Num(0.0)), &state, &rvs, false);
        }
    }
    let check_mode = |diags: &mut Vec<String>, id: u32, what: &str| {
        if !mode_ids.contains(&id) {
            diags.push(format!("{what} refers to undefined mode {id}"));
        }
    };
    check_mode(&mut diags, m.init.0, "init");
    scope(&mut diags, "init", &m.init.1, &state, &rvs, false);
    for (id, g) in &m.goals {
        check_mode(&mut diags, *id, "goal");
        scope(&mut diags, "goal", g, &state, &rvs, false);
    }
    for j in &m.jumps {
        let what = format!("jump {} -> {}", j.source, j.target);
        check_mode(&mut diags, j.source, &what);
        check_mode(&mut diags, j.target, &what);
        scope(&mut diags, &format!("{what} guard"), &j.guard, &state, &rvs, false);
        scope(&mut diags, &format!("{what} reset"), &j.reset, &state, &rvs, true);
    }
    for c in &m.commands {
        let what = format!("command in mode {}", c.source);
        check_mode(&mut diags, c.source, &what);
        scope(&mut diags, &format!("{what} guard"), &c.guard, &state, &rvs, false);
        let mut probs = Vec::new();
        for b in &c.branches {
            check_mode(&mut diags, b.target, &what);
            scope(&mut diags, &format!("{what} reset"), &b.reset, &state, &rvs, true);
            b.prob.visit_vars(&mut |n, _| {
                if !rvs.contains(n) {
                    diags.push(format!("{what}: branch probability refers to `{n}`, which is not a random variable"));
                }
            });
            probs.push(b.prob.fold().as_num());
        }
        if let Some(probs) = probs.into_iter().collect::<Option<Vec<f64>>>() {
            if let Err(ModelError::ProbabilityValidationError { detail, .. }) = check_probabilities("", &probs) {
                diags.push(format!("{what}: {detail}"));
            }
        }
    }
    diags
}

fn scope(
    diags: &mut Vec<String>,
    what: &str,
    f: &Formula,
    state: &BTreeSet<&str>,
    rvs: &BTreeSet<&str>,
    primes_allowed: bool,
) {
    f.visit_vars(&mut |n, primed| {
        if primed {
            if !primes_allowed {
                diags.push(format!("{what}: primed `{n}'` outside a reset"));
            } else if !state.contains(n) {
                diags.push(format!("{what}: primed `{n}'` is not a state variable"));
            }
        } else if !state.contains(n) && !rvs.contains(n) {
            diags.push(format!("{what}: unknown identifier `{n}`"));
        }
    });
}
