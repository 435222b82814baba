//! k-step unfolding of a concrete automaton into real constraint systems,
//! one per mode path.

use std::collections::HashMap;
use std::fmt;

use crate::dsl::{BinOp, Expr, Formula, RelOp};
use crate::interval::{CompileError, Constraint, Interval, Term};
use crate::model::ConcreteModel;

/// A mode sequence with the jump taken after each step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTemplate {
    pub modes: Vec<u32>,
    /// Indices into the model's jump list; one fewer than `modes`.
    pub jumps: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachQuery {
    pub k: usize,
    pub time_bound: f64,
    pub delta: f64,
}

/// Flow obligation of one step: the state at `xt` is reached from `x` after
/// `t` time units while the invariant holds throughout.
#[derive(Debug, Clone)]
pub struct FlowLink {
    pub step: usize,
    pub mode: u32,
    /// First slot of the pre-flow state.
    pub x: usize,
    /// First slot of the post-flow state.
    pub xt: usize,
    /// Slot of the dwell time.
    pub t: usize,
    /// Right-hand sides over local state indices `0..n`.
    pub field: Vec<Term>,
    /// Mode invariant over local state indices.
    pub invariant: Constraint,
}

#[derive(Debug, Clone)]
pub struct UnfoldedProblem {
    pub k: usize,
    /// Number of state variables.
    pub n: usize,
    pub time_bound: f64,
    pub path: PathTemplate,
    pub names: Vec<String>,
    pub domain: Vec<Interval>,
    /// Declared state bounds, by local index.
    pub state_bounds: Vec<Interval>,
    pub constraints: Vec<(String, Constraint)>,
    pub flows: Vec<FlowLink>,
}

impl UnfoldedProblem {
    pub fn x_slot(&self, step: usize, var: usize) -> usize {
        step * (2 * self.n + 1) + var
    }

    pub fn xt_slot(&self, step: usize, var: usize) -> usize {
        step * (2 * self.n + 1) + self.n + var
    }

    pub fn t_slot(&self, step: usize) -> usize {
        step * (2 * self.n + 1) + 2 * self.n
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    /// Conjunction of all algebraic constraints.
    pub fn algebraic(&self) -> Constraint {
        Constraint::all(self.constraints.iter().map(|(_, c)| c.clone()).collect())
    }
}

impl fmt::Display for UnfoldedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let modes: Vec<String> = self.path.modes.iter().map(|m| m.to_string()).collect();
        writeln!(f, "; path {} (k = {}, {} unknowns)", modes.join(" -> "), self.k, self.var_count())?;
        for (name, dom) in self.names.iter().zip(&self.domain) {
            writeln!(f, "var {name} in {dom}")?;
        }
        for (label, c) in &self.constraints {
            writeln!(f, "{label}: {c}")?;
        }
        for fl in &self.flows {
            let states: Vec<String> = self.names[fl.x..fl.x + self.n].iter().map(|s| s.to_string()).collect();
            let field: Vec<&str> = fl.field.iter().map(Term::text).collect();
            writeln!(
                f,
                "flow@{}: d/dt[{}] = [{}] from {} for {}, invariant {}",
                fl.step,
                states.join(", "),
                field.join(", "),
                fl.x,
                self.names[fl.t],
                fl.invariant
            )?;
        }
        Ok(())
    }
}

/// All mode paths with exactly `k` jumps from the initial mode to a goal
/// mode, ordered lexicographically by (mode id, jump index) at each step.
pub fn enumerate_paths(m: &ConcreteModel, k: usize) -> Vec<PathTemplate> {
    let mut out = Vec::new();
    let goal_modes: Vec<u32> = m.goals.iter().map(|g| g.0).collect();
    let mut edges: HashMap<u32, Vec<(u32, usize)>> = HashMap::new();
    for (i, j) in m.jumps.iter().enumerate() {
        edges.entry(j.source).or_default().push((j.target, i));
    }
    for list in edges.values_mut() {
        list.sort();
    }
    let mut modes = vec![m.init.0];
    let mut jumps = Vec::new();
    fn dfs(
        k: usize,
        edges: &HashMap<u32, Vec<(u32, usize)>>,
        goal_modes: &[u32],
        modes: &mut Vec<u32>,
        jumps: &mut Vec<usize>,
        out: &mut Vec<PathTemplate>,
    ) {
        let here = *modes.last().unwrap();
        if jumps.len() == k {
            if goal_modes.contains(&here) {
                out.push(PathTemplate { modes: modes.clone(), jumps: jumps.clone() });
            }
            return;
        }
        for &(target, idx) in edges.get(&here).map(Vec::as_slice).unwrap_or(&[]) {
            modes.push(target);
            jumps.push(idx);
            dfs(k, edges, goal_modes, modes, jumps, out);
            modes.pop();
            jumps.pop();
        }
    }
    dfs(k, &edges, &goal_modes, &mut modes, &mut jumps, &mut out);
    out
}

fn step_name(var: &str, step: usize, post: bool) -> String {
    if post {
        format!("{var}_{step}^t")
    } else {
        format!("{var}_{step}")
    }
}

/// Renames state variables: unprimed to `pre` names, primed to `post` names.
fn rename(f: &Formula, pre: &dyn Fn(&str) -> String, post: &dyn Fn(&str) -> String) -> Formula {
    f.map_vars(&|n, primed| Some(Expr::Var(if primed { post(n) } else { pre(n) })))
}

pub fn unfold(m: &ConcreteModel, p: &PathTemplate, q: &ReachQuery) -> UnfoldedProblem {
    let n = m.vars.len();
    let k = p.jumps.len();
    assert_eq!(p.modes.len(), k + 1, "path length must be k + 1");
    let mut names = Vec::with_capacity((k + 1) * (2 * n + 1));
    let mut domain = Vec::with_capacity(names.capacity());
    let state_bounds: Vec<Interval> = m.vars.iter().map(|v| Interval::new(v.lo, v.hi)).collect();
    for i in 0..=k {
        for post in [false, true] {
            for (v, b) in m.vars.iter().zip(&state_bounds) {
                names.push(step_name(&v.name, i, post));
                domain.push(*b);
            }
        }
        names.push(format!("t_{i}"));
        domain.push(Interval::new(0.0, q.time_bound));
    }
    debug_assert_eq!(names.len(), 2 * (k + 1) * n + (k + 1));
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let compile = |f: &Formula| -> Constraint {
        Constraint::compile(f, &|name, _| index.get(name).copied())
            .unwrap_or_else(|e: CompileError| panic!("unfolded formula refers to an undeclared unknown: {e}"))
    };
    let at = |step: usize, post: bool| move |v: &str| step_name(v, step, post);
    let local: HashMap<&str, usize> = m.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();

    let mut constraints = Vec::new();
    let mut flows = Vec::new();
    constraints.push(("init".to_string(), compile(&rename(&m.init.1, &at(0, false), &at(0, false)))));
    for (i, &mode_id) in p.modes.iter().enumerate() {
        let mode = m.mode(mode_id).expect("path modes exist");
        let t_name = format!("t_{i}");
        for (j, v) in m.vars.iter().enumerate() {
            let rate = &mode.flows[j];
            let mut constant = true;
            rate.visit_vars(&mut |_, _| constant = false);
            if constant {
                // xt = x + c * t holds exactly for a constant rate.
                let rhs = Expr::bin(
                    BinOp::Add,
                    Expr::var(step_name(&v.name, i, false)),
                    Expr::bin(BinOp::Mul, rate.clone(), Expr::var(&t_name)),
                );
                let link = Formula::atom(Expr::var(step_name(&v.name, i, true)), RelOp::Eq, rhs);
                constraints.push((format!("flow@{i}"), compile(&link)));
            }
        }
        if mode.invariant != Formula::True {
            for post in [false, true] {
                let inv = rename(&mode.invariant, &at(i, post), &at(i, post));
                constraints.push((format!("invariant@{i}"), compile(&inv)));
            }
        }
        let field = mode
            .flows
            .iter()
            .map(|e| Term::compile(e, &|name, _| local.get(name).copied()).expect("flows refer to state variables"))
            .collect();
        let invariant = Constraint::compile(&mode.invariant, &|name, _| local.get(name).copied())
            .expect("invariants refer to state variables");
        flows.push(FlowLink {
            step: i,
            mode: mode_id,
            x: i * (2 * n + 1),
            xt: i * (2 * n + 1) + n,
            t: i * (2 * n + 1) + 2 * n,
            field,
            invariant,
        });
        if i < k {
            let jump = &m.jumps[p.jumps[i]];
            constraints.push((format!("guard@{i}"), compile(&rename(&jump.guard, &at(i, true), &at(i, true)))));
            let mut primed = vec![false; n];
            jump.reset.visit_vars(&mut |name, is_primed| {
                if is_primed {
                    if let Some(&j) = local.get(name) {
                        primed[j] = true;
                    }
                }
            });
            let mut parts = vec![rename(&jump.reset, &at(i, true), &at(i + 1, false))];
            for (j, v) in m.vars.iter().enumerate() {
                if !primed[j] {
                    parts.push(Formula::atom(
                        Expr::var(step_name(&v.name, i + 1, false)),
                        RelOp::Eq,
                        Expr::var(step_name(&v.name, i, true)),
                    ));
                }
            }
            constraints.push((format!("reset@{i}"), compile(&Formula::and(parts))));
        }
    }
    let last = *p.modes.last().unwrap();
    let goals: Vec<Formula> = m.goals.iter().filter(|g| g.0 == last).map(|g| g.1.clone()).collect();
    let goal = if goals.len() == 1 { goals[0].clone() } else { Formula::Or(goals) };
    constraints.push(("goal".to_string(), compile(&rename(&goal, &at(k, true), &at(k, true)))));

    UnfoldedProblem { k, n, time_bound: q.time_bound, path: p.clone(), names, domain, state_bounds, constraints, flows }
}
