//! δ-decision over unfolded problems: weakening, validated flow enclosures
//! and interval branch-and-prune.

mod external;
mod flow;
mod icp;

pub use external::{ExternalError, ExternalSolver};
pub use flow::{check_invariant, enclose_flow, FlowEnclosure, FlowError, FlowSettings, Tile};
pub use icp::icp_solve;

use std::fmt;

use crate::interval::{Constraint, Interval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaConfig {
    pub delta: f64,
    /// Boxes at most this wide are not split further.
    pub min_box_width: f64,
    pub max_branch_nodes: usize,
    pub ode_step_max: f64,
    pub picard_iterations: usize,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig::with_delta(0.001)
    }
}

impl DeltaConfig {
    pub fn with_delta(delta: f64) -> DeltaConfig {
        DeltaConfig { delta, min_box_width: delta / 10.0, max_branch_nodes: 100_000, ode_step_max: 0.05, picard_iterations: 20 }
    }

    /// Problems with the configuration; warnings are prefixed `warning:`.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("delta", self.delta),
            ("min_box_width", self.min_box_width),
            ("ode_step_max", self.ode_step_max),
            ("max_branch_nodes", self.max_branch_nodes as f64),
            ("picard_iterations", self.picard_iterations as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.min_box_width >= self.delta {
            out.push(format!("warning: min_box_width {} is not below delta {}", self.min_box_width, self.delta));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().iter().all(|m| m.starts_with("warning:"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Unsat,
    /// Witness box; empty when the answer came from an external solver.
    DeltaSat(Vec<Interval>),
    BudgetExhausted { nodes: usize, smallest_width: f64 },
}

impl Verdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unsat => write!(f, "unsat"),
            Verdict::DeltaSat(_) => write!(f, "delta-sat"),
            Verdict::BudgetExhausted { nodes, smallest_width } => {
                write!(f, "budget exhausted after {nodes} nodes (smallest width {smallest_width:e})")
            }
        }
    }
}

/// Relaxes every atom `t > 0` / `t >= 0` to `t > -delta` / `t >= -delta`.
pub fn delta_weaken(c: &Constraint, delta: f64) -> Constraint {
    c.weaken(delta)
}
