//! Branch-and-prune over the joint box of an unfolded problem.

use super::flow::{enclose_flow, FlowEnclosure, FlowSettings};
use super::{DeltaConfig, Verdict};
use crate::encoder::{FlowLink, UnfoldedProblem};
use crate::interval::{box_is_empty, box_width, relative_shrink, Constraint, Interval, Truth};

/// Outer prune rounds stop once no component shrinks by more than this.
const PRUNE_TOL: f64 = 1e-3;
const PRUNE_ROUNDS: usize = 12;
/// Step refinements tried when certifying a flow.
const REFINEMENTS: [f64; 3] = [1.0, 0.125, 0.015625];

struct Link<'a> {
    link: &'a FlowLink,
    /// Every right-hand side is a constant, so the encoder's algebraic link is exact.
    constant_rates: bool,
    /// Straight-line trajectories with a convex invariant: checking the
    /// invariant at both ends covers the whole segment.
    endpoint_exact: bool,
    weak_invariant: Constraint,
}

impl Link<'_> {
    fn needs_enclosure(&self) -> bool {
        !self.endpoint_exact
    }
}

struct Search<'a> {
    p: &'a UnfoldedProblem,
    cfg: &'a DeltaConfig,
    algebraic: Constraint,
    weak: Constraint,
    links: Vec<Link<'a>>,
}

impl<'a> Search<'a> {
    fn new(p: &'a UnfoldedProblem, cfg: &'a DeltaConfig) -> Search<'a> {
        let algebraic = p.algebraic();
        let weak = algebraic.weaken(cfg.delta);
        let links = p
            .flows
            .iter()
            .map(|link| {
                let constant_rates = link.field.iter().all(|t| t.as_const().is_some());
                Link {
                    link,
                    constant_rates,
                    endpoint_exact: constant_rates && link.invariant.is_convex(),
                    weak_invariant: link.invariant.weaken(cfg.delta),
                }
            })
            .collect();
        Search { p, cfg, algebraic, weak, links }
    }

    /// Tile length matched to the width of the link's part of the box, so
    /// that narrow boxes get enclosures tight enough to refute them.
    fn step(&self, link: &FlowLink, b: &[Interval]) -> f64 {
        let n = self.p.n;
        let local = b[link.x..link.x + n].iter().chain(&b[link.xt..link.xt + n]).chain([&b[link.t]]);
        let w = local.map(Interval::width).fold(0.0, f64::max);
        w.max(self.cfg.min_box_width).min(self.cfg.ode_step_max)
    }

    fn enclose(&self, link: &FlowLink, b: &[Interval], scale: f64) -> Option<FlowEnclosure> {
        let n = self.p.n;
        let step = (self.step(link, b) * scale).max(self.cfg.min_box_width);
        let settings = FlowSettings {
            step,
            coarse_step: self.cfg.ode_step_max,
            fine_from: b[link.t].lo,
            picard_iterations: self.cfg.picard_iterations,
        };
        enclose_flow(&link.field, &b[link.x..link.x + n], b[link.t].hi, &self.p.state_bounds, &settings).ok()
    }

    /// Narrows `xt` and `t` of one step from its flow enclosure.
    fn prune_flow(&self, link: &FlowLink, b: &mut [Interval]) -> bool {
        let n = self.p.n;
        let Some(enc) = self.enclose(link, b, 1.0) else {
            return true;
        };
        let t = b[link.t];
        let mut t_hi = t.hi;
        for tile in &enc.tiles {
            if tile.time.lo > t_hi {
                break;
            }
            if box_is_empty(&tile.state) || link.invariant.eval(&tile.state) == Truth::False {
                if tile.time.lo <= t.lo {
                    return false;
                }
                t_hi = t_hi.min(tile.time.lo);
                break;
            }
        }
        let window = Interval::new(t.lo, t_hi);
        let mut hull: Option<Vec<Interval>> = None;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for tile in &enc.tiles {
            let overlap = tile.time.intersect(&window);
            if !touches(&tile.time, &window) {
                continue;
            }
            let s: Vec<Interval> = tile.state.iter().zip(&b[link.xt..link.xt + n]).map(|(a, c)| a.intersect(c)).collect();
            if box_is_empty(&s) {
                continue;
            }
            hull = Some(match hull {
                None => s,
                Some(h) => h.iter().zip(&s).map(|(a, c)| a.hull(c)).collect(),
            });
            lo = lo.min(overlap.lo);
            hi = hi.max(overlap.hi);
        }
        let Some(hull) = hull else {
            return false;
        };
        b[link.xt..link.xt + n].copy_from_slice(&hull);
        b[link.t] = Interval::new(lo, hi);
        true
    }

    fn prune(&self, b: &mut [Interval]) -> bool {
        for _ in 0..PRUNE_ROUNDS {
            let before = b.to_vec();
            if !self.algebraic.contract(b) {
                return false;
            }
            for l in &self.links {
                if l.needs_enclosure() && !self.prune_flow(l.link, b) {
                    return false;
                }
            }
            if box_is_empty(b) {
                return false;
            }
            if relative_shrink(&before, b) < PRUNE_TOL {
                break;
            }
        }
        true
    }

    /// Whether every point of `b` (or, for flows, some trajectory through it)
    /// satisfies the weakened problem.
    fn certify(&self, b: &[Interval]) -> bool {
        if self.weak.eval(b) != Truth::True {
            return false;
        }
        self.links.iter().all(|l| !l.needs_enclosure() || self.certify_flow(l, b))
    }

    fn certify_flow(&self, l: &Link, b: &[Interval]) -> bool {
        let n = self.p.n;
        let t = b[l.link.t];
        let xt = &b[l.link.xt..l.link.xt + n];
        if xt.iter().any(|v| v.width() > self.cfg.delta) {
            return false;
        }
        for scale in REFINEMENTS {
            let Some(enc) = self.enclose(l.link, b, scale) else {
                return false;
            };
            let mut tube_ok = true;
            let mut hull: Vec<Interval> = xt.to_vec();
            for tile in &enc.tiles {
                if tile.time.lo > t.hi {
                    break;
                }
                match l.weak_invariant.eval(&tile.state) {
                    Truth::True => {}
                    Truth::False => return false,
                    Truth::Unknown => tube_ok = false,
                }
                if !l.constant_rates && touches(&tile.time, &t) {
                    hull = hull.iter().zip(&tile.state).map(|(a, c)| a.hull(c)).collect();
                }
            }
            if tube_ok && hull.iter().all(|h| h.width() <= self.cfg.delta) {
                return true;
            }
            if !l.constant_rates && spread_exceeds(&enc, &t, self.cfg.delta) {
                // The states at the ends of the window are already too far apart.
                return false;
            }
        }
        false
    }

    /// Widest component; ties go to the first index after the previous split.
    fn split_var(&self, b: &[Interval], last: Option<usize>) -> usize {
        let widest = box_width(b);
        let start = last.map_or(0, |l| l + 1);
        (0..b.len())
            .map(|i| (start + i) % b.len())
            .find(|&i| b[i].width() >= widest)
            .unwrap_or(0)
    }

    fn run(&self) -> Verdict {
        let mut stack = vec![(self.p.domain.clone(), None::<usize>)];
        let mut nodes = 0usize;
        let mut undecided = 0usize;
        let mut smallest = f64::INFINITY;
        while let Some((mut b, last)) = stack.pop() {
            nodes += 1;
            if nodes > self.cfg.max_branch_nodes {
                return Verdict::BudgetExhausted { nodes: nodes - 1, smallest_width: smallest };
            }
            if !self.prune(&mut b) {
                continue;
            }
            let width = box_width(&b);
            smallest = smallest.min(width);
            if self.certify(&b) {
                return Verdict::DeltaSat(b);
            }
            if width <= self.cfg.min_box_width {
                undecided += 1;
                continue;
            }
            let v = self.split_var(&b, last);
            let (lo, hi) = b[v].bisect();
            let mut upper = b.clone();
            upper[v] = hi;
            b[v] = lo;
            stack.push((upper, Some(v)));
            stack.push((b, Some(v)));
        }
        if undecided > 0 {
            Verdict::BudgetExhausted { nodes, smallest_width: smallest }
        } else {
            Verdict::Unsat
        }
    }
}

/// Whether a tile covers part of `window`. A tile that only shares an
/// endpoint with a proper window is skipped, since its neighbour covers it.
fn touches(tile: &Interval, window: &Interval) -> bool {
    let overlap = tile.intersect(window);
    !overlap.is_empty() && (overlap.width() > 0.0 || window.width() == 0.0)
}

/// Whether the states at `t.lo` and `t.hi` are certainly more than `delta` apart.
fn spread_exceeds(enc: &FlowEnclosure, t: &Interval, delta: f64) -> bool {
    let at = |time: f64| enc.tiles.iter().find(|tile| tile.time.contains(time)).map(|tile| &tile.state);
    let last_at = |time: f64| enc.tiles.iter().rev().find(|tile| tile.time.contains(time)).map(|tile| &tile.state);
    let (Some(a), Some(b)) = (last_at(t.lo), at(t.hi)) else {
        return false;
    };
    a.iter().zip(b).any(|(a, b)| !a.is_empty() && !b.is_empty() && (b.lo - a.hi > delta || a.lo - b.hi > delta))
}

pub fn icp_solve(p: &UnfoldedProblem, cfg: &DeltaConfig) -> Verdict {
    Search::new(p, cfg).run()
}
