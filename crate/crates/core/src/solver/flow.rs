//! First-order validated flow enclosures.

use thiserror::Error;

use crate::interval::{Constraint, Interval, Term, Truth};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("no a-priori enclosure found at t = {time} even with step {step}")]
    EnclosureBlowup { time: f64, step: f64 },
}

/// State enclosure over one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub time: Interval,
    pub state: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEnclosure {
    /// Consecutive tiles covering `[0, T]`.
    pub tiles: Vec<Tile>,
    /// Enclosure of the state at time `T`.
    pub terminal: Vec<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings {
    /// Largest tile length from `fine_from` on.
    pub step: f64,
    /// Largest tile length before `fine_from`.
    pub coarse_step: f64,
    pub fine_from: f64,
    pub picard_iterations: usize,
}

impl FlowSettings {
    pub fn uniform(step: f64, picard_iterations: usize) -> FlowSettings {
        FlowSettings { step, coarse_step: step, fine_from: 0.0, picard_iterations }
    }

    fn max_step(&self, now: f64) -> f64 {
        if now < self.fine_from && self.coarse_step > self.step {
            self.coarse_step.min(self.fine_from - now).max(self.step)
        } else {
            self.step
        }
    }
}

/// Halvings of the step tried before giving up on a tile.
const MAX_HALVINGS: usize = 12;

fn eval_field(field: &[Term], b: &[Interval]) -> Vec<Interval> {
    field.iter().map(|t| t.eval(b)).collect()
}

/// `x + h * f` componentwise, restricted to `domain`.
fn euler(x: &[Interval], h: &Interval, f: &[Interval], domain: &[Interval]) -> Vec<Interval> {
    x.iter().zip(f).zip(domain).map(|((x, f), d)| x.add(&h.mul(f)).intersect(d)).collect()
}

/// Second-order term `(Df f)(b)`, if the field is smooth on `b`.
fn second_order(field: &[Term], b: &[Interval], f: &[Interval]) -> Option<Vec<Interval>> {
    field.iter().map(|t| t.directional(b, f)).collect()
}

/// Taylor form `x + s f(x) + s^2/2 g` for `s` in `[0, h]` (or `s = h` when `h` is a point).
fn taylor(x: &[Interval], fx: &[Interval], g: &[Interval], h: &Interval) -> Vec<Interval> {
    let half_h2 = h.mul(h).mul(&Interval::point(0.5));
    x.iter().zip(fx).zip(g).map(|((x, f), g)| x.add(&h.mul(f)).add(&half_h2.mul(g))).collect()
}

fn meet(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    a.iter().zip(b).map(|(a, b)| a.intersect(b)).collect()
}

fn subset(a: &[Interval], b: &[Interval]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.subset_of(y))
}

fn any_empty(b: &[Interval]) -> bool {
    b.iter().any(Interval::is_empty)
}

/// A-priori enclosure of every trajectory that starts in `x` and stays in
/// `domain` during `[0, h]`.
fn a_priori(field: &[Term], x: &[Interval], h: f64, domain: &[Interval], iterations: usize) -> Option<Vec<Interval>> {
    let span = Interval::new(0.0, h);
    let mut b = euler(x, &span, &eval_field(field, x), domain);
    for _ in 0..iterations {
        if any_empty(&b) {
            return Some(b);
        }
        let next = euler(x, &span, &eval_field(field, &b), domain);
        if subset(&next, &b) {
            return Some(next);
        }
        b = b
            .iter()
            .zip(&next)
            .zip(domain)
            .map(|((old, new), d)| {
                let h = old.hull(new);
                let pad = 0.1 * h.width() + 1e-9 * (1.0 + h.lo.abs().max(h.hi.abs()));
                Interval::new(h.lo - pad, h.hi + pad).intersect(d)
            })
            .collect();
    }
    None
}

/// Encloses all trajectories of `field` from `init` over `[0, t_end]`,
/// discarding trajectories once they leave `domain`.
pub fn enclose_flow(
    field: &[Term],
    init: &[Interval],
    t_end: f64,
    domain: &[Interval],
    cfg: &FlowSettings,
) -> Result<FlowEnclosure, FlowError> {
    let mut x: Vec<Interval> = init.iter().zip(domain).map(|(a, d)| a.intersect(d)).collect();
    let mut tiles = Vec::new();
    let mut now = 0.0;
    if t_end <= 0.0 || any_empty(&x) {
        tiles.push(Tile { time: Interval::new(0.0, t_end.max(0.0)), state: x.clone() });
        return Ok(FlowEnclosure { tiles, terminal: x });
    }
    while now < t_end {
        let mut h = cfg.max_step(now).min(t_end - now);
        let mut found = None;
        for _ in 0..=MAX_HALVINGS {
            if let Some(b) = a_priori(field, &x, h, domain, cfg.picard_iterations) {
                found = Some(b);
                break;
            }
            h *= 0.5;
        }
        let Some(state) = found else {
            return Err(FlowError::EnclosureBlowup { time: now, step: h });
        };
        let end = if t_end - now - h <= 1e-15 * t_end.max(1.0) { t_end } else { now + h };
        let exact_h = Interval::rounded(end - now, end - now).intersect(&Interval::NONNEG);
        let mut next = euler(&x, &exact_h, &eval_field(field, &state), domain);
        let mut state = state;
        if !any_empty(&state) {
            if let Some(g) = second_order(field, &state, &eval_field(field, &state)) {
                let fx = eval_field(field, &x);
                next = meet(&next, &taylor(&x, &fx, &g, &exact_h));
                let span = Interval::new(0.0, exact_h.hi);
                state = meet(&state, &taylor(&x, &fx, &g, &span));
            }
        }
        tiles.push(Tile { time: Interval::new(now, end), state: state.clone() });
        x = next;
        now = end;
        if any_empty(&state) || any_empty(&x) {
            // No trajectory survives; the remaining time is covered by empty tiles.
            let empty = vec![Interval::EMPTY; x.len()];
            if now < t_end {
                tiles.push(Tile { time: Interval::new(now, t_end), state: empty.clone() });
            }
            return Ok(FlowEnclosure { tiles, terminal: empty });
        }
    }
    Ok(FlowEnclosure { tiles, terminal: x })
}

/// Invariant along an enclosure: true when the weakened invariant holds on
/// every tile, false when the invariant itself fails on some tile.
pub fn check_invariant(enc: &FlowEnclosure, inv: &Constraint, delta: f64) -> Truth {
    let weak = inv.weaken(delta);
    let mut all = true;
    for tile in &enc.tiles {
        if any_empty(&tile.state) || inv.eval(&tile.state) == Truth::False {
            return Truth::False;
        }
        if weak.eval(&tile.state) != Truth::True {
            all = false;
        }
    }
    if all {
        Truth::True
    } else {
        Truth::Unknown
    }
}
