//! Closed intervals over the extended reals with outward rounding.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

/// Ulps added on each side of a rounded result.
pub const WIDEN_ULPS: u32 = 2;

/// `lo > hi` encodes the empty interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(mut x: f64) -> f64 {
    for _ in 0..WIDEN_ULPS {
        x = x.next_down();
    }
    x
}

fn up(mut x: f64) -> f64 {
    for _ in 0..WIDEN_ULPS {
        x = x.next_up();
    }
    x
}

/// Product with the convention 0 * inf = 0.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const NONNEG: Interval = Interval { lo: 0.0, hi: f64::INFINITY };

    /// Returns the empty interval when `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo <= hi {
            Interval { lo, hi }
        } else {
            Interval::EMPTY
        }
    }

    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    /// Widens a computed enclosure outward, dropping NaN bounds to infinities.
    pub fn rounded(lo: f64, hi: f64) -> Interval {
        let lo = if lo.is_nan() { f64::NEG_INFINITY } else { down(lo) };
        let hi = if hi.is_nan() { f64::INFINITY } else { up(hi) };
        Interval::new(lo, hi)
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    /// Midpoint, finite whenever the interval is non-empty.
    pub fn mid(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let m = 0.5 * self.lo + 0.5 * self.hi;
                m.clamp(self.lo, self.hi)
            }
            (false, true) => {
                if self.hi > 0.0 {
                    0.0
                } else {
                    (2.0 * self.hi - 1.0).max(-f64::MAX)
                }
            }
            (true, false) => {
                if self.lo < 0.0 {
                    0.0
                } else {
                    (2.0 * self.lo + 1.0).min(f64::MAX)
                }
            }
            (false, false) => 0.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    pub fn intersect(&self, o: &Interval) -> Interval {
        Interval::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        if self.is_empty() {
            *o
        } else if o.is_empty() {
            *self
        } else {
            Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
        }
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    pub fn add(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::rounded(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::rounded(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn neg(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        let c = [mul0(self.lo, o.lo), mul0(self.lo, o.hi), mul0(self.hi, o.lo), mul0(self.hi, o.hi)];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::rounded(lo, hi)
    }

    /// Extended division. A divisor that is exactly zero gives the empty set;
    /// one straddling zero gives one-sided or whole-line results.
    pub fn div(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() || (o.lo == 0.0 && o.hi == 0.0) {
            return Interval::EMPTY;
        }
        if !o.contains_zero() {
            let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
            if c.iter().any(|v| v.is_nan()) {
                return Interval::ENTIRE;
            }
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Interval::rounded(lo, hi);
        }
        if self.contains_zero() || (o.lo < 0.0 && o.hi > 0.0) {
            return Interval::ENTIRE;
        }
        // The divisor touches zero at one end only and the numerator has a sign.
        if o.lo == 0.0 {
            if self.lo > 0.0 {
                Interval::rounded(self.lo / o.hi, f64::INFINITY)
            } else {
                Interval::rounded(f64::NEG_INFINITY, self.hi / o.hi)
            }
        } else if self.lo > 0.0 {
            Interval::rounded(f64::NEG_INFINITY, self.lo / o.lo)
        } else {
            Interval::rounded(self.hi / o.lo, f64::INFINITY)
        }
    }

    /// Set of `x` with `x * o` meeting `self`; unlike [`Interval::div`] it is
    /// the whole line when both contain zero.
    pub fn div_rel(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        if self.contains_zero() && o.contains_zero() {
            return Interval::ENTIRE;
        }
        self.div(o)
    }

    pub fn powi(&self, n: i32) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        match n {
            0 => Interval::point(1.0),
            1 => *self,
            n if n < 0 => Interval::point(1.0).div(&self.powi(-n)),
            n if n % 2 == 0 => {
                let (a, b) = (self.lo.abs(), self.hi.abs());
                let lo = if self.contains_zero() { 0.0 } else { a.min(b).powi(n) };
                Interval::rounded(lo, a.max(b).powi(n)).intersect(&Interval::NONNEG)
            }
            n => Interval::rounded(self.lo.powi(n), self.hi.powi(n)),
        }
    }

    /// Real power `x ^ y` on `x >= 0`, through `exp(y * ln x)`.
    pub fn pow(&self, y: &Interval) -> Interval {
        let x = self.intersect(&Interval::NONNEG);
        if x.is_empty() || y.is_empty() {
            return Interval::EMPTY;
        }
        if x.hi == 0.0 {
            // 0 ^ y: 1 at y = 0, 0 for y > 0, undefined for y < 0.
            let mut r = Interval::EMPTY;
            if y.contains_zero() {
                r = r.hull(&Interval::point(1.0));
            }
            if y.hi > 0.0 {
                r = r.hull(&Interval::point(0.0));
            }
            return r;
        }
        y.mul(&x.ln()).exp()
    }

    pub fn exp(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        Interval::rounded(self.lo.exp(), self.hi.exp()).intersect(&Interval::NONNEG)
    }

    pub fn ln(&self) -> Interval {
        if self.is_empty() || self.hi <= 0.0 {
            return Interval::EMPTY;
        }
        Interval::rounded(self.lo.max(0.0).ln(), self.hi.ln())
    }

    pub fn sqrt(&self) -> Interval {
        if self.is_empty() || self.hi < 0.0 {
            return Interval::EMPTY;
        }
        Interval::rounded(self.lo.max(0.0).sqrt(), self.hi.sqrt()).intersect(&Interval::NONNEG)
    }

    pub fn abs(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval { lo: 0.0, hi: (-self.lo).max(self.hi) }
        }
    }

    pub fn min(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn max(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Whether some `offset + k * period` lies in the interval, erring towards yes.
    fn hits(&self, offset: f64, period: f64) -> bool {
        let eps = 1e-9;
        let k_lo = ((self.lo - offset) / period - eps).ceil();
        let k_hi = ((self.hi - offset) / period + eps).floor();
        k_lo <= k_hi
    }

    pub fn sin(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        let unit = Interval { lo: -1.0, hi: 1.0 };
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= 2.0 * PI {
            return unit;
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let hi = if self.hits(FRAC_PI_2, 2.0 * PI) { 1.0 } else { a.max(b) };
        let lo = if self.hits(-FRAC_PI_2, 2.0 * PI) { -1.0 } else { a.min(b) };
        Interval::rounded(lo, hi).intersect(&unit)
    }

    pub fn cos(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        let unit = Interval { lo: -1.0, hi: 1.0 };
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= 2.0 * PI {
            return unit;
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let hi = if self.hits(0.0, 2.0 * PI) { 1.0 } else { a.max(b) };
        let lo = if self.hits(PI, 2.0 * PI) { -1.0 } else { a.min(b) };
        Interval::rounded(lo, hi).intersect(&unit)
    }

    /// Whole line when a pole may lie inside.
    pub fn tan(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= PI || self.hits(FRAC_PI_2, PI) {
            return Interval::ENTIRE;
        }
        Interval::rounded(self.lo.tan(), self.hi.tan())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[empty]")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}
