//! Outward-rounded interval arithmetic, used to re-verify hole witnesses
//! and membership claims independently of the code that produced them.

/// A closed real interval `[lo, hi]` whose endpoints are rounded outward
/// after every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn point(x: f64) -> Self {
        Bounds { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Bounds { lo, hi }
    }

    fn outward(lo: f64, hi: f64) -> Self {
        Bounds {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn add(self, o: Bounds) -> Bounds {
        Self::outward(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Bounds) -> Bounds {
        Self::outward(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn mul(self, o: Bounds) -> Bounds {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::outward(lo, hi)
    }

    pub fn abs(self) -> Bounds {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            Bounds::new(-self.hi, -self.lo)
        } else {
            Bounds::new(0.0, self.hi.max(-self.lo))
        }
    }

    pub fn sqr(self) -> Bounds {
        let a = self.abs();
        Self::outward(a.lo * a.lo, a.hi * a.hi)
    }

    pub fn sqrt(self) -> Bounds {
        Self::outward(self.lo.max(0.0).sqrt(), self.hi.max(0.0).sqrt())
    }

    /// `x^p` for `x ≥ 0`; `powf` is not correctly rounded, so widen by a few ulps.
    pub fn powf(self, p: f64) -> Bounds {
        let a = self.abs();
        let lo = a.lo.powf(p);
        let hi = a.hi.powf(p);
        Bounds {
            lo: (lo * (1.0 - 4.0 * f64::EPSILON)).next_down().max(0.0),
            hi: (hi * (1.0 + 4.0 * f64::EPSILON)).next_up(),
        }
    }

    /// Euclidean norm of a vector given per coordinate.
    pub fn norm(coords: &[Bounds]) -> Bounds {
        coords
            .iter()
            .fold(Bounds::point(0.0), |acc, c| acc.add(c.sqr()))
            .sqrt()
    }

    pub fn certainly_lt(self, o: Bounds) -> bool {
        self.hi < o.lo
    }

    pub fn certainly_le(self, o: Bounds) -> bool {
        self.hi <= o.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encloses_true_values() {
        let a = Bounds::point(0.1);
        let b = Bounds::point(0.2);
        let s = a.add(b);
        assert!(s.lo <= 0.30000000000000004 && s.hi >= 0.3);
        let m = Bounds::point(3.0).mul(Bounds::new(-1.0, 2.0));
        assert!(m.lo <= -3.0 && m.hi >= 6.0);
        let n = Bounds::norm(&[Bounds::point(3.0), Bounds::point(4.0)]);
        assert!(n.lo <= 5.0 && n.hi >= 5.0);
    }
}
