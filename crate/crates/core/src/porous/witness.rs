use crate::geometry::Point;

/// A certified porosity hole: the open ball `B(h, r)` misses the set and
/// `d = ‖h − x‖` for the query point `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleWitness {
    pub h: Point,
    pub r: f64,
    pub d: f64,
}

impl HoleWitness {
    pub fn ratio(&self) -> f64 {
        self.r / self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PorosityMode {
    /// Holes with `r > c·d`.
    CPorous { c: f64 },
    /// Holes with `r > d^p`.
    PowerP { p: f64 },
}

impl PorosityMode {
    pub fn admits(&self, r: f64, d: f64) -> bool {
        match *self {
            PorosityMode::CPorous { c } => r > c * d,
            PorosityMode::PowerP { p } => r > d.powf(p),
        }
    }

    pub fn c(&self) -> Option<f64> {
        match *self {
            PorosityMode::CPorous { c } => Some(c),
            PorosityMode::PowerP { .. } => None,
        }
    }
}

/// Order in which truncation levels are searched for holes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HolePolicy {
    /// Largest admissible hole first.
    #[default]
    CoarsestFirst,
    /// Smallest admissible hole first (gives shorter covering intervals).
    FinestFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Unknown,
}
