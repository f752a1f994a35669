//! Points, parameter intervals, interval sets and piecewise-cubic C¹ curves.

mod bounds;
mod curve;
mod interval;
mod point;
mod sup;

pub use bounds::Bounds;
pub use curve::{Curve, Knot, Piece};
pub use interval::{Interval, IntervalSet};
pub use point::Point;
pub use sup::{gamma1_distance, sup_derivative_norm, sup_derivative_norm_on, sup_norm, Bracket};
