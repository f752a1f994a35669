pub mod cli;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod porous;
pub mod power_lab;
pub mod preimage;
pub mod perturbation;
pub mod vitali;

pub use error::{Error, Result};
