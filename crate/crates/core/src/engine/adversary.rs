use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{gamma1_distance, sup_derivative_norm, sup_norm, Curve, Point};
use crate::porous::PorousSetOracle;
use crate::preimage::preimage_measure;

/// Share of `δ` a sampled perturbation may use.
const SAMPLE_SHARE: f64 = 0.9;
const BUMP_KNOTS: usize = 5;

pub type CustomAdversary = Arc<dyn Fn(&Curve, f64, usize) -> Curve + Send + Sync>;

/// Choice of `f_{n+1}` inside `B(g_n, δ_n)`.
#[derive(Clone)]
pub enum Adversary {
    Stay,
    /// Best of `samples` seeded random curves in the ball, by measure.
    WorstSampled { samples: usize, seed: u64 },
    /// Called with `(g_n, δ_n, n)`; the result is checked against the ball.
    Custom(CustomAdversary),
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::Stay => write!(f, "Stay"),
            Adversary::WorstSampled { samples, seed } => {
                write!(f, "WorstSampled {{ samples: {samples}, seed: {seed} }}")
            }
            Adversary::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Adversary {
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::Stay => "stay",
            Adversary::WorstSampled { .. } => "worst-sampled",
            Adversary::Custom(_) => "custom",
        }
    }

    pub fn choose(&self, g: &Curve, delta: f64, n: usize, oracle: &PorousSetOracle, tol: f64) -> Result<Curve> {
        match self {
            Adversary::Stay => Ok(g.clone()),
            Adversary::WorstSampled { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
                let mut best = g.clone();
                let mut best_value = preimage_measure(g, oracle, tol)?.measure.value;
                for _ in 0..*samples {
                    let cand = g.add(&random_bump(&mut rng, g.dim(), SAMPLE_SHARE * delta))?;
                    let value = preimage_measure(&cand, oracle, tol)?.measure.value;
                    if value > best_value {
                        best = cand;
                        best_value = value;
                    }
                }
                Ok(best)
            }
            Adversary::Custom(f) => {
                let cand = f(g, delta, n);
                let dist = gamma1_distance(&cand, g)?;
                if !(dist.upper < delta) {
                    return Err(Error::Precondition(format!(
                        "custom adversary left B(g_n, δ_n): distance ≤ {:e}, δ = {delta:e}",
                        dist.upper
                    )));
                }
                Ok(cand)
            }
        }
    }
}

/// A Hermite bump with Γ₁ norm below `size`.
pub(crate) fn random_bump(rng: &mut ChaCha8Rng, dim: usize, size: f64) -> Curve {
    let ts: Vec<f64> = (0..BUMP_KNOTS).map(|i| i as f64 / (BUMP_KNOTS - 1) as f64).collect();
    let mut draw = || Point::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite");
    let pos: Vec<Point> = ts.iter().map(|_| draw()).collect();
    let der: Vec<Point> = ts.iter().map(|_| draw()).collect();
    let raw = Curve::hermite(&ts, &pos, &der).expect("increasing knots");
    let norm = sup_norm(&raw).upper + sup_derivative_norm(&raw).upper;
    if norm > 0.0 {
        raw.scale(size / norm * (1.0 - 1e-9))
    } else {
        raw
    }
}
