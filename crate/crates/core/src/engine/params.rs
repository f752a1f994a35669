use crate::error::{Error, Result};
use crate::geometry::{sup_derivative_norm, Curve};

/// Round counts above this are reported as not runnable at desk scale.
pub const DESK_ROUND_LIMIT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamMode {
    /// Smallest `λ` satisfying the `N log(1 − Q/λ)` gate. `sup_measure`, when
    /// known, enables the `ε < sup/72` check.
    Strict { sup_measure: Option<f64> },
    /// User `λ > 12/σ` and round cap; the strict gate is off.
    DeskRelaxed { lambda: f64, round_cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    pub sigma: f64,
    /// `M = ‖f₁′‖ + σ` with the certified upper sup.
    pub m: f64,
    pub lambda: f64,
    /// Round cap `N`.
    pub rounds: u64,
    pub eps: f64,
    pub q: f64,
    pub c: f64,
    pub strict: bool,
    /// False when `N` exceeds [`DESK_ROUND_LIMIT`].
    pub desk_feasible: bool,
}

impl EngineParams {
    /// `κ = σ/8 − 1/λ`.
    pub fn kappa(&self) -> f64 {
        self.sigma / 8.0 - 1.0 / self.lambda
    }

    /// Left side of the `λ` gate; the gate holds when this is below `−log 4`.
    pub fn gate_lhs(&self) -> f64 {
        gate_lhs(self.lambda, self.sigma, self.eps, self.q)
    }

    pub fn gate_holds(&self) -> bool {
        self.gate_lhs() < -(4f64.ln())
    }

    /// Per-round guaranteed factor `1 − Q/λ`.
    pub fn round_factor(&self) -> f64 {
        1.0 - self.q / self.lambda
    }

    /// `ε / 2ⁿ`.
    pub fn eps_at(&self, n: usize) -> f64 {
        self.eps * 0.5f64.powi(n as i32)
    }
}

fn gate_lhs(lambda: f64, sigma: f64, eps: f64, q: f64) -> f64 {
    let a = lambda * lambda * (sigma / 8.0 - 1.0 / lambda).powi(2);
    (eps * a - 1.0) * (-q / lambda).ln_1p()
}

/// `N = ⌊λ²(σ/8 − 1/λ)² ε⌋`.
pub fn round_count(lambda: f64, sigma: f64, eps: f64) -> u64 {
    (lambda * lambda * (sigma / 8.0 - 1.0 / lambda).powi(2) * eps).floor() as u64
}

pub fn derive_params(f1: &Curve, sigma: f64, eps: f64, c: f64, mode: ParamMode) -> Result<EngineParams> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("σ = {sigma} must be positive")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Parameter(format!("c = {c} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("ε = {eps} must be positive")));
    }
    let m = sup_derivative_norm(f1).upper + sigma;
    derive_with_m(m, sigma, eps, c, mode)
}

/// As [`derive_params`] with `M` given directly.
pub fn derive_with_m(m: f64, sigma: f64, eps: f64, c: f64, mode: ParamMode) -> Result<EngineParams> {
    let q = c / (4.0 * m);
    let floor = 12.0 / sigma;
    match mode {
        ParamMode::DeskRelaxed { lambda, round_cap } => {
            if !(lambda > floor) {
                return Err(Error::Parameter(format!("λ = {lambda} must exceed 12/σ = {floor}")));
            }
            if round_cap == 0 {
                return Err(Error::Parameter("round cap must be at least 1".into()));
            }
            Ok(EngineParams {
                sigma,
                m,
                lambda,
                rounds: round_cap,
                eps,
                q,
                c,
                strict: false,
                desk_feasible: round_cap <= DESK_ROUND_LIMIT,
            })
        }
        ParamMode::Strict { sup_measure } => {
            if let Some(sup) = sup_measure {
                if !(eps < sup / 72.0) {
                    return Err(Error::Parameter(format!(
                        "ε = {eps} violates ε < sup|f⁻¹(E)|/72 = {}",
                        sup / 72.0
                    )));
                }
            }
            let holds = |l: f64| l > floor && l > q && gate_lhs(l, sigma, eps, q) < -(4f64.ln());
            let mut lo = floor.max(q);
            let mut hi = 2.0 * lo.max(1.0);
            while !holds(hi) {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::Parameter("no λ satisfies the gate".into()));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let rounds = round_count(hi, sigma, eps);
            Ok(EngineParams {
                sigma,
                m,
                lambda: hi,
                rounds,
                eps,
                q,
                c,
                strict: true,
                desk_feasible: rounds <= DESK_ROUND_LIMIT,
            })
        }
    }
}
