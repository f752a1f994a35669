use crate::error::Result;
use crate::porous::PorousSetOracle;
use crate::preimage::{preimage_measure, preimage_measure_on, MeasureEstimate};

use super::params::EngineParams;
use super::pass::{PassState, NULL_SLACK};

#[derive(Debug, Clone, PartialEq)]
pub struct WindowCheck {
    pub m: usize,
    /// `|f_n⁻¹(E) ∩ F_m|`.
    pub measured: MeasureEstimate,
    /// `|C_m| + 7ε/2^m`.
    pub bound: f64,
}

impl WindowCheck {
    pub fn holds(&self) -> bool {
        self.measured.lower() <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub round: usize,
    pub windows: Vec<WindowCheck>,
    pub measure: MeasureEstimate,
    pub aggregate_bound: f64,
    pub c_total: f64,
    pub c_bound: f64,
    /// Length of `⋃F_i ∪ ⋃(I_k \ R_k)` for the latest round.
    pub partition_length: f64,
}

impl AuditReport {
    pub fn windows_hold(&self) -> bool {
        self.windows.iter().all(WindowCheck::holds)
    }

    pub fn aggregate_holds(&self) -> bool {
        self.measure.lower() <= self.aggregate_bound
    }

    pub fn stopping_holds(&self) -> bool {
        self.c_total < self.c_bound
    }

    pub fn partition_holds(&self) -> bool {
        self.partition_length >= 1.0 - NULL_SLACK
    }

    pub fn all_hold(&self) -> bool {
        self.windows_hold() && self.aggregate_holds() && self.stopping_holds() && self.partition_holds()
    }

    /// `name,measured,bound,holds` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,measured,bound,holds\n");
        for w in &self.windows {
            out.push_str(&format!("window_{},{:e},{:e},{}\n", w.m, w.measured.value, w.bound, w.holds()));
        }
        out.push_str(&format!(
            "aggregate,{:e},{:e},{}\n",
            self.measure.value,
            self.aggregate_bound,
            self.aggregate_holds()
        ));
        out.push_str(&format!("stopping,{:e},{:e},{}\n", self.c_total, self.c_bound, self.stopping_holds()));
        out.push_str(&format!("partition,{:e},1,{}\n", self.partition_length, self.partition_holds()));
        out
    }
}

/// Windowed, aggregate, stopping-set and partition checks for the current `f_n`.
pub fn audit_measure_bounds(state: &PassState, params: &EngineParams, oracle: &PorousSetOracle) -> Result<AuditReport> {
    let f = &state.f;
    let mut windows = Vec::new();
    for (i, r) in state.rounds.iter().enumerate() {
        let m = i + 1;
        let measured = preimage_measure_on(f, oracle, &r.f_set, state.tol)?.measure;
        windows.push(WindowCheck {
            m,
            measured,
            bound: r.stopping.c_set.total_length() + 7.0 * params.eps_at(m),
        });
    }
    let measure = preimage_measure(f, oracle, state.tol)?.measure;
    let partition_length = match state.rounds.last() {
        None => 1.0,
        Some(last) => {
            let mut all = state.f_union();
            for (t, h) in last.phi.tents().iter().zip(&last.holes) {
                let i = crate::geometry::IntervalSet::single(t.interval);
                all = all.union(&i.difference(&crate::geometry::IntervalSet::single(h.r_interval)));
            }
            all.total_length()
        }
    };
    Ok(AuditReport {
        round: state.rounds.len(),
        windows,
        measure,
        aggregate_bound: state.aggregate_bound(params),
        c_total: state.c_total(),
        c_bound: 2.0 * params.eps,
        partition_length,
    })
}
