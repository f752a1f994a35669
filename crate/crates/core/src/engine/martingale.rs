use crate::geometry::Point;

use super::pass::PassState;

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    /// Completed rounds; `X_N` sums `N − 1` increments with `N = rounds + 1`.
    pub rounds: usize,
    /// `E‖X_N‖²`.
    pub second_moment: f64,
    /// `E‖φ_n′‖²` per round; their sum is the cross-term-free second moment.
    pub increment_moments: Vec<f64>,
    /// `N / λ²`.
    pub bound: f64,
    pub kappa: f64,
    /// `|{t : max_n ‖X_n(t)‖ ≥ κ}|`.
    pub exceedance: f64,
    /// `(n, p, E⟨φ_n′, φ_p′⟩)` for `n > p`, rounds numbered from 1.
    pub pairwise: Vec<(usize, usize, f64)>,
    /// `‖X_n‖ ≤ (n − 1)/λ` everywhere.
    pub pointwise_ok: bool,
    /// `X_n` constant on every interval of round `n`.
    pub constancy_ok: bool,
    /// Statistics of `X_1, …, X_rounds`.
    pub levels: Vec<LevelStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    pub n: usize,
    /// `E‖X_n‖²`.
    pub second_moment: f64,
    /// `E‖X_n‖`.
    pub mean_norm: f64,
    pub max_norm: f64,
    /// `|{t : max_{i≤n} ‖X_i(t)‖ ≥ κ}|`.
    pub exceedance: f64,
}

impl MartingaleReport {
    pub fn max_pairwise(&self) -> f64 {
        self.pairwise.iter().map(|p| p.2.abs()).fold(0.0, f64::max)
    }

    pub fn orthogonal(&self, tol: f64) -> bool {
        self.max_pairwise() <= tol
    }

    pub fn moment_within_bound(&self) -> bool {
        self.second_moment <= self.bound
    }

    /// `exceedance ≤ E‖X_N‖²/κ²`; vacuous when `κ ≤ 0`.
    pub fn kolmogorov_holds(&self) -> bool {
        self.kappa <= 0.0 || self.exceedance <= self.second_moment / (self.kappa * self.kappa)
    }

    /// `n,second_moment,mean_norm,max_norm,exceedance` rows, one per level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,second_moment,mean_norm,max_norm,exceedance\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                l.n, l.second_moment, l.mean_norm, l.max_norm, l.exceedance
            ));
        }
        out
    }
}

/// Exact integration over the common refinement of all increment knots, on
/// which every `φ_i′` is constant.
pub fn martingale_diagnostics(state: &PassState, lambda: f64, sigma: f64) -> MartingaleReport {
    let incs: Vec<_> = state.increments().collect();
    let r = incs.len();
    let dim = state.f1.dim();
    let mut cuts = vec![0.0, 1.0];
    for inc in &incs {
        cuts.extend(inc.knots());
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let kappa = sigma / 8.0 - 1.0 / lambda;
    let mut increment_moments = vec![0.0; r];
    let mut pair = vec![vec![0.0; r]; r];
    let mut second_moment = 0.0;
    let mut exceedance = 0.0;
    let mut pointwise_ok = true;
    // value of X_n on each cell, for the constancy check
    let mut cell_x: Vec<Vec<Point>> = Vec::with_capacity(cuts.len());
    let mut levels: Vec<LevelStats> = (1..=r)
        .map(|n| LevelStats {
            n,
            second_moment: 0.0,
            mean_norm: 0.0,
            max_norm: 0.0,
            exceedance: 0.0,
        })
        .collect();
    let tol = 1e-12 / lambda;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        let mid = 0.5 * (lo + hi);
        let d: Vec<Point> = incs
            .iter()
            .map(|inc| inc.derivative(mid).unwrap_or_else(|| Point::zero(dim)))
            .collect();
        for i in 0..r {
            increment_moments[i] += len * d[i].dot(&d[i]);
            for p in 0..i {
                pair[i][p] += len * d[i].dot(&d[p]);
            }
        }
        let mut x = Point::zero(dim);
        let mut xs = vec![x.clone()];
        let mut peak = 0.0f64;
        for (i, di) in d.iter().enumerate() {
            x = &x + di;
            let norm = x.norm();
            peak = peak.max(norm);
            if norm > (i + 1) as f64 / lambda + tol {
                pointwise_ok = false;
            }
            xs.push(x.clone());
        }
        second_moment += len * x.dot(&x);
        let mut running = 0.0f64;
        for (level, xn) in levels.iter_mut().zip(&xs) {
            let norm = xn.norm();
            running = running.max(norm);
            level.second_moment += len * norm * norm;
            level.mean_norm += len * norm;
            level.max_norm = level.max_norm.max(norm);
            if kappa > 0.0 && running >= kappa {
                level.exceedance += len;
            }
        }
        if kappa > 0.0 && peak >= kappa {
            exceedance += len;
        }
        cell_x.push(xs);
    }
    let mut constancy_ok = true;
    for (n0, inc) in incs.iter().enumerate() {
        for tent in inc.tents() {
            let first = cuts.partition_point(|&c| c < tent.interval.lo);
            let last = cuts.partition_point(|&c| c < tent.interval.hi);
            let cells = &cell_x[first.min(cell_x.len())..last.min(cell_x.len())];
            if let Some(head) = cells.first() {
                if cells.iter().any(|xs| xs[n0].distance(&head[n0]) > tol) {
                    constancy_ok = false;
                }
            }
        }
    }
    let mut pairwise = Vec::new();
    for (i, row) in pair.iter().enumerate() {
        for (p, &v) in row.iter().enumerate().take(i) {
            pairwise.push((i + 1, p + 1, v));
        }
    }
    MartingaleReport {
        rounds: r,
        second_moment,
        increment_moments,
        bound: (r + 1) as f64 / (lambda * lambda),
        kappa,
        exceedance,
        pairwise,
        pointwise_ok,
        constancy_ok,
        levels,
    }
}
