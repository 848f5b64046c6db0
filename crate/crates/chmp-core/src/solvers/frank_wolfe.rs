//! Frank-Wolfe solvers on min ||y - p||^2 / 2 over conv(A).
//!
//! The plain variant shares the greedy pivot loop: the conditional-gradient
//! vertex argmin_i v_i'(y_k - p) is the greedy pivot, and the exact line
//! search along v_j - y_k is the closed-form pivot step. The only addition is
//! the relative-error test
//!
//! ```text
//! (y_k - p)'(y_k - v_j) <= ||y_k - p|| eps R / 2
//! ```
//!
//! which, failing the epsilon and witness checks first, proves p outside
//! conv(A) without a separating hyperplane (a gap certificate). A stationary
//! iterate makes the left side nonpositive, so stalls terminate through the
//! same branch.
//!
//! The away-step variant keeps the weight vector explicit: each iteration
//! compares the Frank-Wolfe direction v_j - y against the away direction
//! y - v_w, where w maximizes the gradient over the current support, and
//! moves along the steeper of the two. Away steps cap the length at
//! alpha_w / (1 - alpha_w); hitting the cap drops the atom from the support.

use std::time::Instant;

use crate::error::Result;
use crate::geometry::{
    witness_from_scan, ColumnScan, Iterate, PivotPolicy, PointSet, QueryContext, SolveOutcome,
};
use crate::linalg::dist2;
use crate::scalar::Scalar;

use super::triangle::pivot_loop;
use super::{
    nearest_column_start, validate_pair, SolveReport, SolverConfig, StepKind, TraceRecord,
};

/// Frank-Wolfe with exact line search and duality-based stopping.
pub fn solve_fw<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    pivot_loop(a, q, cfg, PivotPolicy::Greedy, true, None)
}

/// `solve_fw` with a per-step weight observer.
pub fn solve_fw_observed<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    observer: &mut dyn FnMut(usize, &[S]),
) -> Result<SolveReport<S>> {
    pivot_loop(a, q, cfg, PivotPolicy::Greedy, true, Some(observer))
}

/// Away-step Frank-Wolfe.
pub fn solve_asfw<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    asfw_loop(a, q, cfg, None)
}

/// `solve_asfw` with a per-step observer receiving (step index, weights,
/// step kind).
pub fn solve_asfw_observed<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    observer: &mut dyn FnMut(usize, &[S], StepKind),
) -> Result<SolveReport<S>> {
    asfw_loop(a, q, cfg, Some(observer))
}

/// Weights below this are snapped to zero after each update; drop steps must
/// produce exact zeros.
const WEIGHT_SNAP: f64 = 1e-15;

fn asfw_loop<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    mut observer: Option<&mut dyn FnMut(usize, &[S], StepKind)>,
) -> Result<SolveReport<S>> {
    validate_pair(a, q)?;
    cfg.validate()?;
    let start = Instant::now();
    let two = S::c(2.0);
    let eps_r = cfg.eps * q.r();
    let mut it = nearest_column_start(a, q);
    let mut trace = cfg.trace.then(Vec::new);
    let mut buf: Vec<S> = Vec::with_capacity(a.n());
    let mut k = 0usize;

    let outcome = loop {
        let delta = it.delta(q);
        if delta <= eps_r {
            break SolveOutcome::EpsilonSolution { iterate: it, delta };
        }
        let scan = ColumnScan::run_into(a, &it, q, &mut buf);
        if let Some(certificate) = witness_from_scan(a, &it, q, &scan, &cfg.tolerances) {
            break SolveOutcome::Witness { certificate };
        }
        // c0 = y'(y - p); directional derivatives are a_i - c0 (toward v_i)
        // and c0 - a_i (away from v_i).
        let c0: S = it.point().iter().zip(q.p()).map(|(&y, &p)| y * (y - p)).sum();
        let gap = c0 - scan.a[scan.argmin];
        if gap <= delta * eps_r / two {
            break SolveOutcome::GapCertificate { iterate: it, gap };
        }
        if k == cfg.maxit {
            break SolveOutcome::Exhausted { iterate: it, delta };
        }

        // Away atom: support index maximizing the gradient component.
        let support = it.support();
        let mut w = support[0];
        for &i in &support[1..] {
            if scan.a[i] > scan.a[w] {
                w = i;
            }
        }
        let g_fw = scan.a[scan.argmin] - c0;
        let g_away = c0 - scan.a[w];
        let alpha_w = it.weights()[w];
        // Ties favor the Frank-Wolfe direction; a singleton support makes an
        // away step meaningless (gamma cap would be unbounded).
        let take_away = g_away < g_fw && support.len() > 1 && alpha_w < S::one();

        let (step, j_or_w, gamma) = if take_away {
            let den = dist2(it.point(), a.column(w));
            let gamma_max = alpha_w / (S::one() - alpha_w);
            // Exact minimizer along y - v_w: -g_away / den > 0.
            let gamma_star = -g_away / den;
            if gamma_star >= gamma_max {
                (StepKind::Drop, w, gamma_max)
            } else {
                (StepKind::Away, w, gamma_star)
            }
        } else {
            let j = scan.argmin;
            let den = dist2(a.column(j), it.point());
            // Exact minimizer along v_j - y: -g_fw / den = gap / den > 0.
            let gamma = (-g_fw / den).min(S::one());
            (StepKind::Toward, j, gamma)
        };

        if let Some(t) = trace.as_mut() {
            let sin = crate::geometry::sin_theta(&it, a.column(j_or_w), q).ok();
            t.push(TraceRecord { delta, sin_theta: sin, step, lambda: None });
        }

        let mut weights = it.weights().to_vec();
        match step {
            StepKind::Toward => {
                let keep = S::one() - gamma;
                for v in weights.iter_mut() {
                    *v = *v * keep;
                }
                weights[j_or_w] = weights[j_or_w] + gamma;
            }
            StepKind::Away | StepKind::Drop => {
                let grow = S::one() + gamma;
                for v in weights.iter_mut() {
                    *v = *v * grow;
                }
                weights[j_or_w] = if step == StepKind::Drop {
                    S::zero()
                } else {
                    (weights[j_or_w] - gamma).max(S::zero())
                };
            }
            StepKind::Spectral => unreachable!(),
        }
        // Numerical hygiene: snap stragglers to zero, renormalize, and
        // rebuild the point from the weights.
        let snap = S::c(WEIGHT_SNAP);
        for v in weights.iter_mut() {
            if *v < snap {
                *v = S::zero();
            }
        }
        let sum: S = weights.iter().copied().sum();
        for v in weights.iter_mut() {
            *v = *v / sum;
        }
        it = Iterate::from_weights_unchecked(a, weights);
        if let Some(obs) = observer.as_deref_mut() {
            obs(k, it.weights(), step);
        }
        k += 1;
        buf = scan.a;
    };

    Ok(SolveReport { outcome, iterations: k, wall_time: start.elapsed().as_secs_f64(), trace })
}
