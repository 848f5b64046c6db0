//! Pivot-stepping solvers: the policy-driven variant and the greedy variant.
//!
//! Both run the same skeleton. Each iteration, in order: epsilon check,
//! witness check, then a convex step toward a pivot column with the
//! closed-form step length. The greedy variant always steps toward the global
//! argmin of v_i'(p_k - p); since that argmin is also the conditional-gradient
//! vertex for min ||y - p||^2/2 over conv(A), the Frank-Wolfe solver reuses
//! this loop verbatim (with its extra gap test) and the two produce identical
//! iterate sequences while both are running.
//!
//! The greedy stop test in its strict form (argmin fails the strict-pivot
//! inequality) can fire while an ordinary pivot still exists; soundness
//! requires the ordinary condition. The loop therefore only declares a
//! witness when the full margin test plus the distance re-verification pass,
//! and otherwise keeps stepping toward the argmin, which is exactly the
//! strict-trigger-then-fall-back policy.

use std::time::Instant;

use crate::error::Result;
use crate::geometry::{
    apply_step, line_search_gamma, sin_theta, witness_from_scan, ColumnScan, PivotPolicy,
    PointSet, QueryContext, SolveOutcome,
};
use crate::rng::PortableRng;
use crate::scalar::Scalar;

use super::{
    nearest_column_start, validate_pair, SolveReport, SolverConfig, StepKind, TraceRecord,
};

/// Weight observer: called as (step index, weights after that step).
pub(crate) type Observer<'a, S> = &'a mut dyn FnMut(usize, &[S]);

/// Pivot solver with the configured selection policy.
pub fn solve_ta<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    pivot_loop(a, q, cfg, cfg.pivot_policy, false, None)
}

/// Greedy pivot solver: always steps toward argmin v_i'(p_k - p). For p = 0
/// this is the von Neumann algorithm.
pub fn solve_gt<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    pivot_loop(a, q, cfg, PivotPolicy::Greedy, false, None)
}

/// `solve_gt` with a per-step weight observer.
pub fn solve_gt_observed<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    observer: &mut dyn FnMut(usize, &[S]),
) -> Result<SolveReport<S>> {
    pivot_loop(a, q, cfg, PivotPolicy::Greedy, false, Some(observer))
}

/// Shared skeleton. `gap_check` adds the Frank-Wolfe relative-error test
/// between the witness check and the step.
pub(crate) fn pivot_loop<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    policy: PivotPolicy,
    gap_check: bool,
    mut observer: Option<Observer<'_, S>>,
) -> Result<SolveReport<S>> {
    validate_pair(a, q)?;
    cfg.validate()?;
    let start = Instant::now();
    let two = S::c(2.0);
    let eps_r = cfg.eps * q.r();
    let mut rng = PortableRng::new(cfg.seed);
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
        if gap_check {
            // gap = (p_k - p)'(p_k - v_min), the duality gap at p_k. Below
            // delta * eps R / 2 it proves p outside conv(A) while no
            // separating witness is at hand.
            let gap: S = it
                .point()
                .iter()
                .zip(q.p())
                .zip(a.column(scan.argmin))
                .map(|((&pk, &p), &v)| (pk - p) * (pk - v))
                .sum();
            if gap <= delta * eps_r / two {
                break SolveOutcome::GapCertificate { iterate: it, gap };
            }
        }
        if k == cfg.maxit {
            break SolveOutcome::Exhausted { iterate: it, delta };
        }
        // The argmin fallback covers the rare state where the margin test
        // reported no pivot but the certificate failed its distance recheck.
        let j = match scan.select_pivot(policy, &mut rng, cfg.tolerances.pivot) {
            Some((j, _)) => j,
            None => scan.argmin,
        };
        let v_j = a.column(j);
        let gamma = match line_search_gamma(&it, v_j, q) {
            Ok(g) => g,
            // v_j == p_k is unreachable through the pivot test; bail out
            // rather than loop on a zero-length direction.
            Err(_) => break SolveOutcome::Exhausted { iterate: it, delta },
        };
        if let Some(t) = trace.as_mut() {
            t.push(TraceRecord {
                delta,
                sin_theta: sin_theta(&it, v_j, q).ok(),
                step: StepKind::Toward,
                lambda: None,
            });
        }
        it = apply_step(a, &it, j, gamma);
        if let Some(obs) = observer.as_deref_mut() {
            obs(k, it.weights());
        }
        k += 1;
        buf = scan.a;
    };

    Ok(SolveReport { outcome, iterations: k, wall_time: start.elapsed().as_secs_f64(), trace })
}
