//! Spectral projected gradient on Phi(x) = ||Ax - p||^2 / 2 over the unit
//! simplex, plus the sort-based simplex projection it relies on.
//!
//! Each iteration projects the spectral gradient step, x_bar = P(x - lambda g),
//! and backtracks along d = x_bar - x against the maximum objective of the
//! last M iterations (halving gamma until the sufficient-decrease test
//! passes). The spectral parameter is the Barzilai-Borwein ratio s's / s'u
//! clamped to [lambda_min, lambda_max], set to lambda_max when s'u <= 0.
//!
//! Two stopping modes:
//!
//! - `Duality`: epsilon test on ||Ax - p||, witness test on the gradient
//!   components (every v_i'(Ax - p) above (||Ax||^2 - ||p||^2)/2 makes Ax a
//!   witness), and the scaled stationarity test
//!   ||d_k|| <= ||A x_bar - p|| eps R / (3 L D) with L an upper bound on
//!   ||A||^2 and D = sqrt(2) the simplex diameter. The latter proves p
//!   outside conv(A) when ||A x_bar - p|| > eps R, and yields an epsilon
//!   solution at x_bar otherwise.
//! - `Proj`: the classic test ||d_k|| < eps_d, run to stationarity. The
//!   returned iterate is the projection of p onto conv(A) up to eps_d, which
//!   is what the exact-distance oracle consumes.

use std::collections::VecDeque;
use std::time::Instant;

use crate::error::Result;
use crate::geometry::{Iterate, PointSet, QueryContext, SolveOutcome, WitnessCertificate};
use crate::linalg::{dot, norm, norm2};
use crate::rng::PortableRng;
use crate::scalar::Scalar;

use super::{
    nearest_column_start, validate_pair, SolveReport, SolverConfig, StepKind, TraceRecord,
};

/// Stopping rule for `solve_spg`.
#[derive(Clone, Copy, Debug)]
pub enum SpgMode<S> {
    /// Distance-duality stopping: epsilon solution, witness, or gap.
    Duality,
    /// Classic stationarity test ||d_k|| < eps_d; exact-projection oracle.
    Proj { eps_d: S },
}

/// Euclidean projection onto the unit simplex, via the sort-and-threshold
/// rule: with u the entries sorted descending and rho the largest j such that
/// u_j > (sum of the top j entries - 1) / j, the projection is
/// max(y_i - tau, 0) with tau = (top-rho sum - 1) / rho.
///
/// O(n log n). Entries must be finite.
pub fn simplex_project<S: Scalar>(y: &[S]) -> Vec<S> {
    assert!(!y.is_empty(), "projecting an empty vector");
    let mut u = y.to_vec();
    u.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = S::zero();
    let mut tau = S::zero();
    let mut any = false;
    for (j, &uj) in u.iter().enumerate() {
        cum = cum + uj;
        let t = (cum - S::one()) / S::c((j + 1) as f64);
        if uj - t > S::zero() {
            tau = t;
            any = true;
        }
    }
    // rho >= 1 always: the largest entry satisfies the test.
    debug_assert!(any);
    let _ = any;
    y.iter().map(|&v| (v - tau).max(S::zero())).collect()
}

/// Power-iteration estimate of ||A||^2, the Lipschitz constant of the
/// gradient of x -> ||Ax - p||^2 / 2. Deterministic (fixed internal seed);
/// converges from below, so callers inflate it slightly when an upper bound
/// is needed.
pub fn estimate_lipschitz<S: Scalar>(a: &PointSet<S>, iters: usize) -> S {
    let mut rng = PortableRng::new(0x0e57_1a7e_0000_5eed);
    let mut w64 = vec![0f64; a.n()];
    rng.fill_normal(&mut w64);
    let mut w: Vec<S> = w64.into_iter().map(S::c).collect();
    let mut z = vec![S::zero(); a.m()];
    let mut y = vec![S::zero(); a.n()];
    let mut est = S::zero();
    for _ in 0..iters.max(1) {
        let nw = norm(&w);
        if nw == S::zero() {
            break;
        }
        for v in w.iter_mut() {
            *v = *v / nw;
        }
        a.combine(&w, &mut z);
        for (i, col) in a.columns().enumerate() {
            y[i] = dot(col, &z);
        }
        // ||A'A w|| for unit w; converges to the top eigenvalue of A'A.
        est = norm(&y);
        std::mem::swap(&mut w, &mut y);
    }
    est
}

/// Gradient g_i = v_i'(px - p) via the cached inner products; returns min_i g_i.
fn gradient_into<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    px: &[S],
    g: &mut [S],
) -> S {
    let mut min = S::infinity();
    for (i, col) in a.columns().enumerate() {
        let gi = dot(col, px) - q.dot_p(i);
        g[i] = gi;
        if gi < min {
            min = gi;
        }
    }
    min
}

pub fn solve_spg<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    cfg: &SolverConfig<S>,
    mode: SpgMode<S>,
) -> Result<SolveReport<S>> {
    validate_pair(a, q)?;
    cfg.validate()?;
    let start = Instant::now();
    let two = S::c(2.0);
    let half = S::c(0.5);
    let eps_r = cfg.eps * q.r();
    let prm = cfg.spg;

    // ||d|| <= ||A x_bar - p|| * gap_factor is the duality-mode stop.
    let gap_factor = match mode {
        SpgMode::Duality => {
            let el = (estimate_lipschitz(a, prm.power_iters) * S::c(1.01)).max(S::c(1e-300));
            Some(eps_r / (S::c(3.0) * el * two.sqrt()))
        }
        SpgMode::Proj { .. } => None,
    };

    let it0 = nearest_column_start(a, q);
    let mut x: Vec<S> = it0.weights().to_vec();
    let mut px: Vec<S> = it0.point().to_vec();
    let mut r: Vec<S> = px.iter().zip(q.p()).map(|(&v, &pv)| v - pv).collect();
    let mut g = vec![S::zero(); a.n()];
    let mut g_next = vec![S::zero(); a.n()];
    let mut g_min = gradient_into(a, q, &px, &mut g);
    let mut ad = vec![S::zero(); a.m()];
    let mut lambda = prm.lambda0;
    let mut hist: VecDeque<S> = VecDeque::with_capacity(prm.memory);
    hist.push_back(half * norm2(&r));
    let mut trace = cfg.trace.then(Vec::new);
    let mut k = 0usize;

    let outcome = loop {
        let delta = norm(&r);
        if matches!(mode, SpgMode::Duality) {
            if delta <= eps_r {
                break SolveOutcome::EpsilonSolution {
                    iterate: Iterate::from_parts(x, px),
                    delta,
                };
            }
            let pxnorm2 = norm2(&px);
            let b = pxnorm2 - q.pnorm2();
            let tau_w = cfg.tolerances.witness.resolve(pxnorm2, q.pnorm2());
            if g_min - b / two > tau_w {
                let wit = Iterate::from_parts(x.clone(), px.clone());
                let mut cert = WitnessCertificate::unverified(wit, q);
                if cert.verify(a, q, tau_w) {
                    break SolveOutcome::Witness { certificate: cert };
                }
            }
        }

        let shifted: Vec<S> =
            x.iter().zip(&g).map(|(&xi, &gi)| xi - lambda * gi).collect();
        let xbar = simplex_project(&shifted);
        let d: Vec<S> = xbar.iter().zip(&x).map(|(&bi, &xi)| bi - xi).collect();
        let dnorm = norm(&d);
        a.combine(&d, &mut ad);

        let stop = match mode {
            SpgMode::Proj { eps_d } => dnorm < eps_d,
            SpgMode::Duality => {
                let delta_bar = {
                    let mut s = S::zero();
                    for (rv, av) in r.iter().zip(&ad) {
                        let t = *rv + *av;
                        s = s + t * t;
                    }
                    s.sqrt()
                };
                dnorm <= delta_bar * gap_factor.expect("duality factor")
            }
        };
        if stop {
            // Terminate at the projected point; refresh it from the weights.
            let it_bar = Iterate::from_weights_unchecked(a, xbar);
            let delta_bar = it_bar.delta(q);
            break if delta_bar <= eps_r {
                SolveOutcome::EpsilonSolution { iterate: it_bar, delta: delta_bar }
            } else {
                SolveOutcome::GapCertificate { iterate: it_bar, gap: dnorm }
            };
        }
        if k == cfg.maxit {
            break SolveOutcome::Exhausted { iterate: Iterate::from_parts(x, px), delta };
        }

        // Nonmonotone halving backtrack against the M-history maximum.
        let f_max = hist.iter().copied().fold(S::neg_infinity(), S::max);
        let gd = dot(&g, &d);
        let mut gamma = S::one();
        let phi_new = loop {
            let mut s = S::zero();
            for (rv, av) in r.iter().zip(&ad) {
                let t = *rv + gamma * *av;
                s = s + t * t;
            }
            let phi_trial = half * s;
            if phi_trial <= f_max + prm.eta * gamma * gd || gamma < S::c(1e-30) {
                break phi_trial;
            }
            gamma = gamma * half;
        };

        let lambda_used = lambda;
        let s_dot_s = gamma * gamma * norm2(&d);
        for (xv, dv) in x.iter_mut().zip(&d) {
            *xv = *xv + gamma * *dv;
        }
        for (rv, av) in r.iter_mut().zip(&ad) {
            *rv = *rv + gamma * *av;
        }
        for (pv, av) in px.iter_mut().zip(&ad) {
            *pv = *pv + gamma * *av;
        }
        g_min = gradient_into(a, q, &px, &mut g_next);
        let s_dot_u = gamma * (dot(&d, &g_next) - gd);
        lambda = if s_dot_u <= S::zero() {
            prm.lambda_max
        } else {
            (s_dot_s / s_dot_u).max(prm.lambda_min).min(prm.lambda_max)
        };
        std::mem::swap(&mut g, &mut g_next);
        if hist.len() == prm.memory {
            hist.pop_front();
        }
        hist.push_back(phi_new);
        if let Some(t) = trace.as_mut() {
            t.push(TraceRecord {
                delta,
                sin_theta: None,
                step: StepKind::Spectral,
                lambda: Some(lambda_used),
            });
        }
        k += 1;
    };

    Ok(SolveReport { outcome, iterations: k, wall_time: start.elapsed().as_secs_f64(), trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_query;

    #[test]
    fn simplex_project_hand_values() {
        // y - tau with tau = (sum - 1)/3 lands a rounding step away from the
        // literal 1/3.
        for v in simplex_project::<f64>(&[0.5, 0.5, 0.5]) {
            assert!((v - 1.0 / 3.0).abs() <= f64::EPSILON);
        }
        assert_eq!(simplex_project(&[1.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(simplex_project(&[2.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn simplex_project_kkt_form() {
        // x_i = max(y_i - tau, 0) for a common tau, and the weights sum to 1.
        let y = [0.3, -1.2, 2.5, 0.3, 0.9];
        let x = simplex_project(&y);
        let sum: f64 = x.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let tau: f64 = y
            .iter()
            .zip(&x)
            .filter(|(_, &xi)| xi > 0.0)
            .map(|(&yi, &xi)| yi - xi)
            .next()
            .unwrap();
        for (&yi, &xi) in y.iter().zip(&x) {
            if xi > 0.0 {
                assert!((yi - xi - tau).abs() < 1e-12);
            } else {
                assert!(yi <= tau + 1e-12);
            }
        }
    }

    #[test]
    fn lipschitz_estimate_on_known_spectra() {
        let a: PointSet<f64> =
            PointSet::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((estimate_lipschitz(&a, 50) - 1.0).abs() < 1e-9);
        let a: PointSet<f64> =
            PointSet::from_columns(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((estimate_lipschitz(&a, 100) - 4.0).abs() < 1e-6);
        // Rank one: ||A||^2 = ||v||^2 exactly, reached in one iteration.
        let a: PointSet<f64> = PointSet::from_columns(&[vec![3.0, 4.0]]).unwrap();
        assert!((estimate_lipschitz(&a, 5) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn spg_interior_square_reaches_epsilon() {
        let a = PointSet::from_columns(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let q = build_query(&a, &[0.3, 0.6]).unwrap();
        let mut cfg = SolverConfig::new(a.n());
        cfg.eps = 1e-6;
        let rep = solve_spg(&a, &q, &cfg, SpgMode::Duality).unwrap();
        match rep.outcome {
            SolveOutcome::EpsilonSolution { delta, .. } => assert!(delta <= cfg.eps * q.r()),
            other => panic!("expected epsilon solution, got {}", other.kind()),
        }
    }

    #[test]
    fn spg_singleton_outside_witnesses_at_start() {
        let a = PointSet::from_columns(&[vec![2.0, 0.0]]).unwrap();
        let q = build_query(&a, &[0.0, 0.0]).unwrap();
        let cfg = SolverConfig::new(1);
        let rep = solve_spg(&a, &q, &cfg, SpgMode::Duality).unwrap();
        assert_eq!(rep.iterations, 0);
        match rep.outcome {
            SolveOutcome::Witness { certificate } => assert!(certificate.is_verified()),
            other => panic!("expected witness, got {}", other.kind()),
        }
    }

    #[test]
    fn proj_mode_recovers_exact_projection() {
        let a: PointSet<f64> =
            PointSet::from_columns(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let q = build_query(&a, &[0.5, 1.0]).unwrap();
        let cfg = SolverConfig::new(a.n());
        let rep = solve_spg(&a, &q, &cfg, SpgMode::Proj { eps_d: 1e-12 }).unwrap();
        let it = rep.outcome.iterate();
        assert!((it.point()[0] - 0.5).abs() < 1e-9);
        assert!(it.point()[1].abs() < 1e-9);
        assert!((it.delta(&q) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn proj_mode_at_query_column_stops_immediately() {
        let a = PointSet::from_columns(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let q = build_query(&a, &[3.0, 4.0]).unwrap();
        let cfg = SolverConfig::new(a.n());
        let rep = solve_spg(&a, &q, &cfg, SpgMode::Proj { eps_d: 1e-9 }).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(matches!(rep.outcome, SolveOutcome::EpsilonSolution { .. }));
    }

    #[test]
    fn unit_memory_is_monotone() {
        let a = PointSet::from_columns(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let q = build_query(&a, &[0.25, 0.7]).unwrap();
        let mut cfg = SolverConfig::new(a.n());
        cfg.eps = 1e-8;
        cfg.spg.memory = 1;
        cfg.trace = true;
        let rep = solve_spg(&a, &q, &cfg, SpgMode::Duality).unwrap();
        let trace = rep.trace.unwrap();
        assert_eq!(trace.len(), rep.iterations);
        for w in trace.windows(2) {
            assert!(w[1].delta <= w[0].delta);
        }
    }
}
