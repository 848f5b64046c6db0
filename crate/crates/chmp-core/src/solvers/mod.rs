//! Membership solvers over a shared (PointSet, QueryContext) pair.
//!
//! Five methods plus a baseline, all O(mn) per iteration:
//!
//! - `ta`: pivot steps with a configurable pivot-selection policy,
//! - `gt`: greedy variant stepping toward argmin v_i'(p_k - p),
//! - `fw`: Frank-Wolfe with exact line search; identical iterates to `gt`
//!   (the greedy step *is* the conditional-gradient step for this objective),
//!   plus a relative-error gap certificate,
//! - `asfw`: away-step Frank-Wolfe over explicit simplex weights,
//! - `spg`: spectral projected gradient on min ||Ax - p||^2/2 over the unit
//!   simplex, with duality-based stopping,
//! - `proj`: the same SPG iteration run to stationarity (||d_k|| below a
//!   fixed tolerance), used as an exact-projection oracle for the true
//!   distance from p to conv(A).
//!
//! Every solver starts at the column nearest p, counts one iteration per
//! applied step, and is deterministic given `SolverConfig::seed`.

mod frank_wolfe;
mod spg;
mod triangle;

pub use frank_wolfe::{solve_asfw, solve_asfw_observed, solve_fw, solve_fw_observed};
pub use spg::{estimate_lipschitz, simplex_project, solve_spg, SpgMode};
pub use triangle::{solve_gt, solve_gt_observed, solve_ta};

use crate::error::{Error, Result};
use crate::geometry::{Iterate, PivotPolicy, PointSet, QueryContext, SolveOutcome, Tolerances};
use crate::scalar::Scalar;

/// Solver selector for dispatch-style callers (CLI, benchmarks).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Ta,
    Gt,
    Fw,
    Asfw,
    Spg,
    /// SPG run to stationarity; reports the projection of p onto conv(A).
    Proj,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Ta,
        SolverKind::Gt,
        SolverKind::Fw,
        SolverKind::Asfw,
        SolverKind::Spg,
        SolverKind::Proj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ta => "ta",
            SolverKind::Gt => "gt",
            SolverKind::Fw => "fw",
            SolverKind::Asfw => "asfw",
            SolverKind::Spg => "spg",
            SolverKind::Proj => "proj",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver '{s}'")))
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Default iteration cap: min(max(1000 n, 10^4), 10^6).
pub fn default_maxit(n: usize) -> usize {
    n.saturating_mul(1000).max(10_000).min(1_000_000)
}

/// Spectral projected gradient parameters.
#[derive(Clone, Copy, Debug)]
pub struct SpgParams<S> {
    /// Nonmonotone memory M: the line search compares against the maximum
    /// objective over the last M iterations.
    pub memory: usize,
    /// Sufficient-decrease constant of the backtracking test.
    pub eta: S,
    pub lambda_min: S,
    pub lambda_max: S,
    /// Initial spectral step length; must lie in [lambda_min, lambda_max].
    pub lambda0: S,
    /// Power-iteration count for the ||A||^2 estimate.
    pub power_iters: usize,
    /// Stationarity tolerance on ||d_k|| in projection mode.
    pub proj_eps: S,
}

impl<S: Scalar> Default for SpgParams<S> {
    fn default() -> Self {
        Self {
            memory: 15,
            eta: S::c(1e-4),
            lambda_min: S::c(1e-8),
            lambda_max: S::c(1e8),
            lambda0: S::one(),
            power_iters: 50,
            proj_eps: S::c(1e-9),
        }
    }
}

/// Shared solver configuration.
#[derive(Clone, Debug)]
pub struct SolverConfig<S> {
    /// Relative tolerance; the epsilon test is delta <= eps * R.
    pub eps: S,
    /// Iteration cap; Exhausted after this many steps.
    pub maxit: usize,
    /// Pivot-selection policy. Consulted by `ta` only; the greedy solvers
    /// fix their own choice.
    pub pivot_policy: PivotPolicy,
    pub seed: u64,
    pub tolerances: Tolerances<S>,
    pub spg: SpgParams<S>,
    /// Record one TraceRecord per applied step.
    pub trace: bool,
}

impl<S: Scalar> SolverConfig<S> {
    /// Defaults for an n-column instance: eps = 1e-4, the standard iteration
    /// cap, random-among-all pivoting, seed 0.
    pub fn new(n: usize) -> Self {
        Self {
            eps: S::c(1e-4),
            maxit: default_maxit(n),
            pivot_policy: PivotPolicy::RandomAmongAll,
            seed: 0,
            tolerances: Tolerances::default(),
            spg: SpgParams::default(),
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eps > S::zero() && self.eps < S::one()) {
            return fail(format!("eps must lie in (0,1), got {}", self.eps));
        }
        if self.maxit == 0 {
            return fail("maxit must be >= 1".into());
        }
        let s = &self.spg;
        if s.memory == 0 {
            return fail("spg.memory must be >= 1".into());
        }
        if !(s.eta > S::zero() && s.eta < S::one()) {
            return fail(format!("spg.eta must lie in (0,1), got {}", s.eta));
        }
        if !(s.lambda_min > S::zero() && s.lambda_min <= s.lambda_max) {
            return fail(format!(
                "spg lambda bounds must satisfy 0 < {} <= {}",
                s.lambda_min, s.lambda_max
            ));
        }
        if !(s.lambda0 >= s.lambda_min && s.lambda0 <= s.lambda_max) {
            return fail(format!(
                "spg.lambda0 = {} outside [{}, {}]",
                s.lambda0, s.lambda_min, s.lambda_max
            ));
        }
        if s.power_iters == 0 {
            return fail("spg.power_iters must be >= 1".into());
        }
        if !(s.proj_eps > S::zero()) {
            return fail(format!("spg.proj_eps must be positive, got {}", s.proj_eps));
        }
        Ok(())
    }
}

/// What a single recorded step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// Convex step toward a column (TA/GT/FW, and ASFW's FW direction).
    Toward,
    /// ASFW step away from a support atom.
    Away,
    /// Away step at its cap, removing the atom from the support.
    Drop,
    /// SPG projected spectral step.
    Spectral,
}

/// Per-step diagnostics, recorded when `SolverConfig::trace` is set.
#[derive(Clone, Copy, Debug)]
pub struct TraceRecord<S> {
    /// d(p_k, p) before the step.
    pub delta: S,
    /// Pivot-angle diagnostic for Toward steps; None when undefined.
    pub sin_theta: Option<S>,
    pub step: StepKind,
    /// Spectral parameter used (SPG only).
    pub lambda: Option<S>,
}

/// Outcome plus bookkeeping. `iterations` counts applied steps, so it is 0
/// when the initial iterate already terminates; the trace, when enabled, has
/// exactly one record per step.
#[derive(Clone, Debug)]
pub struct SolveReport<S> {
    pub outcome: SolveOutcome<S>,
    pub iterations: usize,
    /// Wall-clock seconds for the solve loop only.
    pub wall_time: f64,
    pub trace: Option<Vec<TraceRecord<S>>>,
}

/// Runs the selected solver.
pub fn solve<S: Scalar>(
    a: &PointSet<S>,
    q: &QueryContext<S>,
    kind: SolverKind,
    cfg: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    match kind {
        SolverKind::Ta => solve_ta(a, q, cfg),
        SolverKind::Gt => solve_gt(a, q, cfg),
        SolverKind::Fw => solve_fw(a, q, cfg),
        SolverKind::Asfw => solve_asfw(a, q, cfg),
        SolverKind::Spg => solve_spg(a, q, cfg, SpgMode::Duality),
        SolverKind::Proj => solve_spg(a, q, cfg, SpgMode::Proj { eps_d: cfg.spg.proj_eps }),
    }
}

/// Start of every solver: the column nearest p (lowest index on ties),
/// located via argmin ||v_i||^2 - 2 v_i'p using the caches.
pub fn nearest_column_start<S: Scalar>(a: &PointSet<S>, q: &QueryContext<S>) -> Iterate<S> {
    let two = S::c(2.0);
    let mut best = 0;
    let mut best_score = S::infinity();
    for i in 0..a.n() {
        let score = a.norm2(i) - two * q.dot_p(i);
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    Iterate::vertex(a, best).expect("non-empty point set")
}

pub(crate) fn validate_pair<S: Scalar>(a: &PointSet<S>, q: &QueryContext<S>) -> Result<()> {
    if q.p().len() != a.m() {
        return Err(Error::DimensionMismatch { expected: a.m(), got: q.p().len() });
    }
    if q.n() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: q.n() });
    }
    Ok(())
}
