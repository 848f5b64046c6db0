//! Domain types and shared geometric primitives for convex hull membership.
//!
//! The problem: given columns A = [v_1 ... v_n] in R^m and a query point p,
//! decide whether p lies in conv(A). Every solver in this crate works with the
//! same three objects:
//!
//! - [`PointSet`]: the columns plus cached squared norms,
//! - [`QueryContext`]: p plus R = max_i d(v_i, p) and cached inner products
//!   v_i'p,
//! - [`Iterate`]: a point of conv(A) carried as an explicit convex-combination
//!   weight vector.
//!
//! The primitives encode distance duality: for any p_k in conv(A), either some
//! column v is a *pivot*, meaning d(v, p) <= d(v, p_k), and then the step
//!
//! ```text
//! p_{k+1} = (1 - g) p_k + g v,   g = -(p_k - p)'(v - p_k) / ||v - p_k||^2
//! ```
//!
//! strictly decreases d(p_k, p); or no column is a pivot and p_k is a
//! *witness*: a point strictly closer than p to every column, which certifies
//! p outside conv(A) via the bisecting hyperplane
//!
//! ```text
//! H = { y : (p - p')'y = (p - p')'(p' + p) / 2 }.
//! ```
//!
//! The pivot test is evaluated in the inner-product form
//! `2 v'(p_k - p) <= ||p_k||^2 - ||p||^2`, which the cached quantities reduce
//! to a single fresh inner product v'p_k per candidate. A *strict* pivot
//! additionally satisfies `(p_k - p)'(v - p) <= 0` (the angle at p between p_k
//! and v is at least pi/2); strict pivots are what the greedy solvers test
//! before declaring a witness.

use crate::error::{Error, Result};
use crate::linalg::{dist, dist2, dot, norm, norm2};
use crate::rng::PortableRng;
use crate::scalar::Scalar;

/// The finite set A as an m x n column collection with cached ||v_i||^2.
#[derive(Clone, Debug)]
pub struct PointSet<S> {
    m: usize,
    n: usize,
    // Column-major: column i occupies data[i*m .. (i+1)*m].
    data: Vec<S>,
    norms2: Vec<S>,
}

impl<S: Scalar> PointSet<S> {
    /// Builds a point set from `n` columns of dimension `m`, stored
    /// column-major in `data`.
    pub fn from_flat(m: usize, n: usize, data: Vec<S>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyPointSet);
        }
        if data.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "point set entry" });
        }
        let norms2 = (0..n).map(|i| norm2(&data[i * m..(i + 1) * m])).collect();
        Ok(Self { m, n, data, norms2 })
    }

    /// Builds a point set from column vectors, all of the same dimension.
    pub fn from_columns(columns: &[Vec<S>]) -> Result<Self> {
        let m = columns.first().ok_or(Error::EmptyPointSet)?.len();
        let mut data = Vec::with_capacity(m * columns.len());
        for col in columns {
            if col.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: col.len() });
            }
            data.extend_from_slice(col);
        }
        Self::from_flat(m, columns.len(), data)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, i: usize) -> &[S] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Cached ||v_i||^2.
    pub fn norm2(&self, i: usize) -> S {
        self.norms2[i]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.data.chunks_exact(self.m)
    }

    /// Returns a copy with `column` appended.
    pub fn with_column(&self, column: &[S]) -> Result<Self> {
        if column.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: column.len() });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(column);
        Self::from_flat(self.m, self.n + 1, data)
    }

    /// A p_k = sum_i alpha_i v_i, written into `out`.
    pub(crate) fn combine(&self, weights: &[S], out: &mut [S]) {
        debug_assert_eq!(weights.len(), self.n);
        debug_assert_eq!(out.len(), self.m);
        out.fill(S::zero());
        for (i, col) in self.columns().enumerate() {
            let w = weights[i];
            if w != S::zero() {
                for (o, &v) in out.iter_mut().zip(col) {
                    *o = *o + w * v;
                }
            }
        }
    }
}

/// The query point p with R = max_i d(v_i, p) and cached v_i'p, ||p||^2.
#[derive(Clone, Debug)]
pub struct QueryContext<S> {
    p: Vec<S>,
    r: S,
    dots: Vec<S>,
    pnorm2: S,
}

impl<S: Scalar> QueryContext<S> {
    pub fn p(&self) -> &[S] {
        &self.p
    }

    /// R = max_i d(v_i, p). Zero only when p coincides with every column.
    pub fn r(&self) -> S {
        self.r
    }

    /// Cached v_i'p.
    pub fn dot_p(&self, i: usize) -> S {
        self.dots[i]
    }

    pub fn pnorm2(&self) -> S {
        self.pnorm2
    }

    /// Number of columns this context was built against.
    pub fn n(&self) -> usize {
        self.dots.len()
    }
}

/// Builds the query-side caches in one O(mn) pass.
pub fn build_query<S: Scalar>(a: &PointSet<S>, p: &[S]) -> Result<QueryContext<S>> {
    if p.len() != a.m() {
        return Err(Error::DimensionMismatch { expected: a.m(), got: p.len() });
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "query point entry" });
    }
    let mut r2 = S::zero();
    let mut dots = Vec::with_capacity(a.n());
    for col in a.columns() {
        dots.push(dot(col, p));
        let d2 = dist2(col, p);
        if d2 > r2 {
            r2 = d2;
        }
    }
    Ok(QueryContext { p: p.to_vec(), r: r2.sqrt(), dots, pnorm2: norm2(p) })
}

/// A point of conv(A): nonnegative weights summing to one, the combined point,
/// and the support U = { i : alpha_i > 0 }.
#[derive(Clone, Debug)]
pub struct Iterate<S> {
    weights: Vec<S>,
    point: Vec<S>,
    support: Vec<usize>,
}

impl<S: Scalar> Iterate<S> {
    /// The iterate sitting at column `j`: weights = e_j.
    pub fn vertex(a: &PointSet<S>, j: usize) -> Result<Self> {
        if j >= a.n() {
            return Err(Error::IndexOutOfBounds { index: j, n: a.n() });
        }
        let mut weights = vec![S::zero(); a.n()];
        weights[j] = S::one();
        Ok(Self { weights, point: a.column(j).to_vec(), support: vec![j] })
    }

    /// Builds an iterate from an explicit weight vector, validating that it
    /// lies on the unit simplex (entrywise >= 0, sum within 1e-12 of one).
    pub fn from_weights(a: &PointSet<S>, weights: Vec<S>) -> Result<Self> {
        if weights.len() != a.n() {
            return Err(Error::DimensionMismatch { expected: a.n(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(Error::NonFinite { what: "iterate weight (finite, nonnegative)" });
        }
        let sum: S = weights.iter().copied().sum();
        if (sum - S::one()).abs() > S::c(1e-12) {
            return Err(Error::InvalidConfig(format!(
                "iterate weights sum to {sum}, expected 1"
            )));
        }
        let mut point = vec![S::zero(); a.m()];
        a.combine(&weights, &mut point);
        let support = support_of(&weights);
        Ok(Self { weights, point, support })
    }

    /// Internal constructor for solver loops that maintain consistency
    /// themselves.
    pub(crate) fn from_parts(weights: Vec<S>, point: Vec<S>) -> Self {
        let support = support_of(&weights);
        Self { weights, point, support }
    }

    /// Internal constructor: recomputes point and support from weights,
    /// skipping the simplex validation (the caller maintains it).
    pub(crate) fn from_weights_unchecked(a: &PointSet<S>, weights: Vec<S>) -> Self {
        let mut point = vec![S::zero(); a.m()];
        a.combine(&weights, &mut point);
        let support = support_of(&weights);
        Self { weights, point, support }
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn point(&self) -> &[S] {
        &self.point
    }

    /// Indices with alpha_i > 0, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// d(p_k, p).
    pub fn delta(&self, q: &QueryContext<S>) -> S {
        dist(&self.point, q.p())
    }

    /// Recomputes the point field from the weights, discarding accumulated
    /// round-off from incremental updates.
    pub fn refresh_point(&mut self, a: &PointSet<S>) {
        let mut point = vec![S::zero(); a.m()];
        a.combine(&self.weights, &mut point);
        self.point = point;
    }
}

fn support_of<S: Scalar>(weights: &[S]) -> Vec<usize> {
    weights
        .iter()
        .enumerate()
        .filter_map(|(i, &w)| (w > S::zero()).then_some(i))
        .collect()
}

/// How a solver chooses among available pivots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotPolicy {
    /// Lowest-index pivot.
    First,
    /// Collect every pivot, then sample one uniformly.
    RandomAmongAll,
    /// Global argmin of v_i'(p_k - p), ties broken by lowest index.
    Greedy,
}

/// Tolerance applied to the witness margin test.
#[derive(Clone, Copy, Debug)]
pub enum WitnessTolerance<S> {
    /// Fixed additive slack; zero keeps the strict floating-point inequality.
    Absolute(S),
    /// Slack c * (||p_k||^2 + ||p||^2), for ill-scaled data.
    RelativeScaled(S),
}

impl<S: Scalar> WitnessTolerance<S> {
    pub(crate) fn resolve(&self, pk_norm2: S, pnorm2: S) -> S {
        match *self {
            WitnessTolerance::Absolute(t) => t,
            WitnessTolerance::RelativeScaled(c) => c * (pk_norm2 + pnorm2),
        }
    }
}

impl<S: Scalar> Default for WitnessTolerance<S> {
    fn default() -> Self {
        WitnessTolerance::Absolute(S::zero())
    }
}

/// Pivot and witness tolerances shared by the solvers.
///
/// Defaults are exact floating-point inequalities (both zero): the pivot and
/// witness conditions are closed inequalities used as written, and a zero
/// witness slack avoids declaring false witnesses out of cancellation noise.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances<S> {
    /// Additive slack on the pivot inequality 2 v'(p_k - p) <= b + tau_p.
    pub pivot: S,
    /// Slack on the witness margin min_i [v_i'(p_k - p) - b/2] > tau_w.
    pub witness: WitnessTolerance<S>,
}

impl<S: Scalar> Default for Tolerances<S> {
    fn default() -> Self {
        Self { pivot: S::zero(), witness: WitnessTolerance::default() }
    }
}

/// Simple-pivot test, inner-product form: `2 v_i'(p_k - p) <= ||p_k||^2 -
/// ||p||^2 + tau_p`. Equivalent to d(v_i, p) <= d(v_i, p_k) at tau_p = 0.
pub fn is_pivot<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    q: &QueryContext<S>,
    i: usize,
    tau_p: S,
) -> bool {
    let two = S::c(2.0);
    let ai = dot(a.column(i), it.point()) - q.dot_p(i);
    two * ai <= norm2(it.point()) - q.pnorm2() + tau_p
}

/// Strict-pivot test: `(p_k - p)'(v_i - p) <= tau_p`, i.e. the angle at p
/// between p_k and v_i is at least pi/2.
pub fn is_strict_pivot<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    q: &QueryContext<S>,
    i: usize,
    tau_p: S,
) -> bool {
    let lhs: S = it
        .point()
        .iter()
        .zip(q.p())
        .zip(a.column(i).iter().zip(q.p()))
        .map(|((&pk, &p), (&v, &p2))| (pk - p) * (v - p2))
        .sum();
    lhs <= tau_p
}

/// Finds a pivot under `policy`, returning its index and v_i'(p_k - p), or
/// `None` when no column is a pivot (the witness situation).
///
/// `Greedy` returns the global argmin of v_i'(p_k - p) with lowest-index tie
/// breaking, but only when that argmin actually is a pivot; if the minimizer
/// fails the pivot test, no column can pass it.
pub fn find_pivot<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    q: &QueryContext<S>,
    policy: PivotPolicy,
    rng: &mut PortableRng,
    tau_p: S,
) -> Option<(usize, S)> {
    let scan = ColumnScan::run(a, it, q);
    scan.select_pivot(policy, rng, tau_p)
}

/// One O(mn) pass over the columns: a_i = v_i'(p_k - p) for every i, plus the
/// shared threshold quantities. Solvers reuse this so the public predicates
/// and the hot loops evaluate the exact same floating-point expressions.
pub(crate) struct ColumnScan<S> {
    /// a_i = v_i'(p_k - p).
    pub a: Vec<S>,
    /// b = ||p_k||^2 - ||p||^2.
    pub b: S,
    /// Index minimizing a_i (lowest index on ties).
    pub argmin: usize,
}

impl<S: Scalar> ColumnScan<S> {
    pub(crate) fn run(a: &PointSet<S>, it: &Iterate<S>, q: &QueryContext<S>) -> Self {
        let mut vals = Vec::with_capacity(a.n());
        Self::run_into(a, it, q, &mut vals)
    }

    /// Same as `run`, writing a_i into a caller-owned buffer.
    pub(crate) fn run_into(
        a: &PointSet<S>,
        it: &Iterate<S>,
        q: &QueryContext<S>,
        vals: &mut Vec<S>,
    ) -> Self {
        let pk = it.point();
        vals.clear();
        let mut argmin = 0;
        let mut min = S::infinity();
        for (i, col) in a.columns().enumerate() {
            let ai = dot(col, pk) - q.dot_p(i);
            if ai < min {
                min = ai;
                argmin = i;
            }
            vals.push(ai);
        }
        let b = norm2(pk) - q.pnorm2();
        ColumnScan { a: std::mem::take(vals), b, argmin }
    }

    /// Pivot test for column i: 2 a_i <= b + tau_p.
    pub(crate) fn pivot_at(&self, i: usize, tau_p: S) -> bool {
        S::c(2.0) * self.a[i] <= self.b + tau_p
    }

    /// Witness margin min_i [a_i - b/2]; positive margins mean no pivot.
    pub(crate) fn min_margin(&self) -> S {
        self.a[self.argmin] - self.b / S::c(2.0)
    }

    pub(crate) fn select_pivot(
        &self,
        policy: PivotPolicy,
        rng: &mut PortableRng,
        tau_p: S,
    ) -> Option<(usize, S)> {
        match policy {
            PivotPolicy::First => (0..self.a.len())
                .find(|&i| self.pivot_at(i, tau_p))
                .map(|i| (i, self.a[i])),
            PivotPolicy::RandomAmongAll => {
                let pivots: Vec<usize> =
                    (0..self.a.len()).filter(|&i| self.pivot_at(i, tau_p)).collect();
                if pivots.is_empty() {
                    None
                } else {
                    let i = pivots[rng.uniform_index(pivots.len())];
                    Some((i, self.a[i]))
                }
            }
            PivotPolicy::Greedy => {
                self.pivot_at(self.argmin, tau_p).then(|| (self.argmin, self.a[self.argmin]))
            }
        }
    }
}

/// Witness with its separating hyperplane: normal = p - p', offset =
/// (p - p')'(p' + p)/2, distance = ||p' - p||.
#[derive(Clone, Debug)]
pub struct WitnessCertificate<S> {
    witness: Iterate<S>,
    normal: Vec<S>,
    offset: S,
    distance: S,
    verified: bool,
}

impl<S: Scalar> WitnessCertificate<S> {
    /// Builds the certificate fields from an iterate without verifying it.
    pub fn unverified(witness: Iterate<S>, q: &QueryContext<S>) -> Self {
        let normal: Vec<S> =
            q.p().iter().zip(witness.point()).map(|(&p, &w)| p - w).collect();
        let mid_dot: S = normal
            .iter()
            .zip(witness.point().iter().zip(q.p()))
            .map(|(&nv, (&w, &p))| nv * (w + p))
            .sum();
        let two = S::c(2.0);
        let distance = norm(&normal);
        Self { witness, normal, offset: mid_dot / two, distance, verified: false }
    }

    /// Rechecks the n strict distance inequalities d(v_i, p) > d(v_i, p')
    /// (with slack `tau_w` on the squared-distance gap) and records the
    /// outcome. Returns whether the certificate now verifies.
    pub fn verify(&mut self, a: &PointSet<S>, q: &QueryContext<S>, tau_w: S) -> bool {
        let two = S::c(2.0);
        let ok = a.columns().all(|col| {
            dist2(col, q.p()) - dist2(col, self.witness.point()) > two * tau_w
        });
        self.verified = ok;
        ok
    }

    /// The witness point p' as an iterate of conv(A).
    pub fn witness(&self) -> &Iterate<S> {
        &self.witness
    }

    pub fn normal(&self) -> &[S] {
        &self.normal
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    /// ||p' - p||.
    pub fn distance(&self) -> S {
        self.distance
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }
}

/// Returns a verified certificate iff no column is a pivot at the iterate:
/// min_i [v_i'(p_k - p) - (||p_k||^2 - ||p||^2)/2] > tau_w, re-verified
/// against the n direct distance inequalities. `None` either when a pivot
/// exists or when the margin test and the distance recheck disagree in the
/// last ulps (callers then keep iterating).
pub fn witness_check<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    q: &QueryContext<S>,
    tol: &Tolerances<S>,
) -> Option<WitnessCertificate<S>> {
    let scan = ColumnScan::run(a, it, q);
    witness_from_scan(a, it, q, &scan, tol)
}

/// Witness path on an already-computed scan; shared with the solver loops.
pub(crate) fn witness_from_scan<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    q: &QueryContext<S>,
    scan: &ColumnScan<S>,
    tol: &Tolerances<S>,
) -> Option<WitnessCertificate<S>> {
    let tau_w = tol.witness.resolve(scan.b + q.pnorm2(), q.pnorm2());
    if scan.min_margin() <= tau_w {
        return None;
    }
    let mut cert = WitnessCertificate::unverified(it.clone(), q);
    cert.verify(a, q, tau_w).then_some(cert)
}

/// The separating hyperplane (normal, offset) of a verified certificate:
/// normal'v_i < offset < normal'p for every column.
pub fn separating_hyperplane<S: Scalar>(
    cert: &WitnessCertificate<S>,
) -> Result<(&[S], S)> {
    if !cert.is_verified() {
        return Err(Error::UnverifiedCertificate);
    }
    Ok((cert.normal(), cert.offset()))
}

/// Closed-form step length toward a pivot v_j:
///
/// ```text
/// g = -(p_k - p)'(v_j - p_k) / ||v_j - p_k||^2
/// ```
///
/// Under the preconditions (v_j is a pivot, d(p_k, p) > 0) the formula value
/// lies in (0, 1]; the result is clamped to [1e-16, 1] so round-off can never
/// produce a zero-length or overshooting step.
pub fn line_search_gamma<S: Scalar>(
    it: &Iterate<S>,
    v_j: &[S],
    q: &QueryContext<S>,
) -> Result<S> {
    let pk = it.point();
    let den: S = dist2(v_j, pk);
    if den == S::zero() {
        return Err(Error::DegenerateDirection);
    }
    let num: S = pk
        .iter()
        .zip(q.p())
        .zip(v_j.iter().zip(pk))
        .map(|((&pkv, &pv), (&vv, &pk2))| (pkv - pv) * (vv - pk2))
        .sum();
    let gamma = -num / den;
    Ok(gamma.max(S::c(GAMMA_FLOOR)).min(S::one()))
}

/// Smallest admissible step length; absorbs round-off, never reached by a
/// genuine pivot step.
pub(crate) const GAMMA_FLOOR: f64 = 1e-16;

/// Convex step p_{k+1} = (1 - g) p_k + g v_j, returning a fresh iterate.
/// Weights update affinely (alpha' = (1-g) alpha + g e_j); at g = 1 the
/// support collapses to {j}.
pub fn apply_step<S: Scalar>(
    a: &PointSet<S>,
    it: &Iterate<S>,
    j: usize,
    gamma: S,
) -> Iterate<S> {
    debug_assert!(gamma > S::zero() && gamma <= S::one());
    let keep = S::one() - gamma;
    let mut weights: Vec<S> = it.weights().iter().map(|&w| w * keep).collect();
    weights[j] = weights[j] + gamma;
    let point: Vec<S> = it
        .point()
        .iter()
        .zip(a.column(j))
        .map(|(&pk, &v)| keep * pk + gamma * v)
        .collect();
    Iterate::from_parts(weights, point)
}

/// Sine of the angle at p_k between the rays toward p and toward v_j,
/// in [0, 1]. Diagnostic only (zigzag traces).
pub fn sin_theta<S: Scalar>(it: &Iterate<S>, v_j: &[S], q: &QueryContext<S>) -> Result<S> {
    let pk = it.point();
    let u2 = dist2(q.p(), pk);
    let w2 = dist2(v_j, pk);
    if u2 == S::zero() || w2 == S::zero() {
        return Err(Error::DegenerateRays);
    }
    let uw: S = q
        .p()
        .iter()
        .zip(pk)
        .zip(v_j.iter().zip(pk))
        .map(|((&p, &k1), (&v, &k2))| (p - k1) * (v - k2))
        .sum();
    let cos = (uw / (u2.sqrt() * w2.sqrt())).max(-S::one()).min(S::one());
    Ok((S::one() - cos * cos).max(S::zero()).sqrt())
}

/// Tagged solve result shared by every solver.
#[derive(Clone, Debug)]
pub enum SolveOutcome<S> {
    /// d(p_k, p) <= eps * R; the membership question is answered "inside or
    /// within eps R of it".
    EpsilonSolution { iterate: Iterate<S>, delta: S },
    /// Verified witness: p is outside conv(A).
    Witness { certificate: WitnessCertificate<S> },
    /// The relative-error criterion fired while delta > eps R: p is outside
    /// conv(A), but no separating hyperplane is produced.
    GapCertificate { iterate: Iterate<S>, gap: S },
    /// Iteration budget exhausted without an answer.
    Exhausted { iterate: Iterate<S>, delta: S },
}

impl<S: Scalar> SolveOutcome<S> {
    /// The final iterate, or the witness point for witness outcomes.
    pub fn iterate(&self) -> &Iterate<S> {
        match self {
            SolveOutcome::EpsilonSolution { iterate, .. }
            | SolveOutcome::GapCertificate { iterate, .. }
            | SolveOutcome::Exhausted { iterate, .. } => iterate,
            SolveOutcome::Witness { certificate } => certificate.witness(),
        }
    }

    /// d(p_k, p) of the final iterate (witness distance for witnesses).
    pub fn delta(&self, q: &QueryContext<S>) -> S {
        match self {
            SolveOutcome::EpsilonSolution { delta, .. }
            | SolveOutcome::Exhausted { delta, .. } => *delta,
            SolveOutcome::Witness { certificate } => certificate.distance(),
            SolveOutcome::GapCertificate { iterate, .. } => iterate.delta(q),
        }
    }

    /// True when the outcome proves p outside conv(A).
    pub fn proves_outside(&self) -> bool {
        matches!(self, SolveOutcome::Witness { .. } | SolveOutcome::GapCertificate { .. })
    }

    /// Short lowercase tag for reports: epsilon | witness | gap | exhausted.
    pub fn kind(&self) -> &'static str {
        match self {
            SolveOutcome::EpsilonSolution { .. } => "epsilon",
            SolveOutcome::Witness { .. } => "witness",
            SolveOutcome::GapCertificate { .. } => "gap",
            SolveOutcome::Exhausted { .. } => "exhausted",
        }
    }
}
