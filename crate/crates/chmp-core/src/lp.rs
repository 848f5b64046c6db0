//! LP feasibility through hull membership.
//!
//! The bounded feasibility question, find x with Ax = b, x >= 0, e'x <= N,
//! embeds into a membership query in R^{m+2}: the embedded columns are
//! (a_i; 1; 0) for each constraint column, a slack column (0; 1; 0), and the
//! right-hand-side column (-b; -N; 1); the query is p = (0; 0; 1/(N+1)).
//! A convex combination (alpha, beta, gamma) hitting p has gamma = 1/(N+1)
//! and scales back to a feasible x_hat = alpha / gamma; a witness for the
//! embedded query certifies infeasibility outright.
//!
//! An epsilon-solution scales back to an approximately feasible point: with
//! R the embedded query's farthest-column distance, the recovered x_hat
//! satisfies
//!
//! ```text
//! ||A x_hat - b||         <= eps R / gamma
//! |e'x_hat + beta/gamma - N| <= eps R / gamma
//! |gamma - 1/(N+1)|       <= eps R
//! ```

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{build_query, PointSet, SolveOutcome, WitnessCertificate};
use crate::linalg::norm;
use crate::rng::PortableRng;
use crate::scalar::Scalar;
use crate::solvers::{solve, SolveReport, SolverConfig, SolverKind};

/// The feasibility problem: Ax = b, x >= 0, e'x <= N.
#[derive(Clone, Debug)]
pub struct LpInstance<S> {
    columns: PointSet<S>,
    b: Vec<S>,
    n_bound: S,
}

impl<S: Scalar> LpInstance<S> {
    pub fn new(columns: PointSet<S>, b: Vec<S>, n_bound: S) -> Result<Self> {
        if b.len() != columns.m() {
            return Err(Error::DimensionMismatch { expected: columns.m(), got: b.len() });
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "right-hand side entry" });
        }
        if !(n_bound > S::zero() && n_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "norm bound must be positive and finite, got {n_bound}"
            )));
        }
        Ok(Self { columns, b, n_bound })
    }

    /// Constraint matrix columns a_1..a_n.
    pub fn matrix(&self) -> &PointSet<S> {
        &self.columns
    }

    pub fn b(&self) -> &[S] {
        &self.b
    }

    pub fn n_bound(&self) -> S {
        self.n_bound
    }

    pub fn m(&self) -> usize {
        self.columns.m()
    }

    pub fn n(&self) -> usize {
        self.columns.n()
    }

    /// ||A x - b|| for a candidate solution.
    pub fn residual(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        let mut r: Vec<S> = self.b.iter().map(|&v| -v).collect();
        for (i, col) in self.columns.columns().enumerate() {
            let xi = x[i];
            if xi != S::zero() {
                for (rv, &cv) in r.iter_mut().zip(col) {
                    *rv = *rv + xi * cv;
                }
            }
        }
        Ok(norm(&r))
    }
}

/// The recovered approximate solution with its error terms and the bounds
/// they are guaranteed to satisfy.
#[derive(Clone, Debug)]
pub struct Recovery<S> {
    /// x_hat = alpha / gamma, entrywise nonnegative.
    pub x_hat: Vec<S>,
    /// ||A x_hat - b||.
    pub residual: S,
    /// |e'x_hat + beta/gamma - N|.
    pub mass_defect: S,
    /// |gamma - 1/(N+1)|.
    pub gamma_defect: S,
    /// eps R / gamma: bound on residual and mass_defect.
    pub scaled_bound: S,
    /// eps R: bound on gamma_defect.
    pub gamma_bound: S,
    pub gamma: S,
}

impl<S: Scalar> Recovery<S> {
    /// All three error terms within their guaranteed bounds.
    pub fn within_bounds(&self) -> bool {
        self.residual <= self.scaled_bound
            && self.mass_defect <= self.scaled_bound
            && self.gamma_defect <= self.gamma_bound
    }
}

/// Outcome of a feasibility solve.
#[derive(Clone, Debug)]
pub enum FeasibilityVerdict<S> {
    Feasible { recovery: Recovery<S> },
    /// The embedded membership query has a verified witness: no feasible
    /// point exists under the norm bound.
    Infeasible { certificate: WitnessCertificate<S> },
    /// Budget exhausted, or the solver proved the embedded query infeasible
    /// without a reportable hyperplane, or recovery degenerated.
    Inconclusive { gap: Option<S> },
}

impl<S> FeasibilityVerdict<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            FeasibilityVerdict::Feasible { .. } => "feasible",
            FeasibilityVerdict::Infeasible { .. } => "infeasible",
            FeasibilityVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Builds the embedded membership instance: n+2 columns in R^{m+2} and the
/// query p.
pub fn build_chmp<S: Scalar>(lp: &LpInstance<S>) -> Result<(PointSet<S>, Vec<S>)> {
    let m = lp.m();
    let n = lp.n();
    let me = m + 2;
    let mut data: Vec<S> = Vec::with_capacity(me * (n + 2));
    for col in lp.columns.columns() {
        data.extend_from_slice(col);
        data.push(S::one());
        data.push(S::zero());
    }
    // Slack column (0; 1; 0).
    data.extend(std::iter::repeat(S::zero()).take(m));
    data.push(S::one());
    data.push(S::zero());
    // Right-hand-side column (-b; -N; 1).
    data.extend(lp.b.iter().map(|&v| -v));
    data.push(-lp.n_bound);
    data.push(S::one());
    let a = PointSet::from_flat(me, n + 2, data)?;
    let mut p = vec![S::zero(); me];
    p[me - 1] = S::one() / (lp.n_bound + S::one());
    Ok((a, p))
}

/// Weight threshold below which scaling by 1/gamma is meaningless.
const GAMMA_FLOOR: f64 = 1e-12;

/// Scales an embedded epsilon-solution's weights back to an approximate LP
/// solution and evaluates its error bounds. `eps` and `r` are the tolerance
/// and query radius of the embedded solve.
pub fn recover_solution<S: Scalar>(
    lp: &LpInstance<S>,
    weights: &[S],
    eps: S,
    r: S,
) -> Result<Recovery<S>> {
    let n = lp.n();
    if weights.len() != n + 2 {
        return Err(Error::DimensionMismatch { expected: n + 2, got: weights.len() });
    }
    let gamma = weights[n + 1];
    if gamma <= S::c(GAMMA_FLOOR) {
        return Err(Error::DegenerateRecovery { gamma: gamma.as_f64() });
    }
    let beta = weights[n];
    let x_hat: Vec<S> = weights[..n].iter().map(|&a| a / gamma).collect();
    let residual = lp.residual(&x_hat)?;
    let mass: S = x_hat.iter().copied().sum();
    let mass_defect = (mass + beta / gamma - lp.n_bound).abs();
    let gamma_defect = (gamma - S::one() / (lp.n_bound + S::one())).abs();
    Ok(Recovery {
        x_hat,
        residual,
        mass_defect,
        gamma_defect,
        scaled_bound: eps * r / gamma,
        gamma_bound: eps * r,
        gamma,
    })
}

/// Embeds, solves, and maps the outcome: epsilon-solution to Feasible (via
/// recovery), witness to Infeasible, anything else to Inconclusive.
pub fn solve_feasibility<S: Scalar>(
    lp: &LpInstance<S>,
    kind: SolverKind,
    cfg: &SolverConfig<S>,
) -> Result<(FeasibilityVerdict<S>, SolveReport<S>)> {
    let (a, p) = build_chmp(lp)?;
    let q = build_query(&a, &p)?;
    let report = solve(&a, &q, kind, cfg)?;
    let verdict = match &report.outcome {
        SolveOutcome::EpsilonSolution { iterate, .. } => {
            match recover_solution(lp, iterate.weights(), cfg.eps, q.r()) {
                Ok(recovery) => FeasibilityVerdict::Feasible { recovery },
                Err(Error::DegenerateRecovery { .. }) => {
                    FeasibilityVerdict::Inconclusive { gap: None }
                }
                Err(e) => return Err(e),
            }
        }
        SolveOutcome::Witness { certificate } => {
            FeasibilityVerdict::Infeasible { certificate: certificate.clone() }
        }
        SolveOutcome::GapCertificate { gap, .. } => {
            FeasibilityVerdict::Inconclusive { gap: Some(*gap) }
        }
        SolveOutcome::Exhausted { .. } => FeasibilityVerdict::Inconclusive { gap: None },
    };
    Ok((verdict, report))
}

/// Random instance: columns uniform on the unit sphere centered at the
/// all-ones vector (entrywise nonnegative), b = Ax for x uniform in (0,1)^n;
/// the infeasible variant then flips the sign of b_1, which no nonnegative
/// combination of nonnegative columns can match.
pub fn gen_lp_instance<S: Scalar>(
    m: usize,
    n: usize,
    feasible: bool,
    n_bound: S,
    rng: &mut PortableRng,
) -> Result<LpInstance<S>> {
    if m == 0 || n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut data: Vec<S> = Vec::with_capacity(m * n);
    let mut dir = vec![0f64; m];
    for _ in 0..n {
        loop {
            rng.fill_normal(&mut dir);
            let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm == 0.0 {
                continue;
            }
            // Unit offsets from e have entries in [-1, 1], so coordinates
            // 1 + d_j are nonnegative automatically; the check guards the
            // construction rather than filtering it.
            if dir.iter().any(|&x| 1.0 + x / nrm < 0.0) {
                continue;
            }
            data.extend(dir.iter().map(|&x| S::c(1.0 + x / nrm)));
            break;
        }
    }
    let columns = PointSet::from_flat(m, n, data)?;
    let mut b = vec![S::zero(); m];
    for col in columns.columns() {
        let xi = S::c(rng.uniform());
        for (bv, &cv) in b.iter_mut().zip(col) {
            *bv = *bv + xi * cv;
        }
    }
    if !feasible {
        b[0] = -b[0];
    }
    LpInstance::new(columns, b, n_bound)
}

/// A-priori geometry of the embedded instance.
#[derive(Clone, Copy, Debug)]
pub struct GeometryBounds<S> {
    /// Lower bound N+1 on the embedded point-set diameter.
    pub diameter_lower: S,
    /// Upper bound 1 on the width constant of the embedded columns.
    pub omega_upper: S,
    /// Pessimistic per-iteration factor 1 - (1/4) (1/((N+1)(m+3)))^2 for the
    /// away-step solver's linear rate on this embedding.
    pub asfw_rate_bound: S,
}

pub fn geometry_bounds<S: Scalar>(lp: &LpInstance<S>) -> GeometryBounds<S> {
    let ratio = S::one() / ((lp.n_bound + S::one()) * S::c((lp.m() + 3) as f64));
    GeometryBounds {
        diameter_lower: lp.n_bound + S::one(),
        omega_upper: S::one(),
        asfw_rate_bound: S::one() - ratio * ratio / S::c(4.0),
    }
}

/// Writes `LPF v1 m n N`, then A by rows, then b.
pub fn write_lp<S: Scalar, W: Write>(out: &mut W, lp: &LpInstance<S>) -> Result<()> {
    writeln!(out, "LPF v1 {} {} {:e}", lp.m(), lp.n(), lp.n_bound)?;
    use std::fmt::Write as _;
    let mut line = String::new();
    for row in 0..lp.m() {
        line.clear();
        for col in 0..lp.n() {
            if col > 0 {
                line.push(' ');
            }
            write!(line, "{:e}", lp.columns.column(col)[row]).expect("string write");
        }
        writeln!(out, "{line}")?;
    }
    line.clear();
    for (i, v) in lp.b.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        write!(line, "{v:e}").expect("string write");
    }
    writeln!(out, "{line}")?;
    Ok(())
}

/// Reads the format written by [`write_lp`].
pub fn read_lp<S: Scalar, R: BufRead>(input: R) -> Result<LpInstance<S>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty LP file".into()))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("LPF") || parts.next() != Some("v1") {
        return Err(Error::Format(format!("bad header '{header}'")));
    }
    let m: usize = parse_field(parts.next(), "m")?;
    let n: usize = parse_field(parts.next(), "n")?;
    let n_bound: f64 = parse_field(parts.next(), "N")?;
    if m == 0 || n == 0 {
        return Err(Error::Format(format!("degenerate sizes m={m} n={n}")));
    }
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
    for i in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing matrix row {i}")))??;
        let row = parse_float_line(&line, n).map_err(|e| {
            Error::Format(format!("matrix row {i}: {e}"))
        })?;
        rows.push(row);
    }
    let b_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing right-hand side".into()))??;
    let b = parse_float_line(&b_line, m)
        .map_err(|e| Error::Format(format!("right-hand side: {e}")))?;
    let mut data = vec![S::zero(); m * n];
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            data[c * m + r] = v;
        }
    }
    LpInstance::new(PointSet::from_flat(m, n, data)?, b, S::c(n_bound))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Format(format!("missing {name} in header")))?
        .parse()
        .map_err(|_| Error::Format(format!("unparseable {name} in header")))
}

fn parse_float_line<S: Scalar>(line: &str, want: usize) -> std::result::Result<Vec<S>, String> {
    let mut out = Vec::with_capacity(want);
    for tok in line.split_whitespace() {
        let v: f64 = tok.parse().map_err(|_| format!("bad float '{tok}'"))?;
        out.push(S::c(v));
    }
    if out.len() != want {
        return Err(format!("expected {want} floats, got {}", out.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Iterate;

    fn tiny() -> LpInstance<f64> {
        // A = [1], b = [1], N = 2: x = 1 is feasible.
        LpInstance::new(
            PointSet::from_columns(&[vec![1.0]]).unwrap(),
            vec![1.0],
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn embedding_shape_and_exact_weights() {
        let lp = tiny();
        let (a, p) = build_chmp(&lp).unwrap();
        assert_eq!(a.m(), 3);
        assert_eq!(a.n(), 3);
        assert_eq!(a.column(0), &[1.0, 1.0, 0.0]);
        assert_eq!(a.column(1), &[0.0, 1.0, 0.0]);
        assert_eq!(a.column(2), &[-1.0, -2.0, 1.0]);
        assert_eq!(p, vec![0.0, 0.0, 1.0 / 3.0]);
        // The uniform weight vector reproduces p exactly.
        let it = Iterate::from_weights(&a, vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(it.point(), &p[..]);
    }

    #[test]
    fn recovery_from_exact_weights() {
        let lp = tiny();
        let rec = recover_solution(&lp, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-6, 3.0)
            .unwrap();
        assert_eq!(rec.x_hat, vec![1.0]);
        assert_eq!(rec.residual, 0.0);
        assert!(rec.within_bounds());
        // Degenerate gamma is rejected.
        let err = recover_solution(&lp, &[0.5, 0.5, 0.0], 1e-6, 3.0);
        assert!(matches!(err, Err(Error::DegenerateRecovery { .. })));
    }

    #[test]
    fn generator_construction_identities() {
        let mut rng = PortableRng::new(4);
        let lp: LpInstance<f64> = gen_lp_instance(6, 15, true, 50.0, &mut rng).unwrap();
        for col in lp.matrix().columns() {
            assert!(col.iter().all(|&x| x >= 0.0));
            let off: f64 = col.iter().map(|&x| (x - 1.0) * (x - 1.0)).sum();
            assert!((off.sqrt() - 1.0).abs() < 1e-12);
        }
        // Feasible b admits a nonnegative preimage by construction; the
        // residual of the generating x is zero, so feasibility solves exist.
        let mut rng2 = PortableRng::new(4);
        let bad: LpInstance<f64> = gen_lp_instance(6, 15, false, 50.0, &mut rng2).unwrap();
        assert!(bad.b()[0] < 0.0);
        assert_eq!(bad.b()[1], lp.b()[1]);
    }

    #[test]
    fn feasible_solve_recovers_within_bounds() {
        let mut rng = PortableRng::new(8);
        let lp: LpInstance<f64> = gen_lp_instance(5, 20, true, 50.0, &mut rng).unwrap();
        let mut cfg = SolverConfig::new(lp.n() + 2);
        cfg.eps = 1e-6;
        cfg.maxit = 1_000_000;
        cfg.spg.memory = 60;
        cfg.spg.lambda_min = 1e-10;
        cfg.spg.lambda_max = 1e10;
        for kind in [SolverKind::Spg, SolverKind::Gt] {
            let (verdict, _) = solve_feasibility(&lp, kind, &cfg).unwrap();
            match verdict {
                FeasibilityVerdict::Feasible { recovery } => {
                    assert!(recovery.within_bounds(), "{kind}: {recovery:?}");
                    assert!(recovery.x_hat.iter().all(|&x| x >= 0.0));
                }
                other => panic!("{kind}: expected feasible, got {}", other.kind()),
            }
        }
    }

    #[test]
    fn infeasible_solve_produces_verified_certificate() {
        let mut rng = PortableRng::new(12);
        let lp: LpInstance<f64> = gen_lp_instance(5, 20, false, 50.0, &mut rng).unwrap();
        let mut cfg = SolverConfig::new(lp.n() + 2);
        cfg.eps = 1e-6;
        cfg.maxit = 1_000_000;
        let (verdict, report) = solve_feasibility(&lp, SolverKind::Gt, &cfg).unwrap();
        match verdict {
            FeasibilityVerdict::Infeasible { certificate } => {
                assert!(certificate.is_verified());
            }
            other => panic!("expected infeasible, got {} ({})", other.kind(), report.iterations),
        }
    }

    #[test]
    fn embedded_diameter_dominates_bound() {
        let mut rng = PortableRng::new(2);
        let lp: LpInstance<f64> = gen_lp_instance(4, 10, true, 30.0, &mut rng).unwrap();
        let (a, _) = build_chmp(&lp).unwrap();
        let slack = a.column(lp.n());
        let rhs = a.column(lp.n() + 1);
        let d: f64 = crate::linalg::dist(slack, rhs);
        let gb = geometry_bounds(&lp);
        assert!(d >= gb.diameter_lower);
    }

    #[test]
    fn rate_bound_magnitude_at_benchmark_scale() {
        let lp = LpInstance::new(
            PointSet::from_flat(100, 1, vec![1.0; 100]).unwrap(),
            vec![1.0; 100],
            1200.0,
        )
        .unwrap();
        let gb = geometry_bounds(&lp);
        let ratio: f64 = 1.0 / (1201.0 * 103.0);
        assert!(ratio < 1e-5);
        assert!((gb.asfw_rate_bound - (1.0 - ratio * ratio / 4.0)).abs() < 1e-18);
        assert!(gb.asfw_rate_bound < 1.0);
    }

    #[test]
    fn lp_text_format_round_trips() {
        let mut rng = PortableRng::new(77);
        let lp: LpInstance<f64> = gen_lp_instance(3, 7, false, 25.0, &mut rng).unwrap();
        let mut bytes = Vec::new();
        write_lp(&mut bytes, &lp).unwrap();
        let lp2: LpInstance<f64> = read_lp(std::io::Cursor::new(&bytes)).unwrap();
        assert_eq!(lp.b(), lp2.b());
        assert_eq!(lp.n_bound(), lp2.n_bound());
        for i in 0..lp.n() {
            assert_eq!(lp.matrix().column(i), lp2.matrix().column(i));
        }
        let garbage: Result<LpInstance<f64>> =
            read_lp(std::io::Cursor::new(b"LPF v2 1 1 5\n1\n1\n" as &[u8]));
        assert!(garbage.is_err());
    }
}
