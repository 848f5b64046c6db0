//! Seeded instance generators for the benchmark scenarios, plus the text
//! interchange format.
//!
//! Four randomized families over points uniform in the unit ball of R^m:
//!
//! - case a: query at the ball center (deep inside for large n),
//! - case b: query at the midpoint of the two "east-most" columns, with an
//!   extra column v_s planted close to it (inside, near-degenerate start),
//! - case c: that midpoint dilated by 1.5 (clearly outside),
//! - case d: dilated by only 1.01, v_s planted as in case b (barely outside).
//!
//! Plus a fixed 2D instance: the unit square with an interior fifth point,
//! queried at an edge midpoint (on the boundary) or just past it.
//!
//! All randomness flows through [`PortableRng`], so (spec, seed) fixes the
//! instance bytes on every platform.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::linalg::{dist, norm};
use crate::rng::PortableRng;
use crate::scalar::Scalar;

/// Which generator family an [`InstanceSpec`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceCase {
    A,
    B,
    C,
    D,
    UnitSquare(SquareVariant),
}

/// Query placement for the unit-square instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SquareVariant {
    /// p on the boundary (an edge midpoint): a membership instance.
    Inside,
    /// p past that edge at distance 0.05 from the hull.
    Outside,
}

impl InstanceCase {
    pub fn name(self) -> &'static str {
        match self {
            InstanceCase::A => "a",
            InstanceCase::B => "b",
            InstanceCase::C => "c",
            InstanceCase::D => "d",
            InstanceCase::UnitSquare(SquareVariant::Inside) => "square-inside",
            InstanceCase::UnitSquare(SquareVariant::Outside) => "square-outside",
        }
    }

    pub const ALL: [InstanceCase; 6] = [
        InstanceCase::A,
        InstanceCase::B,
        InstanceCase::C,
        InstanceCase::D,
        InstanceCase::UnitSquare(SquareVariant::Inside),
        InstanceCase::UnitSquare(SquareVariant::Outside),
    ];
}

impl std::str::FromStr for InstanceCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceCase::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown instance case '{s}'")))
    }
}

impl std::fmt::Display for InstanceCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full recipe for a reproducible instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceSpec<S> {
    pub case: InstanceCase,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// v_s shrink factor for cases b and d.
    pub beta: S,
    /// Query dilation for cases c and d.
    pub dilation: S,
}

impl<S: Scalar> InstanceSpec<S> {
    /// Spec with the standard constants: beta = 0.9, dilation 1.5 (case c)
    /// or 1.01 (case d).
    pub fn new(case: InstanceCase, m: usize, n: usize, seed: u64) -> Self {
        let dilation = match case {
            InstanceCase::C => S::c(1.5),
            InstanceCase::D => S::c(1.01),
            _ => S::c(1.5),
        };
        Self { case, m, n, seed, beta: S::c(0.9), dilation }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > S::zero() && self.beta < S::one()) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0,1), got {}",
                self.beta
            )));
        }
        if matches!(self.case, InstanceCase::C | InstanceCase::D) && self.dilation <= S::one()
        {
            return Err(Error::InvalidConfig(format!(
                "dilation must exceed 1, got {}",
                self.dilation
            )));
        }
        Ok(())
    }

    /// Generates (A, p). Cases b and d return n+1 columns (the planted v_s is
    /// appended last); the unit-square instances ignore m and n.
    pub fn generate(&self) -> Result<(PointSet<S>, Vec<S>)> {
        self.validate()?;
        let mut rng = PortableRng::new(self.seed);
        match self.case {
            InstanceCase::A => gen_case_a(self.m, self.n, &mut rng),
            InstanceCase::B => gen_case_b(self.m, self.n, self.beta, &mut rng),
            InstanceCase::C => gen_case_c(self.m, self.n, self.dilation, &mut rng),
            InstanceCase::D => gen_case_d(self.m, self.n, self.beta, self.dilation, &mut rng),
            InstanceCase::UnitSquare(v) => unit_square_instance(v),
        }
    }
}

/// n points uniform in the unit ball of R^m: a standard-normal direction
/// scaled to radius u^(1/m), u uniform. Per column the generator draws the
/// direction first, then u.
pub fn sample_unit_ball<S: Scalar>(
    m: usize,
    n: usize,
    rng: &mut PortableRng,
) -> Result<PointSet<S>> {
    if m == 0 || n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let mut data: Vec<S> = Vec::with_capacity(m * n);
    let mut dir = vec![0f64; m];
    for _ in 0..n {
        // A zero normal vector has probability ~2^-53 per pair; resample.
        let nrm = loop {
            rng.fill_normal(&mut dir);
            let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 0.0 {
                break nrm;
            }
        };
        let radius = rng.uniform().powf(1.0 / m as f64);
        let scale = radius / nrm;
        data.extend(dir.iter().map(|&x| S::c(x * scale)));
    }
    PointSet::from_flat(m, n, data)
}

/// Ball points with the query at the center.
pub fn gen_case_a<S: Scalar>(
    m: usize,
    n: usize,
    rng: &mut PortableRng,
) -> Result<(PointSet<S>, Vec<S>)> {
    let a = sample_unit_ball(m, n, rng)?;
    Ok((a, vec![S::zero(); m]))
}

/// The two columns maximizing e'v (sum of coordinates), by index.
fn top_two_by_coordinate_sum<S: Scalar>(a: &PointSet<S>) -> (usize, usize) {
    let mut best = 0;
    let mut second = usize::MAX;
    let mut best_val = S::neg_infinity();
    let mut second_val = S::neg_infinity();
    for (i, col) in a.columns().enumerate() {
        let s: S = col.iter().copied().sum();
        if s > best_val {
            second = best;
            second_val = best_val;
            best = i;
            best_val = s;
        } else if s > second_val {
            second = i;
            second_val = s;
        }
    }
    (best, second)
}

fn midpoint<S: Scalar>(a: &PointSet<S>, l: usize, q: usize) -> Vec<S> {
    let half = S::c(0.5);
    a.column(l)
        .iter()
        .zip(a.column(q))
        .map(|(&x, &y)| half * (x + y))
        .collect()
}

/// v_s = p - (beta/2) (||v_l - v_q|| / ||p||) p, sitting at distance
/// (beta/2) ||v_l - v_q|| from p on the ray toward the origin.
fn planted_column<S: Scalar>(a: &PointSet<S>, l: usize, q: usize, p: &[S], beta: S) -> Vec<S> {
    let gap = dist(a.column(l), a.column(q));
    let scale = beta / S::c(2.0) * gap / norm(p);
    p.iter().map(|&x| x - scale * x).collect()
}

/// Ball points; p is the midpoint of the two east-most columns, and a close
/// column v_s is appended. p lies in conv(A) by construction.
pub fn gen_case_b<S: Scalar>(
    m: usize,
    n: usize,
    beta: S,
    rng: &mut PortableRng,
) -> Result<(PointSet<S>, Vec<S>)> {
    if n < 2 {
        return Err(Error::InvalidConfig("case b needs n >= 2".into()));
    }
    loop {
        let a = sample_unit_ball(m, n, rng)?;
        let (l, q) = top_two_by_coordinate_sum(&a);
        let p = midpoint(&a, l, q);
        if norm(&p) == S::zero() {
            continue; // measure-zero degenerate midpoint
        }
        let v_s = planted_column(&a, l, q, &p, beta);
        return Ok((a.with_column(&v_s)?, p));
    }
}

/// Ball points; p is the case-b midpoint dilated outward, no planted column.
/// Outside the hull whenever ||p|| > 1.
pub fn gen_case_c<S: Scalar>(
    m: usize,
    n: usize,
    dilation: S,
    rng: &mut PortableRng,
) -> Result<(PointSet<S>, Vec<S>)> {
    if n < 2 {
        return Err(Error::InvalidConfig("case c needs n >= 2".into()));
    }
    let a = sample_unit_ball(m, n, rng)?;
    let (l, q) = top_two_by_coordinate_sum(&a);
    let p: Vec<S> = midpoint(&a, l, q).into_iter().map(|x| x * dilation).collect();
    Ok((a, p))
}

/// Ball points; p is the midpoint dilated barely outward and v_s is planted
/// from the dilated p, so the query sits just outside the hull.
pub fn gen_case_d<S: Scalar>(
    m: usize,
    n: usize,
    beta: S,
    dilation: S,
    rng: &mut PortableRng,
) -> Result<(PointSet<S>, Vec<S>)> {
    if n < 2 {
        return Err(Error::InvalidConfig("case d needs n >= 2".into()));
    }
    loop {
        let a = sample_unit_ball(m, n, rng)?;
        let (l, q) = top_two_by_coordinate_sum(&a);
        let p: Vec<S> = midpoint(&a, l, q).into_iter().map(|x| x * dilation).collect();
        if norm(&p) == S::zero() {
            continue;
        }
        let v_s = planted_column(&a, l, q, &p, beta);
        return Ok((a.with_column(&v_s)?, p));
    }
}

/// The unit square plus the interior point (0.6, 0.5), queried at the right
/// edge's midpoint (Inside: on the boundary, nearest column at distance 0.40,
/// R ~ 1.118) or 0.05 past it (Outside: hull distance exactly 0.05).
pub fn unit_square_instance<S: Scalar>(
    variant: SquareVariant,
) -> Result<(PointSet<S>, Vec<S>)> {
    let a = PointSet::from_columns(&[
        vec![S::zero(), S::zero()],
        vec![S::one(), S::zero()],
        vec![S::one(), S::one()],
        vec![S::zero(), S::one()],
        vec![S::c(0.6), S::c(0.5)],
    ])?;
    let p = match variant {
        SquareVariant::Inside => vec![S::one(), S::c(0.5)],
        SquareVariant::Outside => vec![S::c(1.05), S::c(0.5)],
    };
    Ok((a, p))
}

/// Writes the text interchange format: header `CHMP v1 m n`, one line of m
/// floats per column, then the query prefixed `p `. Floats are rendered in
/// shortest round-trip scientific notation.
pub fn write_instance<S: Scalar, W: Write>(
    out: &mut W,
    a: &PointSet<S>,
    p: &[S],
) -> Result<()> {
    if p.len() != a.m() {
        return Err(Error::DimensionMismatch { expected: a.m(), got: p.len() });
    }
    writeln!(out, "CHMP v1 {} {}", a.m(), a.n())?;
    let mut line = String::new();
    for col in a.columns() {
        render_floats(&mut line, col);
        writeln!(out, "{line}")?;
    }
    render_floats(&mut line, p);
    writeln!(out, "p {line}")?;
    Ok(())
}

fn render_floats<S: Scalar>(line: &mut String, xs: &[S]) {
    use std::fmt::Write as _;
    line.clear();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        write!(line, "{x:e}").expect("string write");
    }
}

/// Reads the format written by [`write_instance`].
pub fn read_instance<S: Scalar, R: BufRead>(input: R) -> Result<(PointSet<S>, Vec<S>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty instance file".into()))??;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("CHMP") || parts.next() != Some("v1") {
        return Err(Error::Format(format!("bad header '{header}'")));
    }
    let m: usize = parse_field(parts.next(), "m")?;
    let n: usize = parse_field(parts.next(), "n")?;
    if m == 0 || n == 0 {
        return Err(Error::Format(format!("degenerate sizes m={m} n={n}")));
    }
    let mut data: Vec<S> = Vec::with_capacity(m * n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing column {i}")))??;
        parse_floats(&line, m, &mut data).map_err(|e| {
            Error::Format(format!("column {i}: {e}"))
        })?;
    }
    let p_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing query line".into()))??;
    let rest = p_line
        .strip_prefix("p ")
        .ok_or_else(|| Error::Format("query line must start with 'p '".into()))?;
    let mut p = Vec::with_capacity(m);
    parse_floats(rest, m, &mut p).map_err(|e| Error::Format(format!("query: {e}")))?;
    let a = PointSet::from_flat(m, n, data)?;
    Ok((a, p))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Format(format!("missing {name} in header")))?
        .parse()
        .map_err(|_| Error::Format(format!("unparseable {name} in header")))
}

fn parse_floats<S: Scalar>(line: &str, want: usize, out: &mut Vec<S>) -> std::result::Result<(), String> {
    let before = out.len();
    for tok in line.split_whitespace() {
        let v: f64 = tok.parse().map_err(|_| format!("bad float '{tok}'"))?;
        out.push(S::c(v));
    }
    let got = out.len() - before;
    if got != want {
        return Err(format!("expected {want} floats, got {got}"));
    }
    Ok(())
}
