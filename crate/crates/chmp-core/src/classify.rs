//! Nearest-hull classification.
//!
//! Each class is the convex hull of its training points; a test point is
//! assigned the label whose hull is nearest. Distances come from membership
//! solves, so a classifier run needs no training beyond grouping columns by
//! label. Pixel data is used raw (0..255), without normalization.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{build_query, PointSet, SolveOutcome};
use crate::scalar::Scalar;
use crate::solvers::{solve, SolverConfig, SolverKind};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

fn read_be_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("reading {what}: {e}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Reads an IDX image file (magic 0x00000803): at most `limit` images, each
/// flattened row-major into a column of length rows*cols with raw byte
/// values.
pub fn load_idx_images<S: Scalar, R: Read>(mut input: R, limit: usize) -> Result<PointSet<S>> {
    if limit == 0 {
        return Err(Error::InvalidConfig("image limit must be at least 1".into()));
    }
    let magic = read_be_u32(&mut input, "image magic")?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"
        )));
    }
    let count = read_be_u32(&mut input, "image count")? as usize;
    let rows = read_be_u32(&mut input, "image rows")? as usize;
    let cols = read_be_u32(&mut input, "image cols")? as usize;
    let m = rows
        .checked_mul(cols)
        .filter(|&m| m > 0)
        .ok_or_else(|| Error::Format(format!("bad image shape {rows}x{cols}")))?;
    let take = count.min(limit);
    if take == 0 {
        return Err(Error::Format("image file holds no images".into()));
    }
    let mut bytes = vec![0u8; m * take];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("reading {take} images: {e}")))?;
    let data: Vec<S> = bytes.iter().map(|&b| S::c(b as f64)).collect();
    PointSet::from_flat(m, take, data)
}

/// Reads an IDX label file (magic 0x00000801): at most `limit` labels, each
/// a digit 0..=9.
pub fn load_idx_labels<R: Read>(mut input: R, limit: usize) -> Result<Vec<u8>> {
    if limit == 0 {
        return Err(Error::InvalidConfig("label limit must be at least 1".into()));
    }
    let magic = read_be_u32(&mut input, "label magic")?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"
        )));
    }
    let count = read_be_u32(&mut input, "label count")? as usize;
    let take = count.min(limit);
    if take == 0 {
        return Err(Error::Format("label file holds no labels".into()));
    }
    let mut bytes = vec![0u8; take];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("reading {take} labels: {e}")))?;
    if let Some(&bad) = bytes.iter().find(|&&b| b > 9) {
        return Err(Error::Format(format!("label {bad} out of range 0..=9")));
    }
    Ok(bytes)
}

/// Training points grouped by label, all sharing one ambient dimension.
#[derive(Clone, Debug)]
pub struct LabeledPointSet<S> {
    classes: BTreeMap<u8, PointSet<S>>,
    m: usize,
}

impl<S: Scalar> LabeledPointSet<S> {
    /// Groups the columns of `points` by the parallel `labels` slice.
    pub fn new(points: &PointSet<S>, labels: &[u8]) -> Result<Self> {
        if labels.len() != points.n() {
            return Err(Error::DimensionMismatch { expected: points.n(), got: labels.len() });
        }
        let mut grouped: BTreeMap<u8, Vec<S>> = BTreeMap::new();
        for (col, &label) in points.columns().zip(labels) {
            grouped.entry(label).or_default().extend_from_slice(col);
        }
        let mut classes = BTreeMap::new();
        for (label, data) in grouped {
            let n = data.len() / points.m();
            classes.insert(label, PointSet::from_flat(points.m(), n, data)?);
        }
        Ok(Self { classes, m: points.m() })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Labels in ascending order.
    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.classes.keys().copied()
    }

    pub fn class(&self, label: u8) -> Option<&PointSet<S>> {
        self.classes.get(&label)
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// What a distance estimate means.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    /// Distance to a verified witness point: between the hull distance and
    /// twice it, so half of it is a certified lower bound.
    WitnessDist,
    /// Upper bound d(p_k, p); the point is inside the hull or within eps R
    /// of it (also used when the budget ran out).
    InsideBound,
    /// Distance of the terminal iterate under a relative-error stop: correct
    /// to within the solve tolerance.
    Exact,
}

impl DistanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::WitnessDist => "witness",
            DistanceKind::InsideBound => "inside",
            DistanceKind::Exact => "exact",
        }
    }
}

/// Distance estimate from `p` to conv(class) by a membership solve.
pub fn witness_distance<S: Scalar>(
    class: &PointSet<S>,
    p: &[S],
    kind: SolverKind,
    cfg: &SolverConfig<S>,
) -> Result<(S, DistanceKind)> {
    let q = build_query(class, p)?;
    let report = solve(class, &q, kind, cfg)?;
    let est = report.outcome.delta(&q);
    let tag = match &report.outcome {
        SolveOutcome::Witness { .. } => DistanceKind::WitnessDist,
        SolveOutcome::GapCertificate { .. } => DistanceKind::Exact,
        SolveOutcome::EpsilonSolution { .. } | SolveOutcome::Exhausted { .. } => {
            DistanceKind::InsideBound
        }
    };
    Ok((est, tag))
}

/// Distances to every class, ascending by label.
pub fn class_distances<S: Scalar>(
    training: &LabeledPointSet<S>,
    p: &[S],
    kind: SolverKind,
    cfg: &SolverConfig<S>,
) -> Result<Vec<(u8, S)>> {
    training
        .classes
        .iter()
        .map(|(&label, class)| witness_distance(class, p, kind, cfg).map(|(d, _)| (label, d)))
        .collect()
}

/// Label of the nearest class hull; ties go to the lowest label.
pub fn classify<S: Scalar>(
    training: &LabeledPointSet<S>,
    p: &[S],
    kind: SolverKind,
    cfg: &SolverConfig<S>,
) -> Result<u8> {
    let dists = class_distances(training, p, kind, cfg)?;
    Ok(predict(&dists)?.0)
}

fn predict<S: Scalar>(dists: &[(u8, S)]) -> Result<(u8, S)> {
    dists
        .iter()
        .copied()
        // (label, dist) ascending by label; strict < keeps the lowest label
        // on ties.
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
        .ok_or(Error::EmptyPointSet)
}

/// One classified test point.
#[derive(Clone, Debug)]
pub struct TestRecord<S> {
    pub test_id: usize,
    pub true_label: u8,
    pub predicted: u8,
    /// Per-class distances, ascending by label.
    pub distances: Vec<(u8, S)>,
    pub wall_time_ms: f64,
}

/// Classification results over a labeled test set.
#[derive(Clone, Debug)]
pub struct AccuracyReport<S> {
    pub records: Vec<TestRecord<S>>,
    pub labels: Vec<u8>,
    pub correct: usize,
}

impl<S: Scalar> AccuracyReport<S> {
    pub fn accuracy(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.correct as f64 / self.records.len() as f64
    }

    /// CSV: test_id, true_label, predicted_label, one distance column per
    /// class label, wall_time_ms.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = String::from("test_id,true_label,predicted_label");
        for label in &self.labels {
            header.push_str(&format!(",dist_{label}"));
        }
        header.push_str(",wall_time_ms");
        writeln!(out, "{header}")?;
        for rec in &self.records {
            let mut line = format!("{},{},{}", rec.test_id, rec.true_label, rec.predicted);
            for &(_, d) in &rec.distances {
                line.push_str(&format!(",{d:e}"));
            }
            line.push_str(&format!(",{:.3}", rec.wall_time_ms));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Classifies every test column, fanning work across `jobs` threads, and
/// tallies accuracy against the true labels.
pub fn accuracy_report<S: Scalar>(
    training: &LabeledPointSet<S>,
    test: &PointSet<S>,
    test_labels: &[u8],
    kind: SolverKind,
    cfg: &SolverConfig<S>,
    jobs: usize,
) -> Result<AccuracyReport<S>> {
    if test_labels.len() != test.n() {
        return Err(Error::DimensionMismatch { expected: test.n(), got: test_labels.len() });
    }
    if test.m() != training.m() {
        return Err(Error::DimensionMismatch { expected: training.m(), got: test.m() });
    }
    let jobs = jobs.max(1).min(test.n());
    let next = AtomicUsize::new(0);
    let run_one = |i: usize| -> Result<TestRecord<S>> {
        let started = Instant::now();
        let distances = class_distances(training, test.column(i), kind, cfg)?;
        let (predicted, _) = predict(&distances)?;
        Ok(TestRecord {
            test_id: i,
            true_label: test_labels[i],
            predicted,
            distances,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    };
    let mut records: Vec<TestRecord<S>> = if jobs == 1 {
        (0..test.n()).map(run_one).collect::<Result<_>>()?
    } else {
        let chunks = std::thread::scope(|scope| {
            let workers: Vec<_> = (0..jobs)
                .map(|_| {
                    scope.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= test.n() {
                                return Ok(out);
                            }
                            out.push(run_one(i)?);
                        }
                    })
                })
                .collect();
            workers
                .into_iter()
                .map(|w| w.join().expect("classifier worker panicked"))
                .collect::<Vec<Result<Vec<TestRecord<S>>>>>()
        });
        let mut all = Vec::with_capacity(test.n());
        for chunk in chunks {
            all.extend(chunk?);
        }
        all.sort_by_key(|r| r.test_id);
        all
    };
    records.shrink_to_fit();
    let correct = records.iter().filter(|r| r.predicted == r.true_label).count();
    Ok(AccuracyReport { records, labels: training.labels().collect(), correct })
}
