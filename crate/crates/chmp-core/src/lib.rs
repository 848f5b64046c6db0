//! Convex hull membership: decide whether a query point lies in the convex
//! hull of finitely many points, with a certificate either way.
//!
//! A solve ends in one of four ways: an epsilon-solution (a convex
//! combination within `eps * R` of the query, `R` the farthest-point
//! distance), a verified separating hyperplane proving the query outside, a
//! relative-error certificate proving it outside without a hyperplane, or
//! exhaustion of the iteration budget.
//!
//! Solvers share one geometry kernel and differ in how they pick the next
//! step: two pivot rules over triangle tests ([`solvers::solve_ta`],
//! [`solvers::solve_gt`]), a linear-minimization rule with a duality-gap
//! stop ([`solvers::solve_fw`]), its away-step variant
//! ([`solvers::solve_asfw`]), and a projected spectral-gradient method
//! ([`solvers::solve_spg`]) that can also run as a plain projection solver.
//!
//! Everything is generic over the floating-point scalar through [`Scalar`];
//! [`f64`] is the default choice and [`f32`] works throughout. On top of the
//! solvers sit random instance generation ([`instance`]), a reduction from
//! bounded linear feasibility ([`lp`]), and a nearest-hull classifier
//! ([`classify`]).

pub mod classify;
pub mod error;
pub mod geometry;
pub mod instance;
mod linalg;
pub mod lp;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{
    build_query, Iterate, PivotPolicy, PointSet, QueryContext, SolveOutcome, Tolerances,
    WitnessCertificate,
};
pub use rng::PortableRng;
pub use scalar::Scalar;
pub use solvers::{solve, SolveReport, SolverConfig, SolverKind};

/// Double-precision aliases for the front-door types.
pub type PointSetF64 = geometry::PointSet<f64>;
pub type IterateF64 = geometry::Iterate<f64>;
pub type SolveOutcomeF64 = geometry::SolveOutcome<f64>;
pub type SolverConfigF64 = solvers::SolverConfig<f64>;
pub type SolveReportF64 = solvers::SolveReport<f64>;

/// Single-precision aliases.
pub type PointSetF32 = geometry::PointSet<f32>;
pub type IterateF32 = geometry::Iterate<f32>;
pub type SolveOutcomeF32 = geometry::SolveOutcome<f32>;
pub type SolverConfigF32 = solvers::SolverConfig<f32>;
pub type SolveReportF32 = solvers::SolveReport<f32>;
