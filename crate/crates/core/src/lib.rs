#![cfg_attr(not(feature = "std"), no_std)]
//! Proximal epoch stochastic (PES) methods for stochastic min-max problems
//! `min_x max_{y ∈ Y} f(x, y)` that are nonconvex in `x`, strongly concave
//! in `y`, and whose primal function satisfies a PL condition.
//!
//! The crate is `no_std` (with `alloc`). Timing, IO and the experiment CLI
//! live in `pes-harness`.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod solvers;

pub use error::{CoreError, MetricError, ProblemError, SolverError};
pub use geometry::{
    as_operator, project, prox_step, prox_step_regularized, FeasibleSet, GradientPair,
    PrimalDualPoint,
};
pub use linalg::{Matrix, Vector};
pub use metrics::{GapReport, Regime};
pub use problems::{
    AucDataset, AucLinearProblem, ProblemConstants, QuadraticGame, RegularizedProblem,
    SaddleProblem, SyntheticImbalancedDataset,
};
pub use solvers::{AdaGradParams, OracleMeter, PesConfig, Schedule, UpdateVariant};
