//! Matrix means of symmetric positive definite matrices defined as fixed points of
//! resolvent-type equations, together with the metrics, divergences and baseline
//! means needed to compare them.

pub mod barycenter;
pub mod error;
pub mod explore;
pub mod fixed_point;
pub mod io;
pub mod metrics;
pub mod spd;
pub mod sweep;
pub mod testkit;
pub mod two_means;
pub mod verify;

pub use error::{Error, Result};
pub use fixed_point::{g_mean, Init, SolveMethod, SolveReport, SolverOptions};
pub use spd::SpdMatrix;
pub use two_means::{MatrixTuple, WeightVector};
