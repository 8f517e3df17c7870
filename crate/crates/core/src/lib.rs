//! Quaternionic hyperbolic geometry: Sp(n,1) isometries, invariants of
//! point configurations, congruence of configurations and conjugacy of
//! pairs of semisimple isometries.

pub mod cli;
pub mod decision;
pub mod error;
pub mod gram;
pub mod hlinalg;
pub mod invariants;
pub mod isom;
pub mod pairs;
pub mod quat;
pub mod sampling;
pub mod verify;

pub use decision::{Decision, Reason, Verdict};
pub use error::{Error, Result};
pub use gram::{PointConfig, SemiNormalizedGram};
pub use hlinalg::{HMatrix, HVector, HermitianSpace, VectorType};
pub use invariants::{InvariantProfile, ProjPoint};
pub use isom::{Classification, Isometry};
pub use quat::Quaternion;
