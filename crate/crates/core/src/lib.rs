//! Markovian rough-lift toolkit.
//!
//! Simulates uniformly elliptic diffusions together with their Jacobian
//! flows, enhances them to geometric rough paths via midpoint lifts, solves
//! controlled rough differential equations, computes explicit Malliavin
//! derivatives and reduced Malliavin matrices, and estimates the tail /
//! roughness / density quantities that make the underlying non-degeneracy
//! theory checkable at desk scale.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod malliavin;
pub mod mesh;
pub mod model;
pub mod path_sim;
pub mod rng;
pub mod rough;

pub use error::{Error, Result};
