//! Spatially periodic cnoidal-wave headway solutions of the optimal-velocity
//! car-following model near its neutral stability line.
//!
//! The crate is layered bottom-up:
//!
//! - [`elliptic`]: complete elliptic integrals and Jacobi functions,
//!   parameterised by the *modulus* and conditioned for moduli within
//!   `1e-14` of one.
//! - [`cnoidal`]: the KdV cnoidal wave, its integration constants and the
//!   steady (constant-modulus) reduction of the perturbed Whitham system.
//! - [`ov`]: the optimal-velocity model on a ring and its KdV scaling.
//! - [`family`]: the family of ring-periodic travelling waves, solved for
//!   the modulus given a driver sensitivity and oscillation count.
//! - [`ode`] and [`ring`]: adaptive Dormand-Prince integration of the
//!   `2N` headway equations and comparison against the asymptotic field.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cnoidal;
pub mod elliptic;
pub mod error;
pub mod family;
pub mod ode;
pub mod ov;
pub mod ring;
mod roots;

pub use cnoidal::{CnoidalParams, KdVCoeffs, RiemannTriple};
pub use elliptic::EllipticModulus;
pub use error::{Error, Result};
pub use family::{FamilySolution, SolveReport};
pub use ode::{IntegratorConfig, IntegratorStats};
pub use ov::{OvParams, RingState};
pub use ring::{CompareMetrics, Trajectory};
