//! Classical charged-particle motion in a uniform magnetic field on the
//! three constant-curvature space models: hyperbolic H3, spherical S3 and
//! flat E3, in the cylindrical chart where the problem separates.
//!
//! The crate provides:
//! - [`geometry`]: charts, ambient embeddings, Christoffel symbols and the
//!   transversal shift isometries;
//! - [`field`]: the uniform magnetic field, its potential, a Maxwell check
//!   and the shift-generated gauge functions;
//! - [`dynamics`]: equations of motion, the three integrals of motion
//!   (epsilon, I, A), adaptive/fixed-step integration with drift monitoring,
//!   and the relativistic `B -> lambda B` rescaling;
//! - [`analytic`]: closed-form solutions, the radial-quadratic trajectory
//!   classification, trajectory-surface equations and the shift-covariant
//!   `(J, C)` parameters;
//! - [`verify`]: finite-difference oracles and randomized cross-check sweeps
//!   (parallelized via rayon when the default `parallel` feature is on).
//!
//! All quantities are dimensionless: lengths in curvature radii, time as
//! `ct/rho`, and the field amplitude `B` absorbing charge, mass, light speed
//! and the curvature radius.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod verify;

pub use analytic::{
    CanonicalParams, FixedRadiusOrbit, RadialClass, RadialQuadratic, Sign, TrajectoryClass,
};
pub use dynamics::{CylState, MotionConstants, StepControl, Trajectory};
pub use error::{Error, Result};
pub use field::{FieldStrengthB, GaugeEvaluation};
pub use geometry::{AmbientPoint, CylPoint, ShiftPlane, SpaceModel, TransversalShift};
