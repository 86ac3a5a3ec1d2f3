//! Rotational surfaces in ℝ³ whose Gauss curvature is a prescribed function
//! of the angle between the unit normal and the rotation axis.
//!
//! The profile curve of such a surface is an orbit of a planar autonomous
//! system in `(x, θ)`; this crate integrates and classifies those orbits,
//! solves the singular problem at the axis, rebuilds profiles and meshes,
//! and assembles regime-level classification reports.

pub mod classify;
pub mod error;
pub mod export;
pub mod geometry;
pub mod numeric;
pub mod ode;
pub mod phaseplane;
pub mod prescribed;
pub mod quadrature;
pub mod radial;
pub mod verify;

pub use error::{Error, Result};
pub use prescribed::PrescribedFunction;
