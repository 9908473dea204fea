//! Per-mode scattering theory for a sphere at infinity split into two
//! asymptotically hyperbolic caps and an asymptotically de Sitter belt.
//!
//! Each spherical-harmonic mode reduces the Mellin-transformed wave operator
//! to a second-order ODE on θ ∈ (0, π) with regular singular points at the
//! poles and at the two light cones θ = π/4, 3π/4.

pub mod checks;
pub mod error;
pub mod inverse;
pub mod linalg;
pub mod model;
pub mod odeconnect;
pub mod quad;
pub mod scattering;
pub mod series;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{ModeProblem, RadialProfile, Region, SpectralPoint};
pub use num_complex::Complex64;
