//! Curvature, spectrum and sphere-pinching diagnostics for closed triangle
//! surfaces in 3-space.
//!
//! The pipeline is: [`mesh`] (validated closed surfaces) → [`curvature`]
//! (shape operator, higher mean curvatures, Ricci, umbilicity) →
//! [`spectral`] (first Laplace–Beltrami eigenvalue) → [`functionals`]
//! (integral identities and eigenvalue bounds) → [`pinch`] (comparison with
//! round spheres). [`shapes`] provides analytic surfaces with exact
//! curvature for testing.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curvature;
pub mod error;
pub mod functionals;
pub mod io;
pub mod mesh;
pub mod pinch;
pub mod shapes;
pub mod spectral;

pub use config::AnalysisConfig;
pub use error::{Error, Result};
pub use mesh::{Mesh, Vec3, VertexFrame};
pub use pinch::{analyze, analyze_shape, PinchReport};
pub use shapes::{AnalyticShape, ShapeDescriptor};
