//! Geodesics and distances between spherically parametrized surfaces.
//!
//! Surfaces are immersions `f: S² → ℝ³` sampled on a regular `(θ, φ)` grid.
//! Their differentials are fields of 3×2 matrices ("one-forms") in the
//! orthonormal spherical frame, and the distance between two surfaces is the
//! length of a discrete path that minimizes the energy of the four-parameter
//! split metric
//!
//! ```text
//! G(ξ, ξ) = a·G(ξ_m, ξ_m) + b·G(ξ_scale, ξ_scale) + c·G(ξ⊥, ξ⊥) + d·G(ξ_0, ξ_0)
//! ```
//!
//! where the four parts measure shear, change of area, bending and local
//! reparametrization. The weights `(0, ½, 1, 0)` give the square root normal
//! function (SRNF) metric.
//!
//! Module map:
//!
//! - [`sphere`]: grids, quadrature, real spherical harmonics, the surface and
//!   vector-field bases, and the discrete differential.
//! - [`metric`]: the base metric, the orthogonal split, the split metric,
//!   pullback norms and the SRNF map.
//! - [`diffeo`]: sphere diffeomorphisms `Proj(Id + tU)`, their certified step
//!   bound, Jacobians and surface resampling.
//! - [`energy`]: discrete paths and the four path-energy functionals, each
//!   with an exact gradient.
//! - [`optim`]: BFGS / L-BFGS with a strong-Wolfe line search, plus a
//!   finite-difference gradient checker.
//! - [`pipeline`]: matching algorithms, icosahedral initialization, Karcher
//!   means and the SRNF comparison harness.
//! - [`io`]: grid files, OBJ export, run configuration, archives and synthetic
//!   shapes.

pub mod diffeo;
pub mod energy;
pub mod error;
pub mod io;
pub mod metric;
pub mod optim;
pub mod pipeline;
pub mod sphere;

mod linalg;

pub use error::{Error, Result};
pub use metric::{MetricWeights, OneFormField};
pub use sphere::{SphericalGrid, SurfaceGrid};
