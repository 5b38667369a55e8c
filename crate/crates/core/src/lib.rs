//! Gradient flows of λ-convex functionals on CAT(κ) spaces.
//!
//! The crate is layered bottom-up:
//!
//! * [`spaces`]: concrete spaces (euclidean, spider, hyperbolic plane, round
//!   sphere, products) with distances, geodesics and comparison utilities.
//! * [`tangent`]: tangent cones built from geodesic germs.
//! * [`flow`]: functionals, prox steps, minimizing movements, slopes and
//!   verifiers for the flow inequalities.
//! * [`maps`]: the space L²(Ω,Y) over a finite weighted graph Ω.
//! * [`ks`]: discrete Korevaar–Schoen energy, harmonic maps and the Laplacian.
//! * [`harness`]: seeded generators and named property suites.
//! * [`io`] and [`scenario`]: CSV traces and scenario configuration.

pub mod error;
pub mod flow;
pub mod harness;
pub mod io;
pub mod ks;
pub mod maps;
pub mod scenario;
pub mod spaces;
pub mod tangent;

pub use error::{Error, Result};
pub use spaces::{MetricSpace, Space, SpacePoint};
pub use tangent::{ConeValue, Direction, TangentCone};
