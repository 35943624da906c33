//! Torsion function, first Dirichlet eigenvalue and their Hadamard shape
//! derivatives on eccentric annuli `B(p, r1) \ B̄(q(t), r0)` in the unit
//! sphere, the Euclidean plane and the hyperbolic plane.
//!
//! Everything is computed in a conformal chart where geodesic balls are
//! Euclidean disks: P1 finite elements on a Möbius-pulled-back structured
//! mesh, consistent boundary-flux recovery, and boundary-integral shape
//! derivatives cross-checked against finite differences and radial oracles.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod problems;
pub mod shape;
pub mod tol;

pub use error::{Error, Result};
pub use geometry::{AnnulusSpec, Circle2D, MobiusMap, Point, SpaceForm};
pub use mesh::TriMesh;
pub use problems::{Discretization, EigenSolution, TorsionSolution};
pub use shape::{ReflectionReport, SweepRow};
