#![no_std]

//! P1 finite elements for `-div(σ ∇u) = f` on polygonal domains with homogeneous
//! Dirichlet data, where the integrals in the Galerkin system are replaced by
//! randomized quadrature.
//!
//! Two estimators are provided for the load vector:
//!
//! - **stratified Monte Carlo**: one uniformly distributed point `Z_T` per
//!   triangle, `Q[v] = Σ_T |T| v(Z_T)`. The same rule also yields a randomized
//!   stiffness matrix for a variable coefficient `σ`.
//! - **importance sampling**: one point `Y_{T,j}` per (triangle, interior
//!   vertex) pair, distributed with density proportional to the hat function
//!   `φ_j` on `T`, giving `F(φ_j) = (1/3) Σ_{T∋z_j} |T| f(Y_{T,j})`.
//!
//! The deterministic one-point (barycentric) rule and a conical-product Gauss
//! oracle are included for comparison and testing.
//!
//! Everything in this crate is pure computation on `core` + `alloc`; file
//! formats, timing, parallel replication loops and the CLI live in the `randfem`
//! crate.

extern crate alloc;

pub mod assembly;
pub mod error;
pub mod forcing;
pub mod mesh;
pub mod quadrature;
pub mod realization;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod sparse;
pub mod stats;

pub use assembly::{CoefficientField, FemCoefficients, Sigma};
pub use error::{Error, Result};
pub use forcing::ForcingTerm;
pub use mesh::{AffineMap, Point2, TriangleMesh};
pub use quadrature::Integrand;
pub use realization::Estimator;
pub use rng::{Purpose, RngStream, StreamId};
pub use sampling::{DrawKind, QuadratureDraw};
pub use solver::SolveReport;
pub use sparse::SparseSpdMatrix;
