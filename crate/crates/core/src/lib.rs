//! Graph Laplacians of random geometric and kNN graphs on compact
//! manifolds, with closed-form limiting operators and desk-scale
//! convergence experiments.
//!
//! The crate is organized around the pipeline
//! `sample -> index -> estimate -> compare`:
//!
//! - [`kernels`]: bounded-variation kernel profiles, their variation
//!   measures, moment integrals and the diffusion constant;
//! - [`manifolds`]: the analytic catalog (circle, spheres, flat torus) with
//!   exponential maps, frames, densities and test functions;
//! - [`sampling`]: seeded reproducible clouds and deterministic evaluation
//!   grids;
//! - [`neighbors`]: a k-d tree answering closed-ball and k-th-distance
//!   queries;
//! - [`operators`]: the random-walk and kNN graph Laplacians next to their
//!   deterministic kernel averages;
//! - [`experiments`]: scripted convergence-rate, concentration, deviation
//!   and geometry measurements with CSV/JSON reports.
//!
//! # Example
//!
//! Measure how far the graph Laplacian of a 20k-point uniform cloud on the
//! unit sphere sits from its limiting diffusion operator:
//!
//! ```
//! use beltrami::kernels::Kernel;
//! use beltrami::manifolds::{limit_operator, Density, Manifold, TestFunction};
//! use beltrami::neighbors::NeighborIndex;
//! use beltrami::operators::graph_laplacian;
//! use beltrami::sampling::{eval_grid, sample};
//!
//! let m = Manifold::unit_sphere2();
//! let p = Density::Uniform;
//! let f = TestFunction::coordinate(0);
//! let kernel = Kernel::indicator();
//!
//! let cloud = sample(&m, &p, 20_000, 42).unwrap();
//! let index = NeighborIndex::build(&cloud);
//! let grid = eval_grid(&m, 256).unwrap();
//! let h = (cloud.n() as f64).powf(-1.0 / 6.0);
//! let field = graph_laplacian(&cloud, &index, &kernel, h, &f, &grid).unwrap();
//!
//! let sup_error = grid
//!     .iter()
//!     .zip(&field.values)
//!     .map(|(x, v)| (v - limit_operator(&m, &p, &f, &kernel, x).unwrap()).abs())
//!     .fold(0.0_f64, f64::max);
//! assert!(sup_error < 0.5);
//! ```

// `!(x > 0.0)` guards intentionally reject NaN as well as nonpositives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geom;
pub mod kernels;
pub mod manifolds;
pub mod neighbors;
pub mod operators;
pub mod quad;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};

/// Artifact version embedded in every experiment report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
