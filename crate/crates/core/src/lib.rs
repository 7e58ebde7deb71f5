//! Blade envelopes from inactive subspaces.
//!
//! The crate turns an input-output database of shape parameters and a scalar
//! performance value into a tolerance model for manufactured profiles:
//!
//! 1. [`surrogate`] fits a sparse orthonormal-Legendre polynomial by basis
//!    pursuit denoising and exposes its gradient.
//! 2. [`subspace`] estimates the gradient covariance and splits its
//!    eigenspace into active and inactive parts.
//! 3. [`sampler`] draws designs with a fixed active coordinate by hit-and-run
//!    over the inactive polytope.
//! 4. [`geometry`] turns designs into profiles via free-form deformation.
//! 5. [`envelope`] accumulates the control zone and tolerance covariance and
//!    gates measured profiles with a Mahalanobis distance.
//!
//! [`numerics`] holds the dense kernels (Jacobi eigensolver, simplex LP, ADMM
//! for basis pursuit, PSD pseudo-inverse), [`ingest`] the design/qoi tables and
//! flow formulas, and [`testbed`] synthetic oracles with known subspaces.

pub mod envelope;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod io;
pub mod numerics;
pub mod rng;
pub mod sampler;
pub mod subspace;
pub mod surrogate;
pub mod testbed;

pub use error::{Error, Result};
