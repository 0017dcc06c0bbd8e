//! Test-time coordinate projection for KNN-restricted route construction.
//!
//! The crate is `no_std` (with `alloc`) and carries every algorithmic piece:
//! spatial index, projection strategies and their expression language,
//! scoring policies, multi-view fusion, the autoregressive constructor with
//! random re-construction, exact/reference solvers, and the evolutionary
//! search over projection programs. File formats, the CLI, and network
//! clients live in the `routeproj` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod construct;
pub mod dsl;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod instance;
pub mod knn;
pub mod mvdf;
pub mod oracle;
pub mod policy;
pub mod projection;
pub mod solution;

pub use error::{Error, Result};
pub use geometry::{euclid, Point};
pub use instance::{Distribution, Instance, ProblemKind};
pub use solution::Solution;
