//! Relative C-numerical ranges `W_K(C, A) = { tr(C^† U A U^†) : U in K }` for
//! compact connected subgroups `K` of `U(N)`.
//!
//! The crate samples and optimizes over `K`, decides rotational symmetry of
//! `K`-orbits through linear feasibility over the Lie algebra of `K`, and
//! provides exact rational tooling for the local group `SU(2)^{(x) n}`.

pub mod catalog;
pub mod config;
pub mod error;
pub mod geometry;
pub mod groups;
pub mod linalg;
pub mod local;
pub mod range;
pub mod rng;
pub mod symmetry;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use groups::GroupSpec;
pub use linalg::{BlockPartition, ComplexMatrix, C64};
