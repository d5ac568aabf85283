//! Two-dimensional radiative transfer on rectangular spectral-element meshes.
//!
//! Three solvers share one discretization (LGL collocation in space,
//! piecewise-constant angular elements):
//!
//! - [`dg`]: monolithic upwind DG, solved by sweep-preconditioned GMRES;
//! - [`global`] + [`local`]: hybridizable DG with exact element-local solves;
//! - the same hybrid solve with element operators predicted by a trained
//!   network ([`surrogate`]), a.k.a. element learning.
//!
//! [`datagen`] produces training data, [`cases`] defines benchmark problems
//! and [`bench`] ties everything into timed runs and sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod basis;
pub mod bench;
pub mod cases;
pub mod datagen;
pub mod dg;
pub mod error;
pub mod global;
pub mod krylov;
pub mod local;
pub mod mesh;
pub mod surrogate;

pub use error::{Error, Result};
