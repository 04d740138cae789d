//! Expanding breathers for two geometric flows: rotationally invariant Ricci
//! flow on a cylinder (conformal factor `u(x, t)`) and graphical curve
//! shortening flow in the plane, with tools that measure how well a
//! simulation satisfies the scaling identities of both.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod cli;
pub mod config;
pub mod csf;
pub mod grid;
pub mod io;
pub mod metric;
pub mod ricci;
pub mod timestep;
pub mod tridiag;
pub mod verify;

pub use error::{GeometryError, SolverError, VerifyError};
pub use grid::{Grid1D, ScalarField};
