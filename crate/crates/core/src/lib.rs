//! Numerical laboratory for the barotropic compressible Navier-Stokes system
//! on the half plane `x2 > 0` with Navier-slip walls.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the double-precision instantiation used by the
//! persistence layer and the experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csolve;
pub mod diag;
pub mod error;
pub mod isolve;
pub mod linalg;
pub mod model;
pub mod reflect;
pub mod scalar;
pub mod store;
pub mod sum;
pub mod xharness;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = model::Grid<f64>;
pub type Field = model::Field<f64>;
pub type State = model::State<f64>;
pub type Velocity = model::Velocity<f64>;
pub type FluidParams = model::FluidParams<f64>;

pub type Grid32 = model::Grid<f32>;
pub type Field32 = model::Field<f32>;
pub type State32 = model::State<f32>;
pub type FluidParams32 = model::FluidParams<f32>;
