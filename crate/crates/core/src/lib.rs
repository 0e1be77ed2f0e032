//! Fractional calculus on flat-at-origin functions and the sideways heat
//! problem on a semi-infinite bar.
//!
//! A function `φ` on `[0, T]` whose derivatives of every order vanish at
//! `t = 0` has well defined fractional derivatives of any order, and the
//! Riemann–Liouville and Caputo forms agree for it. For the heat equation
//! `u_t = κ u_xx` on `x > 0` this gives the boundary flux at a sensor `x₀`
//! from the sensor temperature `g(t)` as `−κ^{-1/2} ∂^{1/2} g`, and the whole
//! temperature field between the boundary and the sensor as a power series in
//! `x₀ − x` whose coefficients are half-integer derivatives of `g`.
//!
//! Modules:
//! - [`sampled`]: grids, sampled data, derivative oracles.
//! - [`fractional`]: fractional integrals and derivatives.
//! - [`heat_kernels`]: heat kernels and forward solvers.
//! - [`inverse`]: flux recovery and series reconstruction.
//! - [`holmgren`]: growth classes and convergence radii for the series.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! name the double precision instances.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fractional;
pub mod heat_kernels;
pub mod holmgren;
pub mod inverse;
pub mod quadrature;
pub mod sampled;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use quadrature::QuadratureScheme;
pub use sampled::{
    make_grid, sample, DerivativeOracle, FractionalOrder, GridFunction, Provenance, TimeGrid,
};
pub use scalar::Scalar;

pub type TimeGrid64 = sampled::TimeGrid<f64>;
pub type GridFunction64 = sampled::GridFunction<f64>;
pub type FractionalOrder64 = sampled::FractionalOrder<f64>;
