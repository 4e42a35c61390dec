//! Recovery of a strongly degenerate, time-dependent heat conduction
//! coefficient `a(t) ~ t^beta` (`beta >= 1`) from a boundary flux measurement.
//!
//! The direct problem `u_t = a(t) u_xx + f` on `(0, h) x (0, T]` with Dirichlet
//! data is evaluated through method-of-images Green functions written in the
//! accumulated diffusivity `theta(t) = int_0^t a`. The coefficient solves the
//! fixed-point equation `a(t) = mu3(t) / u_x(0, t; a)`, which is iterated with
//! damping and checked against the a-priori band `a(t) <= H_max(t)^2 t^beta`.
//!
//! Module map:
//! - [`grid`]: time meshes and sampled functions
//! - [`problem`]: input data, file format, manufactured data, Neumann transform
//! - [`greens`]: `theta`, Green functions and their exact panel integrals
//! - [`quad`]: weakly singular product integration, `I1(beta)`, Gauss rules
//! - [`direct`]: temperature field and left boundary flux
//! - [`fdoracle`]: independent finite-difference forward solver
//! - [`inverse`]: coefficient, band estimates, Picard solver, uniqueness probe
//! - [`validate`]: hypothesis checks and exponent fits
//! - [`cli`]: command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod cli;
pub mod direct;
pub mod error;
pub mod fdoracle;
pub mod greens;
pub mod grid;
pub mod inverse;
pub mod problem;
pub mod quad;
pub mod validate;

pub use error::{Error, Result};
pub use grid::{Sampled, TimeGrid};
pub use inverse::Coefficient;
pub use problem::ProblemData;
