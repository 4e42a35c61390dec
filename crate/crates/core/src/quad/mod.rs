//! Quadrature: weakly singular product integration in time, the special
//! integral `I1(beta)`, and smooth rules used by the potential evaluations.

mod gauss;
mod singular;
pub(crate) mod special;

pub use gauss::{adaptive_gk15, GaussLegendre};
pub use singular::{i1, singular_integral, SingularRule};
