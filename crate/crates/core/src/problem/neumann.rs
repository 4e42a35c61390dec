//! Change of unknown `v = u_x` that turns a problem with wall fluxes
//! `u_x(0, t) = mu1`, `u_x(h, t) = mu2` and temperature datum `u(0, t) = mu3`
//! into the Dirichlet form handled by the solver.

use crate::error::{Error, Result};
use crate::grid::differentiate;
use crate::problem::ProblemData;

/// Dirichlet-form problem for `v = u_x`: initial data `phi'`, source `f_x`,
/// the same `mu1`, `mu2`, and flux datum `mu3' - f(0, t)`.
pub fn neumann_transform(problem: &ProblemData) -> Result<ProblemData> {
    if problem.t_grid().len() < 3 {
        return Err(Error::InsufficientData(format!(
            "mu3 needs at least 3 samples to differentiate, got {}",
            problem.t_grid().len()
        )));
    }
    let derived = problem.derived();
    let nt = problem.t_grid().len();
    let mu3_prime = differentiate(problem.t_grid(), problem.mu3());
    let mu3 = (0..nt).map(|k| mu3_prime[k] - problem.f()[k]).collect();
    problem.with_replaced(derived.phi_prime, derived.f_x, mu3)
}
