//! Synthetic problems with a known coefficient. The flux datum is always
//! taken from the finite-difference oracle, `mu3(t) = a(t) u_x(0, t)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fdoracle::{fd_solve_with, BoundaryMode, FdMesh};
use crate::inverse::Coefficient;
use crate::problem::ProblemData;

/// Shapes of `phi`, `f`, `mu1`, `mu2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// `phi = x`, `f = 0`, `mu1 = 0`, `mu2 = h`: the steady solution `u = x`.
    SteadyLinear,
    /// Everything equal to the constant.
    Constant(f64),
    /// `phi = 0`, `f = 1 + x`, `mu1 = 0`, `mu2 = (1 + h) t`.
    Heating,
    /// `phi = x`, `f = 1 + x`, `mu1 = 0`, `mu2 = h + (1 + h) t`.
    Ramp,
}

impl Scenario {
    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            Scenario::SteadyLinear | Scenario::Ramp => x,
            Scenario::Constant(c) => c,
            Scenario::Heating => 0.0,
        }
    }

    pub fn source(&self, x: f64, _t: f64) -> f64 {
        match self {
            Scenario::SteadyLinear | Scenario::Constant(_) => 0.0,
            Scenario::Heating | Scenario::Ramp => 1.0 + x,
        }
    }

    pub fn mu1(&self, _t: f64) -> f64 {
        match *self {
            Scenario::Constant(c) => c,
            _ => 0.0,
        }
    }

    pub fn mu2(&self, h: f64, t: f64) -> f64 {
        match *self {
            Scenario::SteadyLinear => h,
            Scenario::Constant(c) => c,
            Scenario::Heating => (1.0 + h) * t,
            Scenario::Ramp => h + (1.0 + h) * t,
        }
    }

    /// `int_0^x phi`, the initial datum of the Neumann analogue.
    pub fn phi_antiderivative(&self, x: f64) -> f64 {
        match *self {
            Scenario::SteadyLinear | Scenario::Ramp => 0.5 * x * x,
            Scenario::Constant(c) => c * x,
            Scenario::Heating => 0.0,
        }
    }

    /// `int_0^x f`, the source of the Neumann analogue.
    pub fn source_antiderivative(&self, x: f64, _t: f64) -> f64 {
        match self {
            Scenario::SteadyLinear | Scenario::Constant(_) => 0.0,
            Scenario::Heating | Scenario::Ramp => x + 0.5 * x * x,
        }
    }

    fn expects_positive_flux(&self) -> bool {
        !matches!(self, Scenario::Constant(_))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::SteadyLinear => f.write_str("steady-linear"),
            Scenario::Constant(_) => f.write_str("constant"),
            Scenario::Heating => f.write_str("heating"),
            Scenario::Ramp => f.write_str("ramp"),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// `constant` parses with value 1; use [`Scenario::Constant`] for others.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady-linear" => Ok(Scenario::SteadyLinear),
            "constant" => Ok(Scenario::Constant(1.0)),
            "heating" => Ok(Scenario::Heating),
            "ramp" => Ok(Scenario::Ramp),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario {other:?} (expected steady-linear, constant, heating or ramp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufactureOptions {
    pub h: f64,
    /// Number of panels of the uniform x-grid stored in the problem.
    pub x_panels: usize,
    /// Time refinement of the oracle relative to the coefficient grid; the
    /// problem data is tabulated on the refined grid.
    pub refine: usize,
    /// Oracle space panels and their grading toward `x = 0`.
    pub fd_panels: usize,
    pub fd_grading: f64,
    pub implicitness: f64,
    pub startup_steps: usize,
    /// Use extrapolated backward Euler instead of the theta-scheme.
    pub extrapolate: bool,
}

impl Default for ManufactureOptions {
    fn default() -> Self {
        Self {
            h: 1.0,
            x_panels: 20,
            refine: 4,
            fd_panels: 800,
            fd_grading: 3.0,
            implicitness: 0.5,
            startup_steps: 8,
            extrapolate: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Manufactured {
    pub problem: ProblemData,
    pub a_true: Coefficient,
}

fn oracle_mesh(a_true: &Coefficient, opts: &ManufactureOptions) -> Result<(Coefficient, FdMesh)> {
    let fine = a_true.grid().refine(opts.refine.max(1))?;
    let values = fine.nodes().iter().map(|&t| a_true.eval(t)).collect();
    let a_fine = Coefficient::new(fine.clone(), values, a_true.beta())?;
    let mut mesh = FdMesh::graded(opts.h, opts.fd_panels, opts.fd_grading, fine, opts.implicitness)?
        .with_startup_steps(opts.startup_steps);
    if opts.extrapolate {
        mesh = mesh.with_extrapolated_euler();
    }
    Ok((a_fine, mesh))
}

fn x_grid(opts: &ManufactureOptions) -> Vec<f64> {
    let n = opts.x_panels.max(2);
    let mut xs: Vec<f64> = (0..=n).map(|j| opts.h * j as f64 / n as f64).collect();
    xs[n] = opts.h;
    xs
}

/// Scenario data tabulated on `xs` and `ts`, in Dirichlet form or in the
/// Neumann form whose x-derivative is the Dirichlet problem.
fn tabulate(scenario: Scenario, h: f64, beta: f64, xs: Vec<f64>, ts: Vec<f64>, neumann: bool, mu3: Vec<f64>) -> Result<ProblemData> {
    let p = if neumann {
        ProblemData::from_functions(
            h,
            beta,
            xs,
            ts,
            |x| scenario.phi_antiderivative(x),
            |x, t| scenario.source_antiderivative(x, t),
            [&|t| scenario.mu1(t), &|t| scenario.mu2(h, t), &|_| 0.0],
        )?
    } else {
        ProblemData::from_functions(
            h,
            beta,
            xs,
            ts,
            |x| scenario.phi(x),
            |x, t| scenario.source(x, t),
            [&|t| scenario.mu1(t), &|t| scenario.mu2(h, t), &|_| 0.0],
        )?
    };
    p.with_mu3(mu3)
}

/// Dirichlet problem for the scenario whose flux datum is
/// `a_true(t) u_x(0, t)` with `u_x` from the finite-difference oracle.
/// The oracle reads the scenario on its own mesh; the stored problem is
/// tabulated on the `x_panels` grid.
pub fn manufacture(a_true: &Coefficient, scenario: Scenario, opts: &ManufactureOptions) -> Result<Manufactured> {
    a_true.check_admissible()?;
    let (h, beta) = (opts.h, a_true.beta());
    let (a_fine, mesh) = oracle_mesh(a_true, opts)?;
    let ts = mesh.time().nodes().to_vec();
    let zeros = vec![0.0; ts.len()];
    let oracle = tabulate(scenario, h, beta, mesh.x_nodes().to_vec(), ts.clone(), false, zeros)?;
    let solution = fd_solve_with(&oracle, &a_fine, &mesh, BoundaryMode::Dirichlet)?;
    let mut mu3 = Vec::with_capacity(ts.len());
    for (i, (&a, &flux)) in a_fine.values().iter().zip(&solution.flux).enumerate() {
        if i > 0 && scenario.expects_positive_flux() && !(flux > 0.0) {
            return Err(Error::NonPositiveFlux { index: i, t: ts[i], value: flux });
        }
        mu3.push(a * flux);
    }
    let problem = tabulate(scenario, h, beta, x_grid(opts), ts, false, mu3)?;
    Ok(Manufactured { problem, a_true: a_true.clone() })
}

/// Neumann-form problem whose x-derivative is the scenario's Dirichlet
/// problem: `phi_N = int phi`, `f_N = int f dx`, wall fluxes `mu1`, `mu2`, and
/// the datum `mu3 = u(0, t)` from a Neumann finite-difference solve.
pub fn manufacture_neumann(a_true: &Coefficient, scenario: Scenario, opts: &ManufactureOptions) -> Result<Manufactured> {
    a_true.check_admissible()?;
    let (h, beta) = (opts.h, a_true.beta());
    let (a_fine, mesh) = oracle_mesh(a_true, opts)?;
    let ts = mesh.time().nodes().to_vec();
    let zeros = vec![0.0; ts.len()];
    let oracle = tabulate(scenario, h, beta, mesh.x_nodes().to_vec(), ts.clone(), true, zeros)?;
    let solution = fd_solve_with(&oracle, &a_fine, &mesh, BoundaryMode::Neumann)?;
    let mu3 = (0..ts.len()).map(|i| solution.field.at(i, 0)).collect();
    let problem = tabulate(scenario, h, beta, x_grid(opts), ts, true, mu3)?;
    Ok(Manufactured { problem, a_true: a_true.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn small() -> ManufactureOptions {
        ManufactureOptions { fd_panels: 200, ..Default::default() }
    }

    #[test]
    fn steady_linear_reproduces_coefficient() {
        let grid = TimeGrid::graded(1.0, 10, 2.0).unwrap();
        let a = Coefficient::power_law(grid, 1.0, 1.0).unwrap();
        let m = manufacture(&a, Scenario::SteadyLinear, &small()).unwrap();
        let p = &m.problem;
        assert!(p.mu1().iter().all(|&v| v == 0.0));
        assert!(p.mu2().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        for (&t, &mu3) in p.t_grid().iter().zip(p.mu3()) {
            assert!((mu3 - t).abs() < 1e-10 * t.max(1e-3), "t={t}: {mu3}");
        }
    }

    #[test]
    fn compatibility_holds_by_construction() {
        let grid = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        let a = Coefficient::power_law(grid, 2.0, 2.0).unwrap();
        let p = manufacture(&a, Scenario::Heating, &small()).unwrap().problem;
        assert!((p.phi()[0] - p.mu1()[0]).abs() < 1e-10);
        assert!((p.phi()[p.phi().len() - 1] - p.mu2()[0]).abs() < 1e-10);
        assert!(p.mu3()[1..].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn neumann_analogue_carries_the_same_flux() {
        let grid = TimeGrid::graded(1.0, 10, 2.0).unwrap();
        let a = Coefficient::power_law(grid, 1.0, 2.0).unwrap();
        let d = manufacture(&a, Scenario::Heating, &small()).unwrap().problem;
        let n = manufacture_neumann(&a, Scenario::Heating, &small()).unwrap().problem;
        assert!(n.phi().iter().all(|&v| v == 0.0));
        // The transformed datum is the Dirichlet flux datum.
        let v = crate::problem::neumann_transform(&n).unwrap();
        for (k, &t) in d.t_grid().iter().enumerate().filter(|(_, &t)| t >= 0.3) {
            let (want, got) = (d.mu3()[k], v.mu3()[k]);
            assert!((got - want).abs() <= 5e-3 * want, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn weak_degeneration_is_rejected() {
        let grid = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        let a = Coefficient::power_law(grid, 1.0, 0.5).unwrap();
        assert!(matches!(manufacture(&a, Scenario::Heating, &small()), Err(Error::WeakDegeneration(_))));
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [Scenario::SteadyLinear, Scenario::Heating, Scenario::Ramp] {
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        }
        assert!("bogus".parse::<Scenario>().is_err());
    }
}
