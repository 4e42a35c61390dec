//! Independent finite-difference solver for `u_t = a(t) u_xx + f(x, t)`.
//!
//! A theta-scheme or extrapolated backward Euler in time on the graded
//! [`TimeGrid`] with `a` taken at each step midpoint, three-point differences
//! on a possibly graded space mesh, and Thomas solves. Used to manufacture data and to cross-check the Green-function
//! evaluation in [`crate::direct`].

use crate::direct::{FluxTrace, TemperatureField};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::inverse::Coefficient;
use crate::problem::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// `u(0, t) = mu1`, `u(h, t) = mu2`.
    Dirichlet,
    /// `u_x(0, t) = mu1`, `u_x(h, t) = mu2`, half-cell closure at the walls.
    Neumann,
}

#[derive(Debug, Clone)]
pub struct FdMesh {
    x_nodes: Vec<f64>,
    time: TimeGrid,
    implicitness: f64,
    startup_steps: usize,
    extrapolate: bool,
}

impl FdMesh {
    /// Uniform space step `h / nx`.
    pub fn uniform(h: f64, nx: usize, time: TimeGrid, implicitness: f64) -> Result<Self> {
        Self::graded(h, nx, 1.0, time, implicitness)
    }

    /// `x_j = h (j / nx)^grading`, clustering nodes at the left wall where the
    /// flux is measured. `grading = 1` is the uniform mesh.
    pub fn graded(h: f64, nx: usize, grading: f64, time: TimeGrid, implicitness: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if nx < 2 {
            return Err(Error::InvalidParameter("finite-difference mesh needs nx >= 2".into()));
        }
        if !(grading >= 1.0) {
            return Err(Error::InvalidParameter(format!("space grading must be >= 1, got {grading}")));
        }
        if !(0.5..=1.0).contains(&implicitness) {
            return Err(Error::InvalidParameter(format!("implicitness must lie in [0.5, 1], got {implicitness}")));
        }
        let mut x_nodes: Vec<f64> = (0..=nx).map(|j| h * (j as f64 / nx as f64).powf(grading)).collect();
        x_nodes[nx] = h;
        Ok(Self { x_nodes, time, implicitness, startup_steps: 0, extrapolate: false })
    }

    /// Number of initial fully implicit steps before switching to the
    /// configured implicitness.
    pub fn with_startup_steps(mut self, steps: usize) -> Self {
        self.startup_steps = steps;
        self
    }

    /// Replace the theta-scheme by backward Euler with local Richardson
    /// extrapolation: one full step against two half steps.
    pub fn with_extrapolated_euler(mut self) -> Self {
        self.extrapolate = true;
        self
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn implicitness(&self) -> f64 {
        self.implicitness
    }
}

#[derive(Debug, Clone)]
pub struct FdSolution {
    pub field: TemperatureField,
    /// One-sided second-order `u_x(0, t)` at every time node.
    pub flux: Vec<f64>,
}

impl FdSolution {
    /// Flux trace without the `t = 0` node.
    pub fn flux_trace(&self) -> FluxTrace {
        FluxTrace::new(self.field.grid().clone(), self.flux[1..].to_vec())
    }
}

/// Dirichlet solve of the direct problem.
pub fn fd_solve(problem: &ProblemData, a: &Coefficient, mesh: &FdMesh) -> Result<FdSolution> {
    fd_solve_with(problem, a, mesh, BoundaryMode::Dirichlet)
}

pub fn fd_solve_with(problem: &ProblemData, a: &Coefficient, mesh: &FdMesh, mode: BoundaryMode) -> Result<FdSolution> {
    if let Some((index, &value)) = a.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeCoefficient { index, value });
    }
    if (mesh.x_nodes[mesh.x_nodes.len() - 1] - problem.h()).abs() > 1e-12 * problem.h() {
        return Err(Error::InvalidParameter("finite-difference mesh does not span [0, h]".into()));
    }
    let stepper = Stepper::new(problem, a, &mesh.x_nodes, mode);
    let times = mesh.time.nodes();
    let x = &mesh.x_nodes;

    let mut u: Vec<f64> = x.iter().map(|&xj| problem.phi_at(xj)).collect();
    let mut values = Vec::with_capacity(times.len() * x.len());
    values.extend_from_slice(&u);
    let mut flux = Vec::with_capacity(times.len());
    flux.push(left_flux(x, &u));
    for n in 0..times.len() - 1 {
        let (t0, t1) = (times[n], times[n + 1]);
        u = if mesh.extrapolate {
            let tm = 0.5 * (t0 + t1);
            let coarse = stepper.step(&u, t0, t1, 1.0)?;
            let half = stepper.step(&u, t0, tm, 1.0)?;
            let fine = stepper.step(&half, tm, t1, 1.0)?;
            fine.iter().zip(&coarse).map(|(f, c)| 2.0 * f - c).collect()
        } else {
            let imp = if n < mesh.startup_steps { 1.0 } else { mesh.implicitness };
            stepper.step(&u, t0, t1, imp)?
        };
        values.extend_from_slice(&u);
        flux.push(left_flux(x, &u));
    }
    let field = TemperatureField::new(x.clone(), mesh.time.clone(), values)?;
    Ok(FdSolution { field, flux })
}

/// One theta-scheme step on a fixed space mesh.
struct Stepper<'a> {
    problem: &'a ProblemData,
    a: &'a Coefficient,
    x: &'a [f64],
    mode: BoundaryMode,
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a ProblemData, a: &'a Coefficient, x: &'a [f64], mode: BoundaryMode) -> Self {
        let m = x.len() - 1;
        // Geometric part of the second-difference operator, rows 0..=m.
        let mut lo = vec![0.0; m + 1];
        let mut di = vec![0.0; m + 1];
        let mut up = vec![0.0; m + 1];
        for j in 1..m {
            let (hl, hr) = (x[j] - x[j - 1], x[j + 1] - x[j]);
            lo[j] = 2.0 / ((hl + hr) * hl);
            up[j] = 2.0 / ((hl + hr) * hr);
            di[j] = -(lo[j] + up[j]);
        }
        if mode == BoundaryMode::Neumann {
            let (h_first, h_last) = (x[1] - x[0], x[m] - x[m - 1]);
            up[0] = 2.0 / (h_first * h_first);
            di[0] = -up[0];
            lo[m] = 2.0 / (h_last * h_last);
            di[m] = -lo[m];
        }
        Self { problem, a, x, mode, lo, di, up }
    }

    /// Neumann closure forcing per unit `a`: `-2 g0 / h1` and `2 gm / hm`.
    fn wall_term(&self, t: f64) -> (f64, f64) {
        let m = self.x.len() - 1;
        match self.mode {
            BoundaryMode::Neumann => (
                -2.0 * self.problem.mu1_at(t) / (self.x[1] - self.x[0]),
                2.0 * self.problem.mu2_at(t) / (self.x[m] - self.x[m - 1]),
            ),
            BoundaryMode::Dirichlet => (0.0, 0.0),
        }
    }

    fn step(&self, u: &[f64], t0: f64, t1: f64, imp: f64) -> Result<Vec<f64>> {
        let m = self.x.len() - 1;
        let dt = t1 - t0;
        let coef = self.a.eval(0.5 * (t0 + t1));
        let explicit = (1.0 - imp) * dt * coef;
        let implicit = imp * dt * coef;
        let (lo, di, up) = (&self.lo, &self.di, &self.up);
        let mut rhs = vec![0.0; m + 1];
        let (mut sl, mut sd, mut su) = (vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1]);
        for j in 0..=m {
            let xj = self.x[j];
            let mut au = di[j] * u[j];
            if j > 0 {
                au += lo[j] * u[j - 1];
            }
            if j < m {
                au += up[j] * u[j + 1];
            }
            let source = imp * self.problem.f_at(xj, t1) + (1.0 - imp) * self.problem.f_at(xj, t0);
            rhs[j] = u[j] + explicit * au + dt * source;
            sl[j] = -implicit * lo[j];
            sd[j] = 1.0 - implicit * di[j];
            su[j] = -implicit * up[j];
        }
        match self.mode {
            BoundaryMode::Dirichlet => {
                rhs[0] = self.problem.mu1_at(t1);
                rhs[m] = self.problem.mu2_at(t1);
                sd[0] = 1.0;
                su[0] = 0.0;
                sd[m] = 1.0;
                sl[m] = 0.0;
            }
            BoundaryMode::Neumann => {
                let (b0, b1) = (self.wall_term(t0), self.wall_term(t1));
                rhs[0] += dt * coef * (imp * b1.0 + (1.0 - imp) * b0.0);
                rhs[m] += dt * coef * (imp * b1.1 + (1.0 - imp) * b0.1);
            }
        }
        thomas(&sl, &sd, &su, &rhs)
    }
}

/// Second-order one-sided `u_x(0)` on a possibly non-uniform mesh.
fn left_flux(x: &[f64], u: &[f64]) -> f64 {
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1] - h1 / (h2 * (h1 + h2)) * u[2]
}

/// Thomas algorithm for a tridiagonal system (`lower[0]`, `upper[n-1]` unused).
pub(crate) fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Oracle("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Oracle(format!("singular tridiagonal system at row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Oracle("finite-difference solution diverged".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_x(n: usize) -> Vec<f64> {
        (0..=n).map(|j| j as f64 / n as f64).collect()
    }

    fn problem(phi: impl Fn(f64) -> f64, f: impl Fn(f64, f64) -> f64, m1: &dyn Fn(f64) -> f64, m2: &dyn Fn(f64) -> f64, ts: &TimeGrid) -> ProblemData {
        ProblemData::from_functions(1.0, 1.0, grid_x(10), ts.nodes().to_vec(), phi, f, [m1, m2, &|t| t]).unwrap()
    }

    #[test]
    fn constant_and_linear_states_are_preserved() {
        let ts = TimeGrid::graded(1.0, 30, 2.0).unwrap();
        let a = Coefficient::power_law(ts.clone(), 1.0, 1.0).unwrap();
        let mesh = FdMesh::uniform(1.0, 20, ts.clone(), 0.5).unwrap();
        let p = problem(|_| 3.0, |_, _| 0.0, &|_| 3.0, &|_| 3.0, &ts);
        let sol = fd_solve(&p, &a, &mesh).unwrap();
        assert!(sol.field.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        let p = problem(|x| x, |_, _| 0.0, &|_| 0.0, &|_| 1.0, &ts);
        let sol = fd_solve(&p, &a, &mesh).unwrap();
        for i in 0..ts.len() {
            for (j, &xj) in mesh.x_nodes().iter().enumerate() {
                assert!((sol.field.at(i, j) - xj).abs() < 1e-12);
            }
        }
        assert!(sol.flux.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn insulated_mean_is_conserved() {
        let ts = TimeGrid::graded(0.5, 40, 2.0).unwrap();
        let a = Coefficient::power_law(ts.clone(), 3.0, 2.0).unwrap();
        let mesh = FdMesh::uniform(1.0, 50, ts.clone(), 0.5).unwrap();
        let p = problem(|x| (3.0 * x).sin() + x * x, |_, _| 0.0, &|_| 0.0, &|_| 0.0, &ts);
        let sol = fd_solve_with(&p, &a, &mesh, BoundaryMode::Neumann).unwrap();
        let x = mesh.x_nodes();
        let mean = |i: usize| -> f64 {
            (0..x.len() - 1).map(|j| 0.5 * (x[j + 1] - x[j]) * (sol.field.at(i, j) + sol.field.at(i, j + 1))).sum()
        };
        let m0 = mean(0);
        for i in 1..ts.len() {
            assert!((mean(i) - m0).abs() < 1e-10, "step {i}");
        }
    }

    #[test]
    fn rejects_bad_meshes() {
        let ts = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(FdMesh::uniform(1.0, 10, ts.clone(), 0.4).is_err());
        assert!(FdMesh::uniform(1.0, 1, ts.clone(), 0.5).is_err());
        assert!(FdMesh::graded(1.0, 10, 0.5, ts, 1.0).is_err());
    }

    #[test]
    fn thomas_solves_small_system() {
        let x = thomas(&[0.0, 1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0, 0.0], &[5.0, 6.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(thomas(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
