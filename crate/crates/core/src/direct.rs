//! Green-function evaluation of the direct problem: the temperature field
//! `u(x, t)` as a sum of the initial layer, two boundary double layers and the
//! source volume potential, and the left-wall flux
//!
//! ```text
//! u_x(0, t) = int G_2(0, xi; theta(t)) phi'(xi) dxi
//!           + int_0^t G_2(0, t, 0, tau) (f(0, tau) - mu1'(tau)) dtau
//!           + int_0^t G_2(0, t, h, tau) (mu2'(tau) - f(h, tau)) dtau
//!           + int_0^t int G_2(0, t, xi, tau) f_x(xi, tau) dxi dtau.
//! ```
//!
//! Space integrals against tabulated (piecewise-linear) data are taken in
//! closed form. In time, the `n = 0` image of `G_2(0, t, 0, tau)` carries the
//! `1 / sqrt(theta(t) - theta(tau))` singularity and goes through the product
//! rule; the remaining parts are smooth and use Gauss-Legendre per panel.
//! For large `theta(t) - theta(tau)` the volume kernel switches from images to
//! the cosine series `G_2(0, xi; s) = 1/h + 2/h sum_m exp(-(m pi / h)^2 s) cos(m pi xi / h)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greens::{green, green_dxi, green_layer, wall_response, GreenParams, Theta, DEFAULT_TRUNCATION_TOL};
use crate::grid::{interp, locate, TimeGrid};
use crate::inverse::Coefficient;
use crate::problem::{DerivedData, ProblemData};
use crate::quad::{adaptive_gk15, GaussLegendre, SingularRule};

/// `u(x_j, t_i)` stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    x: Vec<f64>,
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn new(x: Vec<f64>, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != x.len() * grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} field values for {} x {} nodes",
                values.len(),
                x.len(),
                grid.len()
            )));
        }
        Ok(Self { x, grid, values })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, time_index: usize, x_index: usize) -> f64 {
        self.values[time_index * self.x.len() + x_index]
    }

    pub fn row(&self, time_index: usize) -> &[f64] {
        let n = self.x.len();
        &self.values[time_index * n..(time_index + 1) * n]
    }

    /// Linear interpolation in `x` at a stored time level.
    pub fn interp_x(&self, time_index: usize, x: f64) -> f64 {
        interp(&self.x, self.row(time_index), x)
    }
}

/// `u_x(0, t_i)` for the nodes `t_1, ..., t_N`; the initial node is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTrace {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl FluxTrace {
    pub(crate) fn new(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() + 1, grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Values for nodes `1..=N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Flux at grid node `i >= 1`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.nodes()[1..].iter().copied().zip(self.values.iter().copied())
    }
}

const PANEL_GAUSS_POINTS: usize = 4;

/// Volume kernel uses the cosine series once `s >= SERIES_FROM * h^2`.
const SERIES_FROM: f64 = 0.04;
/// Enough modes for `exp(-(m pi)^2 SERIES_FROM) < 1e-17`.
const SERIES_MODES: usize = 12;

/// `int_0^h cos(k xi) g(xi) dxi` for `g` piecewise linear on `xs`.
fn cosine_moment(xs: &[f64], g: &[f64], k: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..xs.len() - 1 {
        let (a, b) = (xs[j], xs[j + 1]);
        if k == 0.0 {
            total += 0.5 * (g[j] + g[j + 1]) * (b - a);
            continue;
        }
        let slope = (g[j + 1] - g[j]) / (b - a);
        let (sa, sb) = ((k * a).sin(), (k * b).sin());
        let (ca, cb) = ((k * a).cos(), (k * b).cos());
        total += g[j] * (sb - sa) / k + slope * ((b - a) * sb / k + (cb - ca) / (k * k));
    }
    total
}

/// Reusable evaluator of `u_x(0, t)` for a fixed problem and time grid.
/// Holds the differentiated data so repeated evaluations (Picard sweeps)
/// only redo the coefficient-dependent work.
pub struct FluxEvaluator<'a> {
    problem: &'a ProblemData,
    grid: TimeGrid,
    derived: DerivedData,
    left_density: Vec<f64>,
    right_density: Vec<f64>,
    left_density_nodes: Vec<f64>,
    /// Cosine moments of `f_x` at each data time, `SERIES_MODES + 1` per node.
    volume_moments: Vec<f64>,
    has_volume: bool,
    rule: GaussLegendre,
}

impl<'a> FluxEvaluator<'a> {
    pub fn new(problem: &'a ProblemData, grid: &TimeGrid) -> Self {
        let derived = problem.derived();
        let nt = problem.t_grid().len();
        let nx = problem.x_grid().len();
        let f = problem.f();
        let left_density: Vec<f64> = (0..nt).map(|k| f[k] - derived.mu1_prime[k]).collect();
        let right_density: Vec<f64> = (0..nt).map(|k| derived.mu2_prime[k] - f[(nx - 1) * nt + k]).collect();
        let left_density_nodes = grid.nodes().iter().map(|&t| interp(problem.t_grid(), &left_density, t)).collect();
        let has_volume = derived.f_x.iter().any(|&v| v != 0.0);
        let h = problem.h();
        let mut volume_moments = Vec::with_capacity(nt * (SERIES_MODES + 1));
        for &t in problem.t_grid() {
            let fx = derived.f_x_column(problem, t);
            volume_moments.extend((0..=SERIES_MODES).map(|m| cosine_moment(problem.x_grid(), &fx, m as f64 * PI / h)));
        }
        Self {
            problem,
            grid: grid.clone(),
            derived,
            left_density,
            right_density,
            left_density_nodes,
            volume_moments,
            has_volume,
            rule: GaussLegendre::new(PANEL_GAUSS_POINTS),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn problem(&self) -> &ProblemData {
        self.problem
    }

    pub fn derived(&self) -> &DerivedData {
        &self.derived
    }

    /// `f(0, t) - mu1'(t)` sampled on the evaluator grid.
    pub fn left_density_nodes(&self) -> &[f64] {
        &self.left_density_nodes
    }

    pub fn flux(&self, a: &Coefficient) -> Result<FluxTrace> {
        if a.grid().nodes() != self.grid.nodes() {
            return Err(Error::InvalidParameter("coefficient grid differs from the evaluator grid".into()));
        }
        let theta = Theta::accumulate(a)?;
        if let Some(j) = theta.values().windows(2).skip(1).position(|w| w[1] <= w[0]) {
            return Err(Error::FlatTheta { panel: j + 1 });
        }
        let values = (1..self.grid.len())
            .into_par_iter()
            .map(|i| self.flux_at(&theta, i))
            .collect::<Result<Vec<f64>>>()?;
        Ok(FluxTrace::new(self.grid.clone(), values))
    }

    /// The singular `n = 0` part of the second term alone:
    /// `int_0^t (f(0, tau) - mu1'(tau)) / sqrt(pi (theta(t) - theta(tau))) dtau`.
    pub fn principal_term(&self, theta: &Theta, i: usize) -> Result<f64> {
        Ok(SingularRule::new(theta, i)?.apply(&self.left_density_nodes)? / PI.sqrt())
    }

    /// `int_0^h G_2(0, xi; s) f_x(xi, tau) dxi`.
    fn volume_kernel(&self, neumann: &GreenParams, s: f64, tau: f64) -> Result<f64> {
        let p = self.problem;
        let h = p.h();
        if s < SERIES_FROM * h * h {
            return green_layer(neumann, 0.0, s, p.x_grid(), &self.derived.f_x_column(p, tau));
        }
        let ts = p.t_grid();
        let (k, w) = if tau <= ts[0] {
            (0, 0.0)
        } else if tau >= ts[ts.len() - 1] {
            (ts.len() - 2, 1.0)
        } else {
            let k = locate(ts, tau);
            (k, (tau - ts[k]) / (ts[k + 1] - ts[k]))
        };
        let stride = SERIES_MODES + 1;
        let lo = &self.volume_moments[k * stride..(k + 1) * stride];
        let hi = &self.volume_moments[(k + 1).min(ts.len() - 1) * stride..][..stride];
        let moment = |m: usize| lo[m] + w * (hi[m] - lo[m]);
        let mut total = moment(0);
        for m in 1..=SERIES_MODES {
            let k = m as f64 * PI / h;
            total += 2.0 * (-k * k * s).exp() * moment(m);
        }
        Ok(total / h)
    }

    fn flux_at(&self, theta: &Theta, i: usize) -> Result<f64> {
        let p = self.problem;
        let h = p.h();
        let neumann = GreenParams::neumann(h);
        let nodes = self.grid.nodes();
        let big = theta.values()[i];

        let initial = green_layer(&neumann, 0.0, big, p.x_grid(), &self.derived.phi_prime)?;
        let principal = self.principal_term(theta, i)?;

        let mut regular = 0.0;
        let mut right = 0.0;
        let mut volume = 0.0;
        for j in 0..i {
            for (tau, w) in self.rule.mapped(nodes[j], nodes[j + 1]) {
                let s = big - theta.eval(tau);
                if !(s > 0.0) {
                    continue;
                }
                let left_density = interp(p.t_grid(), &self.left_density, tau);
                regular += w * left_wall_regular(h, s) * left_density;
                let right_density = interp(p.t_grid(), &self.right_density, tau);
                if right_density != 0.0 {
                    right += w * green(&neumann, 0.0, h, s)? * right_density;
                }
                if self.has_volume {
                    volume += w * self.volume_kernel(&neumann, s, tau)?;
                }
            }
        }
        Ok(initial + principal + regular + right + volume)
    }
}

/// `G_2(0, t, 0, tau)` minus its singular `n = 0` image:
/// `2 / sqrt(pi s) sum_{n >= 1} exp(-n^2 h^2 / s)`.
pub(crate) fn left_wall_regular(h: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    let mut n = 1.0;
    loop {
        let term = (-(n * h) * (n * h) / s).exp();
        acc += term;
        if term < DEFAULT_TRUNCATION_TOL * acc.max(f64::MIN_POSITIVE) || term == 0.0 {
            break;
        }
        n += 1.0;
    }
    2.0 * acc / (PI * s).sqrt()
}

/// Left-wall flux `u_x(0, t_i)` for `i >= 1` on the coefficient's grid.
pub fn flux_left(problem: &ProblemData, a: &Coefficient) -> Result<FluxTrace> {
    FluxEvaluator::new(problem, a.grid()).flux(a)
}

const LAYER_TOL: f64 = 1e-12;
const LAYER_DEPTH: u32 = 40;

/// Temperature at the given abscissae for every node of the coefficient grid.
/// Wall abscissae (`x = 0`, `x = h`) return the boundary data, which is the
/// limit of the double layers from inside.
pub fn evaluate_u(problem: &ProblemData, a: &Coefficient, xs: &[f64]) -> Result<TemperatureField> {
    let h = problem.h();
    if let Some(&x) = xs.iter().find(|&&x| !(0.0..=h).contains(&x)) {
        return Err(Error::InvalidParameter(format!("evaluation point {x} outside [0, {h}]")));
    }
    let theta = Theta::accumulate(a)?;
    if let Some(j) = theta.values().windows(2).skip(1).position(|w| w[1] <= w[0]) {
        return Err(Error::FlatTheta { panel: j + 1 });
    }
    let grid = a.grid();
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            xs.iter()
                .map(|&x| if i == 0 { Ok(problem.phi_at(x)) } else { u_at(problem, &theta, x, i) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    TemperatureField::new(xs.to_vec(), grid.clone(), rows.concat())
}

fn u_at(p: &ProblemData, theta: &Theta, x: f64, i: usize) -> Result<f64> {
    let h = p.h();
    let nodes = theta.grid().nodes();
    let t = nodes[i];
    if x <= 0.0 {
        return Ok(p.mu1_at(t));
    }
    if x >= h {
        return Ok(p.mu2_at(t));
    }
    let dirichlet = GreenParams::dirichlet(h);
    let big = theta.values()[i];
    let initial = green_layer(&dirichlet, x, big, p.x_grid(), p.phi())?;

    let (mu1_t, mu2_t) = (p.mu1_at(t), p.mu2_at(t));
    let mut left = mu1_t * wall_response(h, x, 0.0, big, DEFAULT_TRUNCATION_TOL)?;
    let mut right = mu2_t * wall_response(h, x, h, big, DEFAULT_TRUNCATION_TOL)?;
    let mut volume = 0.0;
    let mut failure = None;
    for j in 0..i {
        let (lo, hi) = (nodes[j], nodes[j + 1]);
        let mut kernel = |tau: f64, wall: f64, mu_now: f64, mu: &dyn Fn(f64) -> f64| -> f64 {
            let s = big - theta.eval(tau);
            if !(s > 0.0) {
                return 0.0;
            }
            let diff = mu(tau) - mu_now;
            if diff == 0.0 {
                return 0.0;
            }
            match green_dxi(&dirichlet, x, wall, s) {
                Ok(g) => g * theta.derivative(tau) * diff,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        left += adaptive_gk15(lo, hi, LAYER_TOL, LAYER_DEPTH, |tau| kernel(tau, 0.0, mu1_t, &|s| p.mu1_at(s)));
        right += adaptive_gk15(lo, hi, LAYER_TOL, LAYER_DEPTH, |tau| kernel(tau, h, mu2_t, &|s| p.mu2_at(s)));
        volume += adaptive_gk15(lo, hi, LAYER_TOL, LAYER_DEPTH, |tau| {
            let s = big - theta.eval(tau);
            if !(s > 0.0) {
                return p.f_at(x, tau);
            }
            green_layer(&dirichlet, x, s, p.x_grid(), &p.f_column(tau)).unwrap_or(0.0)
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(initial + left - right + volume)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize, h: f64) -> Vec<f64> {
        (0..=n).map(|j| h * j as f64 / n as f64).collect()
    }

    fn problem(
        h: f64,
        ts: &TimeGrid,
        phi: impl Fn(f64) -> f64,
        f: impl Fn(f64, f64) -> f64,
        m1: &dyn Fn(f64) -> f64,
        m2: &dyn Fn(f64) -> f64,
    ) -> ProblemData {
        ProblemData::from_functions(h, 1.0, xs(10, h), ts.nodes().to_vec(), phi, f, [m1, m2, &|t| t]).unwrap()
    }

    #[test]
    fn volume_series_matches_images() {
        let ts = TimeGrid::graded(1.0, 8, 2.0).unwrap();
        let h = 1.5;
        let p = problem(h, &ts, |x| x, |x, t| (x * x + t) * (1.0 + x).ln(), &|_| 0.0, &|_| 0.0);
        let eval = FluxEvaluator::new(&p, &ts);
        let neumann = GreenParams::neumann(h);
        for s in [SERIES_FROM * h * h, 0.3, 2.0] {
            for tau in [0.0, 0.37, 1.0] {
                let series = eval.volume_kernel(&neumann, s, tau).unwrap();
                let images = green_layer(&neumann, 0.0, s, p.x_grid(), &eval.derived.f_x_column(&p, tau)).unwrap();
                assert!((series - images).abs() < 1e-13, "s={s} tau={tau}: {series} vs {images}");
            }
        }
    }

    #[test]
    fn steady_linear_profile() {
        let ts = TimeGrid::graded(1.0, 16, 2.0).unwrap();
        let a = Coefficient::power_law(ts.clone(), 1.0, 1.0).unwrap();
        let p = problem(1.0, &ts, |x| x, |_, _| 0.0, &|_| 0.0, &|_| 1.0);
        let flux = flux_left(&p, &a).unwrap();
        assert!(flux.values().iter().all(|v| (v - 1.0).abs() < 1e-6), "{:?}", flux.values());
        let field = evaluate_u(&p, &a, &[0.0, 0.1, 0.5, 0.93, 1.0]).unwrap();
        for i in 0..ts.len() {
            for (j, &x) in field.x().iter().enumerate() {
                assert!((field.at(i, j) - x).abs() < 1e-6, "t={} x={x}: {}", ts.nodes()[i], field.at(i, j));
            }
        }
    }

    #[test]
    fn constant_state() {
        let ts = TimeGrid::graded(1.0, 12, 2.0).unwrap();
        let a = Coefficient::power_law(ts.clone(), 2.0, 2.0).unwrap();
        let p = problem(2.0, &ts, |_| 1.5, |_, _| 0.0, &|_| 1.5, &|_| 1.5);
        let field = evaluate_u(&p, &a, &xs(8, 2.0)).unwrap();
        assert!(field.values().iter().all(|v| (v - 1.5).abs() < 1e-8));
        let flux = flux_left(&p, &a).unwrap();
        assert!(flux.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn balanced_data_gives_zero_flux() {
        // phi' = 0, f(0, .) = mu1', mu2' = f(h, .), f_x = 0
        let ts = TimeGrid::graded(1.0, 10, 2.0).unwrap();
        let a = Coefficient::power_law(ts.clone(), 1.0, 1.0).unwrap();
        let p = problem(1.0, &ts, |_| 0.0, |_, _| 2.0, &|t| 2.0 * t, &|t| 2.0 * t);
        let flux = flux_left(&p, &a).unwrap();
        assert!(flux.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_flat_theta() {
        let ts = TimeGrid::uniform(1.0, 4).unwrap();
        let a = Coefficient::new(ts.clone(), vec![0.0, 1.0, 0.0, 0.0, 1.0], 1.0).unwrap();
        let p = problem(1.0, &ts, |x| x, |_, _| 0.0, &|_| 0.0, &|_| 1.0);
        assert!(matches!(flux_left(&p, &a), Err(Error::FlatTheta { .. })));
    }

    #[test]
    fn regular_image_part() {
        let s: f64 = 0.7;
        let brute: f64 = (1..200).map(|n| (-(n as f64).powi(2) / s).exp()).sum::<f64>() * 2.0 / (PI * s).sqrt();
        assert!((left_wall_regular(1.0, s) - brute).abs() < 1e-15);
        assert_eq!(left_wall_regular(1.0, 1e-4), 0.0);
    }
}
