//! A-priori band for the coefficient. With
//!
//! ```text
//! H(t) = sqrt(pi) mu3(t) / (sqrt(beta + 1) t^beta int_0^t (f(0, tau) - mu1'(tau)) / sqrt(t^(beta+1) - tau^(beta+1)) dtau)
//! ```
//!
//! any solution satisfies `a(t) <= H_max(t)^2 t^beta <= H1^2 t^beta`, where
//! `H_max(t) = max_{tau <= t} H(tau)`. The lower profile
//! `H_min(t)^2 t^beta / (C6 t^((beta-1)/2) + 1)^2` uses a data-driven stand-in
//! for `C6` and is diagnostic only.

use std::f64::consts::PI;

use crate::direct::left_wall_regular;
use crate::error::{Error, Result};
use crate::greens::{green, GreenParams, Theta};
use crate::grid::{interp, TimeGrid};
use crate::inverse::Coefficient;
use crate::problem::ProblemData;
use crate::quad::{i1, SingularRule};
use crate::validate::{first_decade, loglog_fit};

const LIMIT_SLOPE_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BandProfile {
    pub grid: TimeGrid,
    /// `H(t_i)`; entry 0 holds the `t -> 0` limit, NaN when it cannot be estimated.
    pub h: Vec<f64>,
    /// `H_max(t_i)^2 t_i^beta`.
    pub upper: Vec<f64>,
    /// Diagnostic lower profile.
    pub lower: Vec<f64>,
    pub h1: f64,
    /// `max mu3(t) / t^((beta+1)/2)` over the data nodes.
    pub m1: f64,
    /// Surrogate for `C6`.
    pub c6: f64,
    pub beta: f64,
}

impl BandProfile {
    /// `H1^2 t^beta`.
    pub fn cap(&self, i: usize) -> f64 {
        self.h1 * self.h1 * self.grid.nodes()[i].powf(self.beta)
    }

    /// `max_i (a(t_i) - upper(t_i))`; positive means the band is left.
    pub fn excess(&self, a: &Coefficient) -> f64 {
        a.values().iter().zip(&self.upper).skip(1).map(|(a, u)| a - u).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn boundary_density(problem: &ProblemData) -> Vec<f64> {
    let d = problem.derived();
    let nt = problem.t_grid().len();
    (0..nt).map(|k| problem.f()[k] - d.mu1_prime[k]).collect()
}

/// `H(t_i)` for `i >= 1` on `grid` (entry 0 is NaN).
pub fn h_values(problem: &ProblemData, grid: &TimeGrid) -> Result<Vec<f64>> {
    let beta = problem.beta();
    let density = boundary_density(problem);
    if let Some(k) = density.iter().position(|&g| !(g > 0.0)) {
        return Err(Error::Hypothesis(format!(
            "f(0, t) - mu1'(t) = {} is not positive at t = {}",
            density[k],
            problem.t_grid()[k]
        )));
    }
    let nodes = grid.nodes();
    let g: Vec<f64> = nodes.iter().map(|&t| interp(problem.t_grid(), &density, t)).collect();
    let theta = Theta::from_values(grid.clone(), nodes.iter().map(|t| t.powf(beta + 1.0)).collect())?;
    let scale = PI.sqrt() / (beta + 1.0).sqrt();
    let mut out = vec![f64::NAN; nodes.len()];
    for i in 1..nodes.len() {
        let integral = SingularRule::new(&theta, i)?.apply(&g)?;
        out[i] = scale * problem.mu3_at(nodes[i]) / (nodes[i].powf(beta) * integral);
    }
    Ok(out)
}

/// `H(t_i)` at node `t_index >= 1` of the problem's own time grid.
pub fn compute_h(problem: &ProblemData, t_index: usize) -> Result<f64> {
    let grid = problem.time_grid();
    if t_index == 0 {
        return Err(Error::InvalidParameter("H is not defined at t = 0; use h_limit".into()));
    }
    if t_index >= grid.len() {
        return Err(Error::InvalidParameter(format!("node {t_index} outside the time grid")));
    }
    Ok(h_values(problem, &grid)?[t_index])
}

/// `lim_{t -> 0} H(t) = sqrt(pi) M / (sqrt(beta + 1) (f(0,0) - mu1'(0)) I1(beta))`
/// with `M = lim mu3 / t^((beta+1)/2)` from a log-log fit over `(0, T/10]`.
pub fn h_limit(problem: &ProblemData) -> Result<f64> {
    let beta = problem.beta();
    let expected = 0.5 * (beta + 1.0);
    let ts = problem.t_grid();
    let window = first_decade(ts);
    if window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} nodes in (0, T/10] for the mu3 limit fit, need 3",
            window.len()
        )));
    }
    let mu3 = problem.mu3();
    if let Some(&k) = window.iter().find(|&&k| !(mu3[k] > 0.0)) {
        return Err(Error::NonPositiveDatum { index: k, t: ts[k], value: mu3[k] });
    }
    let xs: Vec<f64> = window.iter().map(|&k| ts[k]).collect();
    let ys: Vec<f64> = window.iter().map(|&k| mu3[k]).collect();
    let (slope, _) = loglog_fit(&xs, &ys);
    if (slope - expected).abs() > LIMIT_SLOPE_TOL {
        return Err(Error::LimitHypothesis { fitted: slope, expected });
    }
    let log_m = xs.iter().zip(&ys).map(|(t, y)| y.ln() - expected * t.ln()).sum::<f64>() / xs.len() as f64;
    let c = boundary_density(problem)[0];
    if !(c > 0.0) {
        return Err(Error::Hypothesis(format!("f(0, 0) - mu1'(0) = {c} is not positive")));
    }
    Ok(PI.sqrt() * log_m.exp() / ((beta + 1.0).sqrt() * c * i1(beta)?))
}

/// Band profile on the problem's time grid.
pub fn apriori_band(problem: &ProblemData) -> Result<BandProfile> {
    apriori_band_on(problem, &problem.time_grid())
}

pub fn apriori_band_on(problem: &ProblemData, grid: &TimeGrid) -> Result<BandProfile> {
    let beta = problem.beta();
    let mut h = h_values(problem, grid)?;
    let limit = h_limit(problem).ok();
    h[0] = limit.unwrap_or(f64::NAN);

    let ts = problem.t_grid();
    let mu3 = problem.mu3();
    let density = boundary_density(problem);
    let m1 = ts.iter().zip(mu3).skip(1).map(|(t, m)| m / t.powf(0.5 * (beta + 1.0))).fold(f64::NEG_INFINITY, f64::max);
    let g_min = density.iter().copied().fold(f64::INFINITY, f64::min);
    let h1 = PI.sqrt() * m1 / ((beta + 1.0).sqrt() * g_min * i1(beta)?);
    let c6 = c6_surrogate(problem, grid, &h, h1, &density);

    let nodes = grid.nodes();
    let mut upper = vec![0.0; nodes.len()];
    let mut lower = vec![0.0; nodes.len()];
    let mut h_max = limit.unwrap_or(0.0);
    let mut h_min = limit.unwrap_or(f64::INFINITY);
    for i in 1..nodes.len() {
        h_max = h_max.max(h[i]);
        h_min = h_min.min(h[i]);
        let tb = nodes[i].powf(beta);
        upper[i] = h_max * h_max * tb;
        let denom = c6 * nodes[i].powf(0.5 * (beta - 1.0)) + 1.0;
        lower[i] = h_min * h_min / (denom * denom) * tb;
    }
    Ok(BandProfile { grid: grid.clone(), h, upper, lower, h1, m1, c6, beta })
}

/// `C4` bounds the non-singular part of the flux: the initial layer, the
/// right-wall and source terms and the regular images of the left wall,
/// each estimated by its density maximum times the kernel maximum. Then
/// `C5 = C4 H1` and `C6 = max_t C5 t^beta H(t) / (mu3(t) t^((beta-1)/2))`.
fn c6_surrogate(problem: &ProblemData, grid: &TimeGrid, h: &[f64], h1: f64, density: &[f64]) -> f64 {
    let beta = problem.beta();
    let d = problem.derived();
    let nt = problem.t_grid().len();
    let nx = problem.x_grid().len();
    let horizon = problem.horizon();
    let len = problem.h();
    let pos_max = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |m, x| m.max(x));
    let phi_max = pos_max(&mut d.phi_prime.iter().copied());
    let fx_max = pos_max(&mut d.f_x.iter().copied());
    let right_max = pos_max(&mut (0..nt).map(|k| d.mu2_prime[k] - problem.f()[(nx - 1) * nt + k]));
    let left_max = pos_max(&mut density.iter().copied());
    let neumann = GreenParams::neumann(len);
    let (mut g_sup, mut r_sup) = (0.0f64, 0.0f64);
    for e in 0..=60 {
        let s = len * len * 10f64.powf(-6.0 + 9.0 * e as f64 / 60.0);
        g_sup = g_sup.max(green(&neumann, 0.0, len, s).unwrap_or(0.0));
        r_sup = r_sup.max(left_wall_regular(len, s));
    }
    let c4 = phi_max + horizon * (fx_max + right_max * g_sup + left_max * r_sup / PI.sqrt());
    let c5 = c4 * h1;
    let nodes = grid.nodes();
    (1..nodes.len())
        .map(|i| {
            let t = nodes[i];
            c5 * t.powf(beta) * h[i] / (problem.mu3_at(t) * t.powf(0.5 * (beta - 1.0)))
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_data(beta: f64, m: f64, c: f64, wrong_exponent: bool) -> ProblemData {
        let ts = TimeGrid::graded(1.0, 60, 2.0).unwrap();
        let xs: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let p = if wrong_exponent { beta } else { 0.5 * (beta + 1.0) };
        ProblemData::from_functions(
            1.0,
            beta,
            xs,
            ts.nodes().to_vec(),
            |x| x,
            move |_, _| c,
            [&|_| 0.0, &|_| 1.0, &move |t: f64| m * t.powf(p)],
        )
        .unwrap()
    }

    #[test]
    fn constant_h_for_power_data() {
        for beta in [1.0, 2.0, 3.0] {
            let (m, c) = (1.7, 0.8);
            let p = power_data(beta, m, c, false);
            let expect = PI.sqrt() * m / ((beta + 1.0).sqrt() * c * i1(beta).unwrap());
            for i in [1, 5, 30, 60] {
                let h = compute_h(&p, i).unwrap();
                assert!((h - expect).abs() < 1e-9 * expect, "beta {beta} i {i}: {h} vs {expect}");
            }
            assert!((h_limit(&p).unwrap() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn beta_one_limit_value() {
        let p = power_data(1.0, 1.0, 1.0, false);
        assert!((h_limit(&p).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wrong_exponent_violates_limit() {
        let p = power_data(2.0, 1.0, 1.0, true);
        let err = h_limit(&p).unwrap_err();
        assert!(err.to_string().contains("limit hypothesis violated"), "{err}");
    }

    #[test]
    fn band_for_constant_h() {
        let p = power_data(2.0, 1.3, 0.5, false);
        let band = apriori_band(&p).unwrap();
        let hh = band.h[5];
        for (i, &t) in band.grid.nodes().iter().enumerate().skip(1) {
            assert!((band.upper[i] - hh * hh * t * t).abs() < 1e-9 * band.upper[i]);
            assert!(band.upper[i] <= band.cap(i) * (1.0 + 1e-12));
            assert!(band.lower[i] <= band.upper[i] && band.lower[i] > 0.0);
        }
    }

    #[test]
    fn rejects_t0_and_nonpositive_density() {
        let p = power_data(1.0, 1.0, 1.0, false);
        assert!(compute_h(&p, 0).is_err());
        let q = power_data(1.0, 1.0, 0.0, false);
        assert!(matches!(compute_h(&q, 3), Err(Error::Hypothesis(_))));
    }
}
