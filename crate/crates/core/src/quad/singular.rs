//! Product integration for `int_0^t g(tau) / sqrt(theta(t) - theta(tau)) dtau`.
//!
//! On every panel `g` is linear and `theta` follows the local power model
//! kept by [`Theta`]; the kernel moments are then incomplete beta integrals
//! and are taken in closed form, including the panel that ends at the
//! singularity.

use std::f64::consts::FRAC_PI_2;

use super::gauss::GaussLegendre;
use super::special::half_beta_segment;
use crate::error::{Error, Result};
use crate::greens::{PanelModel, Theta};

/// Weights `w_k` such that `sum_k w_k g(t_k)` integrates `g / sqrt(theta(t) - theta)`
/// over `[0, t_target]` for `g` piecewise linear on the grid.
#[derive(Debug, Clone)]
pub struct SingularRule {
    target: usize,
    weights: Vec<f64>,
}

impl SingularRule {
    pub fn new(theta: &Theta, target: usize) -> Result<Self> {
        if target == 0 || target >= theta.len() {
            return Err(Error::InvalidParameter(format!(
                "singular rule target {target} outside 1..{}",
                theta.len()
            )));
        }
        let t = theta.grid().nodes();
        let th = theta.values();
        let big = th[target];
        let mut weights = vec![0.0; target + 1];
        for j in 0..target {
            if th[j + 1] <= th[j] {
                return Err(Error::FlatTheta { panel: j });
            }
            let (m0, m1) = match theta.panel_model(j) {
                PanelModel::Power { exponent } => power_moments(t[j + 1], th[j], th[j + 1], big, exponent),
                PanelModel::Linear => linear_moments(t[j], t[j + 1], big - th[j], big - th[j + 1]),
            };
            let dt = t[j + 1] - t[j];
            weights[j] += (t[j + 1] * m0 - m1) / dt;
            weights[j + 1] += (m1 - t[j] * m0) / dt;
        }
        Ok(Self { target, weights })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule to nodal values `g[0..=target]`.
    pub fn apply(&self, g: &[f64]) -> Result<f64> {
        if g.len() <= self.target {
            return Err(Error::InsufficientData(format!(
                "integrand has {} samples, rule needs {}",
                g.len(),
                self.target + 1
            )));
        }
        Ok(self.weights.iter().zip(g).map(|(w, v)| w * v).sum())
    }
}

/// Moments `int tau^m / sqrt(big - theta(tau))`, `m = 0, 1`, over the panel
/// ending at `t1`, with `theta(tau) = th1 (tau / t1)^p`.
fn power_moments(t1: f64, th0: f64, th1: f64, big: f64, p: f64) -> (f64, f64) {
    let w0 = th0 / big;
    let w1 = th1 / big;
    let c0 = (big - th0) / big;
    let c1 = (big - th1) / big;
    let scale = 1.0 / (big.sqrt() * p);
    let moment = |m: f64| {
        let a = (m + 1.0) / p;
        scale * t1.powf(m + 1.0) * w1.powf(-a) * half_beta_segment(w0, w1, c0, c1, a)
    };
    (moment(0.0), moment(1.0))
}

/// Moments for a linear model of `D(tau) = big - theta(tau)` between `d0` and `d1`.
fn linear_moments(t0: f64, t1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let dt = t1 - t0;
    let slope = (d1 - d0) / dt;
    if slope.abs() <= 1e-14 * d0.abs() {
        let inv = 1.0 / d0.sqrt();
        return (dt * inv, 0.5 * (t1 * t1 - t0 * t0) * inv);
    }
    // D = d0 + slope (tau - t0); int dtau / sqrt(D) = 2 (sqrt(D1) - sqrt(D0)) / slope
    let (s0, s1) = (d0.sqrt(), d1.sqrt());
    let m0 = 2.0 * (s1 - s0) / slope;
    // int (tau - t0) / sqrt(D) = int (D - d0) / (slope sqrt(D)) dtau
    let int_sqrt = 2.0 / 3.0 * (s1 * s1 * s1 - s0 * s0 * s0) / slope;
    let shifted = (int_sqrt - d0 * m0) / slope;
    (m0, shifted + t0 * m0)
}

/// `int_0^t g(tau) / sqrt(theta(t) - theta(tau)) dtau` with `t` the grid node
/// `t_index` and `g` sampled at the grid nodes.
pub fn singular_integral(g: &[f64], theta: &Theta, t_index: usize) -> Result<f64> {
    if g.len() != theta.len() {
        return Err(Error::InvalidParameter(format!(
            "integrand has {} samples on a grid of {} nodes",
            g.len(),
            theta.len()
        )));
    }
    SingularRule::new(theta, t_index)?.apply(g)
}

const I1_NODES: usize = 64;

/// `I1(beta) = int_0^1 dz / sqrt(1 - z^(beta+1))`.
///
/// `[0, 1/2]` is smooth. On `[1/2, 1]` the substitution
/// `z = sin(w)^(2/(beta+1))` turns the integrand into
/// `2/(beta+1) sin(w)^((1-beta)/(beta+1))`, smooth because `sin(w)` stays
/// away from zero there. Both pieces use a 64-node Gauss-Legendre rule.
pub fn i1(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("I1 needs beta >= 0, got {beta}")));
    }
    let q = beta + 1.0;
    let rule = GaussLegendre::new(I1_NODES);
    let near = rule.integrate(0.0, 0.5, |z| 1.0 / (1.0 - z.powf(q)).sqrt());
    let w0 = 0.5f64.powf(0.5 * q).asin();
    let e = (1.0 - beta) / q;
    let far = rule.integrate(w0, FRAC_PI_2, |w| 2.0 / q * w.sin().powf(e));
    Ok(near + far)
}
