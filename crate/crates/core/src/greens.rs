//! Accumulated diffusivity `theta(t)` and the method-of-images Green functions
//! of the first (`k = 1`, Dirichlet) and second (`k = 2`, Neumann) boundary
//! value problems on `[0, h]`:
//!
//! ```text
//! G_k(x, xi; s) = 1/(2 sqrt(pi s)) sum_n [ exp(-(x - xi + 2nh)^2 / 4s)
//!                                  + (-1)^k exp(-(x + xi + 2nh)^2 / 4s) ]
//! ```
//!
//! with `s = theta(t) - theta(tau) > 0`. The `t = tau` limit is never
//! evaluated here; time integrals against the singular part go through
//! [`crate::quad`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{locate, TimeGrid};
use crate::inverse::Coefficient;

/// `theta(t_i) = int_0^{t_i} a`, nondecreasing, `theta(0) = 0`.
///
/// Between nodes `theta` follows a power law `theta_{j+1} (t / t_{j+1})^p`
/// through both panel ends (exact for pure power laws, monotone). The first
/// panel borrows the exponent of the second one. Panels where a power law
/// cannot pass through both ends fall back to linear interpolation.
#[derive(Debug, Clone)]
pub struct Theta {
    grid: TimeGrid,
    values: Vec<f64>,
    models: Vec<PanelModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PanelModel {
    Power { exponent: f64 },
    Linear,
}

impl Theta {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} theta values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("theta(0) must be 0, got {}", values[0])));
        }
        if let Some(j) = values.windows(2).position(|w| !(w[1] >= w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidParameter(format!("theta decreases on panel {j}")));
        }
        let t = grid.nodes();
        let mut models: Vec<PanelModel> = (0..grid.panels())
            .map(|j| {
                if j > 0 && values[j] > 0.0 && values[j + 1] > values[j] {
                    PanelModel::Power { exponent: (values[j + 1] / values[j]).ln() / (t[j + 1] / t[j]).ln() }
                } else {
                    PanelModel::Linear
                }
            })
            .collect();
        if values[1] > 0.0 {
            models[0] = match models.get(1) {
                Some(&PanelModel::Power { exponent }) => PanelModel::Power { exponent },
                _ => PanelModel::Power { exponent: 1.0 },
            };
        }
        Ok(Self { grid, values, models })
    }

    /// Cumulative integral of the coefficient interpolant `a(t) = t^beta w(t)`
    /// with `w = a / t^beta` linear per panel; on the first panel `a` follows
    /// `a(t_1) (t / t_1)^beta` (trapezoid when `a(0) != 0` or `beta = 0`). Exact for
    /// `c t^beta`, and the plain trapezoid rule when `beta = 0`.
    pub fn accumulate(a: &Coefficient) -> Result<Self> {
        if let Some((index, &value)) = a.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeCoefficient { index, value });
        }
        let t = a.grid().nodes();
        let v = a.values();
        let beta = a.beta();
        let mut values = Vec::with_capacity(t.len());
        values.push(0.0);
        let mut acc = if v[0] == 0.0 && beta > 0.0 { v[1] * t[1] / (beta + 1.0) } else { 0.5 * (v[0] + v[1]) * t[1] };
        values.push(acc);
        for j in 1..t.len() - 1 {
            acc += weighted_panel_integral(t[j], t[j + 1], v[j], v[j + 1], beta);
            values.push(acc);
        }
        Self::from_values(a.grid().clone(), values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn panel_model(&self, panel: usize) -> PanelModel {
        self.models[panel]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        if t <= 0.0 {
            return 0.0;
        }
        let j = locate(nodes, t);
        let t = t.min(nodes[j + 1]);
        match self.models[j] {
            PanelModel::Power { exponent } => self.values[j + 1] * (t / nodes[j + 1]).powf(exponent),
            PanelModel::Linear => {
                let w = (t - nodes[j]) / (nodes[j + 1] - nodes[j]);
                self.values[j] + w * (self.values[j + 1] - self.values[j])
            }
        }
    }
}

impl Theta {
    /// `theta'(t)` of the interpolant, i.e. the diffusivity it implies.
    pub fn derivative(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        let j = locate(nodes, t.max(0.0));
        let t = t.clamp(nodes[j], nodes[j + 1]);
        match self.models[j] {
            PanelModel::Power { exponent } => {
                if t <= 0.0 {
                    if exponent > 1.0 {
                        0.0
                    } else {
                        self.values[j + 1] / nodes[j + 1]
                    }
                } else {
                    exponent * self.values[j + 1] * (t / nodes[j + 1]).powf(exponent) / t
                }
            }
            PanelModel::Linear => (self.values[j + 1] - self.values[j]) / (nodes[j + 1] - nodes[j]),
        }
    }
}

/// `int_{t0}^{t1} t^beta w(t) dt` with `w` linear from `a0 / t0^beta` to
/// `a1 / t1^beta`, `t0 > 0`.
fn weighted_panel_integral(t0: f64, t1: f64, a0: f64, a1: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.5 * (a0 + a1) * (t1 - t0);
    }
    let (w0, w1) = (a0 / t0.powf(beta), a1 / t1.powf(beta));
    let slope = (w1 - w0) / (t1 - t0);
    let m0 = (t1.powf(beta + 1.0) - t0.powf(beta + 1.0)) / (beta + 1.0);
    let m1 = (t1.powf(beta + 2.0) - t0.powf(beta + 2.0)) / (beta + 2.0);
    ((w0 - slope * t0) * m0 + slope * m1).max(0.0)
}

/// Convenience wrapper for [`Theta::accumulate`].
pub fn accumulate_theta(a: &Coefficient) -> Result<Theta> {
    Theta::accumulate(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl BoundaryKind {
    fn reflection_sign(self) -> f64 {
        match self {
            BoundaryKind::Dirichlet => -1.0,
            BoundaryKind::Neumann => 1.0,
        }
    }
}

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenParams {
    pub kind: BoundaryKind,
    pub h: f64,
    pub truncation_tol: f64,
}

impl GreenParams {
    pub fn new(k: u8, h: f64) -> Result<Self> {
        let kind = match k {
            1 => BoundaryKind::Dirichlet,
            2 => BoundaryKind::Neumann,
            _ => return Err(Error::InvalidParameter(format!("boundary type must be 1 or 2, got {k}"))),
        };
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("domain length must be positive, got {h}")));
        }
        Ok(Self { kind, h, truncation_tol: DEFAULT_TRUNCATION_TOL })
    }

    pub fn dirichlet(h: f64) -> Self {
        Self { kind: BoundaryKind::Dirichlet, h, truncation_tol: DEFAULT_TRUNCATION_TOL }
    }

    pub fn neumann(h: f64) -> Self {
        Self { kind: BoundaryKind::Neumann, h, truncation_tol: DEFAULT_TRUNCATION_TOL }
    }

    pub fn with_truncation_tol(mut self, tol: f64) -> Self {
        self.truncation_tol = tol;
        self
    }

    /// Largest image index `|n|` with `exp(-(2|n|h - 2h)^2 / 4s) >= tol`.
    pub fn image_count(&self, s: f64) -> i64 {
        image_count(self.h, s, self.truncation_tol)
    }
}

fn image_count(h: f64, s: f64, tol: f64) -> i64 {
    if s < (h / 40.0).powi(2) && tol >= 1e-16 {
        return 1;
    }
    (1.0 + (s * (1.0 / tol).ln()).sqrt() / h).floor() as i64
}

#[inline]
fn gauss(y: f64, s: f64) -> f64 {
    (-y * y / (4.0 * s)).exp()
}

fn check_diff(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateKernel(s))
    }
}

/// Sums `f(y1) + sign f(y2)` over images, pairing `n` with `-n` so the
/// result is exactly symmetric in `x <-> xi`.
fn image_sum(p: &GreenParams, x: f64, xi: f64, s: f64, f: impl Fn(f64) -> f64) -> f64 {
    let sign = p.kind.reflection_sign();
    let two_h = 2.0 * p.h;
    let n_max = p.image_count(s);
    let d = x - xi;
    let e = x + xi;
    let mut first = f(d);
    let mut second = f(e);
    for n in 1..=n_max {
        let shift = two_h * n as f64;
        first += f(d + shift) + f(d - shift);
        second += f(e + shift) + f(e - shift);
    }
    first + sign * second
}

/// `G_k(x, xi; s)`.
pub fn green(p: &GreenParams, x: f64, xi: f64, theta_diff: f64) -> Result<f64> {
    check_diff(theta_diff)?;
    let s = theta_diff;
    let sum = image_sum(p, x, xi, s, |y| gauss(y, s));
    Ok(sum / (2.0 * (PI * s).sqrt()))
}

/// `dG_k/dxi (x, xi; s)`.
pub fn green_dxi(p: &GreenParams, x: f64, xi: f64, theta_diff: f64) -> Result<f64> {
    check_diff(theta_diff)?;
    let s = theta_diff;
    // d/dxi K(x - xi) = (x - xi)/(2s) K ; d/dxi K(x + xi) = -(x + xi)/(2s) K
    let sign = p.kind.reflection_sign();
    let two_h = 2.0 * p.h;
    let n_max = p.image_count(s);
    let k = |y: f64| y * gauss(y, s);
    let mut total = k(x - xi) - sign * k(x + xi);
    for n in 1..=n_max {
        let shift = two_h * n as f64;
        total += k(x - xi + shift) + k(x - xi - shift) - sign * (k(x + xi + shift) + k(x + xi - shift));
    }
    Ok(total / (2.0 * s) / (2.0 * (PI * s).sqrt()))
}

/// `dG_k/dx (x, xi; s)`.
pub fn green_dx(p: &GreenParams, x: f64, xi: f64, theta_diff: f64) -> Result<f64> {
    check_diff(theta_diff)?;
    let s = theta_diff;
    let sign = p.kind.reflection_sign();
    let two_h = 2.0 * p.h;
    let n_max = p.image_count(s);
    let k = |y: f64| y * gauss(y, s);
    let mut total = -k(x - xi) - sign * k(x + xi);
    for n in 1..=n_max {
        let shift = two_h * n as f64;
        total += -(k(x - xi + shift) + k(x - xi - shift)) - sign * (k(x + xi + shift) + k(x + xi - shift));
    }
    Ok(total / (2.0 * s) / (2.0 * (PI * s).sqrt()))
}

/// `(erf(ub) - erf(ua)) / 2` without cancellation in the tails.
fn half_erf_diff(ua: f64, ub: f64) -> f64 {
    if ua >= 0.0 {
        0.5 * (libm::erfc(ua) - libm::erfc(ub))
    } else if ub <= 0.0 {
        0.5 * (libm::erfc(-ub) - libm::erfc(-ua))
    } else {
        0.5 * (libm::erf(ub) - libm::erf(ua))
    }
}

/// Half-width (in units of `2 sqrt(s)`) beyond which a Gaussian panel
/// contribution is below 1e-17.
const TAIL: f64 = 6.2;

/// `int_0^h K(xi - c; s) g(xi) dxi` for one free-space Gaussian centred at
/// `c`, with `g` piecewise linear on `xs`.
fn gaussian_against_linear(xs: &[f64], g: &[f64], c: f64, s: f64) -> f64 {
    let sigma = 2.0 * s.sqrt();
    let lo = c - TAIL * sigma;
    let hi = c + TAIL * sigma;
    let last = xs.len() - 1;
    if hi <= xs[0] || lo >= xs[last] {
        return 0.0;
    }
    let j0 = if lo <= xs[0] { 0 } else { locate(xs, lo) };
    let j1 = if hi >= xs[last] { last - 1 } else { locate(xs, hi) };
    let kern = |y: f64| (-y * y / (4.0 * s)).exp() / (2.0 * (PI * s).sqrt());
    let mut total = 0.0;
    for j in j0..=j1 {
        let (a, b) = (xs[j], xs[j + 1]);
        let slope = (g[j + 1] - g[j]) / (b - a);
        let i0 = half_erf_diff((a - c) / sigma, (b - c) / sigma);
        // int (xi - c) K = 2s (K(a - c) - K(b - c))
        let i1 = 2.0 * s * (kern(a - c) - kern(b - c));
        total += (g[j] + slope * (c - a)) * i0 + slope * i1;
    }
    total
}

/// `int_0^h G_k(x, xi; s) g(xi) dxi` for `g` piecewise linear on `xs`
/// (which must span `[0, h]`), evaluated in closed form panel by panel.
pub fn green_layer(p: &GreenParams, x: f64, theta_diff: f64, xs: &[f64], g: &[f64]) -> Result<f64> {
    check_diff(theta_diff)?;
    let s = theta_diff;
    let sign = p.kind.reflection_sign();
    let two_h = 2.0 * p.h;
    let n_max = p.image_count(s);
    let mut total = 0.0;
    for n in -n_max..=n_max {
        let shift = two_h * n as f64;
        total += gaussian_against_linear(xs, g, x + shift, s);
        total += sign * gaussian_against_linear(xs, g, -x - shift, s);
    }
    Ok(total)
}

/// `int_0^S dG_1/dxi (x, wall; s) ds` in closed form, for `wall` in `{0, h}`:
/// `sum_n sgn(y_n) erfc(|y_n| / (2 sqrt S))` with `y_n = x - wall + 2nh`.
/// This is the response of a unit boundary temperature held on `[0, t]`.
pub fn wall_response(h: f64, x: f64, wall: f64, big_s: f64, tol: f64) -> Result<f64> {
    check_diff(big_s)?;
    let n_max = image_count(h, big_s, tol) + 1;
    let root = 2.0 * big_s.sqrt();
    let term = |y: f64| {
        if y == 0.0 {
            0.0
        } else {
            y.signum() * libm::erfc(y.abs() / root)
        }
    };
    let d = x - wall;
    let mut total = term(d);
    for n in 1..=n_max {
        let shift = 2.0 * h * n as f64;
        total += term(d + shift) + term(d - shift);
    }
    Ok(total)
}
