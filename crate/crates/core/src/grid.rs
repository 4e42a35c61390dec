//! Time meshes and piecewise-linear sampled functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increasing time nodes `0 = t_0 < t_1 < ... < t_N = T`.
///
/// Graded meshes `t_i = T (i/N)^gamma` cluster nodes near `t = 0`, where the
/// coefficient vanishes like `t^beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    gamma: Option<f64>,
}

pub const DEFAULT_GAMMA: f64 = 2.0;

impl TimeGrid {
    pub fn graded(horizon: f64, panels: usize, gamma: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if panels == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one panel".into()));
        }
        if !(gamma >= 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("grading exponent must be >= 1, got {gamma}")));
        }
        let n = panels as f64;
        let mut nodes: Vec<f64> = (0..=panels).map(|i| horizon * (i as f64 / n).powf(gamma)).collect();
        nodes[panels] = horizon;
        Ok(Self { nodes, gamma: Some(gamma) })
    }

    pub fn uniform(horizon: f64, panels: usize) -> Result<Self> {
        Self::graded(horizon, panels, 1.0)
    }

    /// Wraps arbitrary nodes; they must start at 0 and increase strictly.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InsufficientData("time grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("time grid must start at 0, got {}", nodes[0])));
        }
        check_increasing(&nodes, "t_grid")?;
        Ok(Self { nodes, gamma: None })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Same grading with `factor` times as many panels. For graded grids the
    /// coarse nodes are a subset of the refined ones.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        match self.gamma {
            Some(g) => Self::graded(self.horizon(), self.panels() * factor, g),
            None => {
                let mut nodes = Vec::with_capacity(self.panels() * factor + 1);
                for w in self.nodes.windows(2) {
                    for k in 0..factor {
                        nodes.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
                    }
                }
                nodes.push(self.horizon());
                Self::from_nodes(nodes)
            }
        }
    }

    /// Index `j` of the panel `[t_j, t_{j+1}]` containing `t` (clamped).
    pub fn locate(&self, t: f64) -> usize {
        locate(&self.nodes, t)
    }
}

pub(crate) fn check_increasing(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed(format!("{what} contains non-finite values")));
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneGrid(format!(
            "{what}[{}] = {} does not exceed {what}[{}] = {}",
            i + 1,
            xs[i + 1],
            i,
            xs[i]
        )));
    }
    Ok(())
}

/// Panel index for `x` in the increasing array `xs`, clamped to `[0, len - 2]`.
pub(crate) fn locate(xs: &[f64], x: f64) -> usize {
    let last = xs.len() - 2;
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[last + 1] {
        return last;
    }
    xs.partition_point(|&v| v <= x).saturating_sub(1).min(last)
}

/// Piecewise-linear interpolation of `(xs, ys)`, constant beyond the ends.
pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = locate(xs, x);
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    ys[j] + w * (ys[j + 1] - ys[j])
}

/// Second-order derivative estimate at every node: centered three-point
/// formula inside, one-sided three-point formula at the ends. Needs at least
/// three nodes; with two nodes it falls back to the secant slope.
pub(crate) fn differentiate(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n == 2 {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let slope = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let hl = xs[i] - xs[i - 1];
        let hr = xs[i + 1] - xs[i];
        d[i] = (hr * slope(i - 1) + hl * slope(i)) / (hl + hr);
    }
    let (h1, h2) = (xs[1] - xs[0], xs[2] - xs[1]);
    d[0] = ((2.0 * h1 + h2) * slope(0) - h1 * slope(1)) / (h1 + h2);
    let (h1, h2) = (xs[n - 1] - xs[n - 2], xs[n - 2] - xs[n - 3]);
    d[n - 1] = ((2.0 * h1 + h2) * slope(n - 2) - h1 * slope(n - 3)) / (h1 + h2);
    d
}

/// A function known by its values on an increasing grid, evaluated by
/// piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Sampled {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Malformed(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InsufficientData("sampled function needs at least two nodes".into()));
        }
        check_increasing(&grid, "grid")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite sample value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.to_vec(), grid.iter().map(|&x| f(x)).collect())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        interp(&self.grid, &self.values, x)
    }

    pub fn derivative(&self) -> Sampled {
        Sampled { values: differentiate(&self.grid, &self.values), grid: self.grid.clone() }
    }

    pub fn resample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_nodes_follow_power_law() {
        let g = TimeGrid::graded(2.0, 8, 2.0).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_eq!(t, 2.0 * (i as f64 / 8.0).powf(2.0));
        }
        assert_eq!(g.horizon(), 2.0);
    }

    #[test]
    fn refined_graded_grid_contains_coarse_nodes() {
        let g = TimeGrid::graded(1.0, 10, 2.0).unwrap();
        let f = g.refine(4).unwrap();
        for (i, &t) in g.nodes().iter().enumerate() {
            assert!((f.nodes()[4 * i] - t).abs() <= 1e-15);
        }
    }

    #[test]
    fn rejects_non_monotone_nodes() {
        let err = TimeGrid::from_nodes(vec![0.0, 0.5, 0.4]).unwrap_err();
        assert!(err.to_string().contains("non-monotone grid"));
        assert!(TimeGrid::from_nodes(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::graded(1.0, 4, 0.5).is_err());
    }

    #[test]
    fn locate_and_interp() {
        let xs = [0.0, 1.0, 3.0];
        assert_eq!(locate(&xs, -1.0), 0);
        assert_eq!(locate(&xs, 1.0), 1);
        assert_eq!(locate(&xs, 3.0), 1);
        assert_eq!(interp(&xs, &[0.0, 2.0, 6.0], 2.0), 4.0);
        assert_eq!(interp(&xs, &[0.0, 2.0, 6.0], 7.0), 6.0);
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let xs = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let d = differentiate(&xs, &ys);
        for (x, dx) in xs.iter().zip(d) {
            assert!((dx - (6.0 * x - 1.0)).abs() < 1e-12, "{x}: {dx}");
        }
    }
}
