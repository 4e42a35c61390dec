use crate::error::{Error, Result};
use crate::grid::{interp, locate, TimeGrid};

/// Sampled diffusivity `a(t_i)` on a [`TimeGrid`], vanishing like `t^beta`
/// at the initial moment.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    grid: TimeGrid,
    values: Vec<f64>,
    beta: f64,
}

impl Coefficient {
    /// Admissible coefficient: `a(0) = 0`, `a(t_i) >= 0`.
    pub fn new(grid: TimeGrid, values: Vec<f64>, beta: f64) -> Result<Self> {
        let a = Self::from_samples(grid, values, beta)?;
        a.check_admissible()?;
        Ok(a)
    }

    /// Any finite samples; admissibility is left to the consumer.
    pub fn from_samples(grid: TimeGrid, values: Vec<f64>, beta: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficient samples for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient sample".into()));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!("degeneration exponent must be >= 0, got {beta}")));
        }
        Ok(Self { grid, values, beta })
    }

    /// `c t^beta` on the grid.
    pub fn power_law(grid: TimeGrid, scale: f64, beta: f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| scale * t.powf(beta)).collect();
        Self::new(grid, values, beta)
    }

    /// `values[i] = weighted[i] t_i^beta`; index 0 is ignored (`a(0) = 0`).
    pub fn from_weighted(grid: TimeGrid, weighted: &[f64], beta: f64) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .zip(weighted)
            .enumerate()
            .map(|(i, (&t, &w))| if i == 0 { 0.0 } else { w * t.powf(beta) })
            .collect();
        Self::from_samples(grid, values, beta)
    }

    pub fn check_admissible(&self) -> Result<()> {
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeCoefficient { index, value });
        }
        if self.values[0] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coefficient must vanish at t = 0, got {}",
                self.values[0]
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `a(t_i) / t_i^beta`; `None` at `t = 0`.
    pub fn weighted(&self, i: usize) -> Option<f64> {
        let t = self.grid.nodes()[i];
        (t > 0.0).then(|| self.values[i] / t.powf(self.beta))
    }

    pub fn weighted_values(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.weighted(i).unwrap_or(f64::NAN)).collect()
    }

    /// `t^beta` times the linear interpolant of `a / t^beta`; on `(0, t_1)`
    /// the power-law continuation `a(t_1) (t / t_1)^beta`.
    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= nodes[nodes.len() - 1] {
            return self.values[nodes.len() - 1];
        }
        if t < nodes[1] {
            if self.values[0] != 0.0 || self.beta == 0.0 {
                return interp(nodes, &self.values, t);
            }
            return self.values[1] * (t / nodes[1]).powf(self.beta);
        }
        if self.beta == 0.0 {
            return interp(nodes, &self.values, t);
        }
        let j = locate(nodes, t);
        let (t0, t1) = (nodes[j], nodes[j + 1]);
        let w0 = self.values[j] / t0.powf(self.beta);
        let w1 = self.values[j + 1] / t1.powf(self.beta);
        t.powf(self.beta) * (w0 + (w1 - w0) * (t - t0) / (t1 - t0))
    }

    /// Weighted sup distance `max_{i >= 1} |a_i - b_i| / t_i^beta`.
    pub fn weighted_distance(&self, other: &Coefficient) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .skip(1)
            .map(|(&t, (a, b))| (a - b).abs() / t.powf(self.beta))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_has_constant_weight() {
        let g = TimeGrid::graded(1.0, 10, 2.0).unwrap();
        let a = Coefficient::power_law(g, 2.5, 2.0).unwrap();
        for i in 1..a.values().len() {
            assert!((a.weighted(i).unwrap() - 2.5).abs() < 1e-14);
        }
        assert_eq!(a.weighted(0), None);
        assert!((a.eval(1e-4) - 2.5e-8).abs() < 1e-20);
    }

    #[test]
    fn admissibility() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(Coefficient::new(g.clone(), vec![0.1, 1.0, 2.0], 1.0).is_err());
        assert!(matches!(
            Coefficient::new(g.clone(), vec![0.0, -1.0, 2.0], 1.0),
            Err(Error::NegativeCoefficient { index: 1, .. })
        ));
        assert!(Coefficient::from_samples(g, vec![0.0, 1.0], 1.0).is_err());
    }
}
