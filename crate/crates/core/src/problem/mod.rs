//! Problem data: initial temperature `phi(x)`, source `f(x, t)`, boundary
//! temperatures `mu1(t)`, `mu2(t)` and the flux datum `mu3(t) = a(t) u_x(0, t)`,
//! all tabulated and interpolated piecewise linearly.

mod manufacture;
mod neumann;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_increasing, differentiate, interp, locate, TimeGrid};

pub use manufacture::{manufacture, manufacture_neumann, ManufactureOptions, Manufactured, Scenario};
pub use neumann::neumann_transform;

/// On-disk layout of a problem file. `f` is row-major over `x_grid x t_grid`:
/// `f[j * t_grid.len() + k] = f(x_j, t_k)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProblemFile {
    h: f64,
    #[serde(rename = "T")]
    horizon: f64,
    beta: f64,
    x_grid: Vec<f64>,
    t_grid: Vec<f64>,
    phi: Vec<f64>,
    f: Vec<f64>,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    mu3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    h: f64,
    horizon: f64,
    beta: f64,
    x_grid: Vec<f64>,
    t_grid: Vec<f64>,
    phi: Vec<f64>,
    f: Vec<f64>,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    mu3: Vec<f64>,
}

/// Tabulated boundary and source data with the derivatives the flux formula
/// needs, all on the problem grids.
#[derive(Debug, Clone)]
pub struct DerivedData {
    pub phi_prime: Vec<f64>,
    /// `f_x`, row-major like `f`.
    pub f_x: Vec<f64>,
    pub mu1_prime: Vec<f64>,
    pub mu2_prime: Vec<f64>,
}

impl ProblemData {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        h: f64,
        horizon: f64,
        beta: f64,
        x_grid: Vec<f64>,
        t_grid: Vec<f64>,
        phi: Vec<f64>,
        f: Vec<f64>,
        mu1: Vec<f64>,
        mu2: Vec<f64>,
        mu3: Vec<f64>,
    ) -> Result<Self> {
        let p = Self { h, horizon, beta, x_grid, t_grid, phi, f, mu1, mu2, mu3 };
        p.validate()?;
        Ok(p)
    }

    /// Builds a problem by sampling analytic data on the given grids.
    pub fn from_functions(
        h: f64,
        beta: f64,
        x_grid: Vec<f64>,
        t_grid: Vec<f64>,
        phi: impl Fn(f64) -> f64,
        f: impl Fn(f64, f64) -> f64,
        mu: [&dyn Fn(f64) -> f64; 3],
    ) -> Result<Self> {
        let horizon = *t_grid.last().ok_or_else(|| Error::Malformed("empty t_grid".into()))?;
        let phi_v = x_grid.iter().map(|&x| phi(x)).collect();
        let mut f_v = Vec::with_capacity(x_grid.len() * t_grid.len());
        for &x in &x_grid {
            f_v.extend(t_grid.iter().map(|&t| f(x, t)));
        }
        let [m1, m2, m3] = mu;
        let mu1 = t_grid.iter().map(|&t| m1(t)).collect();
        let mu2 = t_grid.iter().map(|&t| m2(t)).collect();
        let mu3 = t_grid.iter().map(|&t| m3(t)).collect();
        Self::new(h, horizon, beta, x_grid, t_grid, phi_v, f_v, mu1, mu2, mu3)
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidParameter(format!("h must be positive, got {}", self.h)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("T must be positive, got {}", self.horizon)));
        }
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(Error::WeakDegeneration(self.beta));
        }
        let (nx, nt) = (self.x_grid.len(), self.t_grid.len());
        if nx < 2 || nt < 2 {
            return Err(Error::Malformed("x_grid and t_grid need at least two nodes".into()));
        }
        check_increasing(&self.x_grid, "x_grid")?;
        check_increasing(&self.t_grid, "t_grid")?;
        let span_tol = 1e-12;
        if self.x_grid[0] != 0.0 || (self.x_grid[nx - 1] - self.h).abs() > span_tol * self.h {
            return Err(Error::Malformed(format!(
                "x_grid must span [0, h] = [0, {}], got [{}, {}]",
                self.h,
                self.x_grid[0],
                self.x_grid[nx - 1]
            )));
        }
        if self.t_grid[0] != 0.0 || (self.t_grid[nt - 1] - self.horizon).abs() > span_tol * self.horizon {
            return Err(Error::Malformed(format!(
                "t_grid must span [0, T] = [0, {}], got [{}, {}]",
                self.horizon,
                self.t_grid[0],
                self.t_grid[nt - 1]
            )));
        }
        let expect = |name: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(Error::Malformed(format!("{name} has {len} values, expected {want}")))
            }
        };
        expect("phi", self.phi.len(), nx)?;
        expect("f", self.f.len(), nx * nt)?;
        expect("mu1", self.mu1.len(), nt)?;
        expect("mu2", self.mu2.len(), nt)?;
        expect("mu3", self.mu3.len(), nt)?;
        let all = [&self.phi, &self.f, &self.mu1, &self.mu2, &self.mu3];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Malformed("non-finite data value".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::new(
            file.h,
            file.horizon,
            file.beta,
            file.x_grid,
            file.t_grid,
            file.phi,
            file.f,
            file.mu1,
            file.mu2,
            file.mu3,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile {
            h: self.h,
            horizon: self.horizon,
            beta: self.beta,
            x_grid: self.x_grid.clone(),
            t_grid: self.t_grid.clone(),
            phi: self.phi.clone(),
            f: self.f.clone(),
            mu1: self.mu1.clone(),
            mu2: self.mu2.clone(),
            mu3: self.mu3.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::from_nodes(self.t_grid.clone()).expect("validated t_grid")
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    pub fn mu2(&self) -> &[f64] {
        &self.mu2
    }

    pub fn mu3(&self) -> &[f64] {
        &self.mu3
    }

    pub fn phi_at(&self, x: f64) -> f64 {
        interp(&self.x_grid, &self.phi, x)
    }

    pub fn mu1_at(&self, t: f64) -> f64 {
        interp(&self.t_grid, &self.mu1, t)
    }

    pub fn mu2_at(&self, t: f64) -> f64 {
        interp(&self.t_grid, &self.mu2, t)
    }

    pub fn mu3_at(&self, t: f64) -> f64 {
        interp(&self.t_grid, &self.mu3, t)
    }

    /// Bilinear interpolation of `f`.
    pub fn f_at(&self, x: f64, t: f64) -> f64 {
        bilinear(&self.x_grid, &self.t_grid, &self.f, x, t)
    }

    /// `f(x_j, t)` for every `x_j`, interpolated linearly in `t`.
    pub fn f_column(&self, t: f64) -> Vec<f64> {
        column(&self.x_grid, &self.t_grid, &self.f, t)
    }

    pub fn derived(&self) -> DerivedData {
        let nt = self.t_grid.len();
        let nx = self.x_grid.len();
        let mut f_x = vec![0.0; nx * nt];
        let mut col = vec![0.0; nx];
        for k in 0..nt {
            for j in 0..nx {
                col[j] = self.f[j * nt + k];
            }
            for (j, d) in differentiate(&self.x_grid, &col).into_iter().enumerate() {
                f_x[j * nt + k] = d;
            }
        }
        DerivedData {
            phi_prime: differentiate(&self.x_grid, &self.phi),
            f_x,
            mu1_prime: differentiate(&self.t_grid, &self.mu1),
            mu2_prime: differentiate(&self.t_grid, &self.mu2),
        }
    }

    pub(crate) fn with_replaced(&self, phi: Vec<f64>, f: Vec<f64>, mu3: Vec<f64>) -> Result<Self> {
        Self::new(
            self.h,
            self.horizon,
            self.beta,
            self.x_grid.clone(),
            self.t_grid.clone(),
            phi,
            f,
            self.mu1.clone(),
            self.mu2.clone(),
            mu3,
        )
    }

    /// Copy with `mu3` scaled by `lambda`.
    pub fn with_scaled_mu3(&self, lambda: f64) -> Result<Self> {
        let mu3 = self.mu3.iter().map(|v| v * lambda).collect();
        self.with_replaced(self.phi.clone(), self.f.clone(), mu3)
    }

    /// Copy with a different flux datum sampled on the same `t_grid`.
    pub fn with_mu3(&self, mu3: Vec<f64>) -> Result<Self> {
        self.with_replaced(self.phi.clone(), self.f.clone(), mu3)
    }
}

impl DerivedData {
    /// `f_x(x_j, t)` for every `x_j`.
    pub fn f_x_column(&self, problem: &ProblemData, t: f64) -> Vec<f64> {
        column(problem.x_grid(), problem.t_grid(), &self.f_x, t)
    }
}

pub(crate) fn column(xs: &[f64], ts: &[f64], table: &[f64], t: f64) -> Vec<f64> {
    let nt = ts.len();
    let (k, w) = time_weight(ts, t);
    (0..xs.len())
        .map(|j| {
            let row = &table[j * nt..(j + 1) * nt];
            if w == 0.0 {
                row[k]
            } else {
                row[k] + w * (row[k + 1] - row[k])
            }
        })
        .collect()
}

fn time_weight(ts: &[f64], t: f64) -> (usize, f64) {
    let nt = ts.len();
    if t <= ts[0] {
        return (0, 0.0);
    }
    if t >= ts[nt - 1] {
        return (nt - 1, 0.0);
    }
    let k = locate(ts, t);
    (k, (t - ts[k]) / (ts[k + 1] - ts[k]))
}

pub(crate) fn bilinear(xs: &[f64], ts: &[f64], table: &[f64], x: f64, t: f64) -> f64 {
    let nt = ts.len();
    let x = x.clamp(xs[0], xs[xs.len() - 1]);
    let j = locate(xs, x);
    let wx = (x - xs[j]) / (xs[j + 1] - xs[j]);
    let (k, wt) = time_weight(ts, t);
    let at = |jj: usize| {
        let row = &table[jj * nt..(jj + 1) * nt];
        if wt == 0.0 {
            row[k]
        } else {
            row[k] + wt * (row[k + 1] - row[k])
        }
    };
    let left = at(j);
    if wx == 0.0 {
        left
    } else {
        left + wx * (at(j + 1) - left)
    }
}

/// Outcome of a hypothesis check on problem data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub pass: bool,
    pub conditions: Vec<ConditionCheck>,
    /// Informational findings that do not affect `pass`.
    pub notes: Vec<ConditionCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    /// Signed slack of the checked inequality; negative means violated.
    pub margin: f64,
    /// Worst offending (or tightest) coordinate: `x`, `t`, or null.
    pub location: Option<f64>,
}

impl HypothesisReport {
    pub fn from_conditions(conditions: Vec<ConditionCheck>, notes: Vec<ConditionCheck>) -> Self {
        let pass = conditions.iter().all(|c| c.pass);
        Self { pass, conditions, notes }
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.conditions.iter().filter(|c| !c.pass)
    }
}
