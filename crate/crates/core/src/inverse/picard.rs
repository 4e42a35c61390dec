//! Damped fixed-point iteration for `a = P a`, `(P a)(t) = mu3(t) / u_x(0, t; a)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::direct::FluxEvaluator;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::inverse::band::{apriori_band_on, h_limit, BandProfile};
use crate::inverse::Coefficient;
use crate::problem::ProblemData;
use crate::validate::check_hypotheses;

/// Iterates may exceed the upper profile by this much before being flagged.
pub const BAND_SLACK: f64 = 1e-6;
const MIN_RELAXATION: f64 = 1.0 / 64.0;
const OSCILLATION_RUN: usize = 3;

#[derive(Debug, Clone)]
pub struct PicardOptions {
    pub relaxation: f64,
    /// Stop when the weighted sup change drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Inversion grid; the problem's time grid when `None`.
    pub grid: Option<TimeGrid>,
    /// Starting coefficient; `h_limit^2 t^beta` when `None`.
    pub initial: Option<Coefficient>,
    /// Skip the hypothesis gate.
    pub force: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { relaxation: 0.5, tolerance: 1e-8, max_iterations: 200, grid: None, initial: None, force: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `max_i |a_n - a_{n-1}|(t_i) / t_i^beta`.
    pub weighted_change: f64,
    pub relaxation: f64,
    /// `max_i (a_n - upper)(t_i)`; NaN when no band is available.
    pub band_excess: f64,
    pub band_violation: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceLog {
    /// Band excess of the starting coefficient.
    pub initial_band_excess: f64,
    pub records: Vec<IterationRecord>,
}

impl ConvergenceLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when the start and every iterate stayed below the upper profile
    /// plus [`BAND_SLACK`].
    pub fn within_band(&self) -> bool {
        !(self.initial_band_excess > BAND_SLACK) && self.records.iter().all(|r| !r.band_violation)
    }
}

#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub coefficient: Coefficient,
    pub log: ConvergenceLog,
    /// `max_i |a(t_i) u_x(0, t_i) - mu3(t_i)| / mu3(t_i)`.
    pub residual: f64,
    pub band: Option<BandProfile>,
}

impl PicardSolution {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

fn mu3_on(problem: &ProblemData, grid: &TimeGrid) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let mut out = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        let v = problem.mu3_at(nodes[i]);
        if !(v > 0.0) {
            return Err(Error::NonPositiveDatum { index: i, t: nodes[i], value: v });
        }
        out[i] = v;
    }
    Ok(out)
}

fn apply(evaluator: &FluxEvaluator<'_>, mu3: &[f64], a: &Coefficient) -> Result<Coefficient> {
    let flux = evaluator.flux(a)?;
    let nodes = a.grid().nodes();
    let mut values = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        let q = flux.at(i);
        if !(q > 0.0) {
            return Err(Error::NonPositiveFlux { index: i, t: nodes[i], value: q });
        }
        values[i] = mu3[i] / q;
    }
    Coefficient::new(a.grid().clone(), values, a.beta())
}

/// One application of `P` on the grid of `a`.
pub fn picard_step(problem: &ProblemData, a: &Coefficient) -> Result<Coefficient> {
    let mu3 = mu3_on(problem, a.grid())?;
    apply(&FluxEvaluator::new(problem, a.grid()), &mu3, a)
}

fn initial_guess(problem: &ProblemData, grid: &TimeGrid, band: Option<&BandProfile>) -> Result<Coefficient> {
    let beta = problem.beta();
    let level = h_limit(problem)
        .ok()
        .or_else(|| band.map(|b| b.h[1]).filter(|v| v.is_finite()))
        .unwrap_or(1.0);
    let weight = (level * level).clamp(1e-6, 1e6);
    let nodes = grid.nodes();
    let values = nodes
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let a = weight * t.powf(beta);
            match band {
                Some(b) if i > 0 && b.upper[i] > 0.0 => a.min(b.upper[i]),
                _ => a,
            }
        })
        .collect();
    Coefficient::new(grid.clone(), values, beta)
}

/// Signed change of the largest weighted update.
fn dominant_change(old: &Coefficient, new: &Coefficient) -> (f64, f64) {
    let nodes = old.grid().nodes();
    let beta = old.beta();
    let mut best = (0.0, 0.0);
    for i in 1..nodes.len() {
        let d = (new.values()[i] - old.values()[i]) / nodes[i].powf(beta);
        if d.abs() > best.0 {
            best = (d.abs(), d);
        }
    }
    best
}

pub fn picard_solve(problem: &ProblemData, opts: &PicardOptions) -> Result<PicardSolution> {
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::InvalidParameter(format!("relaxation must lie in (0, 1], got {}", opts.relaxation)));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tolerance)));
    }
    if !opts.force {
        let report = check_hypotheses(problem);
        if !report.pass {
            let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            return Err(Error::Hypothesis(names.join(", ")));
        }
    }
    let grid = match (&opts.grid, &opts.initial) {
        (Some(g), _) => g.clone(),
        (None, Some(a)) => a.grid().clone(),
        (None, None) => problem.time_grid(),
    };
    let mu3 = mu3_on(problem, &grid)?;
    let band = apriori_band_on(problem, &grid).ok();
    let mut a = match &opts.initial {
        Some(a0) if a0.grid().nodes() == grid.nodes() => a0.clone(),
        Some(_) => return Err(Error::InvalidParameter("initial coefficient is not on the inversion grid".into())),
        None => initial_guess(problem, &grid, band.as_ref())?,
    };
    let evaluator = FluxEvaluator::new(problem, &grid);
    let excess = |a: &Coefficient| band.as_ref().map_or(f64::NAN, |b| b.excess(a));
    let mut log = ConvergenceLog { initial_band_excess: excess(&a), records: Vec::new() };
    let mut omega = opts.relaxation;
    let mut last_sign = 0.0f64;
    let mut alternations = 0;
    let mut change = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let image = apply(&evaluator, &mu3, &a)?;
        let values = a.values().iter().zip(image.values()).map(|(x, y)| (1.0 - omega) * x + omega * y).collect();
        let next = Coefficient::new(grid.clone(), values, problem.beta())?;
        let (size, signed) = dominant_change(&a, &next);
        change = size;
        let band_excess = excess(&next);
        log.records.push(IterationRecord {
            iteration,
            weighted_change: change,
            relaxation: omega,
            band_excess,
            band_violation: band_excess > BAND_SLACK,
        });
        a = next;
        if change < opts.tolerance {
            let flux = evaluator.flux(&a)?;
            let residual = (1..grid.len())
                .map(|i| (a.values()[i] * flux.at(i) - mu3[i]).abs() / mu3[i])
                .fold(0.0, f64::max);
            return Ok(PicardSolution { coefficient: a, log, residual, band });
        }
        if last_sign != 0.0 && signed * last_sign < 0.0 {
            alternations += 1;
        } else {
            alternations = 0;
        }
        last_sign = signed;
        if alternations >= OSCILLATION_RUN && omega > MIN_RELAXATION {
            omega = (0.5 * omega).max(MIN_RELAXATION);
            alternations = 0;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, last_change: change, log: Box::new(log) })
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    /// Largest pairwise weighted sup distance between the limits.
    pub distance: f64,
    pub limits: Vec<PicardSolution>,
}

/// Runs [`picard_solve`] from `n_starts` initial coefficients obtained by
/// scaling the default start by factors log-spaced over `spread`.
pub fn uniqueness_probe(
    problem: &ProblemData,
    n_starts: usize,
    spread: (f64, f64),
    opts: &PicardOptions,
) -> Result<ProbeResult> {
    let (lo, hi) = spread;
    if n_starts < 2 || !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "probe needs at least 2 starts and 0 < spread low <= high, got {n_starts} and ({lo}, {hi})"
        )));
    }
    if !opts.force {
        let report = check_hypotheses(problem);
        if !report.pass {
            let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
            return Err(Error::Hypothesis(names.join(", ")));
        }
    }
    let grid = opts.grid.clone().unwrap_or_else(|| problem.time_grid());
    let band = apriori_band_on(problem, &grid).ok();
    let base = initial_guess(problem, &grid, band.as_ref())?;
    let limits = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let factor = lo * (hi / lo).powf(k as f64 / (n_starts - 1) as f64);
            let values = base.values().iter().map(|v| v * factor).collect();
            let start = Coefficient::new(grid.clone(), values, problem.beta())?;
            let run = PicardOptions { grid: Some(grid.clone()), initial: Some(start), force: true, ..opts.clone() };
            picard_solve(problem, &run).map_err(|e| Error::ProbeStart { start: k, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut distance = 0.0f64;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            distance = distance.max(limits[i].coefficient.weighted_distance(&limits[j].coefficient));
        }
    }
    Ok(ProbeResult { distance, limits })
}
