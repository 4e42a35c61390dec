//! Checks of the existence-and-uniqueness hypotheses on tabulated data and of
//! the degeneration exponent of a coefficient.
//!
//! Strict inequalities pass when the sampled minimum exceeds `epsilon`;
//! non-strict ones tolerate a deficit at rounding level of the data scale.

use crate::error::{Error, Result};
use crate::grid::differentiate;
use crate::inverse::Coefficient;
use crate::problem::{ConditionCheck, HypothesisReport, ProblemData};

const LIMIT_SLOPE_TOL: f64 = 0.1;
const COMPATIBILITY_TOL: f64 = 1e-10;
const ROUNDING_TOL: f64 = 1e-12;

/// Indices of the nodes in `(0, T/10]`.
pub(crate) fn first_decade(ts: &[f64]) -> Vec<usize> {
    let cut = ts[ts.len() - 1] / 10.0;
    (0..ts.len()).filter(|&k| ts[k] > 0.0 && ts[k] <= cut * (1.0 + 1e-12)).collect()
}

/// Least-squares `(slope, intercept)` of `ln y` against `ln t`.
pub(crate) fn loglog_fit(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn check(name: &str, margin: f64, pass: bool, location: Option<f64>) -> ConditionCheck {
    ConditionCheck { name: name.into(), pass, margin, location }
}

/// Minimum of `values` and the coordinate where it occurs.
fn minimum(coords: &[f64], values: impl Iterator<Item = f64>) -> (f64, Option<f64>) {
    values
        .zip(coords)
        .fold((f64::INFINITY, None), |(m, at), (v, &c)| if v < m { (v, Some(c)) } else { (m, at) })
}

fn scale_of(values: &[&[f64]]) -> f64 {
    values.iter().flat_map(|v| v.iter()).fold(1.0f64, |m, x| m.max(x.abs()))
}

pub fn check_hypotheses(problem: &ProblemData) -> HypothesisReport {
    check_hypotheses_with(problem, 0.0)
}

/// Same as [`check_hypotheses`] with strict inequalities required to hold
/// with margin `epsilon`.
pub fn check_hypotheses_with(problem: &ProblemData, epsilon: f64) -> HypothesisReport {
    let d = problem.derived();
    let xs = problem.x_grid();
    let ts = problem.t_grid();
    let (nx, nt) = (xs.len(), ts.len());
    let f = problem.f();
    let beta = problem.beta();
    let mut conditions = Vec::new();

    let (m, at) = minimum(xs, d.phi_prime.iter().copied());
    let tol = ROUNDING_TOL * scale_of(&[&d.phi_prime]);
    conditions.push(check("phi_prime_nonnegative", m, m >= -tol, at));

    let (m, at) = minimum(ts, (0..nt).map(|k| f[k] - d.mu1_prime[k]));
    conditions.push(check("boundary_source_positive", m - epsilon, m > epsilon, at));

    let right: Vec<f64> = (0..nt).map(|k| d.mu2_prime[k] - f[(nx - 1) * nt + k]).collect();
    let (m, at) = minimum(ts, right.iter().copied());
    let tol = ROUNDING_TOL * scale_of(&[&d.mu2_prime, f]);
    conditions.push(check("right_boundary_nonnegative", m, m >= -tol, at));

    let (m, at) = minimum(&ts[1..], problem.mu3()[1..].iter().copied());
    conditions.push(check("mu3_positive", m - epsilon, m > epsilon, at));

    conditions.push(mu3_limit(problem, beta));

    let mut worst = (f64::INFINITY, None);
    for j in 0..nx {
        let (m, _) = minimum(ts, d.f_x[j * nt..(j + 1) * nt].iter().copied());
        if m < worst.0 {
            worst = (m, Some(xs[j]));
        }
    }
    let tol = ROUNDING_TOL * scale_of(&[&d.f_x]);
    conditions.push(check("source_x_nonnegative", worst.0, worst.0 >= -tol, worst.1));

    let scale = scale_of(&[problem.phi(), problem.mu1(), problem.mu2()]);
    let left_gap = (problem.phi()[0] - problem.mu1()[0]).abs();
    let right_gap = (problem.phi()[nx - 1] - problem.mu2()[0]).abs();
    let tol = COMPATIBILITY_TOL * scale;
    conditions.push(check("compatibility_left", tol - left_gap, left_gap <= tol, Some(0.0)));
    conditions.push(check("compatibility_right", tol - right_gap, right_gap <= tol, Some(problem.h())));

    // Second x-derivatives of phi and f, first t-derivatives of the boundary data.
    let phi_xx = differentiate(xs, &d.phi_prime);
    let mut f_xx = Vec::with_capacity(nx * nt);
    let mut col = vec![0.0; nx];
    for k in 0..nt {
        for j in 0..nx {
            col[j] = d.f_x[j * nt + k];
        }
        f_xx.extend(differentiate(xs, &col));
    }
    let mu3_prime = differentiate(ts, problem.mu3());
    let largest = [&phi_xx, &f_xx, &d.mu1_prime, &d.mu2_prime, &mu3_prime]
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
    conditions.push(check("smoothness", largest, largest.is_finite(), None));

    let largest_fx = d.f_x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let notes = vec![check("relaxed_smoothness", largest_fx, largest_fx.is_finite(), None)];
    HypothesisReport::from_conditions(conditions, notes)
}

fn mu3_limit(problem: &ProblemData, beta: f64) -> ConditionCheck {
    let ts = problem.t_grid();
    let mu3 = problem.mu3();
    let window = first_decade(ts);
    let expected = 0.5 * (beta + 1.0);
    if window.len() < 3 {
        return check("mu3_limit", f64::NAN, false, None);
    }
    if let Some(&k) = window.iter().find(|&&k| !(mu3[k] > 0.0)) {
        return check("mu3_limit", f64::NAN, false, Some(ts[k]));
    }
    let xs: Vec<f64> = window.iter().map(|&k| ts[k]).collect();
    let ys: Vec<f64> = window.iter().map(|&k| mu3[k]).collect();
    let (slope, _) = loglog_fit(&xs, &ys);
    let margin = LIMIT_SLOPE_TOL - (slope - expected).abs();
    check("mu3_limit", margin, margin >= 0.0, Some(xs[xs.len() - 1]))
}

/// Log-log slope of `a` over the nodes in `(0, T/10]`.
pub fn estimate_beta(a: &Coefficient) -> Result<f64> {
    let ts = a.grid().nodes();
    let window = first_decade(ts);
    if window.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} nodes in (0, T/10], need at least 4",
            window.len()
        )));
    }
    let values = a.values();
    if let Some(&k) = window.iter().find(|&&k| !(values[k] > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "coefficient {} at t = {} is not positive",
            values[k], ts[k]
        )));
    }
    let xs: Vec<f64> = window.iter().map(|&k| ts[k]).collect();
    let ys: Vec<f64> = window.iter().map(|&k| values[k]).collect();
    Ok(loglog_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn data(phi0: f64, f0: f64, mu3: &dyn Fn(f64) -> f64) -> ProblemData {
        let xs: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let ts = TimeGrid::graded(1.0, 40, 2.0).unwrap().nodes().to_vec();
        ProblemData::from_functions(1.0, 1.0, xs, ts, move |x| phi0 + x, move |x, _| f0 + x, [&|_| 0.0, &|t| 1.0 + (1.0 + f0) * t, mu3])
            .unwrap()
    }

    #[test]
    fn steady_data_fails_strict_source_condition() {
        let xs: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let ts: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let p = ProblemData::from_functions(1.0, 1.0, xs, ts, |x| x, |_, _| 0.0, [&|_| 0.0, &|_| 1.0, &|t| t]).unwrap();
        let r = check_hypotheses(&p);
        let c = r.condition("boundary_source_positive").unwrap();
        assert!(!c.pass);
        assert_eq!(c.margin, 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn smooth_positive_data_passes() {
        let r = check_hypotheses(&data(0.0, 1.0, &|t| t));
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        let r = check_hypotheses_with(&data(0.0, 1.0, &|t| t), 2.0);
        assert!(!r.condition("boundary_source_positive").unwrap().pass);
    }

    #[test]
    fn compatibility_failure() {
        let r = check_hypotheses(&data(1.0, 1.0, &|t| t));
        assert!(!r.condition("compatibility_left").unwrap().pass);
        assert!(!r.pass);
    }

    #[test]
    fn sign_and_limit_failures() {
        let r = check_hypotheses(&data(0.0, 1.0, &|t| t - 0.5));
        assert!(!r.condition("mu3_positive").unwrap().pass);
        let r = check_hypotheses(&data(0.0, 1.0, &|t| t * t));
        assert!(!r.condition("mu3_limit").unwrap().pass);
        assert!(r.condition("mu3_positive").unwrap().pass);
    }

    #[test]
    fn report_serializes_per_condition() {
        let r = check_hypotheses(&data(0.0, 1.0, &|t| t));
        let v = serde_json::to_value(&r).unwrap();
        let first = &v["conditions"][0];
        for key in ["name", "pass", "margin", "location"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn exponent_of_power_laws() {
        let g = TimeGrid::graded(1.0, 50, 2.0).unwrap();
        let a = Coefficient::power_law(g.clone(), 1.0, 2.0).unwrap();
        assert!((estimate_beta(&a).unwrap() - 2.0).abs() < 1e-10);
        let a = Coefficient::power_law(g.clone(), 3.0, 1.0).unwrap();
        assert!((estimate_beta(&a).unwrap() - 1.0).abs() < 1e-10);
        let coarse = Coefficient::power_law(TimeGrid::uniform(1.0, 10).unwrap(), 1.0, 1.0).unwrap();
        assert!(matches!(estimate_beta(&coarse), Err(Error::InsufficientData(_))));
    }
}
