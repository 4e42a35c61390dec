use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use heatinv::cli::run_from;
use heatinv::fdoracle::{fd_solve, FdMesh};
use heatinv::{Coefficient, ProblemData, TimeGrid};

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("heatinv").chain(args.iter().copied()))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/heating")
}

/// Rows of a CSV with a header line.
fn read_csv(p: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn write_coefficient(p: &Path, a: &Coefficient) {
    let mut text = String::from("t,a\n");
    for (t, v) in a.grid().nodes().iter().zip(a.values()) {
        text.push_str(&format!("{t:.16e},{v:.16e}\n"));
    }
    fs::write(p, text).unwrap();
}

/// `phi = x`, `f = 0`, `mu1 = 0`, `mu2 = 1` on `[0, 1]`: the steady state
/// `u = x` with the given flux datum.
fn steady_problem(dir: &Path, mu3: &dyn Fn(f64) -> f64) -> PathBuf {
    let grid = TimeGrid::graded(1.0, 20, 2.0).unwrap();
    let xs = (0..=10).map(|j| j as f64 / 10.0).collect();
    let p = ProblemData::from_functions(1.0, 1.0, xs, grid.nodes().to_vec(), |x| x, |_, _| 0.0, [&|_| 0.0, &|_| 1.0, mu3])
        .unwrap();
    let file = dir.join("problem.json");
    p.save(&file).unwrap();
    file
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn direct_steady_fixture_has_unit_flux() {
    let dir = tempfile::tempdir().unwrap();
    let problem = steady_problem(dir.path(), &|t| t);
    let coef = dir.path().join("a.csv");
    write_coefficient(&coef, &Coefficient::power_law(TimeGrid::graded(1.0, 20, 2.0).unwrap(), 1.0, 1.0).unwrap());
    let out = dir.path().join("out");
    assert_eq!(run(&["direct", "--input", path(&problem), "--coefficient", path(&coef), "--out", path(&out)]), 0);
    let flux = read_csv(&out.join("flux.csv"));
    assert_eq!(flux.len(), 20);
    assert!(flux.iter().all(|r| (r[1] - 1.0).abs() < 1e-9), "{flux:?}");
    for row in read_csv(&out.join("u.csv")) {
        assert!((row[2] - row[0]).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn direct_constant_fixture_has_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let grid = TimeGrid::graded(1.0, 12, 2.0).unwrap();
    let xs = (0..=10).map(|j| j as f64 / 10.0).collect();
    let p = ProblemData::from_functions(1.0, 2.0, xs, grid.nodes().to_vec(), |_| 2.5, |_, _| 0.0, [&|_| 2.5, &|_| 2.5, &|t| t])
        .unwrap();
    let problem = dir.path().join("problem.json");
    p.save(&problem).unwrap();
    let coef = dir.path().join("a.csv");
    write_coefficient(&coef, &Coefficient::power_law(grid, 0.7, 2.0).unwrap());
    let out = dir.path().join("out");
    assert_eq!(run(&["direct", "--input", path(&problem), "--coefficient", path(&coef), "--out", path(&out), "--nx", "7"]), 0);
    let rows = read_csv(&out.join("u.csv"));
    assert_eq!(rows.len(), 13 * 8);
    assert!(rows.iter().all(|r| (r[2] - 2.5).abs() < 1e-8));
    assert!(read_csv(&out.join("flux.csv")).iter().all(|r| r[1].abs() < 1e-8));
}

#[test]
fn direct_heating_matches_finite_difference_golden() {
    let fixtures = fixture_dir();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "direct",
        "--input",
        path(&fixtures.join("problem.json")),
        "--coefficient",
        path(&fixtures.join("coefficient.csv")),
        "--out",
        path(&out),
        "--nx",
        "10",
    ]);
    assert_eq!(code, 0);
    for name in ["u.csv", "flux.csv"] {
        let got = read_csv(&out.join(name));
        let want = read_csv(&fixtures.join(name));
        assert_eq!(got.len(), want.len(), "{name}");
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.iter().zip(w) {
                assert!((a - b).abs() <= 1e-6, "{name}: {g:?} vs {w:?}");
            }
        }
    }
}

/// Rebuilds the heating fixture and its golden outputs from the
/// finite-difference oracle. Three time refinements are combined to remove
/// the `r^-1.5` and `r^-2` terms of the time error.
#[test]
#[ignore]
#[allow(clippy::needless_range_loop)]
fn regenerate_heating_golden() {
    let dir = fixture_dir();
    fs::create_dir_all(&dir).unwrap();
    let grid = TimeGrid::graded(1.0, 20, 2.0).unwrap();
    let a = Coefficient::power_law(grid.clone(), 1.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
    let p = ProblemData::from_functions(
        1.0,
        1.0,
        xs.clone(),
        grid.nodes().to_vec(),
        |_| 0.0,
        |x, _| 1.0 + x,
        [&|_| 0.0, &|t| 2.0 * t, &|t| t.powf(1.5)],
    )
    .unwrap();
    p.save(dir.join("problem.json")).unwrap();
    write_coefficient(&dir.join("coefficient.csv"), &a);

    let levels: Vec<(Vec<f64>, Vec<f64>)> = [128usize, 256, 512]
        .iter()
        .map(|&r| {
            let fine = grid.refine(r).unwrap();
            let af = Coefficient::new(fine.clone(), fine.nodes().iter().map(|&t| a.eval(t)).collect(), 1.0).unwrap();
            let mesh = FdMesh::graded(1.0, 6400, 3.0, fine, 0.5).unwrap().with_extrapolated_euler();
            let s = fd_solve(&p, &af, &mesh).unwrap();
            let u = (0..grid.len()).flat_map(|i| xs.iter().map(|&x| s.field.interp_x(i * r, x)).collect::<Vec<_>>()).collect();
            let flux = (1..grid.len()).map(|i| s.flux[i * r]).collect();
            (u, flux)
        })
        .collect();
    let k = 2f64.powf(1.5);
    let combine = |f1: f64, f2: f64, f3: f64| (4.0 * (k * f3 - f2) / (k - 1.0) - (k * f2 - f1) / (k - 1.0)) / 3.0;

    let nodes = grid.nodes();
    let mut u_csv = String::from("x,t,u\n");
    for i in 0..grid.len() {
        for (j, &x) in xs.iter().enumerate() {
            let n = i * xs.len() + j;
            let v = if i == 0 { p.phi_at(x) } else { combine(levels[0].0[n], levels[1].0[n], levels[2].0[n]) };
            u_csv.push_str(&format!("{x:.16e},{:.16e},{v:.16e}\n", nodes[i]));
        }
    }
    let mut flux_csv = String::from("t,ux0\n");
    for i in 1..grid.len() {
        let v = combine(levels[0].1[i - 1], levels[1].1[i - 1], levels[2].1[i - 1]);
        flux_csv.push_str(&format!("{:.16e},{v:.16e}\n", nodes[i]));
    }
    fs::write(dir.join("u.csv"), u_csv).unwrap();
    fs::write(dir.join("flux.csv"), flux_csv).unwrap();
}

#[test]
fn inverse_steady_fixture_recovers_datum() {
    let dir = tempfile::tempdir().unwrap();
    let problem = steady_problem(dir.path(), &|t| t);
    let out = dir.path().join("out");
    // The steady data sits on the boundary of the strict source condition.
    assert_eq!(run(&["inverse", "--input", path(&problem), "--out", path(&out)]), 2);
    assert_eq!(run(&["inverse", "--input", path(&problem), "--out", path(&out), "--force"]), 0);
    let rows = read_csv(&out.join("a.csv"));
    assert_eq!(rows.len(), 21);
    for r in &rows[1..] {
        assert!((r[1] - r[0]).abs() <= 1e-6 * r[0], "{r:?}");
        assert!((r[2] - 1.0).abs() <= 1e-6);
    }
    let conv = read_csv(&out.join("convergence.csv"));
    assert!(!conv.is_empty() && conv.iter().all(|r| r.len() == 3));
    let rep = report(&out);
    assert_eq!(rep["converged"], true);
    assert!(rep["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn inverse_rejects_sign_violating_datum() {
    let dir = tempfile::tempdir().unwrap();
    let problem = steady_problem(dir.path(), &|t| t - 0.5);
    let out = dir.path().join("out");
    assert_eq!(run(&["inverse", "--input", path(&problem), "--out", path(&out)]), 2);
    let rep = report(&out);
    let conditions = rep["hypotheses"]["conditions"].as_array().unwrap();
    let mu3 = conditions.iter().find(|c| c["name"] == "mu3_positive").unwrap();
    assert_eq!(mu3["pass"], false);
    assert!(!out.join("a.csv").exists());
}

#[test]
fn manufactured_beta_two_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    assert_eq!(run(&["manufacture", "--out", path(&data), "--beta", "2", "--c", "1", "--nt", "40"]), 0);
    let problem = data.join("problem.json");
    assert_eq!(run(&["validate", "--input", path(&problem)]), 0);
    assert_eq!(run(&["inverse", "--input", path(&problem), "--out", path(&out), "--nt", "40"]), 0);
    let beta = report(&out)["fitted_beta"].as_f64().unwrap();
    assert!((1.95..=2.05).contains(&beta), "fitted {beta}");
    let truth = read_csv(&data.join("a_true.csv"));
    let recovered = read_csv(&out.join("a.csv"));
    for (t, r) in truth.iter().zip(&recovered).filter(|(t, _)| t[0] >= 0.05) {
        assert!((r[1] - t[1]).abs() <= 0.02 * t[1], "{t:?} vs {r:?}");
        assert!(r[1] <= r[3] + 1e-6, "band exceeded at t = {}", r[0]);
    }
}

#[test]
fn non_convergence_writes_report_only() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    assert_eq!(run(&["manufacture", "--out", path(&data), "--nt", "20"]), 0);
    let code = run(&["inverse", "--input", path(&data.join("problem.json")), "--out", path(&out), "--max-iter", "2"]);
    assert_eq!(code, 4);
    assert_eq!(report(&out)["converged"], false);
    assert!(!out.join("a.csv").exists());
}

#[test]
fn manufacture_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("one"), dir.path().join("two"));
    for d in [&first, &second] {
        assert_eq!(run(&["manufacture", "--out", path(d), "--scenario", "steady-linear", "--nt", "16"]), 0);
    }
    for name in ["problem.json", "a_true.csv"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    let p = ProblemData::load(first.join("problem.json")).unwrap();
    assert!(p.mu3().iter().zip(p.t_grid()).all(|(m, t)| (m - t).abs() <= 1e-10 * t.max(1e-3)));
}

#[test]
fn inverse_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["manufacture", "--out", path(&data), "--nt", "20"]), 0);
    let problem = data.join("problem.json");
    let (first, second) = (dir.path().join("one"), dir.path().join("two"));
    for d in [&first, &second] {
        assert_eq!(run(&["inverse", "--input", path(&problem), "--out", path(d), "--nt", "20"]), 0);
    }
    for name in ["a.csv", "convergence.csv", "report.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn weak_degeneration_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["manufacture", "--out", path(&out), "--beta", "0.5"]), 2);
    assert!(!out.join("problem.json").exists());
}

#[test]
fn heating_manufacture_passes_validation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(run(&["manufacture", "--out", path(&data), "--nt", "20"]), 0);
    assert_eq!(run(&["validate", "--input", path(&data.join("problem.json")), "--out", path(&data)]), 0);
    assert_eq!(report(&data)["pass"], true);
}

#[test]
fn solver_failure_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = steady_problem(dir.path(), &|t| t);
    let coef = dir.path().join("a.csv");
    let zero = Coefficient::new(TimeGrid::graded(1.0, 20, 2.0).unwrap(), vec![0.0; 21], 1.0).unwrap();
    write_coefficient(&coef, &zero);
    let out = dir.path().join("out");
    assert_eq!(run(&["direct", "--input", path(&problem), "--coefficient", path(&coef), "--out", path(&out)]), 3);
    assert!(!out.join("u.csv").exists() && !out.join("flux.csv").exists());
}

#[test]
fn binary_reports_exit_codes_and_json_events() {
    let bin = env!("CARGO_BIN_EXE_heatinv");
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let output = Command::new(bin).args(["validate", "--input", path(&missing)]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let event: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(event["event"], "error");
    assert_eq!(event["code"], 2);
    let output = Command::new(bin).args(["frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
