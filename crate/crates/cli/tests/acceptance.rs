//! Acceptance suite for the simulator.
//!
//! Runs every criterion, prints one `PASS`/`FAIL` line each and exits
//! non-zero if any failed. Scenario runs go through the library (and the
//! `popflow` binary where exit codes matter) into temporary directories.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use popflow::diagnostics::{case1_threshold, case2_threshold, centered_slopes};
use popflow::oracle::{clamp_violations, convolution_error, cosine_masses, direct_convolution, heat_mode_error, semigroup_defect};
use popflow::scenario::{preset_names, read_series, read_snapshot, RunManifest, RunReport};
use popflow::{
    parse_config, run_scenario, Field, KernelMatrix, KernelSpec, Model, ModelParams, RunEvent, RunOverrides, SimState,
    SolverOptions, StepController, TorusGrid,
};

const FIGURE_PRESETS: usize = 12;
const STEEPENING_T_END: f64 = 30.0;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> popflow::Result<Outcome>;

fn main() {
    let criteria: &[(&str, Option<f64>, Criterion)] = &[
        ("oracle convolution", Some(5.0), oracle_convolution),
        ("kernel normalization", Some(5.0), kernel_normalization),
        ("heat semigroup exactness", None, heat_semigroup),
        ("clamp inequalities", None, clamp_suite),
        ("mass conservation and positivity", Some(120.0), figure_presets),
        ("positivity under pure diffusion", None, diffusion_negative_part),
        ("threshold formulas", None, thresholds),
        ("blow-up dichotomy", Some(120.0), blowup_dichotomy),
        ("second-moment monitor", None, second_moment_monitor),
        ("steepening trend", Some(300.0), steepening_trend),
        ("rhs consistency", None, rhs_consistency),
    ];

    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let in_budget = budget.is_none_or(|b| secs < b);
        let passed = outcome.passed && in_budget;
        let budget_note = budget.map(|b| format!(", budget {b:.0} s")).unwrap_or_default();
        println!(
            "{} {name}: {} ({secs:.1} s{budget_note})",
            if passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
        failed += usize::from(!passed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn oracle_convolution() -> popflow::Result<Outcome> {
    let err = convolution_error(100, 1)?;
    Ok(Outcome::new(err < 1e-12, format!("max |fft - direct| = {err:.2e} over 100 fields x 4 kernels on 8x8")))
}

fn kernel_normalization() -> popflow::Result<Outcome> {
    let mut raw_err: f64 = 0.0;
    let mut renorm_err: f64 = 0.0;
    for r in [0.1, 0.2, 0.3, 0.4] {
        let (raw, renorm) = cosine_masses(r, 128)?;
        raw_err = raw_err.max((raw - 1.0).abs());
        renorm_err = renorm_err.max((renorm - 1.0).abs());
    }
    Ok(Outcome::new(
        raw_err < 1e-4 && renorm_err < 1e-12,
        format!("continuum mass error {raw_err:.2e}, discrete {renorm_err:.2e}"),
    ))
}

fn heat_semigroup() -> popflow::Result<Outcome> {
    let mut mode: f64 = 0.0;
    for m in [[1, 0], [0, 3], [2, 3], [5, 5], [7, 1]] {
        mode = mode.max(heat_mode_error(32, m, 0.7, 0.01)?);
    }
    let mut compose: f64 = 0.0;
    for seed in 0..5 {
        compose = compose.max(semigroup_defect(32, 1.3, 0.002, 0.005, seed)?);
    }
    Ok(Outcome::new(
        mode < 1e-10 && compose < 1e-12,
        format!("mode decay error {mode:.2e}, composition defect {compose:.2e}"),
    ))
}

fn clamp_suite() -> popflow::Result<Outcome> {
    let bad = clamp_violations(1000, 3)?;
    Ok(Outcome::new(bad == 0, format!("{bad} violations in 1000 field pairs")))
}

fn scenario(text: &str) -> popflow::Result<popflow::ScenarioConfig> {
    parse_config(text)
}

fn run_in(dir: &Path, text: &str) -> popflow::Result<RunReport> {
    run_scenario(
        &scenario(text)?,
        &RunOverrides {
            out_dir: Some(dir.to_path_buf()),
            ..Default::default()
        },
    )
}

fn figure_presets() -> popflow::Result<Outcome> {
    let names: Vec<_> = preset_names().into_iter().filter(|n| n.starts_with("fig")).collect();
    if names.len() != FIGURE_PRESETS {
        return Ok(Outcome::new(false, format!("expected {FIGURE_PRESETS} figure presets, found {}", names.len())));
    }
    let tmp = tempfile::tempdir().map_err(|e| popflow::Error::io(Path::new("tmp"), e))?;
    let mut worst_mass: f64 = 0.0;
    let mut worst_min: f64 = 0.0;
    let mut snapshots = 0;
    let mut problems = Vec::new();
    for name in &names {
        let dir = tmp.path().join(name);
        let report = run_in(
            &dir,
            &format!("preset = \"{name}\"\n[grid]\npoints = [64, 64]\n[time]\nt_end = 10.0\n"),
        )?;
        if report.is_blowup() {
            problems.push(format!("{name} blew up at t = {}", report.outcome.state.t));
            continue;
        }
        let initial = &report.records[0].mass;
        for r in &report.records {
            for (m, m0) in r.mass.iter().zip(initial) {
                worst_mass = worst_mass.max((m - m0).abs() / m0);
            }
        }
        for file in report.manifest.files.iter().filter(|f| f.ends_with(".grid")) {
            let snap = read_snapshot(&dir.join(file))?;
            let linf = snap.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let min = snap.values.iter().copied().fold(f64::INFINITY, f64::min);
            worst_min = worst_min.min(min / linf);
            snapshots += 1;
        }
    }
    let passed = problems.is_empty() && worst_mass < 1e-8 && worst_min >= -1e-8;
    let mut detail = format!(
        "{} presets to t = 10 on 64x64: max relative mass drift {worst_mass:.2e}, min u / |u|_inf {worst_min:.2e} over {snapshots} snapshots",
        names.len()
    );
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join("; ")));
    }
    Ok(Outcome::new(passed, detail))
}

fn diffusion_negative_part() -> popflow::Result<Outcome> {
    let grid = Arc::new(TorusGrid::square(0.5, 32)?);
    let u0 = grid.sample(|p| (2.0 * std::f64::consts::PI * p[0]).cos() * (4.0 * std::f64::consts::PI * p[1]).cos() + 0.3);
    let params = ModelParams {
        diffusion: vec![1.0],
        gamma: vec![vec![0.0]],
        kernels: KernelMatrix::uniform(1, KernelSpec::Delta),
        clamp: true,
    };
    let model = Model::new(grid, params, SolverOptions::default())?;
    let controller = StepController {
        sample_every: Some(0.002),
        ..Default::default()
    };
    let mut neg = vec![u0.negative_part_l2()];
    let mut observer = |event: RunEvent<'_>, state: &SimState, _: &Model| {
        if let RunEvent::Sample { .. } = event {
            neg.push(state.fields[0].negative_part_l2());
        }
        Ok(())
    };
    model.run(SimState::new(vec![u0]), 0.05, &controller, &mut [&mut observer])?;
    let increases = neg.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    Ok(Outcome::new(
        increases == 0 && neg[0] > 0.0,
        format!(
            "|u-|_2 from {:.3e} to {:.3e} over {} samples, {increases} increases",
            neg[0],
            neg[neg.len() - 1],
            neg.len()
        ),
    ))
}

fn thresholds() -> popflow::Result<Outcome> {
    let c1 = case1_threshold(1.0, 1.0, 1.0)?;
    let c2 = case2_threshold(2.0, 1.0, 1.0, 2)?;
    let pre1 = [0.5, 0.2].iter().all(|&p| case1_threshold(p, 1.0, 1.0).is_err());
    let pre2 = [1.0, 0.7].iter().all(|&p| case2_threshold(p, 1.0, 1.0, 2).is_err());
    let cli = Command::new(env!("CARGO_BIN_EXE_popflow"))
        .args(["thresholds", "--case", "1", "--mass", "0.5", "--dmax", "1", "--volume", "1"])
        .output()
        .map_err(|e| popflow::Error::io(Path::new("popflow"), e))?;
    let cli_exit = cli.status.code();
    Ok(Outcome::new(
        c1 == -2.0 && c2 == -4.0 && pre1 && pre2 && cli_exit == Some(2),
        format!("case 1: {c1:?}, case 2: {c2:?}, preconditions enforced: {}, cli exit {cli_exit:?}", pre1 && pre2),
    ))
}

fn run_cli(dir: &Path, text: &str) -> popflow::Result<(Option<i32>, RunManifest)> {
    std::fs::create_dir_all(dir).map_err(|e| popflow::Error::io(dir, e))?;
    let config = dir.join("scenario.toml");
    std::fs::write(&config, text).map_err(|e| popflow::Error::io(&config, e))?;
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_popflow"))
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| popflow::Error::io(Path::new("popflow"), e))?
        .status;
    Ok((status.code(), RunManifest::read(&out.join("manifest.json"))?))
}

fn blowup_dichotomy() -> popflow::Result<Outcome> {
    let tmp = tempfile::tempdir().map_err(|e| popflow::Error::io(Path::new("tmp"), e))?;
    let (hot_exit, hot) = run_cli(&tmp.path().join("blowup"), "preset = \"case1-blowup\"\n")?;
    let (cold_exit, cold) = run_cli(&tmp.path().join("safe"), "preset = \"case1-safe\"\n")?;
    let rows = read_series(&tmp.path().join("safe/out/series.csv"))?;
    let peak = rows.iter().map(|r| r.linf).fold(0.0, f64::max);
    let bounded = rows.iter().all(|r| r.linf.is_finite()) && peak < 10.0;
    Ok(Outcome::new(
        hot_exit == Some(3)
            && hot.termination.is_blowup()
            && hot.t_final <= 10.0
            && cold_exit == Some(0)
            && cold.t_final == 10.0
            && bounded,
        format!(
            "gamma -2.5: exit {hot_exit:?} at t = {:.3e}; gamma -0.5: exit {cold_exit:?} at t = {}, max |u|_inf {peak:.3}",
            hot.t_final, cold.t_final
        ),
    ))
}

fn second_moment_monitor() -> popflow::Result<Outcome> {
    let tmp = tempfile::tempdir().map_err(|e| popflow::Error::io(Path::new("tmp"), e))?;
    let report = run_in(tmp.path(), "preset = \"case1-blowup\"\n")?;
    if !report.is_blowup() {
        return Ok(Outcome::new(false, "supercritical run did not blow up"));
    }
    let rows = read_series(&tmp.path().join("series.csv"))?;
    let samples: Vec<(f64, f64)> = rows.iter().filter(|r| r.species == 1).map(|r| (r.t, r.second_moment)).collect();
    let bound = rows[0].dmdt_bound;
    let slopes = centered_slopes(&samples);
    let limit = bound + 0.1 * bound.abs();
    let worst = slopes.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome::new(
        bound.is_finite() && slopes.len() >= 3 && worst <= limit,
        format!(
            "max dM/dt {worst:.3} vs bound {bound:.3} (+10% -> {limit:.3}) over {} slopes before t = {:.3e}",
            slopes.len(),
            report.outcome.state.t
        ),
    ))
}

fn steepening_trend() -> popflow::Result<Outcome> {
    let tmp = tempfile::tempdir().map_err(|e| popflow::Error::io(Path::new("tmp"), e))?;
    let mut peaks = Vec::new();
    for name in ["fig1a", "fig1b"] {
        let report = run_in(
            &tmp.path().join(name),
            &format!("preset = \"{name}\"\n[time]\nt_end = {STEEPENING_T_END:?}\n"),
        )?;
        if report.is_blowup() {
            return Ok(Outcome::new(false, format!("{name} blew up at t = {}", report.outcome.state.t)));
        }
        peaks.push(report.outcome.state.max_linf());
    }
    Ok(Outcome::new(
        peaks[1] > peaks[0],
        format!(
            "final |u|_inf at t = {STEEPENING_T_END} on 128x128: r = 0.3 -> {:.2}, r = 0.2 -> {:.2}",
            peaks[0], peaks[1]
        ),
    ))
}

/// Periodic fourth-order first derivative along `axis`.
fn fd_d1(f: &[f64], n: usize, h: f64, axis: usize) -> Vec<f64> {
    let at = |i: usize, j: usize, s: isize| {
        let (i, j) = if axis == 0 {
            ((i as isize + s).rem_euclid(n as isize) as usize, j)
        } else {
            (i, (j as isize + s).rem_euclid(n as isize) as usize)
        };
        f[i * n + j]
    };
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (-at(i, j, 2) + 8.0 * at(i, j, 1) - 8.0 * at(i, j, -1) + at(i, j, -2)) / (12.0 * h)
        })
        .collect()
}

/// Fourth-order finite differences for the derivatives, direct quadrature
/// for the convolutions.
fn fd_rhs(params: &ModelParams, fields: &[Field]) -> popflow::Result<Vec<Vec<f64>>> {
    let grid = fields[0].grid();
    let n = grid.points()[0];
    let h = grid.spacings()[0];
    let species = fields.len();
    let mut convolved = vec![vec![Vec::new(); species]; species];
    for (i, row) in convolved.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = direct_convolution(params.kernels.get(i, j), &fields[j])?.into_values();
        }
    }
    Ok((0..species)
        .map(|i| {
            let u = fields[i].values();
            let w: Vec<f64> = (0..n * n)
                .map(|k| (0..species).map(|j| params.gamma[i][j] * convolved[i][j][k]).sum())
                .collect();
            let mut out = vec![0.0; n * n];
            for axis in 0..2 {
                let du = fd_d1(u, n, h, axis);
                let ddu = fd_d1(&du, n, h, axis);
                let flux: Vec<f64> = fd_d1(&w, n, h, axis).iter().zip(u).map(|(g, u)| u.max(0.0) * g).collect();
                let dflux = fd_d1(&flux, n, h, axis);
                for k in 0..n * n {
                    out[k] += params.diffusion[i] * ddu[k] + dflux[k];
                }
            }
            out
        })
        .collect())
}

fn rhs_consistency() -> popflow::Result<Outcome> {
    use std::f64::consts::PI;
    let params = ModelParams {
        diffusion: vec![1.0, 0.5],
        gamma: vec![vec![-1.0, 0.7], vec![0.4, -0.8]],
        kernels: KernelMatrix(vec![
            vec![KernelSpec::CosineBump { radius: 0.3 }, KernelSpec::GaussianPeriodic { width: 0.1 }],
            vec![KernelSpec::Delta, KernelSpec::CosineBump { radius: 0.35 }],
        ]),
        clamp: true,
    };
    let mut errors = Vec::new();
    for n in [16, 32, 64] {
        let grid = Arc::new(TorusGrid::square(0.5, n)?);
        let fields = vec![
            grid.sample(|p| 1.0 + 0.3 * (2.0 * PI * p[0]).sin() + 0.2 * (2.0 * PI * (p[0] + 2.0 * p[1])).cos()),
            grid.sample(|p| 0.8 + 0.25 * (2.0 * PI * p[1]).cos() * (2.0 * PI * p[0]).cos()),
        ];
        let model = Model::new(grid.clone(), params.clone(), SolverOptions::default())?;
        let spectral = model.rhs(&fields)?;
        let oracle = fd_rhs(&params, &fields)?;
        let err = spectral
            .iter()
            .zip(&oracle)
            .flat_map(|(s, o)| s.values().iter().zip(o).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        errors.push(err);
    }
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(
        worst >= 3.5,
        format!(
            "errors {:.2e} / {:.2e} / {:.2e} on 16/32/64, observed orders {:.2} and {:.2}",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ),
    ))
}
