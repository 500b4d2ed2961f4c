//! Subcommand implementations. Each returns a process exit code:
//! 0 success, 1 solver/config failure, 2 non-monotone decay diagnostic,
//! 3 verification failure.

use crate::config::{BuiltProblem, RunConfig};
use crate::exit_codes;
use crate::oracle;
use crate::output::{self, CheckResult, DiagnosticsOut, StudyRow};
use fracrothe::mms::exact_caputo_power;
use fracrothe::rothe::{cauchy_diff, max_profile_residual, RotheFunctions};
use fracrothe::stepper::{delayed_state, diagnostics, run, step_residual, Trajectory};
use fracrothe::{caputo_l1, l1_weights, verify_accretivity};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

fn trajectory_path(cfg: &RunConfig, out_dir: &Path) -> PathBuf {
    cfg.output
        .trajectory_path
        .clone()
        .unwrap_or_else(|| out_dir.join("trajectory.csv"))
}

fn diagnostics_path(cfg: &RunConfig, out_dir: &Path) -> PathBuf {
    cfg.output
        .diagnostics_path
        .clone()
        .unwrap_or_else(|| out_dir.join("diagnostics.json"))
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Final-time error against the manufactured solution, when one exists.
fn mms_final_error(built: &BuiltProblem, traj: &Trajectory) -> Option<f64> {
    let ms = built.mms.as_ref()?;
    let grid = traj.grid();
    let exact = ms.state(grid.effective_horizon(), &built.laplacian);
    let got = traj.state(grid.step_count() as i64).ok()?;
    let diff: Vec<f64> = got.iter().zip(&exact).map(|(a, b)| a - b).collect();
    Some(fracrothe::SpatialOperator::norm(&built.laplacian, &diff))
}

pub fn cmd_solve(cfg: &RunConfig, out_dir: &Path) -> i32 {
    let built = match cfg.build() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_codes::SOLVER_FAILURE;
        }
    };
    let start = Instant::now();
    let traj = match run(&built.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("solver failure: {e}");
            let failure = serde_json::json!({
                "solver_failure": e.to_string(),
                "partial": true,
            });
            let _ = output::write_atomic(&diagnostics_path(cfg, out_dir), &json_bytes(&failure));
            return exit_codes::SOLVER_FAILURE;
        }
    };
    let diag = match diagnostics(&built.spec, &traj) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("diagnostics failure: {e}");
            return exit_codes::SOLVER_FAILURE;
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let error_fn = built.mms.as_ref().map(|ms| {
        let lap = built.laplacian.clone();
        let ms = *ms;
        let grid = *traj.grid();
        move |j: i64, state: &[f64]| {
            let exact = ms.state(grid.node(j), &lap);
            let diff: Vec<f64> = state.iter().zip(&exact).map(|(a, b)| a - b).collect();
            fracrothe::SpatialOperator::norm(&lap, &diff)
        }
    });
    let csv = match &error_fn {
        Some(f) => output::trajectory_csv(&traj, Some(f)),
        None => output::trajectory_csv(&traj, None),
    };

    let out = DiagnosticsOut {
        max_state_deviation: diag.max_state_deviation,
        max_difference_norm: diag.max_difference_norm,
        max_caputo_norm: diag.max_caputo_norm,
        max_step_residual: diag.max_step_residual,
        final_time_error: mms_final_error(&built, &traj),
        wall_time_seconds: wall,
    };

    let traj_path = trajectory_path(cfg, out_dir);
    let diag_path = diagnostics_path(cfg, out_dir);
    if let Err(e) = output::write_atomic(&traj_path, csv.as_bytes()) {
        eprintln!("output failure: {e}");
        return exit_codes::SOLVER_FAILURE;
    }
    if let Err(e) = output::write_atomic(&diag_path, &json_bytes(&out)) {
        eprintln!("output failure: {e}");
        return exit_codes::SOLVER_FAILURE;
    }
    println!(
        "solve: {} steps, dim {}, trajectory -> {}, diagnostics -> {}",
        traj.grid().step_count(),
        traj.dimension(),
        traj_path.display(),
        diag_path.display()
    );
    exit_codes::SUCCESS
}

fn thread_budget() -> usize {
    std::env::var("FRACROTHE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
}

/// Runs `count` independent jobs on up to `threads` workers, keeping
/// result order.
fn parallel_map<T, F>(count: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(count).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= count {
                    break;
                }
                *slots[i].lock().unwrap() = Some(job(i));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("job completed"))
        .collect()
}

pub fn cmd_convergence(cfg: &RunConfig, levels: usize, out_dir: &Path) -> i32 {
    if levels < 3 {
        eprintln!("error: --levels must be >= 3");
        return exit_codes::SOLVER_FAILURE;
    }
    // levels rows need levels + 1 runs (each row compares n with 2n)
    let ns: Vec<usize> = (0..=levels).map(|i| cfg.subdivisions << i).collect();
    let results = parallel_map(ns.len(), thread_budget(), |i| -> anyhow::Result<_> {
        let built = cfg.build_with_subdivisions(ns[i])?;
        let traj = run(&built.spec)?;
        let err = mms_final_error(&built, &traj);
        Ok((traj, err))
    });
    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(pair) => trajectories.push(pair),
            Err(e) => {
                eprintln!("solver failure: {e}");
                return exit_codes::SOLVER_FAILURE;
            }
        }
    }

    let mut rows: Vec<StudyRow> = Vec::with_capacity(levels);
    for i in 0..levels {
        let (coarse, mms_error) = &trajectories[i];
        let (fine, _) = &trajectories[i + 1];
        let cd = match cauchy_diff(coarse, fine) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("study failure: {e}");
                return exit_codes::SOLVER_FAILURE;
            }
        };
        let observed_order = if i > 0 {
            let (prev, cur) = match (rows[i - 1].mms_error, mms_error) {
                (Some(a), Some(b)) => (a, *b),
                _ => (rows[i - 1].cauchy_diff, cd),
            };
            (prev > 0.0 && cur > 0.0).then(|| (prev / cur).log2())
        } else {
            None
        };
        rows.push(StudyRow {
            n: ns[i],
            h: cfg.delay / ns[i] as f64,
            cauchy_diff: cd,
            mms_error: *mms_error,
            observed_order,
        });
    }

    let csv = output::study_csv(&rows);
    let path = out_dir.join("study.csv");
    if let Err(e) = output::write_atomic(&path, csv.as_bytes()) {
        eprintln!("output failure: {e}");
        return exit_codes::SOLVER_FAILURE;
    }
    print!("{csv}");
    let monotone = rows.windows(2).all(|w| w[1].cauchy_diff < w[0].cauchy_diff);
    if monotone {
        println!("decay: monotone over {} levels -> {}", levels, path.display());
        exit_codes::SUCCESS
    } else {
        println!("decay: NOT monotone -> {}", path.display());
        exit_codes::DECAY_DIAGNOSTIC
    }
}

fn check<F>(name: &str, body: F) -> CheckResult
where
    F: FnOnce() -> anyhow::Result<(bool, String)>,
{
    match body() {
        Ok((pass, detail)) => CheckResult {
            name: name.to_string(),
            pass,
            detail,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn alphas_of(cfg: &RunConfig) -> Vec<f64> {
    let mut alphas: Vec<f64> = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    for t in &cfg.terms {
        if !alphas.iter().any(|a| (a - t.alpha).abs() < 1e-15) {
            alphas.push(t.alpha);
        }
    }
    alphas
}

fn euclid(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn cmd_verify(cfg: &RunConfig, out_dir: &Path) -> i32 {
    let mut checks: Vec<CheckResult> = Vec::new();

    checks.push(check("weight_identities", || {
        let count = 4096usize;
        for &alpha in &alphas_of(cfg) {
            let w = l1_weights(alpha, count)?;
            let v = w.values();
            if v[0] != 1.0 {
                return Ok((false, format!("b_0 != 1 for alpha = {alpha}")));
            }
            let mut sum = 0.0;
            let mut comp = 0.0;
            for (i, b) in v.iter().enumerate() {
                if i > 0 && b >= &v[i - 1] {
                    return Ok((false, format!("not strictly decreasing at i = {i}, alpha = {alpha}")));
                }
                let y = b - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                let exact = ((i + 1) as f64).powf(1.0 - alpha);
                if (sum - exact).abs() > 1e-12 * exact {
                    return Ok((false, format!("telescoping off at j = {}, alpha = {alpha}", i + 1)));
                }
            }
        }
        Ok((true, format!("checked {} orders, {count} weights each", alphas_of(cfg).len())))
    }));

    checks.push(check("l1_linear_exactness", || {
        let grid = cfg.grid()?;
        let h = grid.step();
        for &alpha in &alphas_of(cfg) {
            for j in 1..=grid.step_count().min(128) {
                let diffs = vec![vec![1.0]; j];
                let got = caputo_l1(&diffs, alpha, h)?[0];
                let exact = exact_caputo_power(1.0, alpha, grid.node(j as i64))?;
                if (got - exact).abs() > 1e-12 * exact.abs() {
                    return Ok((false, format!("mismatch at j = {j}, alpha = {alpha}")));
                }
            }
        }
        Ok((true, "L1 exact on linear trajectories".into()))
    }));

    let built = match cfg.build() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_codes::SOLVER_FAILURE;
        }
    };

    checks.push(check("accretivity", || {
        let report = verify_accretivity(built.spec.operator.as_ref(), 100, cfg.seed);
        Ok((
            report.pass,
            format!(
                "min trial ratio {:.6e}, min Rayleigh {:?}",
                report.min_trial_ratio, report.min_rayleigh
            ),
        ))
    }));

    checks.push(check("step_residual", || {
        let traj = run(&built.spec)?;
        let op = built.spec.operator.as_ref();
        let mut worst_ratio = 0.0f64;
        for j in 1..=traj.grid().step_count() {
            let res = step_residual(&built.spec, &traj, j)?;
            let delayed = delayed_state(&traj, j as i64)?;
            let f = (built.spec.forcing)(traj.grid().node(j as i64), delayed);
            let scale = 1.0 + op.norm(&f);
            worst_ratio = worst_ratio.max(res / scale);
        }
        Ok((
            worst_ratio <= 1e-8,
            format!("max residual / (1 + |f|) = {worst_ratio:.3e}"),
        ))
    }));

    checks.push(check("interpolant_consistency", || {
        let traj = run(&built.spec)?;
        let rf = RotheFunctions::new(&built.spec, &traj)?;
        let grid = traj.grid();
        for j in 1..=grid.step_count() {
            let t_node = grid.node(j as i64);
            let state = traj.state(j as i64)?;
            let scale = 1.0 + state.iter().map(|x| x * x).sum::<f64>().sqrt();
            if euclid(&rf.eval_u(t_node)?, state) > 1e-12 * scale
                || euclid(&rf.eval_x(t_node)?, state) > 1e-12 * scale
            {
                return Ok((false, format!("node mismatch at j = {j}")));
            }
            let t = grid.node(j as i64 - 1) + 0.37 * grid.step();
            let u = rf.eval_u(t)?;
            let x = rf.eval_x(t)?;
            let gap = euclid(&u, &x);
            let slope: f64 = traj
                .difference(j)?
                .iter()
                .map(|d| d * d)
                .sum::<f64>()
                .sqrt();
            let expected = (t - t_node).abs() * slope;
            if (gap - expected).abs() > 1e-12 * (1.0 + expected) {
                return Ok((false, format!("|U - X| identity off at j = {j}")));
            }
        }
        Ok((true, "node values and |U - X| identity hold".into()))
    }));

    checks.push(check("caputo_residual_decay", || {
        if cfg.terms.is_empty() {
            return Ok((true, "no fractional terms".into()));
        }
        let coarse_built = cfg.build()?;
        let fine_built = cfg.build_with_subdivisions(cfg.subdivisions * 2)?;
        let coarse = run(&coarse_built.spec)?;
        let fine = run(&fine_built.spec)?;
        let rf_c = RotheFunctions::new(&coarse_built.spec, &coarse)?;
        let rf_f = RotheFunctions::new(&fine_built.spec, &fine)?;
        for q in 0..cfg.terms.len() {
            let max_c = max_profile_residual(&rf_c.caputo_residual_profile(q, 3)?);
            let max_f = max_profile_residual(&rf_f.caputo_residual_profile(q, 3)?);
            if !(max_f < max_c) {
                return Ok((
                    false,
                    format!("term {q}: residual {max_c:.3e} -> {max_f:.3e} did not decrease"),
                ));
            }
        }
        Ok((true, "max |v - Caputo[U]| decreased under doubling".into()))
    }));

    checks.push(check("apriori_stability", || {
        let mut stats: Vec<Vec<f64>> = Vec::new();
        for factor in [1usize, 2, 4] {
            let b = cfg.build_with_subdivisions(cfg.subdivisions * factor)?;
            let traj = run(&b.spec)?;
            let d = diagnostics(&b.spec, &traj)?;
            let mut row = vec![d.max_state_deviation, d.max_difference_norm];
            row.extend(d.max_caputo_norm);
            stats.push(row);
        }
        let names = ["max |theta_j - chi(0)|", "max |delta_j|", "max |Caputo_j|"];
        let mut details = Vec::new();
        let mut pass = true;
        for col in 0..stats[0].len() {
            let vals: Vec<f64> = stats.iter().map(|r| r[col]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(0.0f64, f64::max);
            let spread = if lo > 0.0 { hi / lo - 1.0 } else { 0.0 };
            if spread >= 0.10 {
                pass = false;
            }
            details.push(format!(
                "{}: spread {:.2}%",
                names.get(col).unwrap_or(&"max |Caputo_j|"),
                100.0 * spread
            ));
        }
        Ok((pass, details.join("; ")))
    }));

    if cfg.terms.iter().all(|t| t.a == 0.0) {
        checks.push(check("reduction_backward_euler", || {
            let traj = run(&built.spec)?;
            let sign = if cfg.space.flip_sign { -1.0 } else { 1.0 };
            let mut matrix = oracle::dense_laplacian(cfg.space.interior_nodes, cfg.space.length);
            for row in &mut matrix {
                for x in row.iter_mut() {
                    *x *= sign;
                }
            }
            let grid = *traj.grid();
            let forcing = built.spec.forcing.clone();
            let history = built.spec.history.clone();
            let states = oracle::implicit_euler_delay(
                &grid,
                &matrix,
                &|t, w| (forcing)(t, w),
                &|t| history.eval(t),
            );
            let n = grid.subdivisions();
            let mut worst = 0.0f64;
            for j in 1..=grid.step_count() {
                let ours = traj.state(j as i64)?;
                for (a, b) in ours.iter().zip(&states[n + j]) {
                    worst = worst.max((a - b).abs());
                }
            }
            Ok((
                worst <= 1e-12,
                format!("max-norm gap vs independent solver: {worst:.3e}"),
            ))
        }));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let path = out_dir.join("verification.json");
    if let Err(e) = output::write_atomic(&path, &json_bytes(&checks)) {
        eprintln!("output failure: {e}");
        return exit_codes::SOLVER_FAILURE;
    }
    if all_pass {
        exit_codes::SUCCESS
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        eprintln!("failed checks: {}", failed.join(", "));
        exit_codes::VERIFICATION_FAILURE
    }
}
