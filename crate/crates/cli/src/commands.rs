//! One function per subcommand. Each writes into `<out>/<name>/` and
//! returns whether its properties held.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hflow::flow::{
    flow, minimal_selection, slope_with, verify_apriori, verify_contraction, verify_evi,
    verify_regularization, Functional, SlopeMethod,
};
use hflow::harness::gen::Generator;
use hflow::harness::{run_suite, SUITES};
use hflow::io::{write_log, write_map, write_trajectory};
use hflow::ks::KsEnergy;
use hflow::maps::L2Map;
use hflow::scenario::ScenarioConfig;
use hflow::tangent::norm;
use hflow::{Error, Result};
use serde_json::{json, Value};

use crate::Command;

/// Verifier violations must stay below this multiple of τ.
const VERIFIER_FACTOR: f64 = 100.0;
/// Relative tolerance between the Laplacian (or selection) norm and the slope.
const SLOPE_TOL: f64 = 1e-3;
/// Harmonic maps must have a Laplacian with L² norm below this.
const HARMONIC_TOL: f64 = 1e-4;
/// Sampled slopes per trajectory row when no closed form exists.
const ROW_SLOPE_SAMPLES: usize = 256;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub lines: Vec<String>,
    /// `Ok(pass)`, or the error that stopped the scenario.
    pub result: Result<bool>,
}

pub fn run(command: &Command, cfg: &ScenarioConfig) -> Outcome {
    let mut lines = Vec::new();
    let result = scenario_dir(cfg).and_then(|dir| match command {
        Command::Flow => run_flow(cfg, &dir, &mut lines),
        Command::Slope => run_slope(cfg, &dir, &mut lines),
        Command::Harmonic => run_harmonic(cfg, &dir, &mut lines),
        Command::Laplacian => run_laplacian(cfg, &dir, &mut lines),
        Command::Verify { suites } => run_verify(cfg, &dir, suites, &mut lines),
        Command::Bench { suites } => run_bench(cfg, &dir, suites, &mut lines),
    });
    Outcome { lines, result }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json value serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Creates `<out>/<name>/` and writes the resolved config into it.
fn scenario_dir(cfg: &ScenarioConfig) -> Result<PathBuf> {
    let dir = cfg.out.join(&cfg.name);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let echo = dir.join("config.resolved.json");
    fs::write(&echo, cfg.echo() + "\n").map_err(|e| io_err(&echo, e))?;
    log::debug!("resolved config for `{}`:\n{}", cfg.name, cfg.echo());
    Ok(dir)
}

fn run_flow(cfg: &ScenarioConfig, dir: &Path, lines: &mut Vec<String>) -> Result<bool> {
    let e = cfg.builtin()?;
    let space = e.space();
    let lambda = e.lambda();
    let traj = flow(&e, &cfg.start_point(), cfg.flow.t_end, cfg.flow.steps)?;
    log::info!(
        "flow `{}`: {} steps of τ = {:e}",
        cfg.name,
        traj.len() - 1,
        cfg.tau()
    );
    let samples = cfg.slope_samples.min(ROW_SLOPE_SAMPLES);
    let slopes = traj
        .points
        .iter()
        .map(|p| slope_with(&e, p, samples, cfg.seed).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    write_trajectory(create(&dir.join("trajectory.csv"))?, space, &traj, &slopes)?;

    let mut g = Generator::new(cfg.seed);
    let tests: Vec<_> = (0..cfg.flow.tests).map(|_| g.point(space)).collect();
    let other = g.point(space);
    let other_traj = flow(&e, &other, cfg.flow.t_end, cfg.flow.steps)?;
    let reports = [
        verify_evi(&traj, &e, lambda, &tests)?,
        verify_contraction(space, &traj, &other_traj, lambda)?,
        verify_apriori(&traj, &other, &e, lambda)?,
        verify_regularization(&traj, &e, lambda)?,
    ];
    let tol = VERIFIER_FACTOR * cfg.tau();
    let pass = reports.iter().all(|r| r.max_violation <= tol);
    for r in &reports {
        lines.push(format!(
            "{:<14} max_violation {:.3e} (tol {tol:.1e}) over {} samples",
            r.check, r.max_violation, r.samples
        ));
    }
    write_json(
        &dir.join("report.json"),
        &json!({"tolerance": tol, "pass": pass, "verifiers": reports}),
    )?;
    Ok(pass)
}

fn run_slope(cfg: &ScenarioConfig, dir: &Path, lines: &mut Vec<String>) -> Result<bool> {
    let e = cfg.builtin()?;
    let space = e.space();
    let mut records = Vec::new();
    let mut pass = true;
    let mut failure = None;
    for p in cfg.slope_points() {
        let est = slope_with(&e, &p, cfg.slope_samples, cfg.seed)?;
        let selection = match minimal_selection(&e, &p, &cfg.selection) {
            Ok(sel) => Some(sel),
            Err(err) => {
                failure.get_or_insert(err);
                None
            }
        };
        let sel_norm = selection.as_ref().map(|s| norm(space, &s.direction));
        if let Some(n) = sel_norm {
            let gap = match est.method {
                SlopeMethod::ClosedForm => (n - est.value).abs(),
                // a sampled slope is only a lower bound
                SlopeMethod::GlobalSupSampled => est.value - n,
            };
            pass &= gap <= SLOPE_TOL * (1.0 + est.value);
        }
        lines.push(format!(
            "slope {:.6e} ({:?}), selection norm {}",
            est.value,
            est.method,
            sel_norm.map_or("n/a".to_string(), |n| format!("{n:.6e}"))
        ));
        records.push(json!({
            "point": p,
            "slope": est,
            "selection_norm": sel_norm,
            "selection_gap": selection.as_ref().map(|s| s.gap),
        }));
    }
    write_json(
        &dir.join("slopes.json"),
        &json!({"pass": pass, "points": records}),
    )?;
    match failure {
        Some(err) => Err(err),
        None => Ok(pass),
    }
}

fn write_map_file(
    dir: &Path,
    k: &KsEnergy,
    u: &L2Map,
    lap: Option<&hflow::maps::Section>,
) -> Result<()> {
    write_map(
        create(&dir.join("map.csv"))?,
        k.target(),
        u,
        &k.density(u),
        lap,
    )
}

fn run_harmonic(cfg: &ScenarioConfig, dir: &Path, lines: &mut Vec<String>) -> Result<bool> {
    let k = cfg.ks_energy()?;
    let init = cfg.map_on(&k)?;
    let (sol, converged) = k.harmonic_partial(&init, &cfg.solver)?;
    write_log(create(&dir.join("log.csv"))?, &sol.log)?;
    let last = sol.log.last().expect("log has the initial row");
    lines.push(format!(
        "{} outer steps, energy {:.9e}, converged {converged}",
        last.iter, last.energy
    ));
    if !converged {
        write_map_file(dir, &k, &sol.map, None)?;
        write_json(
            &dir.join("report.json"),
            &json!({"converged": false, "outer_steps": last.iter, "energy": last.energy}),
        )?;
        return Err(Error::NoConvergence(format!(
            "harmonic map not reached in {} outer steps; partial map and log written",
            cfg.solver.max_outer
        )));
    }
    let lap = k.laplacian(&sol.map, &cfg.laplacian);
    write_map_file(dir, &k, &sol.map, lap.as_ref().ok())?;
    let lap = lap?;
    let lap_norm = lap.l2_norm(k.domain(), k.target());
    let pass = lap_norm <= HARMONIC_TOL;
    lines.push(format!(
        "laplacian L2 norm {lap_norm:.3e} (tol {HARMONIC_TOL:.0e})"
    ));
    write_json(
        &dir.join("report.json"),
        &json!({
            "converged": true,
            "outer_steps": last.iter,
            "energy": last.energy,
            "laplacian_l2_norm": lap_norm,
            "tolerance": HARMONIC_TOL,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn run_laplacian(cfg: &ScenarioConfig, dir: &Path, lines: &mut Vec<String>) -> Result<bool> {
    let k = cfg.ks_energy()?;
    let u = cfg.map_on(&k)?;
    let lap = k.laplacian(&u, &cfg.laplacian)?;
    write_map_file(dir, &k, &u, Some(&lap))?;
    let lap_norm = lap.l2_norm(k.domain(), k.target());
    let est = slope_with(&k, &u, cfg.slope_samples, cfg.seed)?;
    let gap = match est.method {
        SlopeMethod::ClosedForm => (lap_norm - est.value).abs(),
        SlopeMethod::GlobalSupSampled => est.value - lap_norm,
    } / (1.0 + est.value);
    let pass = gap <= SLOPE_TOL;
    lines.push(format!(
        "laplacian L2 norm {lap_norm:.6e}, slope {:.6e} ({:?}), relative gap {gap:.2e}",
        est.value, est.method
    ));
    write_json(
        &dir.join("report.json"),
        &json!({
            "laplacian_l2_norm": lap_norm,
            "energy": k.energy_b(&u),
            "slope": est,
            "relative_gap": gap,
            "tolerance": SLOPE_TOL,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn suite_names(suites: &[String]) -> Vec<String> {
    if suites.is_empty() || suites.iter().any(|s| s == "all") {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        suites.to_vec()
    }
}

fn run_verify(
    cfg: &ScenarioConfig,
    dir: &Path,
    suites: &[String],
    lines: &mut Vec<String>,
) -> Result<bool> {
    let mut pass = true;
    for name in suite_names(suites) {
        let report = run_suite(&name, cfg)?;
        let json_path = dir.join(format!("{name}.json"));
        fs::write(&json_path, report.to_json() + "\n").map_err(|e| io_err(&json_path, e))?;
        let csv_path = dir.join(format!("{name}.csv"));
        fs::write(&csv_path, report.to_csv()).map_err(|e| io_err(&csv_path, e))?;
        for p in &report.properties {
            lines.push(format!(
                "{} {name}/{} max_violation {} over {} samples",
                if p.pass { "PASS" } else { "FAIL" },
                p.name,
                p.max_violation
                    .map_or("nan".to_string(), |v| format!("{v:.3e}")),
                p.samples
            ));
        }
        pass &= report.passed();
    }
    Ok(pass)
}

fn run_bench(
    cfg: &ScenarioConfig,
    dir: &Path,
    suites: &[String],
    lines: &mut Vec<String>,
) -> Result<bool> {
    let mut rows = Vec::new();
    let mut pass = true;
    for name in suite_names(suites) {
        let start = Instant::now();
        let report = run_suite(&name, cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        lines.push(format!(
            "{name:<18} {seconds:>9.3} s  {} properties, passed {}",
            report.properties.len(),
            report.passed()
        ));
        pass &= report.passed();
        rows.push(json!({
            "suite": name,
            "seconds": seconds,
            "properties": report.properties.len(),
            "passed": report.passed(),
        }));
    }
    write_json(
        &dir.join("bench.json"),
        &json!({"seed": cfg.seed, "suites": rows}),
    )?;
    Ok(pass)
}
