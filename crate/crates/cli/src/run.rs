//! Subcommand orchestration.

use std::path::{Path, PathBuf};

use alloyfreeze_core::diagnostics::fitted_steps;
use alloyfreeze_core::{
    check_max_principles, check_solute, decay_check, energy_budget, eps_continuation,
    find_reproductive, init, record_trajectory, scaling_fit, step_with_report, Error as CoreError,
    FixedPointReport, Problem, SolidRegion, State, StepConfig, StepRecord, TrajectoryStats,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, InitialKind, RunConfig};
use crate::io::{self, IoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Reproduce,
    SweepEps,
    Check,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("checks failed: {}", failed.join(", "))]
    CheckFailed { failed: Vec<String> },

    #[error("fixed-point iteration did not converge at eps = {eps}: defect {defect:.3e} after {iterations} iterations")]
    NotConverged {
        eps: f64,
        iterations: usize,
        defect: f64,
    },
}

impl RunError {
    /// 1 generic, 2 config, 3 failed check, 4 no convergence, 5 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 1,
            RunError::CheckFailed { .. } => 3,
            RunError::NotConverged { .. } => 4,
            RunError::Core { source, .. } => match source {
                CoreError::InvalidParameter { .. } => 2,
                CoreError::NotConverged { .. } => 4,
                CoreError::CflExceeded { .. }
                | CoreError::EllipticDiverged { .. }
                | CoreError::NonFinite { .. }
                | CoreError::BoundaryEvaluation { .. }
                | CoreError::EmptySolidRegion
                | CoreError::DegenerateFit { .. } => 5,
                CoreError::ShapeMismatch { .. } => 1,
            },
        }
    }
}

fn core(context: &'static str) -> impl FnOnce(CoreError) -> RunError {
    move |source| RunError::Core { context, source }
}

/// Artifacts of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub out_dir: PathBuf,
    /// Human-readable `key: value` summary.
    pub summary: Vec<(String, String)>,
}

impl Outcome {
    fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            summary: Vec::new(),
        }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

/// Runs `cmd` writing into `out`. Artifacts are written before a
/// convergence or check failure is returned.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    cfg.validate()?;
    io::create_dir(out)?;
    io::write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    match cmd {
        Command::Simulate => simulate(cfg, out),
        Command::Reproduce => reproduce(cfg, out),
        Command::SweepEps => sweep_eps(cfg, out),
        Command::Check => check(cfg, out),
    }
}

pub fn initial_state(cfg: &RunConfig, problem: &Problem<f64>) -> Result<State<f64>, RunError> {
    let ini = &cfg.initial;
    match ini.kind {
        InitialKind::Rest => init::rest_state(problem).map_err(core("initial state")),
        InitialKind::Random => init::random_state(problem, cfg.seed, ini.amplitude, ini.velocity)
            .map_err(core("initial state")),
        InitialKind::Snapshot => {
            let path = ini.path.as_deref().expect("validated");
            Ok(io::read_snapshot(path, &problem.grid)?)
        }
    }
}

/// Steps over `horizon` recording every level, with snapshots every
/// `snapshot_every` steps when a directory is given.
fn simulate_trajectory(
    x0: &State<f64>,
    problem: &Problem<f64>,
    cfg: &StepConfig<f64>,
    horizon: f64,
    solid: Option<&SolidRegion>,
    snapshots: Option<(&Path, usize, &RunConfig)>,
) -> Result<(State<f64>, TrajectoryStats<f64>), RunError> {
    let (n, dt) = fitted_steps(horizon, cfg.dt);
    let cfg = StepConfig { dt, ..*cfg };
    let mut records = Vec::with_capacity(n + 1);
    records.push(StepRecord::from_state(problem, x0, None, solid).map_err(core("recording"))?);
    let mut state = x0.clone();
    for k in 1..=n {
        let (next, report) = step_with_report(&state, problem, &cfg).map_err(core("time step"))?;
        records.push(
            StepRecord::from_state(problem, &next, Some(report.energy), solid)
                .map_err(core("recording"))?,
        );
        state = next;
        if let Some((dir, every, rc)) = snapshots {
            if every > 0 && k % every == 0 && k < n {
                io::write_snapshot(
                    &dir.join(format!("step_{k:06}")),
                    &state,
                    &problem.grid,
                    rc.output.format,
                )?;
            }
        }
    }
    Ok((state, TrajectoryStats { records }))
}

fn nonempty_region(problem: &Problem<f64>, state: &State<f64>) -> Option<SolidRegion> {
    Some(SolidRegion::from_state(problem, state)).filter(|k| !k.is_empty())
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let problem = cfg.problem()?;
    let step = cfg.step_config()?;
    let x0 = initial_state(cfg, &problem)?;
    let region = nonempty_region(&problem, &x0);
    let snaps = out.join("snapshots");
    io::create_dir(&snaps)?;
    io::write_snapshot(
        &snaps.join("initial"),
        &x0,
        &problem.grid,
        cfg.output.format,
    )?;
    let (last, stats) = simulate_trajectory(
        &x0,
        &problem,
        &step,
        cfg.simulate.horizon,
        region.as_ref(),
        Some((&snaps, cfg.simulate.snapshot_every, cfg)),
    )?;
    io::write_snapshot(
        &snaps.join("final"),
        &last,
        &problem.grid,
        cfg.output.format,
    )?;
    io::write_trajectory(out, &stats)?;
    let mut o = Outcome::new(out);
    o.add("steps", stats.steps());
    o.add("t_final", last.t);
    o.add("solid_cells", region.map_or(0, |k| k.cells()));
    if let Some(r) = stats.records.last() {
        o.add("normZ2", r.norm_z2);
        o.add("div_inf", r.div_inf);
    }
    Ok(o)
}

#[derive(Debug, Serialize)]
struct StageSummary {
    lambda: f64,
    iterations: usize,
    converged: bool,
    defect: f64,
}

#[derive(Debug, Serialize)]
struct FixedPointSummary {
    converged: bool,
    iterations: usize,
    defect: f64,
    error_estimate: f64,
    eps: f64,
    period: f64,
    fp_tol: f64,
    /// Relative distance between the final state and its re-propagation over one period.
    reproduction_error: f64,
    stages: Vec<StageSummary>,
    residual_history: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ResidualRow {
    iteration: usize,
    residual: f64,
}

/// Relative distance `|a - b| / max(|b|, 1)`.
pub fn relative_distance(a: &State<f64>, b: &State<f64>, problem: &Problem<f64>) -> f64 {
    let g = &problem.grid;
    a.distance2(b, g).sqrt() / b.norm2(g).sqrt().max(1.0)
}

fn reproduce(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let problem = cfg.problem()?;
    let step = cfg.step_config()?;
    let rcfg = cfg.repro_config()?;
    let guess = initial_state(cfg, &problem)?;
    let report =
        find_reproductive(&guess, &problem, &step, &rcfg).map_err(core("reproductive search"))?;

    let cycle = out.join("cycle");
    io::create_dir(&cycle)?;
    let start = &report.final_state;
    let region = nonempty_region(&problem, start);
    let (end, stats) =
        simulate_trajectory(start, &problem, &step, rcfg.period, region.as_ref(), None)?;
    let reproduction_error = relative_distance(&end, start, &problem);
    io::write_trajectory(&cycle, &stats)?;
    io::write_snapshot(
        &cycle.join("start"),
        start,
        &problem.grid,
        cfg.output.format,
    )?;
    io::write_snapshot(&cycle.join("end"), &end, &problem.grid, cfg.output.format)?;

    write_fixed_point(out, &report, &rcfg, reproduction_error)?;
    let mut o = Outcome::new(out);
    o.add("converged", report.converged);
    o.add("iterations", report.iterations);
    o.add("defect", report.defect);
    o.add("error_estimate", report.error_estimate);
    o.add("reproduction_error", reproduction_error);
    if !report.converged {
        return Err(RunError::NotConverged {
            eps: report.eps,
            iterations: report.iterations,
            defect: report.defect,
        });
    }
    Ok(o)
}

fn write_fixed_point(
    out: &Path,
    report: &FixedPointReport<f64>,
    rcfg: &alloyfreeze_core::ReproConfig<f64>,
    reproduction_error: f64,
) -> Result<(), RunError> {
    let summary = FixedPointSummary {
        converged: report.converged,
        iterations: report.iterations,
        defect: report.defect,
        error_estimate: report.error_estimate,
        eps: report.eps,
        period: rcfg.period,
        fp_tol: rcfg.fp_tol,
        reproduction_error,
        stages: report
            .stages
            .iter()
            .map(|s| StageSummary {
                lambda: s.lambda,
                iterations: s.iterations,
                converged: s.converged,
                defect: s.defect,
            })
            .collect(),
        residual_history: report.residual_history.clone(),
    };
    io::write_json(&out.join("fixed_point.json"), &summary)?;
    io::write_csv(
        &out.join("residuals.csv"),
        report
            .residual_history
            .iter()
            .enumerate()
            .map(|(k, &residual)| ResidualRow {
                iteration: k + 1,
                residual,
            }),
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    eps: f64,
    iterations: Option<usize>,
    residual: Option<f64>,
    solid_velocity_integral: Option<f64>,
    converged: bool,
    slope: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ScalingSummary {
    slope: Option<f64>,
    samples: usize,
    monotone: bool,
    solid_cells: usize,
    failures: Vec<String>,
}

fn sweep_eps(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let problem = cfg.problem()?;
    let step = cfg.step_config()?;
    let rcfg = cfg.repro_config()?;
    let guess = initial_state(cfg, &problem)?;
    let cont =
        eps_continuation(&guess, &problem, &step, &rcfg).map_err(core("eps continuation"))?;
    let samples = cont.samples();
    let fit = scaling_fit(&samples);
    let slope = fit.as_ref().ok().copied();
    let monotone = samples.windows(2).all(|w| w[1].1 <= w[0].1);

    io::write_csv(
        &out.join("eps_sweep.csv"),
        cont.runs.iter().map(|r| SweepRow {
            eps: r.eps,
            iterations: r.report.as_ref().map(|p| p.iterations),
            residual: r.report.as_ref().map(|p| p.defect),
            solid_velocity_integral: r.solid_velocity_integral,
            converged: r.failure.is_none(),
            slope,
        }),
    )?;
    let failures: Vec<String> = cont
        .runs
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|e| format!("eps = {}: {e}", r.eps)))
        .collect();
    io::write_json(
        &out.join("scaling.json"),
        &ScalingSummary {
            slope,
            samples: samples.len(),
            monotone,
            solid_cells: cont.solid_region.as_ref().map_or(0, |k| k.cells()),
            failures: failures.clone(),
        },
    )?;

    let mut o = Outcome::new(out);
    for r in &cont.runs {
        o.add(
            &format!("eps {}", r.eps),
            match (&r.report, r.solid_velocity_integral) {
                (Some(p), Some(v)) => format!("iterations {}, integral {v:.6e}", p.iterations),
                (Some(p), None) => format!("iterations {}, no integral", p.iterations),
                _ => "failed".to_string(),
            },
        );
    }
    o.add(
        "slope",
        slope.map_or("undefined".to_string(), |s| s.to_string()),
    );
    o.add("monotone", monotone);

    if let Some(run) = cont.runs.iter().find(|r| r.failure.is_some()) {
        let err = run.failure.clone().expect("found");
        return Err(match (err, &run.report) {
            (CoreError::NotConverged { .. }, Some(p)) => RunError::NotConverged {
                eps: run.eps,
                iterations: p.iterations,
                defect: p.defect,
            },
            (e, _) => RunError::Core {
                context: "eps continuation",
                source: e,
            },
        });
    }
    fit.map_err(core("scaling fit"))?;
    Ok(o)
}

/// Outcome of one check with its measured values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub applicable: bool,
    #[serde(serialize_with = "as_map")]
    pub values: Vec<(String, f64)>,
}

fn as_map<S: serde::Serializer>(values: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(values.len()))?;
    for (k, v) in values {
        m.serialize_entry(k, v)?;
    }
    m.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub steps: usize,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    /// Line-oriented `key: value` rendering.
    pub fn render(&self) -> String {
        let mut s = format!("passed: {}\nsteps: {}\n", self.passed, self.steps);
        for c in &self.checks {
            let status = match (c.applicable, c.passed) {
                (false, _) => "skipped",
                (true, true) => "pass",
                (true, false) => "fail",
            };
            s.push_str(&format!("{}: {status}\n", c.name));
            for (k, v) in &c.values {
                s.push_str(&format!("{}.{k}: {v:?}\n", c.name));
            }
        }
        s
    }
}

/// Runs every diagnostic on a recorded trajectory.
pub fn check_trajectory(
    problem: &Problem<f64>,
    stats: &TrajectoryStats<f64>,
) -> Result<CheckReport, RunError> {
    let mp = check_max_principles(stats, problem);
    let sol = check_solute(stats, problem.params.c_total);
    let en = energy_budget(stats);
    let decay = decay_check(problem, stats).map_err(core("decay check"))?;
    let v = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, x)| (k.to_string(), *x)).collect();
    let checks = vec![
        CheckResult {
            name: "max_principle".into(),
            passed: mp.passed,
            applicable: true,
            values: v(&[
                ("c_min", mp.c_min),
                ("c_max", mp.c_max),
                ("c_upper", mp.c_upper),
                ("theta_min", mp.theta_min),
                ("theta_max", mp.theta_max),
                ("theta_lower", mp.theta_lower),
                ("theta_upper", mp.theta_upper),
                ("violations", mp.violations.len() as f64),
            ]),
        },
        CheckResult {
            name: "solute".into(),
            passed: sol.passed,
            applicable: true,
            values: v(&[
                ("c_total", sol.c_total),
                ("max_drift", sol.max_drift),
                ("tol", sol.tol),
            ]),
        },
        CheckResult {
            name: "energy".into(),
            passed: en.passed,
            applicable: true,
            values: v(&[
                ("min_slack", en.min_slack),
                ("worst_step", en.worst_step as f64),
                ("max_normZ2", en.max_norm_z2),
                ("dissipated", en.dissipated),
                ("max_penalty_work", en.max_penalty_work),
            ]),
        },
        CheckResult {
            name: "decay".into(),
            passed: decay.passed,
            applicable: decay.applicable,
            values: v(&[
                ("beta", decay.beta),
                ("poincare_constant", decay.poincare_constant),
                ("horizon", decay.horizon),
                ("initial", decay.initial),
                ("final", decay.final_value),
                ("bound", decay.bound),
            ]),
        },
    ];
    Ok(CheckReport {
        passed: checks.iter().all(|c| c.passed),
        steps: stats.steps(),
        checks,
    })
}

fn check(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let problem = cfg.problem()?;
    let stats = match &cfg.output.trajectory {
        Some(dir) => io::read_trajectory(dir)?,
        None => {
            let step = cfg.step_config()?;
            let x0 = initial_state(cfg, &problem)?;
            let (_, stats) = record_trajectory(&x0, &problem, &step, cfg.simulate.horizon, None)
                .map_err(core("simulating the checked trajectory"))?;
            io::write_trajectory(out, &stats)?;
            stats
        }
    };
    let report = check_trajectory(&problem, &stats)?;
    io::write_text(&out.join("check_report.txt"), &report.render())?;
    io::write_json(&out.join("check_report.json"), &report)?;
    let mut o = Outcome::new(out);
    for c in &report.checks {
        o.add(
            &c.name,
            if !c.applicable {
                "skipped"
            } else if c.passed {
                "pass"
            } else {
                "fail"
            },
        );
    }
    if !report.passed {
        return Err(RunError::CheckFailed {
            failed: report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect(),
        });
    }
    Ok(o)
}
