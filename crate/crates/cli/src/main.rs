mod args;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use thinfilm::averaging;
use thinfilm::exec::Exec;
use thinfilm::experiments::{self, ResolutionPolicy, StudyStatus};
use thinfilm::geometry;
use thinfilm::output::{self, OutputDir};
use thinfilm::surface::SurfaceSolver;
use thinfilm::thin::{ThinGrid, ThinSolver};
use thinfilm::time::Snapshots;
use thinfilm::{Error, Result, Scenario};

use args::{Cli, Command, Common, ConvergeArgs, LimitArgs, ThinArgs, ValidateArgs};

const THREADS_VAR: &str = "THINFILM_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("thinfilm {}: {e}", cli.command.name());
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    Ok(Some(n))
}

/// Returns whether the run succeeded; hard errors propagate.
fn run(command: &Command) -> Result<bool> {
    let threads = configure_threads()?;
    let start = Instant::now();
    let (mut out, ok, mut timing) = match command {
        Command::SolveThin(a) => solve_thin(a)?,
        Command::SolveLimit(a) => solve_limit(a)?,
        Command::Average(a) => average(a)?,
        Command::Converge(a) => converge(a)?,
        Command::Validate(a) => return validate(a),
    };
    timing["total_seconds"] = json!(start.elapsed().as_secs_f64());
    timing["threads"] = json!(threads);
    out.write_json("timing.json", &timing)?;
    let manifest = out_manifest(command)?;
    out.write_manifest(manifest)?;
    Ok(ok)
}

fn load(common: &Common) -> Result<Scenario> {
    let sc = Scenario::from_path(&common.scenario)?;
    match common.p {
        Some(p) => sc.with_p(p),
        None => Ok(sc),
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("--{name} must be positive, got {v}")))
    }
}

fn common_parameters(c: &Common, sc: &Scenario) -> Value {
    json!({
        "scenario_path": c.scenario,
        "scenario": sc.spec(),
        "p": sc.p(),
        "n_theta": c.n_theta,
        "dt": c.dt,
        "picard": c.picard.options(),
    })
}

fn snapshots_json(s: &Snapshots) -> Value {
    match s {
        Snapshots::Every(n) => json!({"every": n}),
        Snapshots::Times(t) => json!({"times": t}),
    }
}

fn out_manifest(command: &Command) -> Result<Value> {
    let (common, extra) = match command {
        Command::SolveThin(a) | Command::Average(a) => (
            &a.common,
            json!({"eps": a.eps, "n_sigma": a.n_sigma, "snapshots": snapshots_json(&a.snapshots.resolve(10))}),
        ),
        Command::SolveLimit(a) => (
            &a.common,
            json!({"snapshots": snapshots_json(&a.snapshots.resolve(10))}),
        ),
        Command::Converge(a) => (
            &a.common,
            json!({"eps": a.eps, "n_sigma": a.n_sigma, "snapshot_every": a.snapshot_every}),
        ),
        Command::Validate(_) => unreachable!("validate writes its own manifest"),
    };
    let sc = load(common)?;
    let mut params = common_parameters(common, &sc);
    for (k, v) in extra.as_object().expect("object").iter() {
        params[k] = v.clone();
    }
    Ok(output::manifest_header(command.name(), params))
}

type Outcome = (OutputDir, bool, Value);

fn thin_run(a: &ThinArgs, sc: &Scenario) -> Result<thinfilm::thin::ThinTrajectory> {
    check_positive("eps", a.eps)?;
    check_positive("dt", a.common.dt)?;
    let grid = ThinGrid::new(a.common.n_theta, a.n_sigma, a.eps)?;
    ThinSolver::new(sc, grid)?
        .with_picard(a.common.picard.options())?
        .solve(a.common.dt, &a.snapshots.resolve(10))
}

fn solve_thin(a: &ThinArgs) -> Result<Outcome> {
    let sc = load(&a.common)?;
    let mut out = OutputDir::create(&a.common.out)?;
    let start = Instant::now();
    let traj = thin_run(a, &sc)?;
    let seconds = start.elapsed().as_secs_f64();
    output::write_thin(&mut out, &traj)?;
    println!(
        "band solve: {} snapshots, mass drift {:.2e}, max Picard iterations {}",
        traj.snapshots.len(),
        traj.mass_balance_drift(),
        traj.max_picard_iterations()
    );
    Ok((out, true, json!({"thin_seconds": seconds})))
}

fn solve_limit(a: &LimitArgs) -> Result<Outcome> {
    let sc = load(&a.common)?;
    check_positive("dt", a.common.dt)?;
    let mut out = OutputDir::create(&a.common.out)?;
    let start = Instant::now();
    let traj = SurfaceSolver::new(&sc, a.common.n_theta)?
        .with_picard(a.common.picard.options())?
        .solve(a.common.dt, &a.snapshots.resolve(10))?;
    let seconds = start.elapsed().as_secs_f64();
    output::write_surface(&mut out, &traj)?;
    println!(
        "curve solve: {} snapshots, conservation drift {:.2e}",
        traj.snapshots.len(),
        traj.conservation_drift()
    );
    Ok((out, true, json!({"limit_seconds": seconds})))
}

fn average(a: &ThinArgs) -> Result<Outcome> {
    let sc = load(&a.common)?;
    let mut out = OutputDir::create(&a.common.out)?;
    let start = Instant::now();
    let thin = thin_run(a, &sc)?;
    let limit = SurfaceSolver::new(&sc, a.common.n_theta)?
        .with_picard(a.common.picard.options())?
        .solve(a.common.dt, &a.snapshots.resolve(10))?;
    let trace = averaging::average_trajectory(&sc, &thin, Exec::Parallel)?;
    let norms = averaging::error_norms(&sc, &trace, &limit)?;
    let seconds = start.elapsed().as_secs_f64();
    output::write_thin(&mut out, &thin)?;
    output::write_surface(&mut out, &limit)?;
    output::write_trace(&mut out, "averaged_trace.csv", &trace)?;
    out.write_json("error_norms.json", &norms)?;
    println!(
        "eps {}: v error {:.4e}, zeta error {:.4e}, flux diagnostic {:.4e}",
        a.eps, norms.v_l2, norms.zeta_l2, norms.flux_diagnostic_l2
    );
    Ok((out, true, json!({"seconds": seconds})))
}

fn converge(a: &ConvergeArgs) -> Result<Outcome> {
    let sc = load(&a.common)?;
    experiments::check_eps_list(&a.eps)?;
    check_positive("dt", a.common.dt)?;
    if a.snapshot_every == 0 {
        return Err(Error::Config("--snapshot-every must be at least 1".into()));
    }
    let policy = ResolutionPolicy {
        n_theta: a.common.n_theta,
        n_sigma: a.n_sigma,
        dt: a.common.dt,
        snapshot_every: a.snapshot_every,
        picard: a.common.picard.options(),
    };
    // Grid errors are configuration errors; find them before any solve starts.
    for &e in &a.eps {
        ThinGrid::new(policy.n_theta, policy.n_sigma, e)?;
    }
    let mut out = OutputDir::create(&a.common.out)?;
    let study = experiments::convergence_study(&sc, &a.eps, &policy, Exec::Parallel)?;
    output::write_report(&mut out, &study.report)?;
    if a.write_traces {
        for trace in &study.traces {
            output::write_trace(&mut out, &format!("averaged_trace_eps_{}.csv", trace.eps), trace)?;
        }
    }
    print!("{}", output::summary_table(&study.report));
    let timing = json!({
        "limit_seconds": study.report.runtimes.limit,
        "per_eps_seconds": study.report.eps.iter().zip(&study.report.runtimes.per_eps)
            .map(|(e, s)| json!({"eps": e, "seconds": s})).collect::<Vec<_>>(),
    });
    Ok((out, study.report.status == StudyStatus::Passed, timing))
}

fn validate(a: &ValidateArgs) -> Result<bool> {
    let sc = Scenario::from_path(&a.scenario)?;
    check_positive("eps", a.eps)?;
    if a.samples_theta < 2 || a.samples_time < 1 {
        return Err(Error::Config("need at least 2 theta samples and 1 time sample".into()));
    }
    let report = geometry::frame_discrepancies(&sc, a.eps, a.samples_theta, a.samples_time)?;
    println!(
        "frame check for '{}' ({} x {} samples, tolerance {:e})",
        sc.name(),
        report.samples_theta,
        report.samples_time,
        report.tolerance
    );
    for d in &report.checks {
        println!(
            "  {:<20} {:>10.3e}   worst at theta0 = {:.4}, t = {:.4}",
            d.quantity, d.max, d.theta0, d.t
        );
    }
    let passed = report.passed();
    println!("{}", if passed { "PASSED" } else { "FAILED" });
    if let Some(dir) = &a.out {
        let mut out = OutputDir::create(dir)?;
        out.write_json("validation.json", &json!({"passed": passed, "report": report}))?;
        let params = json!({
            "scenario_path": a.scenario,
            "scenario": sc.spec(),
            "eps": a.eps,
            "samples_theta": a.samples_theta,
            "samples_time": a.samples_time,
        });
        out.write_manifest(output::manifest_header("validate", params))?;
    }
    Ok(passed)
}

