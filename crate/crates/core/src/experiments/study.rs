//! The thickness ladder: band solves at decreasing `ε`, averaged and compared with one
//! shared curve solve.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::averaging::{self, AveragedTrace, ErrorNorms};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::scenario::Scenario;
use crate::surface::{SurfaceSolver, SurfaceTrajectory};
use crate::thin::{ThinGrid, ThinSolver};
use crate::time::{PicardOptions, Snapshots};

/// Drift above which a study is marked failed.
pub const DRIFT_THRESHOLD: f64 = 1e-8;

/// Discretization used for every rung of the ladder. The reference rectangle does not
/// depend on `ε`, so the same grid serves all thicknesses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    pub n_theta: usize,
    pub n_sigma: usize,
    pub dt: f64,
    /// Keep every this many steps for the error norms. The trapezoid rule gives the
    /// initial level half a snapshot spacing of weight, and the band data relax away
    /// from their initial normal profile within a short layer, so sparse sampling
    /// leaves an ε-independent error floor.
    pub snapshot_every: usize,
    pub picard: PicardOptions,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        ResolutionPolicy {
            n_theta: 64,
            n_sigma: 16,
            dt: 1e-3,
            snapshot_every: 1,
            picard: PicardOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub v_error: f64,
    pub zeta_error: f64,
    pub flux_diagnostic: f64,
    pub v_sup_error: f64,
    pub thin_mass_drift: f64,
    pub limit_mass_drift: f64,
    pub max_picard_iterations: usize,
}

/// Observed orders between consecutive rungs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Orders {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub v: f64,
    pub zeta: f64,
    pub flux_diagnostic: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StudyStatus {
    Passed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub p: f64,
    pub final_time: f64,
    pub eps: Vec<f64>,
    pub policy: ResolutionPolicy,
    pub rows: Vec<EpsRow>,
    pub orders: Vec<Orders>,
    pub limit_mass_drift: f64,
    pub status: StudyStatus,
    pub failures: Vec<String>,
    /// Wall-clock seconds per rung and for the curve solve; kept out of the
    /// serialized report so that reports are byte-reproducible.
    #[serde(skip)]
    pub runtimes: Runtimes,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Runtimes {
    pub limit: f64,
    pub per_eps: Vec<f64>,
}

/// `log(e_i / e_{i+1}) / log(ε_i / ε_{i+1})`.
pub fn observed_order(e_coarse: f64, e_fine: f64, eps_coarse: f64, eps_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (eps_coarse / eps_fine).ln()
}

pub fn orders_of(rows: &[EpsRow]) -> Vec<Orders> {
    rows.windows(2)
        .map(|w| Orders {
            eps_coarse: w[0].eps,
            eps_fine: w[1].eps,
            v: observed_order(w[0].v_error, w[1].v_error, w[0].eps, w[1].eps),
            zeta: observed_order(w[0].zeta_error, w[1].zeta_error, w[0].eps, w[1].eps),
            flux_diagnostic: observed_order(
                w[0].flux_diagnostic,
                w[1].flux_diagnostic,
                w[0].eps,
                w[1].eps,
            ),
        })
        .collect()
}

/// Everything one rung produces, including the averaged trace for output.
#[derive(Clone, Debug)]
pub struct RungOutput {
    pub row: EpsRow,
    pub trace: AveragedTrace,
    pub runtime: f64,
}

/// Solves the curve problem with the study's resolution.
pub fn limit_solve(sc: &Scenario, policy: &ResolutionPolicy) -> Result<SurfaceTrajectory> {
    SurfaceSolver::new(sc, policy.n_theta)?
        .with_picard(policy.picard)?
        .solve(policy.dt, &Snapshots::Every(policy.snapshot_every))
}

/// One band solve at thickness `eps`, averaged and compared with `limit`.
pub fn run_rung(
    sc: &Scenario,
    eps: f64,
    policy: &ResolutionPolicy,
    limit: &SurfaceTrajectory,
    exec: Exec,
) -> Result<RungOutput> {
    let start = Instant::now();
    let grid = ThinGrid::new(policy.n_theta, policy.n_sigma, eps)?;
    let traj = ThinSolver::new(sc, grid)?
        .with_picard(policy.picard)?
        .with_exec(exec)
        .solve(policy.dt, &Snapshots::Every(policy.snapshot_every))?;
    let trace = averaging::average_trajectory(sc, &traj, exec)?;
    let norms: ErrorNorms = averaging::error_norms(sc, &trace, limit)?;
    Ok(RungOutput {
        row: EpsRow {
            eps,
            v_error: norms.v_l2,
            zeta_error: norms.zeta_l2,
            flux_diagnostic: norms.flux_diagnostic_l2,
            v_sup_error: norms.v_sup_l2,
            thin_mass_drift: traj.mass_balance_drift(),
            limit_mass_drift: limit.conservation_drift(),
            max_picard_iterations: traj.max_picard_iterations(),
        },
        trace,
        runtime: start.elapsed().as_secs_f64(),
    })
}

/// Full study output: the report plus the curve solution and averaged traces.
#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub report: ConvergenceReport,
    pub limit: Option<SurfaceTrajectory>,
    pub traces: Vec<AveragedTrace>,
}

pub fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Config("thickness list is empty".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("thicknesses must be positive, got {eps:?}")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "thickness list must be strictly decreasing, got {eps:?}"
        )));
    }
    Ok(())
}

/// Runs the ladder. Invalid input is an error; solver failures produce a report marked
/// failed that keeps every rung completed before the first failing one.
pub fn convergence_study(
    sc: &Scenario,
    eps: &[f64],
    policy: &ResolutionPolicy,
    exec: Exec,
) -> Result<StudyOutput> {
    check_eps_list(eps)?;
    let mut report = ConvergenceReport {
        scenario: sc.name().to_string(),
        p: sc.p(),
        final_time: sc.final_time(),
        eps: eps.to_vec(),
        policy: *policy,
        rows: Vec::new(),
        orders: Vec::new(),
        limit_mass_drift: f64::NAN,
        status: StudyStatus::Failed,
        failures: Vec::new(),
        runtimes: Runtimes::default(),
    };
    let start = Instant::now();
    let limit = match limit_solve(sc, policy) {
        Ok(l) => l,
        Err(e) => {
            report.failures.push(format!("curve solve: {e}"));
            return Ok(StudyOutput {
                report,
                limit: None,
                traces: Vec::new(),
            });
        }
    };
    report.runtimes.limit = start.elapsed().as_secs_f64();
    report.limit_mass_drift = limit.conservation_drift();

    let rungs = exec.map(eps, |&e| run_rung(sc, e, policy, &limit, exec));
    let mut traces = Vec::new();
    for (e, rung) in eps.iter().zip(rungs) {
        match rung {
            Ok(out) => {
                report.rows.push(out.row);
                report.runtimes.per_eps.push(out.runtime);
                traces.push(out.trace);
            }
            Err(err) => {
                report.failures.push(format!("eps = {e}: {err}"));
                break;
            }
        }
    }
    report.orders = orders_of(&report.rows);
    if report.limit_mass_drift > DRIFT_THRESHOLD {
        report
            .failures
            .push(format!("curve conservation drift {:e}", report.limit_mass_drift));
    }
    for row in &report.rows {
        if !(row.thin_mass_drift <= DRIFT_THRESHOLD) {
            report.failures.push(format!(
                "eps = {}: band mass drift {:e}",
                row.eps, row.thin_mass_drift
            ));
        }
    }
    if report.failures.is_empty() {
        report.status = StudyStatus::Passed;
    }
    Ok(StudyOutput {
        report,
        limit: Some(limit),
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_follow_error_ratios() {
        let row = |eps, e| EpsRow {
            eps,
            v_error: e,
            zeta_error: 2.0 * e,
            flux_diagnostic: e * e,
            v_sup_error: e,
            thin_mass_drift: 0.0,
            limit_mass_drift: 0.0,
            max_picard_iterations: 1,
        };
        let o = orders_of(&[row(0.4, 0.08), row(0.2, 0.04), row(0.1, 0.01)]);
        assert_eq!(o.len(), 2);
        assert!((o[0].v - 1.0).abs() < 1e-14);
        assert!((o[1].v - 2.0).abs() < 1e-14);
        assert!((o[1].zeta - 2.0).abs() < 1e-14);
        assert!((o[0].flux_diagnostic - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eps_list_must_decrease() {
        assert!(check_eps_list(&[0.4, 0.2, 0.1]).is_ok());
        assert!(check_eps_list(&[0.2, 0.4]).is_err());
        assert!(check_eps_list(&[0.2, 0.2]).is_err());
        assert!(check_eps_list(&[]).is_err());
        assert!(check_eps_list(&[0.1, -0.1]).is_err());
    }
}
