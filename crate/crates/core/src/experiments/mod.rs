//! Verification harness: the thickness ladder, the radial oracle and exact-solution
//! suites.

mod radial;
mod study;
mod suites;

pub use radial::{radial_oracle, RadialProblem, RadialSnapshot, RadialTrajectory};
pub use study::{
    check_eps_list, convergence_study, limit_solve, observed_order, orders_of, run_rung,
    ConvergenceReport, EpsRow, Orders, ResolutionPolicy, RungOutput, Runtimes, StudyOutput,
    StudyStatus, DRIFT_THRESHOLD,
};
pub use suites::{exact_suites, expanding_circle_scenario, mode_decay_scenario, SuiteCheck};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry;
use crate::quadrature::GAUSS2;
use crate::scenario::Scenario;
use crate::thin::{ThinField, ThinTrajectory};

/// Discrepancy between a band trajectory and the radial oracle at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleGap {
    pub t: f64,
    /// `‖u − u_ref‖_{L²(Ω_t)}`
    pub l2: f64,
    /// `‖u_ref‖_{L²(Ω_t)}`
    pub reference_l2: f64,
}

/// `L²(Ω_t)` distances between band snapshots and oracle snapshots at equal times,
/// integrated with 2×2 Gauss points per band cell.
pub fn oracle_gaps(
    sc: &Scenario,
    thin: &ThinTrajectory,
    oracle: &RadialTrajectory,
) -> Result<Vec<OracleGap>> {
    let grid = thin.grid;
    let (ht, hs) = (grid.dtheta(), grid.dsigma());
    thin.snapshots
        .iter()
        .map(|snap| {
            let reference = oracle.at(snap.t).ok_or_else(|| {
                Error::Misaligned(format!("oracle has no snapshot at t = {}", snap.t))
            })?;
            let field = ThinField::new(&grid, &snap.u)?;
            let (mut diff, mut norm) = (0.0, 0.0);
            for i in 0..grid.n_theta {
                for &(xt, wt) in &GAUSS2 {
                    let theta = grid.theta(i) + xt * ht;
                    let fr = geometry::frame(sc, theta, snap.t)?;
                    let radius = geometry::dot(fr.y, fr.nu);
                    for j in 0..grid.n_sigma - 1 {
                        for &(xs, ws) in &GAUSS2 {
                            let s = grid.sigma(j) + xs * hs;
                            let map = geometry::thin_map_from_frame(&fr, grid.eps, s)?;
                            let w = wt * ht * ws * hs * map.det;
                            let u_ref = reference.value_at(radius + map.r);
                            let e = field.value(theta, s) - u_ref;
                            diff += w * e * e;
                            norm += w * u_ref * u_ref;
                        }
                    }
                }
            }
            Ok(OracleGap {
                t: snap.t,
                l2: diff.sqrt(),
                reference_l2: norm.sqrt(),
            })
        })
        .collect()
}
