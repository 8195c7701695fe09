//! Uniform time grids, snapshot schedules and the shared Picard policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid `t_n = n dt` covering `[0, final_time]`; `final_time / dt` must be an integer.
    pub fn new(final_time: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let n = (final_time / dt).round();
        if n < 1.0 || (n * dt - final_time).abs() > 1e-9 * final_time.max(dt) {
            return Err(Error::Config(format!(
                "final time {final_time} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(TimeGrid {
            dt,
            steps: n as usize,
        })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Which time levels a solve records. The initial and final levels are always kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snapshots {
    Every(usize),
    Times(Vec<f64>),
}

impl Default for Snapshots {
    fn default() -> Self {
        Snapshots::Every(10)
    }
}

impl Snapshots {
    /// Sorted step indices, always including 0 and the last step.
    pub fn steps(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        let mut out = vec![0, grid.steps];
        match self {
            Snapshots::Every(k) => {
                if *k == 0 {
                    return Err(Error::Config("snapshot interval must be at least 1".into()));
                }
                out.extend((0..=grid.steps).step_by(*k));
            }
            Snapshots::Times(times) => {
                for &t in times {
                    let n = (t / grid.dt).round();
                    if !(0.0..=grid.steps as f64).contains(&n)
                        || (n * grid.dt - t).abs() > 1e-9 * grid.dt.max(t.abs())
                    {
                        return Err(Error::Config(format!(
                            "snapshot time {t} is not on the time grid (dt = {}, T = {})",
                            grid.dt,
                            grid.final_time()
                        )));
                    }
                    out.push(n as usize);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Lagged-coefficient fixed-point iteration settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Converged when `‖U_{k+1} − U_k‖ ≤ tol ‖U_{k+1}‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations after which updates are relaxed.
    pub damping_after: usize,
    /// Relaxation weight of the new iterate once damping is engaged.
    pub damping: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-9,
            max_iter: 50,
            damping_after: 10,
            damping: 0.5,
        }
    }
}

impl PicardOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.max_iter >= 1 && self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("invalid Picard options {self:?}")));
        }
        Ok(())
    }

    /// Blends the new iterate into `current` and returns the relative update.
    ///
    /// The first iterate is never relaxed: it replaces the initial guess outright, so
    /// every later blend of linear solutions keeps the discrete mass balance.
    pub(crate) fn relax(&self, iteration: usize, current: &mut [f64], new: &[f64]) -> f64 {
        let w = if iteration > self.damping_after.max(1) {
            self.damping
        } else {
            1.0
        };
        let (mut diff, mut norm) = (0.0, 0.0);
        for (c, &n) in current.iter_mut().zip(new) {
            let next = if w == 1.0 { n } else { *c + w * (n - *c) };
            diff += (next - *c) * (next - *c);
            norm += next * next;
            *c = next;
        }
        if diff == 0.0 {
            0.0
        } else if norm == 0.0 {
            f64::INFINITY
        } else {
            (diff / norm).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_integer_step_count() {
        let g = TimeGrid::new(1.0, 1e-3).unwrap();
        assert_eq!(g.steps, 1000);
        assert_eq!(g.final_time(), 1.0);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
    }

    #[test]
    fn snapshot_schedules() {
        let g = TimeGrid::new(1.0, 0.1).unwrap();
        assert_eq!(Snapshots::Every(4).steps(&g).unwrap(), vec![0, 4, 8, 10]);
        assert_eq!(
            Snapshots::Times(vec![0.5, 0.2]).steps(&g).unwrap(),
            vec![0, 2, 5, 10]
        );
        assert!(Snapshots::Times(vec![0.25]).steps(&g).is_err());
        assert!(Snapshots::Every(0).steps(&g).is_err());
    }

    #[test]
    fn relaxation() {
        let opts = PicardOptions::default();
        let mut cur = vec![1.0, 1.0];
        let upd = opts.relax(1, &mut cur, &[2.0, 1.0]);
        assert_eq!(cur, vec![2.0, 1.0]);
        assert!((upd - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        opts.relax(11, &mut cur, &[0.0, 1.0]);
        assert_eq!(cur, vec![1.0, 1.0]);
        let mut zero = vec![0.0];
        assert_eq!(opts.relax(1, &mut zero, &[0.0]), 0.0);
    }
}
