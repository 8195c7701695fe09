//! CSV tables and JSON manifests.
//!
//! Every file goes through an [`OutputDir`], which remembers what it wrote so the
//! final manifest can list it. Wall-clock times live only in `timing.json`; all other
//! files are byte-reproducible for identical inputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::averaging::AveragedTrace;
use crate::error::{Error, Result};
use crate::experiments::{ConvergenceReport, StudyStatus};
use crate::surface::SurfaceTrajectory;
use crate::thin::ThinTrajectory;

pub const SCHEMA_VERSION: u32 = 1;

/// An output directory that records every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    /// Creates the directory (and parents) if needed and checks that it is writable.
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let meta = fs::metadata(&root).map_err(|e| Error::io(&root, e))?;
        if meta.permissions().readonly() {
            return Err(Error::Config(format!(
                "output directory {} is not writable",
                root.display()
            )));
        }
        Ok(OutputDir {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn register(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.register(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        let path = self.register(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(|e| csv_io(&path, e))?;
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    /// Writes `manifest.json` listing every file written so far plus itself.
    pub fn write_manifest(&mut self, mut manifest: Value) -> Result<()> {
        self.register("manifest.json");
        manifest["files"] = json!(self.files);
        self.write_json("manifest.json", &manifest)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Csv(csv::Error::from(std::io::Error::other(format!("{other:?}")))),
    }
}

/// Header fields shared by every manifest.
pub fn manifest_header(command: &str, parameters: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "thinfilm",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": parameters,
    })
}

/// One CSV per kept snapshot with columns `theta0, sigma, u`, plus `thin_manifest.json`.
pub fn write_thin(out: &mut OutputDir, traj: &ThinTrajectory) -> Result<Value> {
    let g = traj.grid;
    let mut snaps = Vec::new();
    for (k, s) in traj.snapshots.iter().enumerate() {
        let name = format!("thin_snapshot_{k:04}.csv");
        let rows = (0..g.n_theta)
            .flat_map(|i| (0..g.n_sigma).map(move |j| (i, j)))
            .map(|(i, j)| (g.theta(i), g.sigma(j), s.u[g.node(i, j)]));
        out.write_csv(&name, &["theta0", "sigma", "u"], rows)?;
        snaps.push(json!({"t": s.t, "file": name}));
    }
    let manifest = json!({
        "grid": {"n_theta": g.n_theta, "n_sigma": g.n_sigma, "eps": g.eps},
        "dt": traj.time.dt,
        "p": traj.p,
        "snapshots": snaps,
        "mass_balance_drift": traj.mass_balance_drift(),
        "max_picard_iterations": traj.max_picard_iterations(),
        "records": traj.records,
    });
    out.write_json("thin_manifest.json", &manifest)?;
    Ok(manifest)
}

/// Per snapshot `(theta0, v)` and `(theta0_quad, zeta)` tables plus `surface_manifest.json`.
pub fn write_surface(out: &mut OutputDir, traj: &SurfaceTrajectory) -> Result<Value> {
    let nodes = traj.node_thetas();
    let quads = traj.quad_thetas();
    let mut snaps = Vec::new();
    for (k, s) in traj.snapshots.iter().enumerate() {
        let v_name = format!("surface_v_{k:04}.csv");
        let z_name = format!("surface_zeta_{k:04}.csv");
        out.write_csv(&v_name, &["theta0", "v"], nodes.iter().copied().zip(s.v.iter().copied()))?;
        out.write_csv(
            &z_name,
            &["theta0_quad", "zeta"],
            quads.iter().copied().zip(s.zeta.iter().copied()),
        )?;
        snaps.push(json!({"t": s.t, "v_file": v_name, "zeta_file": z_name}));
    }
    let manifest = json!({
        "n_theta": traj.n_theta,
        "dt": traj.time.dt,
        "p": traj.p,
        "snapshots": snaps,
        "conservation_drift": traj.conservation_drift(),
        "max_zeta_residual": traj.max_zeta_residual(),
        "conserved": traj.records.iter().map(|r| json!({"t": r.t, "integral_g_v": r.conserved})).collect::<Vec<_>>(),
    });
    out.write_json("surface_manifest.json", &manifest)?;
    Ok(manifest)
}

/// `time, theta0, v_avg, zeta_avg, wx_avg, wy_avg, flux_diag` rows for every snapshot.
pub fn write_trace(out: &mut OutputDir, name: &str, trace: &AveragedTrace) -> Result<()> {
    let n = trace.n_theta;
    let h = std::f64::consts::TAU / n as f64;
    let rows = trace.snapshots.iter().flat_map(|s| {
        (0..n).map(move |i| {
            (
                s.t,
                i as f64 * h,
                s.v[i],
                s.zeta[i],
                s.flux[i][0],
                s.flux[i][1],
                s.flux_diagnostic[i],
            )
        })
    });
    out.write_csv(
        name,
        &["time", "theta0", "v_avg", "zeta_avg", "wx_avg", "wy_avg", "flux_diag"],
        rows,
    )
}

/// `report.json`, `report.csv` (one row per thickness) and `summary.txt`.
pub fn write_report(out: &mut OutputDir, report: &ConvergenceReport) -> Result<()> {
    out.write_json("report.json", report)?;
    out.write_csv(
        "report.csv",
        &[
            "eps",
            "v_error",
            "zeta_error",
            "flux_diagnostic",
            "v_sup_error",
            "thin_mass_drift",
            "limit_mass_drift",
            "max_picard_iterations",
        ],
        report.rows.iter().map(|r| {
            (
                r.eps,
                r.v_error,
                r.zeta_error,
                r.flux_diagnostic,
                r.v_sup_error,
                r.thin_mass_drift,
                r.limit_mass_drift,
                r.max_picard_iterations,
            )
        }),
    )?;
    out.write_text("summary.txt", &summary_table(report))
}

pub fn summary_table(report: &ConvergenceReport) -> String {
    let mut s = format!(
        "scenario {}  p = {}  T = {}  N_theta = {}  N_sigma = {}  dt = {}\n\n",
        report.scenario,
        report.p,
        report.final_time,
        report.policy.n_theta,
        report.policy.n_sigma,
        report.policy.dt
    );
    s.push_str(&format!(
        "{:>8}  {:>12}  {:>12}  {:>12}  {:>10}  {:>10}\n",
        "eps", "v_error", "zeta_error", "flux_diag", "thin_drift", "order_v"
    ));
    for (k, r) in report.rows.iter().enumerate() {
        let order = if k == 0 {
            "-".to_string()
        } else {
            format!("{:.3}", report.orders[k - 1].v)
        };
        s.push_str(&format!(
            "{:>8}  {:>12.5e}  {:>12.5e}  {:>12.5e}  {:>10.2e}  {:>10}\n",
            r.eps, r.v_error, r.zeta_error, r.flux_diagnostic, r.thin_mass_drift, order
        ));
    }
    s.push_str(&format!("\ncurve conservation drift {:.2e}\n", report.limit_mass_drift));
    let status = match report.status {
        StudyStatus::Passed => "PASSED",
        StudyStatus::Failed => "FAILED",
    };
    s.push_str(&format!("status {status}\n"));
    for f in &report.failures {
        s.push_str(&format!("  {f}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_files_in_write_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("nested/out")).unwrap();
        out.write_csv("a.csv", &["x", "y"], [(1.0, 2.5), (0.1, -3.0)]).unwrap();
        out.write_text("b.txt", "hi\n").unwrap();
        out.write_manifest(manifest_header("test", json!({"k": 1}))).unwrap();
        let text = fs::read_to_string(dir.path().join("nested/out/a.csv")).unwrap();
        assert_eq!(text, "x,y\n1.0,2.5\n0.1,-3.0\n");
        let m: Value =
            serde_json::from_str(&fs::read_to_string(out.root().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(m["files"], json!(["a.csv", "b.txt", "manifest.json"]));
        assert_eq!(m["parameters"]["k"], 1);
    }
}
