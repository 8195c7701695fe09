//! Element kernels for the pulled-back band problem.
//!
//! Every kernel computes per-cell local arrays through [`Exec`] and scatters them
//! sequentially in cell order, so the assembled values do not depend on threading.

use serde::Serialize;

use super::grid::{bilinear, cell_gradient, DofMap, ThinGrid};
use crate::averaging;
use crate::error::Result;
use crate::exec::Exec;
use crate::geometry::{self, GeoFrame};
use crate::linalg::BandMatrix;
use crate::quadrature::GAUSS2;
use crate::scenario::Scenario;

/// Geometric data at one quadrature point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct QuadPoint {
    /// Quadrature weight times the area element.
    pub weight: f64,
    /// Inverse metric `(g^θθ, g^θσ, g^σσ)`.
    pub inverse_metric: [f64; 3],
    /// Reference components `DΨ⁻¹ w` of the map velocity.
    pub velocity_ref: [f64; 2],
    pub source: f64,
}

/// All quadrature data of the band at one time level, indexed by cell then by
/// quadrature point `2 * q_theta + q_sigma`.
#[derive(Clone, Debug)]
pub struct LevelGeometry {
    pub t: f64,
    pub points: Vec<[QuadPoint; 4]>,
}

struct Shape {
    xi: f64,
    eta: f64,
    n: [f64; 4],
    /// reference gradients (∂_θ, ∂_σ) per local node
    grad: [[f64; 2]; 4],
}

fn shapes(grid: &ThinGrid) -> [Shape; 4] {
    let (ht, hs) = (grid.dtheta(), grid.dsigma());
    std::array::from_fn(|q| {
        let (xi, eta) = (GAUSS2[q / 2].0, GAUSS2[q % 2].0);
        let (n, d) = bilinear(xi, eta);
        Shape {
            xi,
            eta,
            n,
            grad: std::array::from_fn(|a| [d[a][0] / ht, d[a][1] / hs]),
        }
    })
}

fn quad_weight(grid: &ThinGrid, q: usize) -> f64 {
    GAUSS2[q / 2].1 * GAUSS2[q % 2].1 * grid.dtheta() * grid.dsigma()
}

fn point(
    sc: &Scenario,
    fr: &GeoFrame,
    eps: f64,
    sigma: f64,
    t: f64,
    weight: f64,
) -> Result<QuadPoint> {
    let map = geometry::thin_map_from_frame(fr, eps, sigma)?;
    let w = geometry::material_velocity_from_frame(fr, eps, sigma);
    let source = match sc.thin_source() {
        Some(e) => e.eval(fr.theta0, sigma, map.r, t),
        None => averaging::lift_source(sc, fr.theta0, t),
    };
    let gi = map.inverse_metric;
    Ok(QuadPoint {
        weight: weight * map.det,
        inverse_metric: [gi[0][0], gi[0][1], gi[1][1]],
        velocity_ref: map.to_reference(w),
        source,
    })
}

impl LevelGeometry {
    pub fn build(sc: &Scenario, grid: &ThinGrid, t: f64, exec: Exec) -> Result<Self> {
        let ns = grid.n_sigma - 1;
        let per_column: Vec<Result<Vec<[QuadPoint; 4]>>> = exec.map_range(grid.n_theta, |i| {
            let frames = [
                geometry::frame(sc, grid.theta(i) + GAUSS2[0].0 * grid.dtheta(), t)?,
                geometry::frame(sc, grid.theta(i) + GAUSS2[1].0 * grid.dtheta(), t)?,
            ];
            (0..ns)
                .map(|j| {
                    let mut pts = [QuadPoint::default(); 4];
                    for (q, pt) in pts.iter_mut().enumerate() {
                        let sigma = grid.sigma(j) + GAUSS2[q % 2].0 * grid.dsigma();
                        *pt = point(sc, &frames[q / 2], grid.eps, sigma, t, quad_weight(grid, q))?;
                    }
                    Ok(pts)
                })
                .collect()
        });
        let mut points = Vec::with_capacity(grid.cells());
        for col in per_column {
            points.extend(col?);
        }
        Ok(LevelGeometry { t, points })
    }
}

/// Assembled matrices (banded ordering, see [`DofMap`]) and load (natural ordering).
#[derive(Clone, Debug)]
pub struct ThinSystem {
    pub mass: BandMatrix,
    pub stiffness: BandMatrix,
    pub advection: BandMatrix,
    pub load: Vec<f64>,
}

fn scatter(grid: &ThinGrid, dofs: &DofMap, locals: &[[[f64; 4]; 4]]) -> BandMatrix {
    let bw = dofs.bandwidth();
    let mut m = BandMatrix::zeros(grid.dofs(), bw, bw);
    for (c, local) in locals.iter().enumerate() {
        let nodes = grid.cell_nodes(c).map(|k| dofs.band_index(k));
        for a in 0..4 {
            for b in 0..4 {
                m.add(nodes[a], nodes[b], local[a][b]);
            }
        }
    }
    m
}

pub(super) fn mass_matrix(grid: &ThinGrid, dofs: &DofMap, geo: &LevelGeometry, exec: Exec) -> BandMatrix {
    let sh = shapes(grid);
    let locals = exec.map(&geo.points, |pts| {
        let mut loc = [[0.0; 4]; 4];
        for (q, pt) in pts.iter().enumerate() {
            for a in 0..4 {
                for b in 0..4 {
                    loc[a][b] += pt.weight * sh[q].n[a] * sh[q].n[b];
                }
            }
        }
        loc
    });
    scatter(grid, dofs, &locals)
}

#[inline]
fn quad_form(gi: &[f64; 3], a: [f64; 2], b: [f64; 2]) -> f64 {
    gi[0] * a[0] * b[0] + gi[1] * (a[0] * b[1] + a[1] * b[0]) + gi[2] * a[1] * b[1]
}

/// `|∇u|^{p−2}` from `|∇u|²`.
#[inline]
pub(crate) fn p_coefficient(grad_sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        grad_sq.powf(0.5 * (p - 2.0))
    }
}

fn local_values(grid: &ThinGrid, c: usize, u: &[f64]) -> [f64; 4] {
    grid.cell_nodes(c).map(|k| u[k])
}

pub(super) fn stiffness_matrix(
    grid: &ThinGrid,
    dofs: &DofMap,
    geo: &LevelGeometry,
    u: &[f64],
    p: f64,
    exec: Exec,
) -> BandMatrix {
    let sh = shapes(grid);
    let locals = exec.map_range(geo.points.len(), |c| {
        let uc = local_values(grid, c, u);
        let mut loc = [[0.0; 4]; 4];
        for (q, pt) in geo.points[c].iter().enumerate() {
            let s = &sh[q];
            let du = cell_gradient(uc, s.xi, s.eta, grid.dtheta(), grid.dsigma());
            let coef = p_coefficient(quad_form(&pt.inverse_metric, du, du), p);
            if coef == 0.0 {
                continue;
            }
            let w = pt.weight * coef;
            for a in 0..4 {
                for b in 0..4 {
                    loc[a][b] += w * quad_form(&pt.inverse_metric, s.grad[a], s.grad[b]);
                }
            }
        }
        loc
    });
    scatter(grid, dofs, &locals)
}

/// `B[a][b] = ∫ φ_b (w · ∇φ_a)`: row is the test function.
pub(super) fn advection_matrix(
    grid: &ThinGrid,
    dofs: &DofMap,
    geo: &LevelGeometry,
    exec: Exec,
) -> BandMatrix {
    let sh = shapes(grid);
    let locals = exec.map(&geo.points, |pts| {
        let mut loc = [[0.0; 4]; 4];
        for (q, pt) in pts.iter().enumerate() {
            let s = &sh[q];
            let v = pt.velocity_ref;
            for a in 0..4 {
                let adv = v[0] * s.grad[a][0] + v[1] * s.grad[a][1];
                for b in 0..4 {
                    loc[a][b] += pt.weight * s.n[b] * adv;
                }
            }
        }
        loc
    });
    scatter(grid, dofs, &locals)
}

pub(super) fn load_vector(grid: &ThinGrid, geo: &LevelGeometry) -> Vec<f64> {
    let sh = shapes(grid);
    let mut f = vec![0.0; grid.dofs()];
    for (c, pts) in geo.points.iter().enumerate() {
        let nodes = grid.cell_nodes(c);
        for (q, pt) in pts.iter().enumerate() {
            for a in 0..4 {
                f[nodes[a]] += pt.weight * pt.source * sh[q].n[a];
            }
        }
    }
    f
}

/// `M U` in natural ordering.
pub(super) fn mass_times(grid: &ThinGrid, geo: &LevelGeometry, u: &[f64]) -> Vec<f64> {
    let sh = shapes(grid);
    let mut out = vec![0.0; grid.dofs()];
    for (c, pts) in geo.points.iter().enumerate() {
        let nodes = grid.cell_nodes(c);
        let uc = local_values(grid, c, u);
        for (q, pt) in pts.iter().enumerate() {
            let uq: f64 = (0..4).map(|a| uc[a] * sh[q].n[a]).sum();
            for a in 0..4 {
                out[nodes[a]] += pt.weight * uq * sh[q].n[a];
            }
        }
    }
    out
}

/// `∫ h(u, |∇u|²) dx` by the element quadrature.
pub(super) fn integrate(
    grid: &ThinGrid,
    geo: &LevelGeometry,
    u: &[f64],
    h: impl Fn(f64, f64) -> f64,
) -> f64 {
    let sh = shapes(grid);
    let mut total = 0.0;
    for (c, pts) in geo.points.iter().enumerate() {
        let uc = local_values(grid, c, u);
        for (q, pt) in pts.iter().enumerate() {
            let s = &sh[q];
            let v: f64 = (0..4).map(|a| uc[a] * s.n[a]).sum();
            let du = cell_gradient(uc, s.xi, s.eta, grid.dtheta(), grid.dsigma());
            total += pt.weight * h(v, quad_form(&pt.inverse_metric, du, du));
        }
    }
    total
}
