use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PeriodicOrdering;

/// Tensor grid on the reference rectangle `[0, 2π) × [0, 1]`, periodic in `theta`,
/// with bilinear elements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinGrid {
    pub n_theta: usize,
    pub n_sigma: usize,
    pub eps: f64,
}

impl ThinGrid {
    pub fn new(n_theta: usize, n_sigma: usize, eps: f64) -> Result<Self> {
        if n_theta < 8 || n_sigma < 3 {
            return Err(Error::Grid(format!(
                "thin grid needs n_theta >= 8 and n_sigma >= 3, got {n_theta} x {n_sigma}"
            )));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("thickness must be positive, got {eps}")));
        }
        Ok(ThinGrid {
            n_theta,
            n_sigma,
            eps,
        })
    }

    pub fn dofs(&self) -> usize {
        self.n_theta * self.n_sigma
    }

    pub fn cells(&self) -> usize {
        self.n_theta * (self.n_sigma - 1)
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn dsigma(&self) -> f64 {
        1.0 / (self.n_sigma - 1) as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.dtheta()
    }

    pub fn sigma(&self, j: usize) -> f64 {
        j as f64 * self.dsigma()
    }

    /// Natural index of node (i, j): `theta` major, `sigma` fastest.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        (i % self.n_theta) * self.n_sigma + j
    }

    /// Cell `c` as (theta index, sigma index).
    #[inline]
    pub fn cell(&self, c: usize) -> (usize, usize) {
        (c / (self.n_sigma - 1), c % (self.n_sigma - 1))
    }

    /// Natural indices of the four cell corners, ordered
    /// (i, j), (i+1, j), (i, j+1), (i+1, j+1).
    #[inline]
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell(c);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i, j + 1),
            self.node(i + 1, j + 1),
        ]
    }
}

/// Bilinear shape functions on the unit square, corners ordered as in
/// [`ThinGrid::cell_nodes`]. Returns values and (d/dxi, d/deta) derivatives.
#[inline]
pub(crate) fn bilinear(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let (a, b) = (1.0 - xi, 1.0 - eta);
    (
        [a * b, xi * b, a * eta, xi * eta],
        [[-b, -a], [b, -xi], [-eta, a], [eta, xi]],
    )
}

/// Reference gradient of the bilinear interpolant of corner values `u` at `(xi, eta)`,
/// scaled to a cell of size `ht × hs`. Written in differences so that constant data
/// give an exactly zero gradient.
#[inline]
pub(crate) fn cell_gradient(u: [f64; 4], xi: f64, eta: f64, ht: f64, hs: f64) -> [f64; 2] {
    [
        ((u[1] - u[0]) * (1.0 - eta) + (u[3] - u[2]) * eta) / ht,
        ((u[2] - u[0]) * (1.0 - xi) + (u[3] - u[1]) * xi) / hs,
    ]
}

/// Maps natural node indices to positions in the banded system.
#[derive(Clone, Debug)]
pub struct DofMap {
    ordering: PeriodicOrdering,
    n_sigma: usize,
}

impl DofMap {
    pub fn new(grid: &ThinGrid) -> Self {
        DofMap {
            ordering: PeriodicOrdering::new(grid.n_theta),
            n_sigma: grid.n_sigma,
        }
    }

    pub fn bandwidth(&self) -> usize {
        2 * self.n_sigma + 1
    }

    #[inline]
    pub fn band_index(&self, natural: usize) -> usize {
        let (i, j) = (natural / self.n_sigma, natural % self.n_sigma);
        self.ordering.position(i) * self.n_sigma + j
    }

    pub fn to_band(&self, natural: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; natural.len()];
        for (k, v) in natural.iter().enumerate() {
            out[self.band_index(k)] = *v;
        }
        out
    }

    pub fn from_band(&self, band: &[f64]) -> Vec<f64> {
        (0..band.len()).map(|k| band[self.band_index(k)]).collect()
    }
}

/// A nodal field on a [`ThinGrid`], evaluated through its bilinear interpolant.
#[derive(Clone, Copy, Debug)]
pub struct ThinField<'a> {
    pub grid: &'a ThinGrid,
    pub values: &'a [f64],
}

impl<'a> ThinField<'a> {
    pub fn new(grid: &'a ThinGrid, values: &'a [f64]) -> Result<Self> {
        if values.len() != grid.dofs() {
            return Err(Error::Grid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.dofs()
            )));
        }
        Ok(ThinField { grid, values })
    }

    fn locate(&self, theta: f64, sigma: f64) -> (usize, usize, f64, f64) {
        let g = self.grid;
        let th = theta.rem_euclid(std::f64::consts::TAU) / g.dtheta();
        let i = (th.floor() as usize).min(g.n_theta - 1);
        let s = (sigma.clamp(0.0, 1.0)) / g.dsigma();
        let j = (s.floor() as usize).min(g.n_sigma - 2);
        (i, j, th - i as f64, s - j as f64)
    }

    /// Value and reference gradient `(∂_θ, ∂_σ)` of the interpolant. On cell
    /// boundaries the cell with the larger indices is used.
    pub fn eval(&self, theta: f64, sigma: f64) -> (f64, [f64; 2]) {
        let g = self.grid;
        let (i, j, xi, eta) = self.locate(theta, sigma);
        let nodes = [g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)];
        let (n, _) = bilinear(xi, eta);
        let u = nodes.map(|k| self.values[k]);
        let v = (0..4).map(|a| u[a] * n[a]).sum();
        (v, cell_gradient(u, xi, eta, g.dtheta(), g.dsigma()))
    }

    pub fn value(&self, theta: f64, sigma: f64) -> f64 {
        self.eval(theta, sigma).0
    }
}
