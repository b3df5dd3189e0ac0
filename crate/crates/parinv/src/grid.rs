//! Space-time discretization of the cylinder (0,T) x Omega for Omega a 1D
//! interval or 2D rectangle.
//!
//! Nodes live on the full tensor grid including boundary points. Corners of
//! the 2D rectangle are stored but excluded from the normal-trace set, since
//! the outward normal is undefined there.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configuration for [`build_grid`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridConfig {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Physical length per axis (only the first `dim` entries are used).
    pub extents: Vec<f64>,
    /// Interior point count per axis.
    pub nx: Vec<usize>,
    /// Number of time steps.
    pub nt: usize,
    /// Final time T.
    pub t_final: f64,
}

/// A boundary node together with its outward normal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryNode {
    /// Flat node id into the tensor grid.
    pub node: usize,
    /// Axis of the outward normal (0 or 1).
    pub axis: usize,
    /// Sign of the outward normal along `axis`: -1 at the lower face, +1 at
    /// the upper face.
    pub sign: i8,
}

/// Uniform discretization of (0,T) x Omega with boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    pub dim: usize,
    pub extents: [f64; 2],
    pub nx: [usize; 2],
    pub nt: usize,
    pub t_final: f64,
    pub h: [f64; 2],
    pub dt: f64,
    /// Points per axis including the two boundary points.
    np: [usize; 2],
    boundary_nodes: Vec<BoundaryNode>,
    interior_nodes: Vec<usize>,
    node_to_interior: Vec<Option<usize>>,
}

impl SpaceTimeGrid {
    /// Total number of tensor-grid nodes (interior + boundary + 2D corners).
    pub fn n_nodes(&self) -> usize {
        self.np[0] * self.np[1]
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// Number of time levels, including level 0.
    pub fn n_levels(&self) -> usize {
        self.nt + 1
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Interior index of a node, or None for boundary/corner nodes.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.node_to_interior[node]
    }

    #[inline]
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.np[0] && j < self.np[1]);
        j * self.np[0] + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % self.np[0], node / self.np[0])
    }

    /// Physical coordinates of a node. The second entry is 0 in 1D.
    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(node);
        (i as f64 * self.h[0], j as f64 * self.h[1])
    }

    /// The two inward neighbors of a boundary node along its normal axis, at
    /// distances h and 2h.
    pub fn inward_neighbors(&self, b: &BoundaryNode) -> (usize, usize) {
        let (i, j) = self.node_ij(b.node);
        let step = if b.axis == 0 { 1 } else { self.np[0] };
        // The outward normal points away from the interior, so we walk
        // against its sign.
        if b.sign < 0 {
            (b.node + step, b.node + 2 * step)
        } else {
            let _ = (i, j);
            (b.node - step, b.node - 2 * step)
        }
    }

    /// Axis-neighbors of an interior node: (lower, upper) along `axis`.
    #[inline]
    pub fn axis_neighbors(&self, node: usize, axis: usize) -> (usize, usize) {
        let step = if axis == 0 { 1 } else { self.np[0] };
        (node - step, node + step)
    }
}

/// Build a grid, checking the preconditions on sizes.
pub fn build_grid(config: &GridConfig) -> Result<Arc<SpaceTimeGrid>> {
    if config.dim != 1 && config.dim != 2 {
        return Err(Error::InvalidGrid(format!(
            "dim must be 1 or 2, got {}",
            config.dim
        )));
    }
    if config.extents.len() < config.dim || config.nx.len() < config.dim {
        return Err(Error::InvalidGrid(
            "extents/nx must supply one entry per axis".into(),
        ));
    }
    for a in 0..config.dim {
        if !(config.extents[a] > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent[{a}] must be positive, got {}",
                config.extents[a]
            )));
        }
        if config.nx[a] < 3 {
            return Err(Error::InvalidGrid(format!(
                "nx[{a}] must be >= 3, got {}",
                config.nx[a]
            )));
        }
    }
    if config.nt < 2 {
        return Err(Error::InvalidGrid(format!(
            "nt must be >= 2, got {}",
            config.nt
        )));
    }
    if !(config.t_final > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "T must be positive, got {}",
            config.t_final
        )));
    }

    let mut extents = [1.0, 1.0];
    let mut nx = [1, 1];
    for a in 0..config.dim {
        extents[a] = config.extents[a];
        nx[a] = config.nx[a];
    }
    let mut h = [0.0, 0.0];
    let mut np = [1, 1];
    for a in 0..config.dim {
        h[a] = extents[a] / (nx[a] + 1) as f64;
        np[a] = nx[a] + 2;
    }
    if config.dim == 1 {
        // Degenerate second axis so flat indexing works uniformly.
        h[1] = 0.0;
    }
    let dt = config.t_final / config.nt as f64;

    let n_nodes = np[0] * np[1];
    let mut boundary_nodes = Vec::new();
    let mut interior_nodes = Vec::new();
    let mut node_to_interior = vec![None; n_nodes];

    if config.dim == 1 {
        boundary_nodes.push(BoundaryNode {
            node: 0,
            axis: 0,
            sign: -1,
        });
        boundary_nodes.push(BoundaryNode {
            node: np[0] - 1,
            axis: 0,
            sign: 1,
        });
        for i in 1..np[0] - 1 {
            node_to_interior[i] = Some(interior_nodes.len());
            interior_nodes.push(i);
        }
    } else {
        for j in 0..np[1] {
            for i in 0..np[0] {
                let node = j * np[0] + i;
                let on_x = i == 0 || i == np[0] - 1;
                let on_y = j == 0 || j == np[1] - 1;
                if on_x && on_y {
                    // corner: excluded from the normal-trace set
                    continue;
                }
                if on_x {
                    boundary_nodes.push(BoundaryNode {
                        node,
                        axis: 0,
                        sign: if i == 0 { -1 } else { 1 },
                    });
                } else if on_y {
                    boundary_nodes.push(BoundaryNode {
                        node,
                        axis: 1,
                        sign: if j == 0 { -1 } else { 1 },
                    });
                } else {
                    node_to_interior[node] = Some(interior_nodes.len());
                    interior_nodes.push(node);
                }
            }
        }
    }

    Ok(Arc::new(SpaceTimeGrid {
        dim: config.dim,
        extents,
        nx,
        nt: config.nt,
        t_final: config.t_final,
        h,
        dt,
        np,
        boundary_nodes,
        interior_nodes,
        node_to_interior,
    }))
}

/// Scalar space-time function on the grid, stored per (time level, node).
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<SpaceTimeGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<SpaceTimeGrid>) -> Field {
        let n = grid.n_levels() * grid.n_nodes();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Fill from a callable of (t, x0, x1).
    pub fn from_fn(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Field {
        let mut field = Field::zeros(grid.clone());
        for level in 0..grid.n_levels() {
            let t = grid.time(level);
            for node in 0..grid.n_nodes() {
                let (x0, x1) = grid.coords(node);
                field.set(level, node, f(t, x0, x1));
            }
        }
        field
    }

    #[inline]
    pub fn at(&self, level: usize, node: usize) -> f64 {
        self.values[level * self.grid.n_nodes() + node]
    }

    #[inline]
    pub fn set(&mut self, level: usize, node: usize, value: f64) {
        self.values[level * self.grid.n_nodes() + node] = value;
    }

    pub fn level(&self, level: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.values[level * n..(level + 1) * n]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        let n = self.grid.n_nodes();
        &mut self.values[level * n..(level + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max |self - other| over all (level, node).
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise linear combination a*self + b*other.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

/// Second-order centered discrete Laplacian at one time level, returned over
/// interior nodes in interior order. Boundary values of `f` supply the
/// Dirichlet closure.
pub fn laplacian_apply(f: &Field, t_level: usize) -> Vec<f64> {
    let grid = &f.grid;
    let vals = f.level(t_level);
    let mut out = vec![0.0; grid.n_interior()];
    for (k, &node) in grid.interior_nodes().iter().enumerate() {
        let mut acc = 0.0;
        for axis in 0..grid.dim {
            let (lo, hi) = grid.axis_neighbors(node, axis);
            let h2 = grid.h[axis] * grid.h[axis];
            acc += (vals[lo] - 2.0 * vals[node] + vals[hi]) / h2;
        }
        out[k] = acc;
    }
    out
}

/// Second-order one-sided 3-point approximation of the outward normal
/// derivative at every boundary node, in boundary order.
pub fn normal_derivative(f: &Field, t_level: usize) -> Vec<f64> {
    let grid = &f.grid;
    let vals = f.level(t_level);
    grid.boundary_nodes()
        .iter()
        .map(|b| {
            let (n1, n2) = grid.inward_neighbors(b);
            let h = grid.h[b.axis];
            (3.0 * vals[b.node] - 4.0 * vals[n1] + vals[n2]) / (2.0 * h)
        })
        .collect()
}
