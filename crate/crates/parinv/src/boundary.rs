//! The cutoff boundary excitation and admissible perturbations.
//!
//! The continuum normalization uses parabolic Hölder norms; here they are
//! replaced by a discrete surrogate (sup norms of scaled finite differences)
//! which is positively homogeneous, so normalization and ball membership
//! carry over structurally.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;

/// Real values per (time level, boundary node), boundary order matching
/// `grid.boundary_nodes()`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub grid: Arc<SpaceTimeGrid>,
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(grid: Arc<SpaceTimeGrid>) -> BoundaryData {
        let n = grid.n_levels() * grid.n_boundary();
        BoundaryData {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, usize) -> f64) -> BoundaryData {
        let nb = grid.n_boundary();
        let mut values = Vec::with_capacity(grid.n_levels() * nb);
        for level in 0..grid.n_levels() {
            let t = grid.time(level);
            for b in 0..nb {
                values.push(f(t, b));
            }
        }
        BoundaryData { grid, values }
    }

    #[inline]
    pub fn at(&self, level: usize, b: usize) -> f64 {
        self.values[level * self.grid.n_boundary() + b]
    }

    #[inline]
    pub fn set(&mut self, level: usize, b: usize, v: f64) {
        self.values[level * self.grid.n_boundary() + b] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self, a: f64) -> BoundaryData {
        BoundaryData {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// a*self + b*other
    pub fn lin_comb(&self, a: f64, other: &BoundaryData, b: f64) -> BoundaryData {
        BoundaryData {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm over (0,T) x boundary with dt and boundary-measure
    /// weights.
    pub fn l2_norm(&self) -> f64 {
        let grid = &self.grid;
        let w_b: Vec<f64> = grid
            .boundary_nodes()
            .iter()
            .map(|b| {
                if grid.dim == 1 {
                    1.0
                } else {
                    // tangential spacing along the edge
                    grid.h[1 - b.axis]
                }
            })
            .collect();
        let mut acc = 0.0;
        for level in 1..grid.n_levels() {
            for b in 0..grid.n_boundary() {
                let v = self.at(level, b);
                acc += v * v * grid.dt * w_b[b];
            }
        }
        acc.sqrt()
    }
}

/// Discrete surrogate of the parabolic Hölder norm of boundary data: the max
/// of the sup norm, the adjacent time-difference quotient scaled by
/// dt^{-1/2}, and (2D) the sup of tangential second difference quotients.
pub fn discrete_holder_surrogate(data: &BoundaryData) -> f64 {
    let grid = &data.grid;
    let mut norm = data.sup_norm();
    let dt_scale = grid.dt.sqrt();
    for level in 1..grid.n_levels() {
        for b in 0..grid.n_boundary() {
            let diff = (data.at(level, b) - data.at(level - 1, b)).abs();
            norm = norm.max(diff / dt_scale);
        }
    }
    if grid.dim == 2 {
        // consecutive boundary nodes on one edge share (axis, sign) and are
        // adjacent in the boundary ordering
        let bnodes = grid.boundary_nodes();
        for level in 0..grid.n_levels() {
            for w in 0..bnodes.len().saturating_sub(2) {
                let (b0, b1, b2) = (&bnodes[w], &bnodes[w + 1], &bnodes[w + 2]);
                if b0.axis != b1.axis || b0.sign != b1.sign {
                    continue;
                }
                if b1.axis != b2.axis || b1.sign != b2.sign {
                    continue;
                }
                let h = grid.h[1 - b0.axis];
                let second = data.at(level, w) - 2.0 * data.at(level, w + 1) + data.at(level, w + 2);
                norm = norm.max(second.abs() / (h * h));
            }
        }
    }
    norm
}

/// The normalized cutoff excitation: zero near t = 0, constant plateau
/// delta2 for t >= delta1, constant along the spatial boundary.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub data: BoundaryData,
    pub delta1: f64,
    pub delta2: f64,
    pub norm_surrogate: f64,
    pub epsilon: f64,
}

/// Quintic smoothstep: 0 on (-inf, 1/4], 1 on [1, inf), C^2 monotone join.
fn ramp(theta: f64) -> f64 {
    if theta <= 0.25 {
        0.0
    } else if theta >= 1.0 {
        1.0
    } else {
        let u = (theta - 0.25) / 0.75;
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// Build the cutoff profile and normalize it so the surrogate norm is 1.
pub fn build_chi(
    grid: Arc<SpaceTimeGrid>,
    delta1: f64,
    delta2_initial: f64,
    epsilon: f64,
    horizon: f64,
) -> Result<BoundaryProfile> {
    if !(delta1 > 0.0 && delta1 < horizon) {
        return Err(Error::InvalidParameter(format!(
            "delta1 must lie in (0, T1), got delta1={delta1}, T1={horizon}"
        )));
    }
    if !(delta2_initial > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta2 must be positive, got {delta2_initial}"
        )));
    }
    // The first time level must still sit on the flat foot of the ramp so
    // that the discrete compatibility g(0) = dt-difference(0) = 0 is exact.
    if grid.dt > delta1 / 4.0 {
        return Err(Error::InvalidParameter(format!(
            "dt={} does not resolve the ramp foot; need dt <= delta1/4 = {}",
            grid.dt,
            delta1 / 4.0
        )));
    }

    let raw = BoundaryData::from_fn(grid.clone(), |t, _| delta2_initial * ramp(t / delta1));
    let norm = discrete_holder_surrogate(&raw);
    let data = raw.scale(1.0 / norm);
    let delta2 = delta2_initial / norm;
    let norm_surrogate = discrete_holder_surrogate(&data);
    Ok(BoundaryProfile {
        data,
        delta1,
        delta2,
        norm_surrogate,
        epsilon,
    })
}

/// Shapes of admissible boundary perturbations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum PerturbationShape {
    /// Smooth bump in time, uniform along the boundary.
    TimeBump,
    /// Smooth bump in time localized at one boundary node (smoothly spread
    /// over neighbors in 2D).
    BoundaryBump { node: usize },
    /// Seeded random combination of smooth time-bumps and boundary modes.
    RandomSmooth { seed: u64 },
}

/// A perturbation h in the ball of radius epsilon around 0.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub data: BoundaryData,
    pub norm_surrogate: f64,
}

impl Perturbation {
    pub fn zero(grid: Arc<SpaceTimeGrid>) -> Perturbation {
        Perturbation {
            data: BoundaryData::zeros(grid),
            norm_surrogate: 0.0,
        }
    }
}

/// Smooth compactly supported bump on (lo, hi), zero (with all derivatives
/// of the polynomial model) outside.
fn time_bump(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        return 0.0;
    }
    let xi = 2.0 * (t - lo) / (hi - lo) - 1.0;
    let b = 1.0 - xi * xi;
    b * b * b
}

/// Construct a perturbation of the requested shape with surrogate norm
/// equal to `amplitude`. Rejected if the norm would exceed `epsilon`.
pub fn make_perturbation(
    grid: Arc<SpaceTimeGrid>,
    shape: &PerturbationShape,
    amplitude: f64,
    epsilon: f64,
) -> Result<Perturbation> {
    if amplitude == 0.0 {
        return Ok(Perturbation::zero(grid));
    }
    let t_final = grid.t_final;
    let raw = match shape {
        PerturbationShape::TimeBump => BoundaryData::from_fn(grid.clone(), |t, _| {
            time_bump(t, 0.25 * t_final, 0.85 * t_final)
        }),
        PerturbationShape::BoundaryBump { node } => {
            let nb = grid.n_boundary();
            let center = *node % nb;
            BoundaryData::from_fn(grid.clone(), |t, b| {
                let spatial = if grid.dim == 1 {
                    if b == center {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    // cosine taper over boundary-index distance
                    let d = (b as isize - center as isize).unsigned_abs();
                    if d <= 2 {
                        let c = (std::f64::consts::PI * d as f64 / 6.0).cos();
                        c * c
                    } else {
                        0.0
                    }
                };
                spatial * time_bump(t, 0.25 * t_final, 0.85 * t_final)
            })
        }
        PerturbationShape::RandomSmooth { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let nb = grid.n_boundary();
            let n_modes = 4;
            let modes: Vec<(f64, f64, f64, usize)> = (0..n_modes)
                .map(|_| {
                    let coeff: f64 = rng.gen_range(-1.0..1.0);
                    let center: f64 = rng.gen_range(0.35..0.75);
                    let width: f64 = rng.gen_range(0.1..0.25);
                    let wave: usize = rng.gen_range(0..3);
                    (coeff, center, width, wave)
                })
                .collect();
            BoundaryData::from_fn(grid.clone(), |t, b| {
                let s = b as f64 / nb.max(1) as f64;
                modes
                    .iter()
                    .map(|&(coeff, center, width, wave)| {
                        let lo = (center - width) * t_final;
                        let hi = (center + width) * t_final;
                        let spatial = (std::f64::consts::PI * wave as f64 * s).cos();
                        coeff * spatial * time_bump(t, lo, hi)
                    })
                    .sum()
            })
        }
    };
    let raw_norm = discrete_holder_surrogate(&raw);
    if raw_norm == 0.0 {
        return Err(Error::InvalidParameter(
            "perturbation shape evaluated to zero on this grid".into(),
        ));
    }
    let data = raw.scale(amplitude / raw_norm);
    let norm = discrete_holder_surrogate(&data);
    if norm > epsilon * (1.0 + 1e-12) {
        return Err(Error::PerturbationTooLarge {
            norm,
            epsilon,
        });
    }
    Ok(Perturbation {
        data,
        norm_surrogate: norm,
    })
}
