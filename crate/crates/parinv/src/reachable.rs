//! Reachable-set constants a1 and a2 from the auxiliary comparison problems,
//! and the monotone inversion of s = v_lambda(t,x) for the excitation
//! amplitude lambda that steers the solution through a prescribed value.

use std::sync::Arc;

use crate::boundary::BoundaryProfile;
use crate::error::{Error, Result};
use crate::grid::{Field, SpaceTimeGrid};
use crate::linearize::LinearizationBundle;
use crate::solver::{positivity_shifted_solve, LinearProblem};

/// Constants of the reachable-range argument: a1 is the window minimum of
/// the solution w of the comparison problem with potential q, a2 the window
/// minimum of the solution y with constant potential kappa0.
#[derive(Debug, Clone)]
pub struct ReachableConstants {
    pub a1: f64,
    pub a2: f64,
    pub w: Field,
    pub y: Field,
    pub delta1: f64,
    /// (level, node) attaining a1 resp. a2.
    pub argmin_a1: (usize, usize),
    pub argmin_a2: (usize, usize),
}

/// Time levels strictly inside the window (delta1, T1].
pub fn window_levels(grid: &SpaceTimeGrid, delta1: f64) -> Vec<usize> {
    (0..grid.n_levels())
        .filter(|&l| grid.time(l) > delta1 + 1e-12)
        .collect()
}

fn window_min(f: &Field, delta1: f64) -> (f64, (usize, usize)) {
    let grid = &f.grid;
    let mut best = f64::INFINITY;
    let mut arg = (0, 0);
    for level in window_levels(grid, delta1) {
        for &node in grid.interior_nodes() {
            let v = f.at(level, node);
            if v < best {
                best = v;
                arg = (level, node);
            }
        }
    }
    (best, arg)
}

/// Solve the two comparison problems (potential q resp. constant kappa0,
/// boundary chi, zero initial data) and take window minima.
pub fn compute_constants(
    q: &Field,
    kappa0: f64,
    chi: &BoundaryProfile,
    grid: Arc<SpaceTimeGrid>,
    delta1: f64,
) -> Result<ReachableConstants> {
    if !kappa0.is_finite() || kappa0 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa0 must be finite and >= 0, got {kappa0}"
        )));
    }
    if !q.values().iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("potential q must be bounded".into()));
    }
    let pw = LinearProblem::homogeneous(grid.clone(), q.clone(), chi.data.clone());
    let kappa_field = Field::from_fn(grid.clone(), |_, _, _| kappa0);
    let py = LinearProblem::homogeneous(grid.clone(), kappa_field, chi.data.clone());
    let w = positivity_shifted_solve(&pw)?;
    let y = positivity_shifted_solve(&py)?;
    let (a1, argmin_a1) = window_min(&w, delta1);
    let (a2, argmin_a2) = window_min(&y, delta1);
    Ok(ReachableConstants {
        a1,
        a2,
        w,
        y,
        delta1,
        argmin_a1,
        argmin_a2,
    })
}

/// Monotonicity-preserving piecewise-cubic interpolant (Fritsch-Carlson
/// slope limiting) on strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<MonotoneCubic> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidParameter(
                "monotone cubic needs >= 2 matching samples".into(),
            ));
        }
        for k in 1..xs.len() {
            if !(xs[k] > xs[k - 1]) {
                return Err(Error::InvalidParameter(
                    "abscissae must be strictly increasing".into(),
                ));
            }
        }
        let n = xs.len();
        let d: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut ms = vec![0.0; n];
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        for k in 1..n - 1 {
            ms[k] = if d[k - 1] * d[k] <= 0.0 {
                0.0
            } else {
                0.5 * (d[k - 1] + d[k])
            };
        }
        // Fritsch-Carlson limiter keeps each cell monotone
        for k in 0..n - 1 {
            if d[k] == 0.0 {
                ms[k] = 0.0;
                ms[k + 1] = 0.0;
            } else {
                let alpha = ms[k] / d[k];
                let beta = ms[k + 1] / d[k];
                let r2 = alpha * alpha + beta * beta;
                if r2 > 9.0 {
                    let tau = 3.0 / r2.sqrt();
                    ms[k] = tau * alpha * d[k];
                    ms[k + 1] = tau * beta * d[k];
                }
            }
        }
        Ok(MonotoneCubic {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            ms,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Cubic Hermite evaluation; clamps to the end cells outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let hx = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / hx;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * hx * self.ms[k] + h01 * self.ys[k + 1] + h11 * hx * self.ms[k + 1]
    }
}

/// Result of the monotone inversion s = v_lambda(t,x).
#[derive(Debug, Clone)]
pub struct InversionResult {
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// Invert the map lambda -> v_lambda(t,x) at a fixed window point, given the
/// lambda-tabulated bundle. Ties break toward the smallest lambda.
pub fn invert_lambda(
    bundle: &LinearizationBundle,
    level: usize,
    node: usize,
    s: f64,
) -> Result<InversionResult> {
    let vals: Vec<f64> = (0..bundle.n_lambda())
        .map(|i| bundle.v[i].at(level, node))
        .collect();
    for k in 1..vals.len() {
        if vals[k] < vals[k - 1] - 1e-12 {
            return Err(Error::NonMonotoneTable { node, level });
        }
    }
    let lo = vals[0];
    let hi = *vals.last().unwrap();
    if s < lo - 1e-12 || s > hi + 1e-12 {
        return Err(Error::OutOfRange { s, lo, hi });
    }
    let tol = 1e-8 * s.abs().max(1.0);
    // exact grid hit, smallest lambda first
    for (k, &v) in vals.iter().enumerate() {
        if (v - s).abs() <= 1e-14 * s.abs().max(1.0) {
            return Ok(InversionResult {
                lambda: bundle.lambda_grid[k],
                bracket: (bundle.lambda_grid[k], bundle.lambda_grid[k]),
                residual: (v - s).abs(),
            });
        }
    }
    // first cell whose upper sample reaches s
    let mut cell = vals.len() - 2;
    for k in 0..vals.len() - 1 {
        if vals[k + 1] >= s {
            cell = k;
            break;
        }
    }
    let curve = MonotoneCubic::new(&bundle.lambda_grid, &vals)?;
    let (mut a, mut b) = (bundle.lambda_grid[cell], bundle.lambda_grid[cell + 1]);
    let (mut fa, mut fb) = (curve.eval(a) - s, curve.eval(b) - s);
    // flat cell: the interpolant may be constant over the bracket
    if fa.abs() <= tol {
        return Ok(InversionResult {
            lambda: a,
            bracket: (a, b),
            residual: fa.abs(),
        });
    }
    let bracket = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = curve.eval(mid) - s;
        // drive the bracket down to round-off so the recovered lambda is
        // accurate even where the curve is shallow
        if (b - a) < 1e-14 * bracket.1.abs().max(1.0) {
            return Ok(InversionResult {
                lambda: mid,
                bracket,
                residual: fm.abs(),
            });
        }
        if fa * fm <= 0.0 {
            b = mid;
            fb = fm;
        } else {
            a = mid;
            fa = fm;
        }
    }
    let _ = fb;
    let mid = 0.5 * (a + b);
    Ok(InversionResult {
        lambda: mid,
        bracket,
        residual: (curve.eval(mid) - s).abs(),
    })
}
