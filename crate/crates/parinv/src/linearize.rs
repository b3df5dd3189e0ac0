//! The linearization cascade in the boundary amplitude lambda: background
//! solutions v_lambda, tabulated potentials V_lambda, first-order solutions
//! v1_lambda and second-order solutions v2_lambda, plus the numerical
//! derivative-verification harness.

use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::{BoundaryData, BoundaryProfile, Perturbation};
use crate::error::{Error, Result};
use crate::grid::{Field, SpaceTimeGrid};
use crate::nonlinearity::SemilinearTerm;
use crate::solver::{
    positivity_shifted_solve, solve_linear, solve_semilinear, LinearProblem, Scheme,
    SemilinearProblem, SolverOptions,
};

/// lambda-indexed bundle of solutions and tabulated potentials.
#[derive(Debug, Clone)]
pub struct LinearizationBundle {
    pub grid: Arc<SpaceTimeGrid>,
    pub lambda_grid: Vec<f64>,
    pub r: f64,
    /// Background solutions of the semilinear problem with boundary
    /// lambda * chi.
    pub v: Vec<Field>,
    /// Potentials du F(t,x,v_lambda), tabulated on the grid.
    pub potential: Vec<Field>,
    /// First-order solutions (potential V_lambda, boundary chi).
    pub v1: Vec<Field>,
    /// Second-order solutions (potential V_lambda, zero boundary, source
    /// -d2u F(t,x,v_lambda) * v1^2).
    pub v2: Vec<Field>,
}

impl LinearizationBundle {
    pub fn n_lambda(&self) -> usize {
        self.lambda_grid.len()
    }

    /// Index of the lambda = 0 sample.
    pub fn zero_index(&self) -> usize {
        self.lambda_grid.len() / 2
    }

    pub fn index_of(&self, lambda: f64) -> Option<usize> {
        self.lambda_grid
            .iter()
            .position(|l| (l - lambda).abs() < 1e-12)
    }
}

/// Uniform symmetric lambda grid on [-r, r] with 0 included.
pub fn lambda_grid(r: f64, n_lambda: usize) -> Result<Vec<f64>> {
    if n_lambda < 5 || n_lambda % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "n_lambda must be odd and >= 5, got {n_lambda}"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "excitation radius r must be positive, got {r}"
        )));
    }
    let half = (n_lambda - 1) / 2;
    Ok((0..n_lambda)
        .map(|i| (i as isize - half as isize) as f64 * r / half as f64)
        .collect())
}

/// Tabulate du F along a background solution.
pub fn potential_along(term: &SemilinearTerm, v: &Field) -> Field {
    let grid = v.grid.clone();
    let mut out = Field::zeros(grid.clone());
    for level in 0..grid.n_levels() {
        let t = grid.time(level);
        for node in 0..grid.n_nodes() {
            let x = grid.coords(node);
            out.set(level, node, term.du(t, x, v.at(level, node)));
        }
    }
    out
}

/// The three solves of the cascade at a single lambda.
fn cascade_at(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    grid: &Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<(Field, Field, Field, Field)> {
    let p = SemilinearProblem {
        grid: grid.clone(),
        term: term.clone(),
        dirichlet: chi.data.scale(lambda),
    };
    let (v, _) = solve_semilinear(&p, opts).map_err(|e| e.at_lambda(lambda))?;
    let potential = potential_along(term, &v);

    let lp1 = LinearProblem::homogeneous(grid.clone(), potential.clone(), chi.data.clone());
    let v1 = positivity_shifted_solve(&lp1).map_err(|e| e.at_lambda(lambda))?;

    let mut source = Field::zeros(grid.clone());
    for level in 0..grid.n_levels() {
        let t = grid.time(level);
        for &node in grid.interior_nodes() {
            let x = grid.coords(node);
            let w1 = v1.at(level, node);
            source.set(level, node, -term.d2u(t, x, v.at(level, node)) * w1 * w1);
        }
    }
    let lp2 = LinearProblem {
        grid: grid.clone(),
        potential: potential.clone(),
        source,
        dirichlet: BoundaryData::zeros(grid.clone()),
    };
    let v2 = solve_linear(&lp2, Scheme::ImplicitEuler).map_err(|e| e.at_lambda(lambda))?;
    Ok((v, potential, v1, v2))
}

/// Build the full bundle; per-lambda solves run concurrently.
pub fn build_bundle(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    r: f64,
    n_lambda: usize,
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<LinearizationBundle> {
    let lambdas = lambda_grid(r, n_lambda)?;
    let results: Result<Vec<_>> = lambdas
        .par_iter()
        .map(|&lambda| cascade_at(term, chi, lambda, &grid, opts))
        .collect();
    let results = results?;
    let mut v = Vec::with_capacity(n_lambda);
    let mut potential = Vec::with_capacity(n_lambda);
    let mut v1 = Vec::with_capacity(n_lambda);
    let mut v2 = Vec::with_capacity(n_lambda);
    for (a, b, c, d) in results {
        v.push(a);
        potential.push(b);
        v1.push(c);
        v2.push(d);
    }
    Ok(LinearizationBundle {
        grid,
        lambda_grid: lambdas,
        r,
        v,
        potential,
        v1,
        v2,
    })
}

/// Table of (step size, error) with the fitted log-log slope.
#[derive(Debug, Clone)]
pub struct DerivativeCheckReport {
    pub entries: Vec<(f64, f64)>,
    pub slope: f64,
}

/// Least-squares slope of log(error) against log(step).
pub fn fit_slope(entries: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .map(|&(s, e)| (s.ln(), e.max(1e-300).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Verify the Fréchet derivative in the perturbation amplitude s: compare
/// the difference quotient of the nonlinear solution map against the linear
/// problem with boundary h and potential V_lambda.
pub fn check_frechet_s(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    h: &Perturbation,
    steps: &[f64],
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<DerivativeCheckReport> {
    if steps.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least 3 step sizes".into(),
        ));
    }
    let base_problem = SemilinearProblem {
        grid: grid.clone(),
        term: term.clone(),
        dirichlet: chi.data.scale(lambda),
    };
    let (u_base, _) = solve_semilinear(&base_problem, opts)?;
    let potential = potential_along(term, &u_base);
    let lp = LinearProblem::homogeneous(grid.clone(), potential, h.data.clone());
    let u1 = solve_linear(&lp, Scheme::ImplicitEuler)?;

    let mut entries = Vec::with_capacity(steps.len());
    for &s in steps {
        let p = SemilinearProblem {
            grid: grid.clone(),
            term: term.clone(),
            dirichlet: chi.data.scale(lambda).lin_comb(1.0, &h.data, s),
        };
        let (u_s, _) = solve_semilinear(&p, opts)?;
        let quotient = u_s.lin_comb(1.0 / s, &u_base, -1.0 / s);
        entries.push((s, quotient.sup_distance(&u1)));
    }
    let slope = fit_slope(&entries);
    Ok(DerivativeCheckReport { entries, slope })
}

/// Verify that the lambda-derivative of v1 is v2: compare difference
/// quotients of freshly solved first-order solutions against the bundled
/// second-order solution.
pub fn check_frechet_lambda(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    deltas: &[f64],
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<DerivativeCheckReport> {
    if deltas.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least 3 delta values".into(),
        ));
    }
    let (_, _, v1_base, v2_base) = cascade_at(term, chi, lambda, &grid, opts)?;
    let mut entries = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let (_, _, v1_shifted, _) = cascade_at(term, chi, lambda + delta, &grid, opts)?;
        let quotient = v1_shifted.lin_comb(1.0 / delta, &v1_base, -1.0 / delta);
        entries.push((delta.abs(), quotient.sup_distance(&v2_base)));
    }
    let slope = fit_slope(&entries);
    Ok(DerivativeCheckReport { entries, slope })
}

/// Maximum relative sup-norm error of v_lambda against the trapezoid
/// quadrature of v1 over [0, lambda], across the lambda grid.
pub fn integral_identity_check(bundle: &LinearizationBundle) -> f64 {
    let zero = bundle.zero_index();
    let grid = &bundle.grid;
    let mut worst: f64 = 0.0;
    // cumulative trapezoid outward from lambda = 0 in both directions
    for dir in [1isize, -1isize] {
        let mut acc = Field::zeros(grid.clone());
        let mut idx = zero as isize;
        loop {
            let next = idx + dir;
            if next < 0 || next >= bundle.n_lambda() as isize {
                break;
            }
            let (i, j) = (idx as usize, next as usize);
            let dl = bundle.lambda_grid[j] - bundle.lambda_grid[i];
            let mid = bundle.v1[i].lin_comb(0.5 * dl, &bundle.v1[j], 0.5 * dl);
            acc = acc.lin_comb(1.0, &mid, 1.0);
            let diff = acc.sup_distance(&bundle.v[j]);
            let scale = bundle.v[j].sup_norm().max(1e-300);
            worst = worst.max(diff / scale);
            idx = next;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{build_chi, make_perturbation, PerturbationShape};
    use crate::grid::{build_grid, GridConfig};
    use crate::nonlinearity::{builtin_family, FamilyParams};

    fn setup(nx: usize, nt: usize) -> (Arc<SpaceTimeGrid>, BoundaryProfile) {
        let grid = build_grid(&GridConfig {
            dim: 1,
            extents: vec![1.0],
            nx: vec![nx],
            nt,
            t_final: 1.0,
        })
        .unwrap();
        let chi = build_chi(grid.clone(), 0.2, 1.0, 0.1, 1.0).unwrap();
        (grid, chi)
    }

    #[test]
    fn zero_term_bundle_is_linear_in_lambda() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("zero", &FamilyParams::default()).unwrap();
        let b = build_bundle(&f, &chi, 1.0, 5, grid, &SolverOptions::default()).unwrap();
        let zero = b.zero_index();
        assert_eq!(b.lambda_grid[zero], 0.0);
        for i in 0..b.n_lambda() {
            assert!(b.potential[i].sup_norm() == 0.0);
            assert!(b.v2[i].sup_norm() == 0.0);
            let lam = b.lambda_grid[i];
            let predicted = b.v1[zero].scale(lam);
            assert!(b.v[i].sup_distance(&predicted) < 1e-10);
        }
    }

    #[test]
    fn linear_term_bundle_has_lambda_independent_v1() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("linear_potential", &FamilyParams::default()).unwrap();
        let b = build_bundle(&f, &chi, 1.0, 5, grid, &SolverOptions::default()).unwrap();
        let zero = b.zero_index();
        for i in 0..b.n_lambda() {
            assert!(b.v1[i].sup_distance(&b.v1[zero]) < 1e-10);
            assert!(b.v2[i].sup_norm() < 1e-12);
        }
    }

    #[test]
    fn bundle_signs_for_absorbing_cubic() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let b = build_bundle(&f, &chi, 1.0, 5, grid, &SolverOptions::default()).unwrap();
        let zero = b.zero_index();
        assert!(b.v[zero].sup_norm() == 0.0, "v at lambda=0 must vanish");
        for i in 0..b.n_lambda() {
            for val in b.v1[i].values() {
                assert!(*val >= -1e-10, "v1 must be nonnegative");
            }
        }
        // sign ladder: v2 >= 0 for lambda >= 0, <= 0 for lambda <= 0
        for i in zero..b.n_lambda() {
            for val in b.v[i].values() {
                assert!(*val >= -1e-10);
            }
            for val in b.v2[i].values() {
                assert!(*val >= -1e-10);
            }
        }
        for i in 0..=zero {
            for val in b.v2[i].values() {
                assert!(*val <= 1e-10);
            }
        }
        // monotonicity in lambda at every fixed (t,x)
        for i in 1..b.n_lambda() {
            for (lo, hi) in b.v[i - 1].values().iter().zip(b.v[i].values()) {
                assert!(*hi >= *lo - 1e-10);
            }
        }
        // convexity consequence: v_lambda >= lambda * v1_0 for lambda in [0,r]
        for i in zero..b.n_lambda() {
            let lam = b.lambda_grid[i];
            let bound = b.v1[zero].scale(lam);
            for (v, lb) in b.v[i].values().iter().zip(bound.values()) {
                assert!(*v >= *lb - 1e-8, "t5k bound violated: {v} < {lb}");
            }
        }
    }

    #[test]
    fn frechet_s_exact_for_linear_terms() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("zero", &FamilyParams::default()).unwrap();
        let h = make_perturbation(grid.clone(), &PerturbationShape::TimeBump, 0.05, 0.1).unwrap();
        let report = check_frechet_s(
            &f,
            &chi,
            0.5,
            &h,
            &[0.1, 0.05, 0.025, 0.0125],
            grid,
            &SolverOptions::default(),
        )
        .unwrap();
        for (_, e) in &report.entries {
            assert!(*e <= 1e-10, "linear term must linearize exactly, got {e}");
        }
    }

    #[test]
    fn frechet_s_zero_perturbation_gives_zero_error() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let h = Perturbation::zero(grid.clone());
        let report = check_frechet_s(
            &f,
            &chi,
            0.5,
            &h,
            &[0.1, 0.05, 0.025],
            grid,
            &SolverOptions::default(),
        )
        .unwrap();
        for (_, e) in &report.entries {
            assert!(*e == 0.0);
        }
    }

    #[test]
    fn frechet_s_first_order_for_cubic() {
        let (grid, chi) = setup(29, 60);
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let h = make_perturbation(grid.clone(), &PerturbationShape::TimeBump, 0.05, 0.1).unwrap();
        let opts = SolverOptions {
            newton_tol: 1e-13,
            ..Default::default()
        };
        let report = check_frechet_s(
            &f,
            &chi,
            0.5,
            &h,
            &[0.1, 0.05, 0.025, 0.0125],
            grid,
            &opts,
        )
        .unwrap();
        assert!(report.slope >= 0.9, "slope {} entries {:?}", report.slope, report.entries);
    }

    #[test]
    fn frechet_lambda_first_order_for_cubic() {
        let (grid, chi) = setup(29, 60);
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let opts = SolverOptions {
            newton_tol: 1e-13,
            ..Default::default()
        };
        let report = check_frechet_lambda(
            &f,
            &chi,
            0.25,
            &[0.1, 0.05, 0.025, 0.0125],
            grid,
            &opts,
        )
        .unwrap();
        assert!(report.slope >= 0.9, "slope {} entries {:?}", report.slope, report.entries);
    }

    #[test]
    fn frechet_lambda_exact_for_linear_and_rejects_short_sequences() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("linear_potential", &FamilyParams::default()).unwrap();
        let report = check_frechet_lambda(
            &f,
            &chi,
            0.25,
            &[0.1, 0.05, 0.025],
            grid.clone(),
            &SolverOptions::default(),
        )
        .unwrap();
        for (_, e) in &report.entries {
            assert!(*e <= 1e-10);
        }
        assert!(
            check_frechet_lambda(&f, &chi, 0.25, &[0.1, 0.05], grid, &SolverOptions::default())
                .is_err()
        );
    }

    #[test]
    fn integral_identity_exact_for_zero_term() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("zero", &FamilyParams::default()).unwrap();
        let b = build_bundle(&f, &chi, 1.0, 5, grid, &SolverOptions::default()).unwrap();
        assert!(integral_identity_check(&b) <= 1e-10);
    }

    #[test]
    fn integral_identity_second_order_in_lambda() {
        let (grid, chi) = setup(19, 40);
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let opts = SolverOptions {
            newton_tol: 1e-12,
            ..Default::default()
        };
        let coarse = build_bundle(&f, &chi, 1.0, 11, grid.clone(), &opts).unwrap();
        let fine = build_bundle(&f, &chi, 1.0, 21, grid, &opts).unwrap();
        let e_coarse = integral_identity_check(&coarse);
        let e_fine = integral_identity_check(&fine);
        assert!(
            e_coarse / e_fine >= 3.0,
            "quadrature not near second order: {e_coarse} vs {e_fine}"
        );
    }
}
