//! Reachable-set constants a1, a2 and the monotone inversion of the map
//! lambda -> v_lambda(t,x) at a window point.  a1 is the window minimum of
//! the positivity-shifted solve with the actual potential; a2 uses the
//! constant dominating potential kappa0 and certifies the attained range
//! |v_{+-r}| >= a2 * r on the window.

use parinv::boundary::build_chi;
use parinv::grid::{build_grid, Field, GridConfig};
use parinv::linearize::{build_bundle, potential_along};
use parinv::nonlinearity::{builtin_family, FamilyParams};
use parinv::reachable::{compute_constants, invert_lambda, window_levels};
use parinv::solver::{solve_semilinear, SemilinearProblem, SolverOptions};
use parinv::Result;

fn main() -> Result<()> {
    let grid = build_grid(&GridConfig {
        dim: 1,
        extents: vec![1.0],
        nx: vec![49],
        nt: 100,
        t_final: 1.0,
    })?;
    let delta1 = 0.2;
    let chi = build_chi(grid.clone(), delta1, 1.0, 0.1, 1.0)?;
    let term = builtin_family("cubic_absorbing", &FamilyParams::default())?;
    let opts = SolverOptions::default();

    // potential along the lambda = 1 trajectory
    let p = SemilinearProblem {
        grid: grid.clone(),
        term: term.clone(),
        dirichlet: chi.data.scale(1.0),
    };
    let (v, _) = solve_semilinear(&p, &opts)?;
    let q = potential_along(&term, &v);

    for kappa0 in [0.0, 1.0, 10.0] {
        let c = compute_constants(&q, kappa0, &chi, grid.clone(), delta1)?;
        println!(
            "kappa0 = {kappa0:5}: a1 = {:.6} at (level {}, node {}), a2 = {:.6}",
            c.a1, c.argmin_a1.0, c.argmin_a1.1, c.a2
        );
    }

    // invert s = v_lambda(t,x) on the tabulated bundle
    let bundle = build_bundle(&term, &chi, 1.0, 21, grid.clone(), &opts)?;
    let c = compute_constants(&Field::zeros(grid.clone()), 0.0, &chi, grid.clone(), delta1)?;
    let level = *window_levels(&grid, delta1).last().unwrap();
    let node = grid.interior_nodes()[grid.n_interior() / 2];
    for s in [0.5 * c.a2, -0.5 * c.a2, 0.9 * c.a2] {
        let inv = invert_lambda(&bundle, level, node, s)?;
        println!(
            "s = {s:9.5} -> lambda = {:9.5}  (bracket [{:.4}, {:.4}], residual {:.1e})",
            inv.lambda, inv.bracket.0, inv.bracket.1, inv.residual
        );
    }
    Ok(())
}
