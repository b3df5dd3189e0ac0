//! The linearization cascade in the boundary amplitude lambda: semilinear
//! solves v_lambda, tabulated potentials dF/du(.,v_lambda), first and second
//! linearizations v1/v2, and the verification harness for the derivative
//! identities d(v)/d(lambda) = v1, d(v1)/d(lambda) = v2 and the integral
//! identity v_lambda = int_0^lambda v1_tau d tau.

use parinv::boundary::{build_chi, make_perturbation, PerturbationShape};
use parinv::grid::{build_grid, GridConfig};
use parinv::linearize::{
    build_bundle, check_frechet_lambda, check_frechet_s, integral_identity_check,
};
use parinv::nonlinearity::{builtin_family, FamilyParams};
use parinv::solver::SolverOptions;
use parinv::Result;

fn main() -> Result<()> {
    let grid = build_grid(&GridConfig {
        dim: 1,
        extents: vec![1.0],
        nx: vec![29],
        nt: 60,
        t_final: 1.0,
    })?;
    let chi = build_chi(grid.clone(), 0.2, 1.0, 0.1, 1.0)?;
    let term = builtin_family("cubic_absorbing", &FamilyParams::default())?;
    let opts = SolverOptions {
        newton_tol: 1e-13,
        ..Default::default()
    };

    // full cascade over a symmetric lambda grid on [-1, 1]
    let bundle = build_bundle(&term, &chi, 1.0, 21, grid.clone(), &opts)?;
    println!(
        "bundle: {} lambda samples, v[r] sup = {:.4}, v1[r] sup = {:.4}",
        bundle.n_lambda(),
        bundle.v.last().unwrap().sup_norm(),
        bundle.v1.last().unwrap().sup_norm(),
    );
    println!(
        "integral identity sup defect (relative): {:.2e}",
        integral_identity_check(&bundle)
    );

    // directional derivative in the boundary data at fixed lambda
    let h = make_perturbation(grid.clone(), &PerturbationShape::TimeBump, 0.05, 0.1)?;
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let rs = check_frechet_s(&term, &chi, 0.5, &h, &steps, grid.clone(), &opts)?;
    println!("Frechet in s:      slope {:.3}, ladder {:?}", rs.slope, rs.entries);

    // derivative of v1 in lambda against the second linearization
    let rl = check_frechet_lambda(&term, &chi, 0.25, &steps, grid, &opts)?;
    println!("Frechet in lambda: slope {:.3}, ladder {:?}", rl.slope, rl.entries);
    Ok(())
}
