//! Dirichlet-to-Neumann traces and the probe-based discrepancy estimate
//! between the linearized DN maps of two terms.

use parinv::boundary::{build_chi, make_perturbation, PerturbationShape};
use parinv::dnmap::{estimate_discrepancy, linearized_dn, nonlinear_dn, potential_at};
use parinv::grid::{build_grid, GridConfig};
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
    let opts = SolverOptions::default();

    // finite-difference quotient of the nonlinear DN map against the
    // linearized map at lambda = 0.5
    let h = make_perturbation(grid.clone(), &PerturbationShape::TimeBump, 0.02, 0.1)?;
    let zero = parinv::boundary::Perturbation::zero(grid.clone());
    let base = nonlinear_dn(&term, &chi, 0.5, &zero, grid.clone(), &opts)?;
    let shifted = nonlinear_dn(&term, &chi, 0.5, &h, grid.clone(), &opts)?;
    let q = potential_at(&term, &chi, 0.5, grid.clone(), &opts)?;
    let lin = linearized_dn(&q, &h, grid.clone())?;
    let quotient_gap = shifted
        .data
        .lin_comb(1.0, &base.data, -1.0)
        .lin_comb(1.0, &lin.data, -1.0)
        .sup_norm();
    println!("|DN(lambda chi + h) - DN(lambda chi) - DN'[h]|_sup = {quotient_gap:.3e}");

    // discrepancy between two terms, estimated as a running max of L2
    // Rayleigh quotients over seeded smooth probes
    let other = builtin_family("cubic_absorbing", &FamilyParams { c: 1.1, ..Default::default() })?;
    for lambda in [0.25, 0.5, 1.0] {
        let est = estimate_discrepancy(&term, &other, &chi, lambda, 8, 42, grid.clone(), &opts)?;
        println!(
            "lambda = {lambda:4}: discrepancy {:.4e} ({} probes, argmax {})",
            est.value, est.probes_used, est.argmax_probe
        );
    }
    Ok(())
}
