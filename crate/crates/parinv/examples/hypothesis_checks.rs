//! Sampled hypothesis checks for the builtin semilinear families: sign
//! condition F(t,x,u)*u >= 0 and the two-sided derivative bounds.

use parinv::grid::{build_grid, GridConfig};
use parinv::nonlinearity::{
    builtin_family, check_t1a, check_t1b, derivative_consistency, FamilyParams,
};
use parinv::Result;

fn main() -> Result<()> {
    let grid = build_grid(&GridConfig {
        dim: 1,
        extents: vec![1.0],
        nx: vec![29],
        nt: 40,
        t_final: 1.0,
    })?;

    for name in [
        "zero",
        "linear_potential",
        "cubic_absorbing",
        "power_law_fnon",
        "logistic",
    ] {
        let term = builtin_family(name, &FamilyParams::default())?;
        let meta = term.metadata().clone();
        let t1a = check_t1a(&term, &grid);
        let t1b = check_t1b(&term, &grid, 2.0);
        let probes: Vec<(f64, (f64, f64), f64)> = (0..200)
            .map(|i| {
                let s = i as f64 / 199.0;
                (s, (s, 0.0), 4.0 * s - 2.0)
            })
            .collect();
        let (e_du, e_d2u) = derivative_consistency(&term, &probes);
        println!(
            "{name:16} kappa0 = {:6.2}  sign condition: {:?}  derivative bound: {:?}  FD consistency: ({e_du:.2e}, {e_d2u:.2e})",
            meta.kappa0, t1a.status, t1b.status
        );
        if let Some(w) = t1a.witness {
            println!("{:16} witness: {w:?}", "");
        }
    }
    Ok(())
}
