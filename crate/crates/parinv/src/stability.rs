//! Empirical stability harness: relate sup-norm discrepancies of perturbed
//! term pairs on the valid box to the sampled gap between their linearized
//! DN maps, across a ladder of perturbation scales.

use std::sync::Arc;
use std::time::Instant;

use crate::boundary::BoundaryProfile;
use crate::dnmap::estimate_discrepancy;
use crate::error::{Error, Result};
use crate::grid::{Field, SpaceTimeGrid};
use crate::linearize::lambda_grid;
use crate::nonlinearity::{check_t1a, check_t1b, CheckStatus, SemilinearTerm};
use crate::reachable::{compute_constants, window_levels};
use crate::solver::SolverOptions;

/// One row of the stability experiment.
#[derive(Debug, Clone)]
pub struct StabilityRecord {
    pub epsilon: f64,
    pub sup_f_diff: f64,
    pub dn_discrepancy: f64,
    pub runtime_secs: f64,
}

/// Full run: per-epsilon records plus the fitted diagnostics.
#[derive(Debug, Clone)]
pub struct StabilityRun {
    pub records: Vec<StabilityRecord>,
    /// Slope of log(sup_f_diff) against log log(3 + 1/dn_discrepancy),
    /// the shape suggested by the log-type stability estimate.
    pub fitted_exponent: f64,
    pub spearman_rho: f64,
    pub s_bound: f64,
}

/// Parameters of a stability run.
#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub r: f64,
    pub n_lambda: usize,
    pub kappa0: f64,
    pub margin: f64,
    pub probe_count: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

/// Spearman rank correlation between two sequences of equal length.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ranks = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            // average ranks over ties
            let mut m = k;
            while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
                m += 1;
            }
            let avg = (k + m) as f64 / 2.0;
            for &i in &idx[k..=m] {
                r[i] = avg;
            }
            k = m + 1;
        }
        r
    };
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        let xa = ra[i] - mean;
        let xb = rb[i] - mean;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if da == 0.0 || db == 0.0 {
        return 1.0; // constant sequences: perfectly co-monotone by convention
    }
    num / (da * db).sqrt()
}

fn sup_term_diff(
    f1: &SemilinearTerm,
    f2: &SemilinearTerm,
    grid: &SpaceTimeGrid,
    delta1: f64,
    s_bound: f64,
    n_s: usize,
) -> f64 {
    let mut sup = 0.0f64;
    for level in window_levels(grid, delta1) {
        let t = grid.time(level);
        for &node in grid.interior_nodes() {
            let x = grid.coords(node);
            for k in 0..n_s {
                let s = -s_bound + 2.0 * s_bound * k as f64 / (n_s - 1) as f64;
                sup = sup.max((f1.eval(t, x, s) - f2.eval(t, x, s)).abs());
            }
        }
    }
    sup
}

/// Run the ladder: F2(eps) = F1 + eps * perturbation, hypothesis-checked,
/// then both metrics per eps and the trend statistics.
pub fn run_stability(
    f1: &SemilinearTerm,
    perturbation: &SemilinearTerm,
    epsilon_list: &[f64],
    chi: &BoundaryProfile,
    grid: Arc<SpaceTimeGrid>,
    opts: &StabilityOptions,
) -> Result<StabilityRun> {
    if epsilon_list.is_empty() {
        return Err(Error::InvalidParameter("epsilon_list is empty".into()));
    }
    let consts = compute_constants(
        &Field::zeros(grid.clone()),
        opts.kappa0,
        chi,
        grid.clone(),
        chi.delta1,
    )?;
    let s_bound = consts.a2 * opts.r * (1.0 - opts.margin);
    let lambdas = lambda_grid(opts.r, opts.n_lambda)?;

    let mut records = Vec::with_capacity(epsilon_list.len());
    for &eps in epsilon_list {
        let start = Instant::now();
        let f2 = f1.add(
            &perturbation.scaled(eps, &format!("{}_x{eps}", perturbation.metadata().name)),
            &format!("{}_perturbed", f1.metadata().name),
        );
        let rep_a = check_t1a(&f2, &grid);
        if rep_a.status == CheckStatus::Fail {
            return Err(Error::HypothesisFailed(format!(
                "perturbed term at eps={eps} violates F(t,x,0)=0: {:?}",
                rep_a.witness
            )));
        }
        if f1.metadata().satisfies_t1b && perturbation.metadata().satisfies_t1b {
            let rep_b = check_t1b(&f2, &grid, s_bound.max(1e-3));
            if rep_b.status == CheckStatus::Fail {
                return Err(Error::HypothesisFailed(format!(
                    "perturbed term at eps={eps} violates concavity: {:?}",
                    rep_b.witness
                )));
            }
        }
        let sup_f = sup_term_diff(f1, &f2, &grid, chi.delta1, s_bound, 33);
        let mut dn = 0.0f64;
        for &lambda in &lambdas {
            let est = estimate_discrepancy(
                f1,
                &f2,
                chi,
                lambda,
                opts.probe_count,
                opts.seed,
                grid.clone(),
                &opts.solver,
            )?;
            dn = dn.max(est.value);
        }
        records.push(StabilityRecord {
            epsilon: eps,
            sup_f_diff: sup_f,
            dn_discrepancy: dn,
            runtime_secs: start.elapsed().as_secs_f64(),
        });
    }
    records.sort_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).unwrap());

    let active: Vec<&StabilityRecord> = records
        .iter()
        .filter(|r| r.sup_f_diff > 0.0 && r.dn_discrepancy > 0.0)
        .collect();
    let fitted_exponent = if active.len() >= 2 {
        let xs: Vec<f64> = active
            .iter()
            .map(|r| (3.0 + 1.0 / r.dn_discrepancy).ln().ln())
            .collect();
        let ys: Vec<f64> = active.iter().map(|r| r.sup_f_diff.ln()).collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        0.0
    };
    let sf: Vec<f64> = records.iter().map(|r| r.sup_f_diff).collect();
    let dn: Vec<f64> = records.iter().map(|r| r.dn_discrepancy).collect();
    let spearman = spearman_rho(&sf, &dn);
    Ok(StabilityRun {
        records,
        fitted_exponent,
        spearman_rho: spearman,
        s_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::build_chi;
    use crate::grid::{build_grid, GridConfig};
    use crate::nonlinearity::{builtin_family, FamilyParams, TermMetadata};

    fn setup() -> (Arc<SpaceTimeGrid>, BoundaryProfile) {
        let grid = build_grid(&GridConfig {
            dim: 1,
            extents: vec![1.0],
            nx: vec![19],
            nt: 40,
            t_final: 1.0,
        })
        .unwrap();
        let chi = build_chi(grid.clone(), 0.2, 1.0, 0.1, 1.0).unwrap();
        (grid, chi)
    }

    fn bump_perturbation() -> SemilinearTerm {
        // smooth odd cubic perturbation localized in x
        SemilinearTerm::from_fns(
            |_, (x, _), u| -u * u * u * (std::f64::consts::PI * x).sin(),
            |_, (x, _), u| -3.0 * u * u * (std::f64::consts::PI * x).sin(),
            |_, (x, _), u| -6.0 * u * (std::f64::consts::PI * x).sin(),
            TermMetadata {
                name: "cubic_bump".into(),
                satisfies_t1a: true,
                satisfies_t1b: true,
                kappa0: 0.0,
                mu: None,
                b1: None,
                b2: None,
            },
        )
    }

    fn default_opts() -> StabilityOptions {
        StabilityOptions {
            r: 1.0,
            n_lambda: 5,
            kappa0: 0.0,
            margin: 0.05,
            probe_count: 2,
            seed: 17,
            solver: SolverOptions::default(),
        }
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]) + 1.0).abs() < 1e-12);
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]) == 1.0);
    }

    #[test]
    fn zero_epsilon_gives_zero_metrics() {
        let (grid, chi) = setup();
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let run = run_stability(&f, &bump_perturbation(), &[0.0], &chi, grid, &default_opts())
            .unwrap();
        assert!(run.records[0].sup_f_diff <= 1e-12);
        assert!(run.records[0].dn_discrepancy <= 1e-12);
    }

    #[test]
    fn metrics_co_decrease_along_the_ladder() {
        let (grid, chi) = setup();
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let run = run_stability(
            &f,
            &bump_perturbation(),
            &[0.1, 0.05, 0.025, 0.0125],
            &chi,
            grid,
            &default_opts(),
        )
        .unwrap();
        assert!(run.spearman_rho >= 0.9, "rho = {}", run.spearman_rho);
        for w in run.records.windows(2) {
            assert!(w[0].sup_f_diff <= w[1].sup_f_diff + 1e-15);
        }
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let (grid, chi) = setup();
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let eps = [0.1, 0.05];
        let a = run_stability(&f, &bump_perturbation(), &eps, &chi, grid.clone(), &default_opts())
            .unwrap();
        let b = run_stability(&f, &bump_perturbation(), &eps, &chi, grid, &default_opts())
            .unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!(x.sup_f_diff.to_bits() == y.sup_f_diff.to_bits());
            assert!(x.dn_discrepancy.to_bits() == y.dn_discrepancy.to_bits());
        }
    }

    #[test]
    fn hypothesis_violation_aborts_with_witness() {
        let (grid, chi) = setup();
        let f = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        // constant offset breaks F(t,x,0) = 0
        let bad = SemilinearTerm::from_fns(
            |_, _, _| 1.0,
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            TermMetadata {
                name: "offset".into(),
                satisfies_t1a: false,
                satisfies_t1b: true,
                kappa0: 0.0,
                mu: None,
                b1: None,
                b2: None,
            },
        );
        match run_stability(&f, &bad, &[0.1], &chi, grid, &default_opts()) {
            Err(Error::HypothesisFailed(_)) => {}
            other => panic!("expected HypothesisFailed, got {other:?}"),
        }
    }
}
