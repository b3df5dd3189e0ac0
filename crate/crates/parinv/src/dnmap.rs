//! Dirichlet-to-Neumann traces of the forward problems and the sampled
//! discrepancy norm between the linearized DN maps of two semilinear terms.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boundary::{make_perturbation, BoundaryData, BoundaryProfile, Perturbation, PerturbationShape};
use crate::error::{Error, Result};
use crate::grid::{normal_derivative, Field, SpaceTimeGrid};
use crate::linearize::potential_along;
use crate::nonlinearity::SemilinearTerm;
use crate::solver::{
    solve_linear, solve_semilinear, LinearProblem, Scheme, SemilinearProblem, SolverOptions,
};

/// Outward normal derivative of a solution on the lateral boundary, stored
/// per (time level, boundary node). Level 0 is identically zero by the zero
/// initial condition and excluded from norms.
#[derive(Debug, Clone)]
pub struct DNTrace {
    pub data: BoundaryData,
}

impl DNTrace {
    /// Trace a space-time field.
    pub fn of(field: &Field) -> DNTrace {
        let grid = field.grid.clone();
        let mut data = BoundaryData::zeros(grid.clone());
        for level in 1..grid.n_levels() {
            let nd = normal_derivative(field, level);
            for (b, val) in nd.into_iter().enumerate() {
                data.set(level, b, val);
            }
        }
        DNTrace { data }
    }

    pub fn sup_distance(&self, other: &DNTrace) -> f64 {
        self.data
            .values()
            .iter()
            .zip(other.data.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l2_distance(&self, other: &DNTrace) -> f64 {
        self.data.lin_comb(1.0, &other.data, -1.0).l2_norm()
    }
}

/// DN trace of the semilinear problem with boundary data lambda*chi + h.
pub fn nonlinear_dn(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    h: &Perturbation,
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<DNTrace> {
    let p = SemilinearProblem {
        grid,
        term: term.clone(),
        dirichlet: chi.data.scale(lambda).lin_comb(1.0, &h.data, 1.0),
    };
    let (u, _) = solve_semilinear(&p, opts).map_err(|e| e.at_lambda(lambda))?;
    Ok(DNTrace::of(&u))
}

/// DN trace of the linearized problem: potential V, boundary h, no source.
pub fn linearized_dn(
    potential: &Field,
    h: &Perturbation,
    grid: Arc<SpaceTimeGrid>,
) -> Result<DNTrace> {
    let lp = LinearProblem::homogeneous(grid, potential.clone(), h.data.clone());
    let u = solve_linear(&lp, Scheme::ImplicitEuler)?;
    Ok(DNTrace::of(&u))
}

/// Lower estimate of the operator gap between two linearized DN maps in the
/// lateral L^2 norms, obtained by maximizing the Rayleigh-type quotient
/// ||(N1 - N2) h|| / ||h|| over a seeded family of probe perturbations.
#[derive(Debug, Clone)]
pub struct DiscrepancyEstimate {
    pub value: f64,
    pub probes_used: usize,
    /// Probe index attaining the maximum.
    pub argmax_probe: usize,
}

/// Tabulate the linearized potential of a term at excitation amplitude
/// lambda: du F along the background solution v_lambda.
pub fn potential_at(
    term: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<Field> {
    let p = SemilinearProblem {
        grid,
        term: term.clone(),
        dirichlet: chi.data.scale(lambda),
    };
    let (v, _) = solve_semilinear(&p, opts).map_err(|e| e.at_lambda(lambda))?;
    Ok(potential_along(term, &v))
}

/// Estimate the discrepancy between the linearized DN maps of two terms at a
/// common excitation amplitude.
pub fn estimate_discrepancy(
    term1: &SemilinearTerm,
    term2: &SemilinearTerm,
    chi: &BoundaryProfile,
    lambda: f64,
    probe_count: usize,
    seed: u64,
    grid: Arc<SpaceTimeGrid>,
    opts: &SolverOptions,
) -> Result<DiscrepancyEstimate> {
    if probe_count == 0 {
        return Err(Error::InvalidParameter("probe_count must be >= 1".into()));
    }
    let v1 = potential_at(term1, chi, lambda, grid.clone(), opts)?;
    let v2 = potential_at(term2, chi, lambda, grid.clone(), opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut argmax = 0usize;
    for k in 0..probe_count {
        let shape = if k == 0 {
            PerturbationShape::TimeBump
        } else if k == 1 && grid.n_boundary() > 1 {
            PerturbationShape::BoundaryBump {
                node: grid.n_boundary() / 2,
            }
        } else {
            PerturbationShape::RandomSmooth { seed: rng.gen() }
        };
        let amplitude = 0.9 * chi.epsilon;
        let h = make_perturbation(grid.clone(), &shape, amplitude, chi.epsilon)?;
        let hn = h.data.l2_norm();
        if hn <= 1e-300 {
            continue;
        }
        let t1 = linearized_dn(&v1, &h, grid.clone())?;
        let t2 = linearized_dn(&v2, &h, grid.clone())?;
        let quot = t1.l2_distance(&t2) / hn;
        if quot > best {
            best = quot;
            argmax = k;
        }
    }
    Ok(DiscrepancyEstimate {
        value: best,
        probes_used: probe_count,
        argmax_probe: argmax,
    })
}
