//! Semilinear terms F(t,x,u) with derivatives, builtin families and
//! hypothesis checkers.
//!
//! The analytic hypotheses on F are pointwise inequalities; they are checked
//! by dense sampling on a probe lattice, never proven. A failing check always
//! carries a witness point.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;

type TermFn = Arc<dyn Fn(f64, (f64, f64), f64) -> f64 + Send + Sync>;

/// Declared hypothesis metadata carried by a term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermMetadata {
    pub name: String,
    pub satisfies_t1a: bool,
    pub satisfies_t1b: bool,
    /// kappa(0): bound on the W^{1,inf} norms of F and its first two
    /// u-derivatives at u = 0.
    pub kappa0: f64,
    /// Optional growth-bound description (P1).
    pub mu: Option<String>,
    /// Optional sign-condition constants (P3).
    pub b1: Option<f64>,
    pub b2: Option<f64>,
}

/// Evaluatable semilinear term with partial derivatives in u.
#[derive(Clone)]
pub struct SemilinearTerm {
    eval: TermFn,
    du: TermFn,
    d2u: TermFn,
    metadata: TermMetadata,
}

impl fmt::Debug for SemilinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearTerm")
            .field("metadata", &self.metadata)
            .finish()
    }
}

impl SemilinearTerm {
    pub fn new(eval: TermFn, du: TermFn, d2u: TermFn, metadata: TermMetadata) -> SemilinearTerm {
        SemilinearTerm {
            eval,
            du,
            d2u,
            metadata,
        }
    }

    pub fn from_fns<E, D, D2>(e: E, d: D, d2: D2, metadata: TermMetadata) -> SemilinearTerm
    where
        E: Fn(f64, (f64, f64), f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64, (f64, f64), f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64, (f64, f64), f64) -> f64 + Send + Sync + 'static,
    {
        SemilinearTerm::new(Arc::new(e), Arc::new(d), Arc::new(d2), metadata)
    }

    #[inline]
    pub fn eval(&self, t: f64, x: (f64, f64), u: f64) -> f64 {
        (self.eval)(t, x, u)
    }

    /// du F
    #[inline]
    pub fn du(&self, t: f64, x: (f64, f64), u: f64) -> f64 {
        (self.du)(t, x, u)
    }

    /// du^2 F
    #[inline]
    pub fn d2u(&self, t: f64, x: (f64, f64), u: f64) -> f64 {
        (self.d2u)(t, x, u)
    }

    pub fn metadata(&self) -> &TermMetadata {
        &self.metadata
    }

    /// Pointwise sum of two terms, used for perturbation families.
    pub fn add(&self, other: &SemilinearTerm, name: &str) -> SemilinearTerm {
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let (d1, d2) = (self.du.clone(), other.du.clone());
        let (s1, s2) = (self.d2u.clone(), other.d2u.clone());
        let metadata = TermMetadata {
            name: name.to_string(),
            satisfies_t1a: self.metadata.satisfies_t1a && other.metadata.satisfies_t1a,
            satisfies_t1b: false,
            kappa0: self.metadata.kappa0 + other.metadata.kappa0,
            mu: None,
            b1: None,
            b2: None,
        };
        SemilinearTerm::new(
            Arc::new(move |t, x, u| e1(t, x, u) + e2(t, x, u)),
            Arc::new(move |t, x, u| d1(t, x, u) + d2(t, x, u)),
            Arc::new(move |t, x, u| s1(t, x, u) + s2(t, x, u)),
            metadata,
        )
    }

    pub fn scaled(&self, factor: f64, name: &str) -> SemilinearTerm {
        let e = self.eval.clone();
        let d = self.du.clone();
        let s = self.d2u.clone();
        let metadata = TermMetadata {
            name: name.to_string(),
            kappa0: self.metadata.kappa0 * factor.abs(),
            ..self.metadata.clone()
        };
        SemilinearTerm::new(
            Arc::new(move |t, x, u| factor * e(t, x, u)),
            Arc::new(move |t, x, u| factor * d(t, x, u)),
            Arc::new(move |t, x, u| factor * s(t, x, u)),
            metadata,
        )
    }
}

/// Status of a single hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotChecked,
}

/// A probe point (t, x, u) with the offending value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeWitness {
    pub t: f64,
    pub x: (f64, f64),
    pub u: f64,
    pub value: f64,
}

/// Outcome of one hypothesis check over the probe lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub status: CheckStatus,
    /// Worst probe encountered; present whenever status is Fail.
    pub witness: Option<ProbeWitness>,
    pub worst_value: f64,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// Space-time probe points drawn from the grid (strided so large grids stay
/// cheap to sweep).
fn spacetime_probes(grid: &SpaceTimeGrid) -> Vec<(f64, (f64, f64))> {
    let t_stride = (grid.n_levels() / 16).max(1);
    let n_stride = (grid.n_interior() / 64).max(1);
    let mut probes = Vec::new();
    for level in (0..grid.n_levels()).step_by(t_stride) {
        let t = grid.time(level);
        for &node in grid.interior_nodes().iter().step_by(n_stride) {
            probes.push((t, grid.coords(node)));
        }
    }
    probes
}

fn sweep<FV>(
    hypothesis: &str,
    probes: impl Iterator<Item = (f64, (f64, f64), f64)>,
    violation: FV,
) -> HypothesisReport
where
    FV: Fn(f64, (f64, f64), f64) -> f64,
{
    // violation > 0 means the hypothesis fails at that probe
    let mut worst: Option<ProbeWitness> = None;
    for (t, x, u) in probes {
        let v = violation(t, x, u);
        if worst.as_ref().map_or(true, |w| v > w.value) {
            worst = Some(ProbeWitness { t, x, u, value: v });
        }
    }
    let worst = worst.expect("empty probe set");
    let failed = worst.value > 0.0;
    HypothesisReport {
        hypothesis: hypothesis.to_string(),
        status: if failed {
            CheckStatus::Fail
        } else {
            CheckStatus::Pass
        },
        witness: if failed { Some(worst) } else { None },
        worst_value: worst.value,
    }
}

/// F(t,x,0) = 0 at every probe point.
pub fn check_t1a(term: &SemilinearTerm, grid: &SpaceTimeGrid) -> HypothesisReport {
    sweep(
        "t1a",
        spacetime_probes(grid).into_iter().map(|(t, x)| (t, x, 0.0)),
        |t, x, u| term.eval(t, x, u).abs() - 1e-12,
    )
}

/// Sign condition on the second u-derivative: d2u <= 0 for u >= 0 and
/// d2u >= 0 for u <= 0, swept over u in [0, u_max].
pub fn check_t1b(term: &SemilinearTerm, grid: &SpaceTimeGrid, u_max: f64) -> HypothesisReport {
    assert!(u_max > 0.0, "u_max must be positive");
    let n_u = 41;
    let st = spacetime_probes(grid);
    let probes = st.iter().flat_map(move |&(t, x)| {
        (0..=n_u).map(move |k| (t, x, u_max * k as f64 / n_u as f64))
    });
    sweep("t1b", probes, |t, x, u| {
        let upper = term.d2u(t, x, u) - 1e-10;
        let lower = -term.d2u(t, x, -u) - 1e-10;
        upper.max(lower)
    })
}

/// du F(t,x,0) <= q(t,x) at every probe point.
pub fn check_t1d<Q>(term: &SemilinearTerm, q: Q, grid: &SpaceTimeGrid) -> HypothesisReport
where
    Q: Fn(f64, (f64, f64)) -> f64,
{
    sweep(
        "t1d",
        spacetime_probes(grid).into_iter().map(|(t, x)| (t, x, 0.0)),
        |t, x, _| term.du(t, x, 0.0) - q(t, x) - 1e-12,
    )
}

/// Consistency of the supplied derivatives against centered finite
/// differences of eval/du in u, at the given probe points. Returns the worst
/// relative deviation for (du, d2u).
pub fn derivative_consistency(
    term: &SemilinearTerm,
    probes: &[(f64, (f64, f64), f64)],
) -> (f64, f64) {
    let step = 1e-5;
    let mut worst_du: f64 = 0.0;
    let mut worst_d2u: f64 = 0.0;
    for &(t, x, u) in probes {
        let fd_du = (term.eval(t, x, u + step) - term.eval(t, x, u - step)) / (2.0 * step);
        let du = term.du(t, x, u);
        worst_du = worst_du.max((fd_du - du).abs() / du.abs().max(1.0));
        let fd_d2u = (term.du(t, x, u + step) - term.du(t, x, u - step)) / (2.0 * step);
        let d2u = term.d2u(t, x, u);
        worst_d2u = worst_d2u.max((fd_d2u - d2u).abs() / d2u.abs().max(1.0));
    }
    (worst_du, worst_d2u)
}

/// Parameters for [`builtin_family`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct FamilyParams {
    /// linear_potential: q(t,x) = q0 + qx*x + qt*t
    pub q0: f64,
    pub qx: f64,
    pub qt: f64,
    /// cubic_absorbing: F = -c u^3
    pub c: f64,
    /// power_law_fnon
    pub q_plus: f64,
    pub q_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub epsilon1: f64,
    /// logistic: F = -rate * u * (1 - u)
    pub rate: f64,
}

impl Default for FamilyParams {
    fn default() -> FamilyParams {
        FamilyParams {
            q0: 1.0,
            qx: 0.0,
            qt: 0.0,
            c: 1.0,
            q_plus: -1.0,
            q_minus: 1.0,
            // gamma = 2 keeps the secant slope at u = 0 (here 4.5) below the
            // principal Dirichlet eigenvalue pi^2 on the unit interval, so the
            // forward problem stays subcritical at the excitation amplitudes
            // used by the experiments.
            gamma_plus: 2.0,
            gamma_minus: 2.0,
            epsilon1: 0.5,
            rate: 1.0,
        }
    }
}

/// Construct one of the builtin semilinear families.
pub fn builtin_family(name: &str, params: &FamilyParams) -> Result<SemilinearTerm> {
    match name {
        "zero" => Ok(SemilinearTerm::from_fns(
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            TermMetadata {
                name: "zero".into(),
                satisfies_t1a: true,
                satisfies_t1b: true,
                kappa0: 0.0,
                mu: Some("0".into()),
                b1: Some(0.0),
                b2: Some(0.0),
            },
        )),
        "linear_potential" => {
            let (q0, qx, qt) = (params.q0, params.qx, params.qt);
            let q = move |t: f64, x: (f64, f64)| q0 + qx * x.0 + qt * t;
            Ok(SemilinearTerm::from_fns(
                move |t, x, u| q(t, x) * u,
                move |t, x, _| q(t, x),
                |_, _, _| 0.0,
                TermMetadata {
                    name: "linear_potential".into(),
                    satisfies_t1a: true,
                    satisfies_t1b: true,
                    kappa0: q0.abs() + qx.abs() + qt.abs(),
                    mu: None,
                    b1: Some(q0.abs() + qx.abs() + qt.abs()),
                    b2: Some(0.0),
                },
            ))
        }
        "cubic_absorbing" => {
            let c = params.c;
            if c < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "cubic_absorbing requires c >= 0, got {c}"
                )));
            }
            Ok(SemilinearTerm::from_fns(
                move |_, _, u| -c * u * u * u,
                move |_, _, u| -3.0 * c * u * u,
                move |_, _, u| -6.0 * c * u,
                TermMetadata {
                    name: "cubic_absorbing".into(),
                    satisfies_t1a: true,
                    satisfies_t1b: true,
                    kappa0: 0.0,
                    mu: Some("c*|u|^3".into()),
                    b1: Some(0.0),
                    b2: Some(0.0),
                },
            ))
        }
        "power_law_fnon" => power_law_fnon(params),
        "logistic" => {
            let r = params.rate;
            Ok(SemilinearTerm::from_fns(
                move |_, _, u| -r * u * (1.0 - u),
                move |_, _, u| -r * (1.0 - 2.0 * u),
                move |_, _, _| 2.0 * r,
                TermMetadata {
                    name: "logistic".into(),
                    satisfies_t1a: true,
                    satisfies_t1b: false,
                    kappa0: 3.0 * r.abs(),
                    mu: Some("r*|u|*(1+|u|)".into()),
                    b1: None,
                    b2: None,
                },
            ))
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

/// Quintic Hermite evaluation on [0, 1] with endpoint values/derivatives
/// (p0, m0, c0) and (p1, m1, c1). Returns (value, d1, d2) at s.
fn quintic_hermite(s: f64, p0: f64, m0: f64, c0: f64, p1: f64, m1: f64, c1: f64) -> (f64, f64, f64) {
    // basis for value/slope/curvature interpolation on [0,1]
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * s3 - s4 + 0.5 * s5;
    let v = p0 * h00 + m0 * h10 + c0 * h20 + p1 * h01 + m1 * h11 + c1 * h21;

    let d_h00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d_h10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d_h20 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d_h01 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let d_h11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d_h21 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d1 = p0 * d_h00 + m0 * d_h10 + c0 * d_h20 + p1 * d_h01 + m1 * d_h11 + c1 * d_h21;

    let dd_h00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let dd_h10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let dd_h20 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let dd_h01 = 60.0 * s - 180.0 * s2 + 120.0 * s3;
    let dd_h11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let dd_h21 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let d2 = p0 * dd_h00 + m0 * dd_h10 + c0 * dd_h20 + p1 * dd_h01 + m1 * dd_h11 + c1 * dd_h21;

    (v, d1, d2)
}

/// Power-law family: F(t,x,+u) = q_plus (1+u)^{gamma_plus} and
/// F(t,x,-u) = q_minus (1+u)^{gamma_minus} for u >= epsilon1, joined on
/// |u| < epsilon1 by per-half quintics with F(t,x,0) = 0, a shared secant
/// slope and zero curvature at u = 0, and matching value/first/second
/// derivatives at |u| = epsilon1.
fn power_law_fnon(params: &FamilyParams) -> Result<SemilinearTerm> {
    let FamilyParams {
        q_plus,
        q_minus,
        gamma_plus,
        gamma_minus,
        epsilon1,
        ..
    } = *params;
    if gamma_plus < 1.0 || gamma_minus < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "power_law_fnon requires gamma_± >= 1, got ({gamma_plus}, {gamma_minus})"
        )));
    }
    if q_plus > 0.0 || q_minus < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "power_law_fnon requires q_plus <= 0 <= q_minus, got ({q_plus}, {q_minus})"
        )));
    }
    if epsilon1 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "power_law_fnon requires epsilon1 > 0, got {epsilon1}"
        )));
    }

    let e1 = epsilon1;
    // Outer branch values and derivatives at the join points.
    let branch = move |q: f64, g: f64, u: f64| {
        let b = 1.0 + u;
        let v = q * b.powf(g);
        let d1 = q * g * b.powf(g - 1.0);
        let d2 = q * g * (g - 1.0) * b.powf(g - 2.0);
        (v, d1, d2)
    };
    let (ap, bp, cp) = branch(q_plus, gamma_plus, e1); // F, F', F'' at +e1
    let (am_raw, bm_raw, cm_raw) = branch(q_minus, gamma_minus, e1);
    // On the negative axis F(u) = q_minus (1 - u)^{gamma_minus}; chain rule
    // flips odd derivatives.
    let (am, bm, cm) = (am_raw, -bm_raw, cm_raw); // F, F', F'' at -e1
    let m0 = (ap - am) / (2.0 * e1); // shared secant slope at u = 0

    let value = move |u: f64| -> (f64, f64, f64) {
        if u >= e1 {
            branch(q_plus, gamma_plus, u)
        } else if u <= -e1 {
            let (v, d1, d2) = branch(q_minus, gamma_minus, -u);
            (v, -d1, d2)
        } else if u >= 0.0 {
            // map [0, e1] -> [0, 1]; derivatives rescale by 1/e1 per order
            let (v, d1, d2) = quintic_hermite(u / e1, 0.0, m0 * e1, 0.0, ap, bp * e1, cp * e1 * e1);
            (v, d1 / e1, d2 / (e1 * e1))
        } else {
            // map [-e1, 0] -> [0, 1]
            let s = (u + e1) / e1;
            let (v, d1, d2) = quintic_hermite(s, am, bm * e1, cm * e1 * e1, 0.0, m0 * e1, 0.0);
            (v, d1 / e1, d2 / (e1 * e1))
        }
    };
    let v0 = value;
    let v1 = value;
    let v2 = value;
    Ok(SemilinearTerm::from_fns(
        move |_, _, u| v0(u).0,
        move |_, _, u| v1(u).1,
        move |_, _, u| v2(u).2,
        TermMetadata {
            name: "power_law_fnon".into(),
            satisfies_t1a: true,
            satisfies_t1b: false,
            kappa0: m0.abs(),
            mu: Some(format!(
                "max(|q_+|,|q_-|)*(1+|u|)^max(gamma_+,gamma_-)"
            )),
            b1: None,
            b2: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};

    fn test_grid() -> std::sync::Arc<SpaceTimeGrid> {
        build_grid(&GridConfig {
            dim: 1,
            extents: vec![1.0],
            nx: vec![19],
            nt: 10,
            t_final: 1.0,
        })
        .unwrap()
    }

    fn probe_lattice() -> Vec<(f64, (f64, f64), f64)> {
        let mut probes = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..4 {
                    probes.push((
                        i as f64 * 0.25,
                        (0.1 + 0.2 * j as f64, 0.0),
                        -1.35 + 0.7 * k as f64,
                    ));
                }
            }
        }
        probes
    }

    #[test]
    fn t1a_passes_for_vanishing_terms() {
        let grid = test_grid();
        let f = builtin_family("linear_potential", &FamilyParams::default()).unwrap();
        assert!(check_t1a(&f, &grid).passed());
    }

    #[test]
    fn t1a_fails_with_witness() {
        let grid = test_grid();
        let f = SemilinearTerm::from_fns(
            |_, _, u| u * u + 1.0,
            |_, _, u| 2.0 * u,
            |_, _, _| 2.0,
            TermMetadata {
                name: "u2_plus_1".into(),
                satisfies_t1a: false,
                satisfies_t1b: false,
                kappa0: 0.0,
                mu: None,
                b1: None,
                b2: None,
            },
        );
        let report = check_t1a(&f, &grid);
        assert_eq!(report.status, CheckStatus::Fail);
        assert!(report.witness.is_some());
    }

    #[test]
    fn t1b_sign_cases() {
        let grid = test_grid();
        let cubic = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        assert!(check_t1b(&cubic, &grid, 2.0).passed());

        let anti = cubic.scaled(-1.0, "anti_cubic"); // F = +u^3
        let report = check_t1b(&anti, &grid, 2.0);
        assert_eq!(report.status, CheckStatus::Fail);
        assert!(report.witness.is_some());

        let linear = builtin_family("linear_potential", &FamilyParams::default()).unwrap();
        assert!(check_t1b(&linear, &grid, 2.0).passed());
    }

    #[test]
    fn t1b_is_odd_symmetric() {
        // pass for F implies pass for the mirror -F(-u)
        let grid = test_grid();
        let cubic = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let e = move |t: f64, x: (f64, f64), u: f64| -cubic.eval(t, x, -u);
        let cubic2 = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let d = move |t: f64, x: (f64, f64), u: f64| cubic2.du(t, x, -u);
        let cubic3 = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        let s = move |t: f64, x: (f64, f64), u: f64| -cubic3.d2u(t, x, -u);
        let mirror = SemilinearTerm::from_fns(
            e,
            d,
            s,
            TermMetadata {
                name: "mirror".into(),
                satisfies_t1a: true,
                satisfies_t1b: true,
                kappa0: 0.0,
                mu: None,
                b1: None,
                b2: None,
            },
        );
        assert!(check_t1b(&mirror, &grid, 2.0).passed());
    }

    #[test]
    fn t1d_cases() {
        let grid = test_grid();
        let cubic = builtin_family("cubic_absorbing", &FamilyParams::default()).unwrap();
        assert!(check_t1d(&cubic, |_, _| 0.0, &grid).passed());

        let two_u = builtin_family(
            "linear_potential",
            &FamilyParams {
                q0: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        let report = check_t1d(&two_u, |_, _| 1.0, &grid);
        assert_eq!(report.status, CheckStatus::Fail);

        // F = sin(u) * c(t,x), q = positive part of c
        let c = |t: f64, x: (f64, f64)| (3.0 * x.0 - 1.0) + 0.5 * t;
        let f = SemilinearTerm::from_fns(
            move |t, x, u| u.sin() * c(t, x),
            move |t, x, u| u.cos() * c(t, x),
            move |t, x, u| -u.sin() * c(t, x),
            TermMetadata {
                name: "sin_c".into(),
                satisfies_t1a: true,
                satisfies_t1b: false,
                kappa0: 0.0,
                mu: None,
                b1: None,
                b2: None,
            },
        );
        assert!(check_t1d(&f, move |t, x| c(t, x).max(0.0), &grid).passed());
    }

    #[test]
    fn builtin_derivatives_are_consistent() {
        let probes = probe_lattice();
        for name in [
            "zero",
            "linear_potential",
            "cubic_absorbing",
            "power_law_fnon",
            "logistic",
        ] {
            let f = builtin_family(name, &FamilyParams::default()).unwrap();
            let (e_du, e_d2u) = derivative_consistency(&f, &probes);
            assert!(e_du < 1e-6, "{name}: du inconsistent ({e_du})");
            assert!(e_d2u < 1e-5, "{name}: d2u inconsistent ({e_d2u})");
        }
    }

    #[test]
    fn power_law_join_is_c2_and_anchored() {
        let params = FamilyParams::default();
        let f = builtin_family("power_law_fnon", &params).unwrap();
        let x = (0.5, 0.0);
        assert_eq!(f.eval(0.0, x, 0.0), 0.0);
        // outer branch formula holds beyond epsilon1
        let u: f64 = 0.8;
        let expect = params.q_plus * (1.0 + u).powf(params.gamma_plus);
        assert!((f.eval(0.3, x, u) - expect).abs() < 1e-12);
        // continuity of value/du/d2u across the join points
        for u0 in [params.epsilon1, -params.epsilon1, 0.0] {
            let eps = 1e-7;
            assert!((f.eval(0.0, x, u0 - eps) - f.eval(0.0, x, u0 + eps)).abs() < 1e-5);
            assert!((f.du(0.0, x, u0 - eps) - f.du(0.0, x, u0 + eps)).abs() < 1e-4);
            assert!((f.d2u(0.0, x, u0 - eps) - f.d2u(0.0, x, u0 + eps)).abs() < 1e-3);
        }
    }

    #[test]
    fn power_law_rejects_bad_params() {
        let mut p = FamilyParams::default();
        p.gamma_plus = 0.5;
        assert!(builtin_family("power_law_fnon", &p).is_err());
        let mut p = FamilyParams::default();
        p.q_plus = 1.0;
        assert!(builtin_family("power_law_fnon", &p).is_err());
        assert!(builtin_family("no_such_family", &FamilyParams::default()).is_err());
    }

    #[test]
    fn default_power_law_is_odd() {
        let f = builtin_family("power_law_fnon", &FamilyParams::default()).unwrap();
        let x = (0.3, 0.0);
        for u in [0.1, 0.3, 0.5, 0.9, 2.0] {
            let sym = f.eval(0.0, x, -u) + f.eval(0.0, x, u);
            assert!(sym.abs() < 1e-12, "not odd at u={u}: {sym}");
        }
    }
}
