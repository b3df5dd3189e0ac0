//! Run orchestration and file outputs: CSV/binary field dumps at round-trip
//! precision, per-run manifests with content hashes, and the golden-file
//! verification surface.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::boundary::BoundaryProfile;
use crate::config::{Experiment, ScenarioConfig};
use crate::dnmap::DNTrace;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linearize::{build_bundle, integral_identity_check};
use crate::nonlinearity::{SemilinearTerm, TermMetadata};
use crate::reachable::compute_constants;
use crate::reconstruct::{compare_to_truth, reconstruct, uniqueness_probe, PotentialData, ReconstructOptions};
use crate::solver::{solve_semilinear, SemilinearProblem};
use crate::stability::{run_stability, StabilityOptions};

/// Round-trip decimal formatting (17 significant digits).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a field as CSV rows (t, x, y, value).
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let grid = &field.grid;
    let mut out = String::with_capacity(grid.n_nodes() * grid.n_levels() * 32);
    out.push_str("t,x,y,value\n");
    for level in 0..grid.n_levels() {
        let t = grid.time(level);
        for node in 0..grid.n_nodes() {
            let (x, y) = grid.coords(node);
            out.push_str(&fmt_g17(t));
            out.push(',');
            out.push_str(&fmt_g17(x));
            out.push(',');
            out.push_str(&fmt_g17(y));
            out.push(',');
            out.push_str(&fmt_g17(field.at(level, node)));
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Compact binary field dump: magic "PINV1", then n_levels and n_nodes as
/// little-endian u64, then doubles row-major by time level.
pub fn write_field_binary(path: &Path, field: &Field) -> Result<()> {
    let grid = &field.grid;
    let mut buf = Vec::with_capacity(5 + 16 + 8 * field.values().len());
    buf.extend_from_slice(b"PINV1");
    buf.extend_from_slice(&(grid.n_levels() as u64).to_le_bytes());
    buf.extend_from_slice(&(grid.n_nodes() as u64).to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Read back a binary dump as (n_levels, n_nodes, values).
pub fn read_field_binary(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let buf = fs::read(path)?;
    if buf.len() < 21 || &buf[..5] != b"PINV1" {
        return Err(Error::Config(format!(
            "{} is not a PINV1 dump",
            path.display()
        )));
    }
    let n_levels = u64::from_le_bytes(buf[5..13].try_into().unwrap()) as usize;
    let n_nodes = u64::from_le_bytes(buf[13..21].try_into().unwrap()) as usize;
    let expect = 21 + 8 * n_levels * n_nodes;
    if buf.len() != expect {
        return Err(Error::Config(format!(
            "{}: truncated dump ({} of {expect} bytes)",
            path.display(),
            buf.len()
        )));
    }
    let values = buf[21..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n_levels, n_nodes, values))
}

pub fn write_trace_csv(path: &Path, trace: &DNTrace) -> Result<()> {
    let grid = &trace.data.grid;
    let mut out = String::new();
    out.push_str("t,boundary_index,value\n");
    for level in 0..grid.n_levels() {
        let t = grid.time(level);
        for b in 0..grid.n_boundary() {
            out.push_str(&fmt_g17(t));
            out.push(',');
            out.push_str(&b.to_string());
            out.push(',');
            out.push_str(&fmt_g17(trace.data.at(level, b)));
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageStatus {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Manifest written at the end of every run, success or failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config_sha256: String,
    pub code_version: String,
    pub unix_timestamp: u64,
    pub seed: u64,
    pub stages: Vec<StageStatus>,
    pub files: Vec<FileEntry>,
}

/// Map an error to the documented process exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidGrid(_) | Error::InvalidParameter(_)
        | Error::UnknownFamily(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::BlowUp { .. } | Error::NewtonDivergence { .. } | Error::SingularStepMatrix { .. } => 3,
        Error::AtLambda { source, .. } => exit_code_for(source),
        Error::OutOfRange { .. }
        | Error::NonMonotoneTable { .. }
        | Error::EmptyValidBox { .. }
        | Error::HypothesisFailed(_)
        | Error::PerturbationTooLarge { .. } => 4,
    }
}

struct RunContext {
    dir: PathBuf,
    stages: Vec<StageStatus>,
    files: Vec<PathBuf>,
}

impl RunContext {
    fn stage(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.stages.push(StageStatus {
            name: name.to_string(),
            ok,
            detail: detail.into(),
        });
    }

    fn track(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn write_json<T: Serialize>(ctx: &mut RunContext, name: &str, value: &T) -> Result<()> {
    let path = ctx.path(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    ctx.track(path);
    Ok(())
}

/// The out-of-range bump used by the uniqueness scenario: supported at
/// |u| > threshold, smooth, odd.
pub fn range_bump(threshold: f64, amplitude: f64) -> SemilinearTerm {
    let s = threshold;
    let eval = move |_: f64, _: (f64, f64), u: f64| {
        let e = u.abs() - s;
        if e <= 0.0 {
            0.0
        } else {
            amplitude * u.signum() * e * e * e
        }
    };
    let du = move |_: f64, _: (f64, f64), u: f64| {
        let e = u.abs() - s;
        if e <= 0.0 {
            0.0
        } else {
            3.0 * amplitude * e * e
        }
    };
    let d2u = move |_: f64, _: (f64, f64), u: f64| {
        let e = u.abs() - s;
        if e <= 0.0 {
            0.0
        } else {
            6.0 * amplitude * u.signum() * e
        }
    };
    SemilinearTerm::from_fns(
        eval,
        du,
        d2u,
        TermMetadata {
            name: format!("range_bump_{s}"),
            satisfies_t1a: true,
            satisfies_t1b: false,
            kappa0: 0.0,
            mu: None,
            b1: None,
            b2: None,
        },
    )
}

/// Odd cubic perturbation localized in x, used by the stability scenario.
pub fn stability_perturbation() -> SemilinearTerm {
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

fn run_experiment(
    cfg: &ScenarioConfig,
    chi: &BoundaryProfile,
    term: &SemilinearTerm,
    grid: std::sync::Arc<crate::grid::SpaceTimeGrid>,
    ctx: &mut RunContext,
) -> Result<()> {
    let opts = cfg.solver_options();
    match cfg.experiment {
        Experiment::Forward => {
            let p = SemilinearProblem {
                grid: grid.clone(),
                term: term.clone(),
                dirichlet: chi.data.scale(cfg.r),
            };
            let (u, rep) = solve_semilinear(&p, &opts)?;
            let csv = ctx.path("solution.csv");
            write_field_csv(&csv, &u)?;
            ctx.track(csv);
            let bin = ctx.path("solution.pinv");
            write_field_binary(&bin, &u)?;
            ctx.track(bin);
            let trace = DNTrace::of(&u);
            let tcsv = ctx.path("dn_trace.csv");
            write_trace_csv(&tcsv, &trace)?;
            ctx.track(tcsv);
            ctx.stage(
                "forward_solve",
                true,
                format!("sup_norm={} max_residual={}", rep.sup_norm, rep.max_residual),
            );
        }
        Experiment::Linearize => {
            let bundle = build_bundle(term, chi, cfg.r, cfg.n_lambda, grid, &opts)?;
            let worst = integral_identity_check(&bundle);
            for (i, v1) in bundle.v1.iter().enumerate() {
                let path = ctx.path(&format!("v1_lambda_{i:03}.csv"));
                write_field_csv(&path, v1)?;
                ctx.track(path);
            }
            #[derive(Serialize)]
            struct Summary {
                n_lambda: usize,
                r: f64,
                integral_identity_rel_error: f64,
            }
            write_json(
                ctx,
                "linearize_summary.json",
                &Summary {
                    n_lambda: cfg.n_lambda,
                    r: cfg.r,
                    integral_identity_rel_error: worst,
                },
            )?;
            ctx.stage("linearize", true, format!("integral identity error {worst}"));
        }
        Experiment::Constants => {
            let q = Field::zeros(grid.clone());
            #[derive(Serialize)]
            struct Row {
                kappa0: f64,
                a1: f64,
                a2: f64,
            }
            let mut rows = Vec::new();
            for kappa0 in [0.0, 1.0, 10.0] {
                let c = compute_constants(&q, kappa0, chi, grid.clone(), chi.delta1)?;
                if kappa0 == 0.0 {
                    let wcsv = ctx.path("w.csv");
                    write_field_csv(&wcsv, &c.w)?;
                    ctx.track(wcsv);
                    let ycsv = ctx.path("y.csv");
                    write_field_csv(&ycsv, &c.y)?;
                    ctx.track(ycsv);
                }
                rows.push(Row {
                    kappa0,
                    a1: c.a1,
                    a2: c.a2,
                });
            }
            write_json(ctx, "constants.json", &rows)?;
            ctx.stage("constants", true, format!("{} kappa values", rows.len()));
        }
        Experiment::Reconstruct => {
            let bundle = build_bundle(term, chi, cfg.r, cfg.n_lambda, grid.clone(), &opts)?;
            let data = PotentialData::from_bundle(&bundle);
            let rec = reconstruct(
                &data,
                chi,
                &ReconstructOptions {
                    kappa0: term.metadata().kappa0,
                    margin: 0.05,
                },
            )?;
            let report = compare_to_truth(&rec, term, 21)?;
            // sample tables at a few representative nodes
            let level = grid.n_levels() - 1;
            let mut table = String::from("node_x,s,f_value\n");
            for &node in grid
                .interior_nodes()
                .iter()
                .step_by((grid.n_interior() / 8).max(1))
            {
                let (x, _) = grid.coords(node);
                for k in 0..rec.lambda_grid.len() {
                    table.push_str(&fmt_g17(x));
                    table.push(',');
                    table.push_str(&fmt_g17(rec.v[k].at(level, node)));
                    table.push(',');
                    table.push_str(&fmt_g17(rec.f_along[k].at(level, node)));
                    table.push('\n');
                }
            }
            let tpath = ctx.path("tables.csv");
            fs::write(&tpath, table)?;
            ctx.track(tpath);
            #[derive(Serialize)]
            struct Summary {
                sup_error: f64,
                l2_error: f64,
                s_bound: f64,
                a2: f64,
                n_samples: usize,
            }
            write_json(
                ctx,
                "reconstruct_summary.json",
                &Summary {
                    sup_error: report.sup_error,
                    l2_error: report.l2_error,
                    s_bound: rec.valid_box.s_bound,
                    a2: rec.a2,
                    n_samples: report.n_samples,
                },
            )?;
            ctx.stage(
                "reconstruct",
                true,
                format!("sup error {}", report.sup_error),
            );
        }
        Experiment::Uniqueness => {
            // first pass: attained range with the base term
            let probe = uniqueness_probe(
                term,
                term,
                chi,
                cfg.r,
                cfg.n_lambda.min(9),
                grid.clone(),
                &opts,
                4,
                cfg.seed,
            )?;
            let f2 = term.add(
                &range_bump(2.0 * probe.attained_range, 5.0),
                &format!("{}_outside_bump", term.metadata().name),
            );
            let outside = uniqueness_probe(
                term,
                &f2,
                chi,
                cfg.r,
                cfg.n_lambda.min(9),
                grid.clone(),
                &opts,
                8,
                cfg.seed,
            )?;
            let f3 = term.add(
                &range_bump(0.1 * probe.attained_range, 5.0),
                &format!("{}_inside_bump", term.metadata().name),
            );
            let inside = uniqueness_probe(
                term,
                &f3,
                chi,
                cfg.r,
                cfg.n_lambda.min(9),
                grid,
                &opts,
                8,
                cfg.seed,
            )?;
            #[derive(Serialize)]
            struct Summary {
                attained_range: f64,
                outside_bump_trace_diff: f64,
                inside_bump_trace_diff: f64,
                newton_tol: f64,
            }
            write_json(
                ctx,
                "uniqueness_summary.json",
                &Summary {
                    attained_range: probe.attained_range,
                    outside_bump_trace_diff: outside.max_trace_diff,
                    inside_bump_trace_diff: inside.max_trace_diff,
                    newton_tol: opts.newton_tol,
                },
            )?;
            ctx.stage(
                "uniqueness",
                true,
                format!(
                    "outside {} inside {}",
                    outside.max_trace_diff, inside.max_trace_diff
                ),
            );
        }
        Experiment::Stability => {
            let sopts = StabilityOptions {
                r: cfg.r,
                n_lambda: cfg.n_lambda.min(5),
                kappa0: term.metadata().kappa0,
                margin: 0.05,
                probe_count: 2,
                seed: cfg.seed,
                solver: opts,
            };
            let run = run_stability(
                term,
                &stability_perturbation(),
                &[0.1, 0.05, 0.025, 0.0125],
                chi,
                grid,
                &sopts,
            )?;
            // runtimes stay out of the CSVs so reruns are byte-identical
            let mut csv = String::from("epsilon,sup_f_diff,dn_discrepancy\n");
            let mut long = String::from("epsilon,metric,value\n");
            for rec in &run.records {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    fmt_g17(rec.epsilon),
                    fmt_g17(rec.sup_f_diff),
                    fmt_g17(rec.dn_discrepancy),
                ));
                long.push_str(&format!(
                    "{},sup_f_diff,{}\n{},dn_discrepancy,{}\n",
                    fmt_g17(rec.epsilon),
                    fmt_g17(rec.sup_f_diff),
                    fmt_g17(rec.epsilon),
                    fmt_g17(rec.dn_discrepancy),
                ));
            }
            let cpath = ctx.path("stability.csv");
            fs::write(&cpath, csv)?;
            ctx.track(cpath);
            let lpath = ctx.path("stability_long.csv");
            fs::write(&lpath, long)?;
            ctx.track(lpath);
            #[derive(Serialize)]
            struct Summary {
                fitted_exponent: f64,
                spearman_rho: f64,
                s_bound: f64,
            }
            write_json(
                ctx,
                "stability_summary.json",
                &Summary {
                    fitted_exponent: run.fitted_exponent,
                    spearman_rho: run.spearman_rho,
                    s_bound: run.s_bound,
                },
            )?;
            ctx.stage(
                "stability",
                true,
                format!("spearman rho {}", run.spearman_rho),
            );
        }
    }
    Ok(())
}

/// Execute a scenario into `output_root/<scenario name>`, writing a manifest
/// even when a stage fails. Returns the manifest together with the error, if
/// any.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    output_root: &Path,
    seed_override: Option<u64>,
) -> (RunManifest, Result<()>) {
    let mut cfg = cfg.clone();
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let dir = output_root.join(&cfg.name);
    let mut ctx = RunContext {
        dir: dir.clone(),
        stages: Vec::new(),
        files: Vec::new(),
    };
    let config_json = serde_json::to_string_pretty(&cfg).expect("config serializes");
    let config_sha = sha256_hex(config_json.as_bytes());

    let outcome = (|| -> Result<()> {
        fs::create_dir_all(&dir)?;
        let cpath = ctx.path("config.json");
        fs::write(&cpath, format!("{config_json}\n"))?;
        ctx.track(cpath);
        let (grid, term, chi) = cfg.build()?;
        ctx.stage("setup", true, format!("grid {}x{}", grid.n_nodes(), grid.nt));
        run_experiment(&cfg, &chi, &term, grid, &mut ctx)
    })();
    if let Err(e) = &outcome {
        ctx.stage(cfg.experiment.name(), false, e.to_string());
        #[derive(Serialize)]
        struct ErrorReport {
            error: String,
            exit_code: i32,
        }
        let _ = write_json(
            &mut ctx,
            "error.json",
            &ErrorReport {
                error: e.to_string(),
                exit_code: exit_code_for(e),
            },
        );
    }

    let mut files = Vec::new();
    for path in &ctx.files {
        if let Ok(hash) = sha256_file(path) {
            files.push(FileEntry {
                path: path
                    .strip_prefix(&dir)
                    .unwrap_or(path)
                    .to_string_lossy()
                    .into_owned(),
                sha256: hash,
            });
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        scenario: cfg.name.clone(),
        config_sha256: config_sha,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        unix_timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed: cfg.seed,
        stages: ctx.stages,
        files,
    };
    if dir.exists() {
        let _ = fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
        );
    }
    (manifest, outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffStatus {
    Pass,
    Fail,
    MissingOutput,
    ExtraOutput,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDiff {
    pub path: String,
    pub status: DiffStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub entries: Vec<FileDiff>,
}

impl VerifyReport {
    /// Extra files are warnings, not failures.
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(e.status, DiffStatus::Pass | DiffStatus::ExtraOutput))
    }
}

fn compare_csv(golden: &str, got: &str, tol: f64) -> std::result::Result<(), String> {
    let glines: Vec<&str> = golden.lines().collect();
    let olines: Vec<&str> = got.lines().collect();
    if glines.len() != olines.len() {
        return Err(format!(
            "line count {} vs {}",
            glines.len(),
            olines.len()
        ));
    }
    for (ln, (g, o)) in glines.iter().zip(&olines).enumerate() {
        if g == o {
            continue;
        }
        let gf: Vec<&str> = g.split(',').collect();
        let of: Vec<&str> = o.split(',').collect();
        if gf.len() != of.len() {
            return Err(format!("line {}: field count differs", ln + 1));
        }
        for (col, (a, b)) in gf.iter().zip(&of).enumerate() {
            if a == b {
                continue;
            }
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) if (x - y).abs() <= tol * x.abs().max(1.0) => {}
                _ => {
                    return Err(format!(
                        "line {} col {}: '{a}' vs '{b}'",
                        ln + 1,
                        col + 1
                    ))
                }
            }
        }
    }
    Ok(())
}

/// Compare an output directory against a golden directory. CSV files compare
/// numerically within `tol` (relative), binary dumps byte-exactly, manifests
/// are skipped (they carry timestamps).
pub fn verify(golden_dir: &Path, output_dir: &Path, tol: f64) -> Result<VerifyReport> {
    if !golden_dir.is_dir() || !output_dir.is_dir() {
        return Err(Error::Config(format!(
            "both directories must exist: {} / {}",
            golden_dir.display(),
            output_dir.display()
        )));
    }
    let list = |dir: &Path| -> Result<Vec<String>> {
        let mut names = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d)? {
                let p = entry?.path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    names.push(
                        p.strip_prefix(dir)
                            .unwrap()
                            .to_string_lossy()
                            .into_owned(),
                    );
                }
            }
        }
        names.sort();
        Ok(names)
    };
    let golden_files = list(golden_dir)?;
    let output_files = list(output_dir)?;
    let mut entries = Vec::new();
    for name in &golden_files {
        if name.ends_with("manifest.json") {
            continue;
        }
        let gp = golden_dir.join(name);
        let op = output_dir.join(name);
        if !op.exists() {
            entries.push(FileDiff {
                path: name.clone(),
                status: DiffStatus::MissingOutput,
                detail: "missing in output".into(),
            });
            continue;
        }
        let (status, detail) = if name.ends_with(".csv") {
            let g = fs::read_to_string(&gp)?;
            let o = fs::read_to_string(&op)?;
            match compare_csv(&g, &o, tol) {
                Ok(()) => (DiffStatus::Pass, String::new()),
                Err(d) => (DiffStatus::Fail, d),
            }
        } else {
            let g = fs::read(&gp)?;
            let o = fs::read(&op)?;
            if g == o {
                (DiffStatus::Pass, String::new())
            } else if name.ends_with(".json") {
                // numeric-bearing JSON: fall back to text equality only
                (DiffStatus::Fail, "content differs".into())
            } else {
                (DiffStatus::Fail, "binary content differs".into())
            }
        };
        entries.push(FileDiff {
            path: name.clone(),
            status,
            detail,
        });
    }
    for name in &output_files {
        if name.ends_with("manifest.json") {
            continue;
        }
        if !golden_files.contains(name) {
            entries.push(FileDiff {
                path: name.clone(),
                status: DiffStatus::ExtraOutput,
                detail: "not present in golden".into(),
            });
        }
    }
    Ok(VerifyReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{builtin_scenarios, find_builtin};
    use crate::grid::{build_grid, GridConfig};
    use std::sync::Arc;
    use tempfile::TempDir;

    fn small_field() -> Field {
        let grid = build_grid(&GridConfig {
            dim: 1,
            extents: vec![1.0],
            nx: vec![5],
            nt: 4,
            t_final: 1.0,
        })
        .unwrap();
        Field::from_fn(Arc::clone(&grid), |t, x, _| t * x + 0.25)
    }

    #[test]
    fn binary_dump_roundtrips() {
        let f = small_field();
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("f.pinv");
        write_field_binary(&path, &f).unwrap();
        let (nl, nn, vals) = read_field_binary(&path).unwrap();
        assert_eq!(nl, f.grid.n_levels());
        assert_eq!(nn, f.grid.n_nodes());
        assert_eq!(vals, f.values());
    }

    #[test]
    fn binary_dump_rejects_bad_magic() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("bad.pinv");
        fs::write(&path, b"NOPE!aaaaaaaaaaaaaaaaaaaa").unwrap();
        assert!(read_field_binary(&path).is_err());
    }

    #[test]
    fn csv_preserves_full_precision() {
        let f = small_field();
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x,y,value");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[3].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn forward_zero_scenario_runs_and_is_deterministic() {
        let cfg = {
            let mut c = find_builtin("forward_zero").unwrap();
            c.grid = GridConfig {
                dim: 1,
                extents: vec![1.0],
                nx: vec![9],
                nt: 20,
                t_final: 1.0,
            };
            c
        };
        let d1 = TempDir::new().unwrap();
        let d2 = TempDir::new().unwrap();
        let (m1, r1) = run_scenario(&cfg, d1.path(), None);
        let (m2, r2) = run_scenario(&cfg, d2.path(), None);
        r1.unwrap();
        r2.unwrap();
        assert_eq!(m1.config_sha256, m2.config_sha256);
        let h1: Vec<&FileEntry> = m1.files.iter().collect();
        let h2: Vec<&FileEntry> = m2.files.iter().collect();
        assert_eq!(h1.len(), h2.len());
        for (a, b) in h1.iter().zip(h2) {
            assert_eq!(a.path, b.path);
            assert_eq!(a.sha256, b.sha256, "nondeterministic file {}", a.path);
        }
        // verify the two trees against each other
        let rep = verify(
            &d1.path().join(&cfg.name),
            &d2.path().join(&cfg.name),
            1e-12,
        )
        .unwrap();
        assert!(rep.passed(), "{:?}", rep.entries);
    }

    #[test]
    fn verify_flags_perturbed_and_extra_files() {
        let dir_g = TempDir::new().unwrap();
        let dir_o = TempDir::new().unwrap();
        fs::write(dir_g.path().join("a.csv"), "h\n1.0\n").unwrap();
        fs::write(dir_o.path().join("a.csv"), "h\n1.001\n").unwrap();
        fs::write(dir_o.path().join("b.csv"), "h\n1.0\n").unwrap();
        let rep = verify(dir_g.path(), dir_o.path(), 1e-6).unwrap();
        assert!(!rep.passed());
        let a = rep.entries.iter().find(|e| e.path == "a.csv").unwrap();
        assert_eq!(a.status, DiffStatus::Fail);
        assert!(a.detail.contains("line 2"));
        let b = rep.entries.iter().find(|e| e.path == "b.csv").unwrap();
        assert_eq!(b.status, DiffStatus::ExtraOutput);
    }

    #[test]
    fn failed_run_still_writes_manifest() {
        let mut cfg = find_builtin("forward_zero").unwrap();
        // blow-up is impossible for F = 0, so force a config failure instead
        cfg.nonlinearity.name = "nope".into();
        cfg.name = "broken".into();
        let dir = TempDir::new().unwrap();
        let (manifest, result) = run_scenario(&cfg, dir.path(), None);
        assert!(result.is_err());
        assert!(manifest.stages.iter().any(|s| !s.ok));
        assert!(dir.path().join("broken/manifest.json").exists());
        assert!(dir.path().join("broken/error.json").exists());
        assert_eq!(exit_code_for(&result.unwrap_err()), 2);
    }

    #[test]
    fn builtin_scenario_names_are_unique() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(names.len(), dedup.len());
    }
}
