//! Executes scenarios and assembles the report bundle.

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use orv_core::driving::{weyl_integral, weyl_limit_constant, weyl_quadrature, DrivingFunction};
use orv_core::liouville::{
    conditional_h_expectation, conditional_moment_ratio, sample, LiouvilleModel,
};
use orv_core::regvar::{
    conditional_tail_ratio, density_ratio_curve, geometric_grid, rv_index_estimate,
    scale_function_v, scaling_exponent_check, BoxRegion, ConvergenceReport, TailIndexEstimate,
    TailProbExperiment, TailProbOptions,
};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{
    grid_or_default, ConditionalKind, ConditionalParams, DensityParams, EstimateParams,
    IndexTarget, LoadedSuite, Operation, SampleParams, Scenario, TailProbParams, WeylParams,
};
use crate::formats::{sha256_hex, write_curve_csv, write_samples_csv, BatchMetadata};
use crate::report::{CurveSummary, IndexSummary, ReportBundle, ScenarioResult};
use crate::OrvError;

pub const DEFAULT_DENSITY_RATIO_TOL: f64 = 1e-3;
pub const DEFAULT_SCALING_TOL: f64 = 1e-6;
pub const DEFAULT_DENSITY_TOL: f64 = 1e-10;
pub const DEFAULT_WEYL_LIMIT_TOL: f64 = 1e-3;
pub const DEFAULT_INDEX_TOL: f64 = 0.02;
pub const DEFAULT_CONDITIONAL_TOL: f64 = 0.02;

/// Per-scenario seed: the scenario's own, else the first eight bytes of
/// `SHA-256(suite seed ‖ name)`.
pub fn scenario_seed(suite_seed: u64, scenario: &Scenario) -> u64 {
    if let Some(s) = scenario.seed {
        return s;
    }
    let mut h = Sha256::new();
    h.update(suite_seed.to_le_bytes());
    h.update(scenario.name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// A scenario whose model, grid and regions have been built.
struct Prepared<'a> {
    scenario: &'a Scenario,
    model: LiouvilleModel,
    grid: Option<Vec<f64>>,
    seed: u64,
}

struct Outcome {
    verified: bool,
    payload: Value,
    files: Vec<String>,
}

/// Builds every model and grid up front so configuration errors surface
/// before anything runs.
fn prepare<'a>(loaded: &'a LoadedSuite) -> Result<Vec<Prepared<'a>>, OrvError> {
    loaded
        .suite
        .scenarios
        .iter()
        .map(|sc| {
            let ctx = |e: OrvError| OrvError::Config(format!("scenario `{}`: {e}", sc.name));
            let model = sc.model.build(&loaded.base_dir).map_err(ctx)?;
            let grid = sc.operation.grid().map(|g| g.build()).transpose().map_err(ctx)?;
            validate_params(sc, &model, &loaded.base_dir).map_err(ctx)?;
            Ok(Prepared {
                scenario: sc,
                model,
                grid,
                seed: scenario_seed(loaded.suite.seed, sc),
            })
        })
        .collect()
}

fn validate_params(sc: &Scenario, m: &LiouvilleModel, base_dir: &Path) -> Result<(), OrvError> {
    let d = m.dim();
    let check_dim = |what: &str, len: usize, want: usize| {
        if len == want {
            Ok(())
        } else {
            Err(OrvError::Config(format!("{what} has {len} entries, model needs {want}")))
        }
    };
    if let Some(s) = &sc.scaling {
        check_dim("scaling.exponents", s.exponents.len(), d)?;
    }
    match &sc.operation {
        Operation::Sample(p) if p.n == 0 => Err(OrvError::Config("params.n must be positive".into())),
        Operation::Density(p) => {
            for x in &p.points {
                check_dim("params.points[i]", x.len(), d)?;
            }
            if let Some(e) = &p.expected {
                check_dim("params.expected", e.len(), p.points.len())?;
            }
            Ok(())
        }
        Operation::VerifyDensityRatio(p) => check_dim("params.x", p.x.len(), d),
        Operation::VerifyTailProb(p) => {
            check_dim("params.region.lower", p.region.lower.len(), d)?;
            p.region.build().map(|_| ())
        }
        Operation::VerifyScaling(p) => {
            check_dim("params.region.lower", p.region.lower.len(), d)?;
            p.region.build().map(|_| ())
        }
        Operation::VerifyConditional(p) => {
            if p.r == 0 || p.r >= d {
                return Err(OrvError::Config(format!("params.r must be in 1..{d}")));
            }
            match &p.kind {
                ConditionalKind::Moment { j } => check_dim("params.j", j.len(), d - p.r),
                ConditionalKind::HExpectation { h } => h.build(base_dir).map(|_| ()),
                ConditionalKind::Tail { x_fixed, region } => {
                    check_dim("params.x_fixed", x_fixed.len(), p.r)?;
                    check_dim("params.region.lower", region.lower.len(), d - p.r)?;
                    region.build().map(|_| ())
                }
            }
        }
        _ => Ok(()),
    }
}

/// Runs a loaded suite and writes `report.json` plus per-scenario files
/// into `out`.
pub fn run_suite(
    loaded: &LoadedSuite,
    config_text: &str,
    out: &Path,
    parallel: bool,
) -> Result<ReportBundle, OrvError> {
    let prepared = prepare(loaded)?;
    fs::create_dir_all(out)?;
    let run_one = |p: &Prepared| run_scenario(p, &loaded.base_dir, out);
    let results: Vec<ScenarioResult> = if parallel {
        prepared.par_iter().map(run_one).collect()
    } else {
        prepared.iter().map(run_one).collect()
    };
    let bundle = ReportBundle::new(
        loaded.suite.name.clone(),
        results,
        loaded.suite.seed,
        sha256_hex(config_text.as_bytes()),
        loaded.overrides.clone(),
    );
    bundle.write(&out.join("report.json"))?;
    Ok(bundle)
}

fn run_scenario(p: &Prepared, base_dir: &Path, out: &Path) -> ScenarioResult {
    let sc = p.scenario;
    info!("scenario `{}` ({}) seed {}", sc.name, sc.operation.name(), p.seed);
    let outcome = execute(p, base_dir, out);
    let (verified, payload, files, error) = match outcome {
        Ok(o) => (o.verified, o.payload, o.files, None),
        Err(e) => {
            warn!("scenario `{}` failed: {e}", sc.name);
            (false, Value::Null, Vec::new(), Some(e.to_string()))
        }
    };
    let passed = verified != sc.expect_failure;
    info!(
        "scenario `{}`: {}{}",
        sc.name,
        if passed { "pass" } else { "FAIL" },
        if sc.expect_failure { " (negative control)" } else { "" }
    );
    ScenarioResult {
        name: sc.name.clone(),
        operation: sc.operation.name().to_string(),
        seed: p.seed,
        verified,
        expect_failure: sc.expect_failure,
        passed,
        error,
        files,
        payload,
        scenario: sc.clone(),
    }
}

fn execute(p: &Prepared, base_dir: &Path, out: &Path) -> Result<Outcome, OrvError> {
    let sc = p.scenario;
    let m = &p.model;
    let curve_path = || out.join(format!("{}.csv", sc.name));
    match &sc.operation {
        Operation::Sample(params) => run_sample(p, params, out),
        Operation::Density(params) => run_density(m, params, sc.tolerance),
        Operation::VerifyDensityRatio(params) => {
            let s = sc.scaling_spec(m)?;
            let grid = grid_or_default(params.grid.as_ref())?;
            let tol = sc.tolerance.unwrap_or(DEFAULT_DENSITY_RATIO_TOL);
            let r = density_ratio_curve(m, &s, &params.x, &grid, tol)?;
            curve_outcome(&r, json!({ "rho": s.rho(), "argmax_set": s.argmax_set() }), curve_path())
        }
        Operation::VerifyTailProb(params) => run_tail_prob(p, params, curve_path()),
        Operation::VerifyScaling(params) => {
            let s = sc.scaling_spec(m)?;
            let b = params.region.build()?;
            let grid = p.grid.clone().expect("grid built");
            let tol = sc.tolerance.unwrap_or(DEFAULT_SCALING_TOL);
            let r = scaling_exponent_check(m, &s, &b, &grid, tol)?;
            curve_outcome(&r, json!({ "rho": s.rho() }), curve_path())
        }
        Operation::VerifyWeyl(params) => run_weyl(m, params, sc.tolerance, curve_path()),
        Operation::VerifyConditional(params) => {
            run_conditional(m, params, sc.tolerance, base_dir, curve_path())
        }
        Operation::EstimateIndex(params) => run_estimate(sc, m, params),
    }
}

fn curve_outcome(r: &ConvergenceReport, extra: Value, path: PathBuf) -> Result<Outcome, OrvError> {
    write_curve_csv(&path, r)?;
    let mut payload = json!({ "curve": CurveSummary::from(r) });
    merge(&mut payload, extra);
    Ok(Outcome {
        verified: r.passed,
        payload,
        files: vec![file_name(&path)],
    })
}

fn merge(into: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, extra) {
        a.extend(b);
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_sample(p: &Prepared, params: &SampleParams, out: &Path) -> Result<Outcome, OrvError> {
    let sc = p.scenario;
    let batch = sample(&p.model, params.n, p.seed)?;
    let meta = BatchMetadata::new(&batch, &sc.model);
    let bytes: Vec<u8> = batch.points.iter().flat_map(|v| v.to_le_bytes()).collect();
    let d = batch.dim;
    let mut means = vec![0.0; d];
    for row in batch.rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= batch.len() as f64);
    let mut files = Vec::new();
    if params.write_samples {
        let samples = out.join(format!("{}.samples.csv", sc.name));
        write_samples_csv(&samples, &batch)?;
        files.push(file_name(&samples));
    }
    let meta_path = out.join(format!("{}.batch.json", sc.name));
    meta.write(&meta_path)?;
    files.push(file_name(&meta_path));
    Ok(Outcome {
        verified: true,
        payload: json!({
            "batch": meta,
            "points_sha256": sha256_hex(&bytes),
            "coordinate_means": means,
        }),
        files,
    })
}

fn run_density(m: &LiouvilleModel, params: &DensityParams, tol: Option<f64>) -> Result<Outcome, OrvError> {
    let values = params
        .points
        .iter()
        .map(|x| m.density(x))
        .collect::<Result<Vec<f64>, _>>()?;
    let tol = tol.unwrap_or(DEFAULT_DENSITY_TOL);
    let (verified, rel_errors) = match &params.expected {
        None => (true, Vec::new()),
        Some(exp) => {
            let errs: Vec<f64> = values
                .iter()
                .zip(exp)
                .map(|(v, e)| if *e == 0.0 { v.abs() } else { ((v - e) / e).abs() })
                .collect();
            (errs.iter().all(|e| *e <= tol), errs)
        }
    };
    Ok(Outcome {
        verified,
        payload: json!({
            "kappa": m.kappa(),
            "values": values,
            "expected": params.expected,
            "rel_errors": rel_errors,
            "tolerance": tol,
        }),
        files: Vec::new(),
    })
}

fn run_tail_prob(p: &Prepared, params: &TailProbParams, path: PathBuf) -> Result<Outcome, OrvError> {
    let m = &p.model;
    let s = p.scenario.scaling_spec(m)?;
    let b = params.region.build()?;
    let grid = p.grid.clone().expect("grid built");
    let opts = TailProbOptions {
        samples: params.samples,
        seed: p.seed,
        sigmas: params.sigmas,
    };
    let exp = TailProbExperiment::new(m, &s, &b, &grid, opts)?;
    debug!("`{}`: {} blocks, μ(B) = {}", p.scenario.name, exp.blocks(), exp.measure());
    // integer sums, so the reduction order cannot change the result
    let counts = (0..exp.blocks())
        .into_par_iter()
        .map(|blk| exp.count_block(blk))
        .reduce(
            || vec![0u64; grid.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let r = match params.target {
        Some(t) => exp.finish_against(&counts, t)?,
        None => exp.finish(&counts)?,
    };
    curve_outcome(
        &r,
        json!({
            "measure": exp.measure(),
            "target": params.target.unwrap_or(exp.measure()),
            "samples": params.samples,
            "hits": counts,
        }),
        path,
    )
}

fn run_weyl(
    m: &LiouvilleModel,
    params: &WeylParams,
    tol: Option<f64>,
    path: PathBuf,
) -> Result<Outcome, OrvError> {
    let g = m.driving();
    let alpha = params.order;
    let beta = g.tail_index()?;
    let points = if params.points.is_empty() {
        vec![0.0, 1.0, 37.0, 1e4]
    } else {
        params.points.clone()
    };
    let mut closed_errors = Vec::with_capacity(points.len());
    for &t in &points {
        let c = weyl_integral(g, alpha, t)?.value;
        let q = weyl_quadrature(g, alpha, t)?.value;
        closed_errors.push(((c - q) / c).abs());
    }
    let closed_ok = closed_errors.iter().all(|e| *e <= params.closed_form_tol);

    let grid = match &params.grid {
        Some(gc) => gc.build()?,
        None => geometric_grid(1e2, 1e6, 12)?,
    };
    let est = rv_index_estimate(|t| weyl_quadrature(g, alpha, t).map(|w| w.value).unwrap_or(f64::NAN), &grid)?;
    let expected_slope = alpha - beta;
    let slope_ok = (est.index - expected_slope).abs() <= params.slope_tol;

    let constant = weyl_limit_constant(alpha, beta)?;
    let karamata = |t: f64| -> Result<f64, OrvError> {
        Ok(weyl_quadrature(g, alpha, t)?.value / (t.powf(alpha) * g.value(t)))
    };
    let ratios = grid.iter().map(|&t| karamata(t)).collect::<Result<Vec<f64>, _>>()?;
    let limit_tol = tol.unwrap_or(DEFAULT_WEYL_LIMIT_TOL);
    let at_limit = karamata(params.t_limit)?;
    let limit_error = ((at_limit - constant) / constant).abs();
    let limit_ok = limit_error <= limit_tol;

    let mut curve = ConvergenceReport::from_curve(
        grid.clone(),
        ratios,
        vec![constant; grid.len()],
        limit_tol,
        Vec::new(),
    )?;
    curve.slope = Some(est.clone());
    write_curve_csv(&path, &curve)?;
    Ok(Outcome {
        verified: closed_ok && slope_ok && limit_ok,
        payload: json!({
            "order": alpha,
            "beta": beta,
            "closed_form": { "points": points, "rel_errors": closed_errors, "tolerance": params.closed_form_tol, "passed": closed_ok },
            "slope": { "estimate": IndexSummary::from(&est), "expected": expected_slope, "tolerance": params.slope_tol, "passed": slope_ok },
            "karamata": { "t": params.t_limit, "ratio": at_limit, "constant": constant, "rel_error": limit_error, "tolerance": limit_tol, "passed": limit_ok },
            "curve": CurveSummary::from(&curve),
        }),
        files: vec![file_name(&path)],
    })
}

fn slope_outcome(est: &TailIndexEstimate, expected: f64, tol: f64, extra: Value) -> Outcome {
    let error = (est.index - expected).abs();
    let mut payload = json!({
        "estimate": IndexSummary::from(est),
        "expected": expected,
        "error": error,
        "tolerance": tol,
        "within_stderr": error <= 2.0 * est.stderr,
    });
    merge(&mut payload, extra);
    Outcome {
        verified: error <= tol,
        payload,
        files: Vec::new(),
    }
}

fn run_conditional(
    m: &LiouvilleModel,
    params: &ConditionalParams,
    tol: Option<f64>,
    base_dir: &Path,
    path: PathBuf,
) -> Result<Outcome, OrvError> {
    let r = params.r;
    let slope_grid = || match &params.grid {
        Some(gc) => gc.build(),
        None => Ok(geometric_grid(1e2, 1e6, 12)?),
    };
    match &params.kind {
        ConditionalKind::Moment { j } => {
            let grid = slope_grid()?;
            let est = rv_index_estimate(
                |t| conditional_moment_ratio(m, r, j, t).unwrap_or(f64::NAN),
                &grid,
            )?;
            let expected: f64 = j.iter().map(|&k| k as f64).sum();
            Ok(slope_outcome(&est, expected, params.slope_tol, json!({ "kind": "moment" })))
        }
        ConditionalKind::HExpectation { h } => {
            let h: DrivingFunction = h.build(base_dir)?;
            let gamma = h.tail_index()?;
            let grid = slope_grid()?;
            let est = rv_index_estimate(
                |t| conditional_h_expectation(m, r, &h, t).unwrap_or(f64::NAN),
                &grid,
            )?;
            let a: f64 = m.shapes()[r..].iter().sum();
            let mut diag = Vec::new();
            if (a - gamma).abs() < 1e-12 {
                diag.push(format!(
                    "free shape sum a = {a} equals the index of h; E(h | ·) carries a logarithmic factor"
                ));
            }
            Ok(slope_outcome(
                &est,
                -gamma,
                params.slope_tol,
                json!({ "kind": "h-expectation", "diagnostics": diag }),
            ))
        }
        ConditionalKind::Tail { x_fixed, region } => {
            let b: BoxRegion = region.build()?;
            let grid = grid_or_default(params.grid.as_ref())?;
            let tol = tol.unwrap_or(DEFAULT_CONDITIONAL_TOL);
            let rep = conditional_tail_ratio(m, r, x_fixed, &b, &grid, tol)?;
            write_curve_csv(&path, &rep.curve)?;
            let slope_error = (rep.probability_slope.index - rep.expected_slope).abs();
            let slope_ok = slope_error <= params.slope_tol;
            Ok(Outcome {
                verified: rep.curve.passed && slope_ok,
                payload: json!({
                    "kind": "tail",
                    "curve": CurveSummary::from(&rep.curve),
                    "kappa": rep.kappa,
                    "fitted_kappa": rep.fitted_kappa,
                    "flatness": rep.flatness,
                    "probability_slope": IndexSummary::from(&rep.probability_slope),
                    "joint_mass_slope": IndexSummary::from(&rep.joint_mass_slope),
                    "expected_slope": rep.expected_slope,
                    "slope_error": slope_error,
                    "slope_tolerance": params.slope_tol,
                    "slope_passed": slope_ok,
                }),
                files: vec![file_name(&path)],
            })
        }
    }
}

fn run_estimate(sc: &Scenario, m: &LiouvilleModel, params: &EstimateParams) -> Result<Outcome, OrvError> {
    let grid = match &params.grid {
        Some(gc) => gc.build()?,
        None => geometric_grid(1e2, 1e6, 12)?,
    };
    let tol = sc.tolerance.unwrap_or(DEFAULT_INDEX_TOL);
    let g = m.driving();
    let (est, derived) = match &params.target {
        IndexTarget::ScaleFunction => {
            let s = sc.scaling_spec(m)?;
            let est = rv_index_estimate(|t| scale_function_v(m, &s, t).unwrap_or(f64::NAN), &grid)?;
            (est, -s.rho())
        }
        IndexTarget::Driving => {
            let est = rv_index_estimate(|t| g.value(t), &grid)?;
            (est, -g.tail_index()?)
        }
        IndexTarget::Weyl { order } => {
            let est = rv_index_estimate(
                |t| weyl_quadrature(g, *order, t).map(|w| w.value).unwrap_or(f64::NAN),
                &grid,
            )?;
            (est, order - g.tail_index()?)
        }
    };
    let expected = params.expected.unwrap_or(derived);
    Ok(slope_outcome(&est, expected, tol, json!({ "derived": derived })))
}
