//! Acceptance suite: one PASS/FAIL line per criterion, each timed against
//! its runtime bound. Criteria listed in `KNOWN_RED` are implemented as
//! stated and are expected to fail; the process exits nonzero only when some
//! other criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use orv::strip_timestamp;
use orv_core::driving::{weyl_integral, weyl_quadrature, DrivingFunction};
use orv_core::liouville::{
    conditional_h_expectation, conditional_moment_ratio, sample, LiouvilleModel,
};
use orv_core::operator_scaling::{power_matrix, OperatorIndex, SquareMatrix};
use orv_core::regvar::{
    conditional_tail_ratio, density_ratio, density_ratio_curve, geometric_grid,
    isotropic_density_ratio, isotropic_limit_function, isotropic_scale_function_v,
    limit_function, limiting_measure, rv_index_estimate, scale_function_v, scaling_exponent_check,
    BoxRegion, ScalingSpec, TailProbExperiment, TailProbOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Criterion = (&'static str, &'static str, f64, fn() -> Outcome);

const KNOWN_RED: [&str; 3] = ["5", "9b", "9c"];

struct Outcome {
    passed: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            notes: Vec::new(),
        }
    }

    /// Records a sub-check and its measured value.
    fn check(&mut self, ok: bool, note: String) {
        self.passed &= ok;
        self.notes.push(format!("{} {note}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, note: String) {
        self.notes.push(format!("     {note}"));
    }
}

fn reference() -> LiouvilleModel {
    model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap())
}

fn model(shapes: Vec<f64>, g: DrivingFunction) -> LiouvilleModel {
    LiouvilleModel::normalize(shapes, g).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn spd(rng: &mut ChaCha8Rng, d: usize) -> SquareMatrix {
    let a: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = SquareMatrix::from_row_major(d, a).unwrap();
    let aat = &a * &a.transpose();
    aat.add(&aat.transpose())
        .scaled(0.5)
        .add(&SquareMatrix::identity(d).scaled(0.5))
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ts = [0.5, 2.0, 10.0];
    let (mut group, mut inverse, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for d in [2, 3] {
        for _ in 0..20 {
            let e = OperatorIndex::new(spd(&mut rng, d)).unwrap();
            for &t in &ts {
                let pt = power_matrix(&e, t).unwrap();
                for &s in &ts {
                    let lhs = &pt * &power_matrix(&e, s).unwrap();
                    let rhs = power_matrix(&e, t * s).unwrap();
                    group = group.max(lhs.max_abs_diff(&rhs) / rhs.max_abs().max(1.0));
                }
                let inv = power_matrix(&e, 1.0 / t).unwrap();
                let direct = pt.inverse().unwrap();
                inverse = inverse.max(inv.max_abs_diff(&direct) / direct.max_abs().max(1.0));
                det = det.max(rel(pt.determinant(), t.powf(e.trace())));
            }
        }
    }
    o.check(group <= 1e-9, format!("t^E s^E = (ts)^E, max rel deviation {group:.2e} (tol 1e-9)"));
    o.check(inverse <= 1e-9, format!("t^-E = (t^E)^-1, max rel deviation {inverse:.2e} (tol 1e-9)"));
    o.check(det <= 1e-9, format!("det t^E = t^tr E, max rel deviation {det:.2e} (tol 1e-9)"));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    // Γ(A) / (Γ(1)Γ(1) B(A, β−A)) with A = 2, β = 3 and B(2, 1) = 1!0!/2!
    let oracle = factorial(1) / (factorial(1) * factorial(0) / factorial(2));
    let kappa = reference().kappa();
    let err = rel(kappa, oracle);
    o.check(err <= 1e-8, format!("κ = {kappa:.12}, oracle {oracle}, rel error {err:.2e} (tol 1e-8)"));
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let m = reference();
    let s = ScalingSpec::isotropic(&m).unwrap();
    let grid = geometric_grid(10.0, 1e4, 12).unwrap();
    let r = density_ratio_curve(&m, &s, &[1.0, 1.0], &grid, 1e-3).unwrap();
    // direct: f(t,t) t² / V(t) = 2 (1+2t)^-3 (1+t)^3
    let t = 1e4f64;
    let direct = 2.0 * (1.0 + t).powi(3) / (1.0 + 2.0 * t).powi(3);
    let last = *r.ratios.last().unwrap();
    o.check(
        rel(last, direct) < 1e-12,
        format!("ratio at t=1e4 {last:.10} equals direct evaluation {direct:.10}"),
    );
    o.check(
        r.final_rel_error < 1e-3,
        format!("within 0.1% of λ(1,1)=0.25: rel error {:.3e}", r.final_rel_error),
    );
    o.check(r.monotone_tail, "errors monotone over the last decade".into());
    let e = model(vec![1.0, 1.0], DrivingFunction::exponential(1.0).unwrap());
    let hyp = ScalingSpec::with_beta(&e, vec![1.0, 1.0], 3.0).unwrap();
    let neg = density_ratio_curve(&e, &hyp, &[1.0, 1.0], &grid, 1e-3).unwrap();
    o.check(
        !neg.passed,
        format!("exponential driving fails (final rel error {:.3e})", neg.final_rel_error),
    );
    o.check(
        ScalingSpec::isotropic(&e).is_err(),
        "exponential driving rejected without a hypothesized index".into(),
    );
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let m = reference();
    let s = ScalingSpec::new(&m, vec![1.0, 2.0]).unwrap();
    let grid = geometric_grid(10.0, 1e4, 12).unwrap();
    let r = density_ratio_curve(&m, &s, &[1.0, 1.0], &grid, 5e-3).unwrap();
    let last = *r.ratios.last().unwrap();
    o.check(
        rel(last, 2.0) < 5e-3 && r.limit == 2.0,
        format!("ratio at t=1e4 {last:.6}, limit {} (tol 0.5%)", r.limit),
    );
    let slope_grid = geometric_grid(1e2, 1e6, 12).unwrap();
    let est = rv_index_estimate(|t| scale_function_v(&m, &s, t).unwrap(), &slope_grid).unwrap();
    o.check(
        (est.index + 3.0).abs() <= 0.02,
        format!("log-log slope of V on [1e2,1e6] {:.5} (−3 ± 0.02)", est.index),
    );
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let m = reference();
    let s = ScalingSpec::isotropic(&m).unwrap();
    let b = BoxRegion::orthant_corner(vec![1.0, 1.0]).unwrap();
    let t = 50.0f64;
    let opts = TailProbOptions {
        samples: 10_000_000,
        seed: 5,
        sigmas: 3.0,
    };
    let exp = TailProbExperiment::new(&m, &s, &b, &[t], opts).unwrap();
    let hits: u64 = (0..exp.blocks())
        .into_par_iter()
        .map(|blk| exp.count_block(blk)[0])
        .sum();
    let stated = 0.25;
    let r = exp.finish_against(&[hits], stated).unwrap();
    let ratio = r.ratios[0];
    let se = r.std_errors[0];
    o.check(
        (ratio - stated).abs() <= 3.0 * se,
        format!(
            "MC ratio {ratio:.5} ± {se:.5} vs stated μ(B)=0.25: {:.1} SE",
            (ratio - stated).abs() / se
        ),
    );
    let computed = exp.measure();
    o.check(
        (ratio - computed).abs() <= 3.0 * se,
        format!(
            "vs quadrature μ(B)={computed:.8}: {:.1} SE",
            (ratio - computed).abs() / se
        ),
    );
    // exact ratio at t: P(X1>t, X2>t) = 1/(1+2t), V(t) = t² (1+t)^-3
    let exact = (1.0 + t).powi(3) / (t * t * (1.0 + 2.0 * t));
    o.note(format!(
        "exact finite-t ratio {exact:.5} ({:.1} SE from MC); ∫∫_[1,∞)² (x+y)^-3 = 1/4, so κ·1/4 = 0.5",
        (ratio - exact).abs() / se
    ));
    o.note(
        "blocked: stated μ(B) misses a factor 2, and the O(1/t) bias at t=50 (5%) exceeds 3 SE (0.3%) at n=1e7"
            .into(),
    );
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let m = reference();
    let iso = ScalingSpec::isotropic(&m).unwrap();
    let corner = BoxRegion::orthant_corner(vec![1.0, 1.0]).unwrap();
    let grid = [2.0, 4.0, 8.0];
    let r = scaling_exponent_check(&m, &iso, &corner, &grid, 1e-6).unwrap();
    o.check(
        r.passed,
        format!("μ(tB)·t = μ(B), t ∈ {{2,4,8}}: max rel error {:.2e} (tol 1e-6)", r.max_rel_error),
    );
    let mu = limiting_measure(&m, &iso, &corner).unwrap();
    o.check(rel(mu, 0.5) < 1e-6, format!("μ([1,∞)²) = {mu:.10} (oracle κ·1/4 = 0.5)"));
    let op = ScalingSpec::new(&m, vec![1.0, 2.0]).unwrap();
    let strip = BoxRegion::new(vec![1.0, 1.0], vec![2.0, f64::INFINITY]).unwrap();
    let r = scaling_exponent_check(&m, &op, &strip, &grid, 1e-6).unwrap();
    o.check(
        r.passed && (op.rho() - 3.0).abs() < 1e-15,
        format!("α=(1,2), B=[1,2]×[1,∞): exponent −{}, max rel error {:.2e}", op.rho(), r.max_rel_error),
    );
    let mu = limiting_measure(&m, &op, &strip).unwrap();
    o.check(rel(mu, 1.0) < 1e-6, format!("μ([1,2]×[1,∞)) = {mu:.10} (oracle 2·1·1/2 = 1)"));
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let grid = geometric_grid(1e2, 1e6, 12).unwrap();
    for beta in [3u32, 4] {
        for alpha in [1u32, 2] {
            let (a, b) = (f64::from(alpha), f64::from(beta));
            let g = DrivingFunction::inverted_dirichlet(b).unwrap();
            let worst = [0.0, 1.0, 37.0, 1e4]
                .iter()
                .map(|&t| {
                    let c = weyl_integral(&g, a, t).unwrap().value;
                    rel(weyl_quadrature(&g, a, t).unwrap().value, c)
                })
                .fold(0.0, f64::max);
            let est = rv_index_estimate(|t| weyl_quadrature(&g, a, t).unwrap().value, &grid).unwrap();
            let t = 1e5f64;
            let ratio = weyl_quadrature(&g, a, t).unwrap().value / (t.powf(a) * g.value(t));
            let constant = factorial(beta - alpha - 1) / factorial(beta - 1);
            let tag = format!("β={beta} α={alpha}:");
            o.check(worst <= 1e-6, format!("{tag} closed form vs quadrature {worst:.2e} (tol 1e-6)"));
            o.check(
                (est.index - (a - b)).abs() <= 0.02,
                format!("{tag} slope {:.5} ({} ± 0.02)", est.index, a - b),
            );
            o.check(
                rel(ratio, constant) <= 1e-3,
                format!("{tag} W^αg/(t^α g) at 1e5 {ratio:.6} vs Γ(β−α)/Γ(β) = {constant:.6}"),
            );
        }
    }
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let m = reference();
    let n = 100_000;
    let batch = sample(&m, n, 8).unwrap();
    let mut radii: Vec<f64> = batch.rows().map(|x| x[0] + x[1]).collect();
    radii.sort_by(f64::total_cmp);
    let nf = n as f64;
    let ks = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = (r / (1.0 + r)).powi(2);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let ks_crit = 1.6276 / nf.sqrt();
    o.check(ks < ks_crit, format!("radial KS D = {ks:.5} < {ks_crit:.5} (1%)"));

    // 6×6 cells from the joint survival 1/(1+a+b); χ²_{35} 99% quantile
    let edges = [0.0, 0.3, 0.8, 1.5, 3.0, 8.0, f64::INFINITY];
    let surv = |a: f64, b: f64| if a.is_finite() && b.is_finite() { 1.0 / (1.0 + a + b) } else { 0.0 };
    let k = edges.len() - 1;
    let bin = |v: f64| edges.windows(2).position(|w| v >= w[0] && v < w[1]).unwrap();
    let mut counts = vec![0u64; k * k];
    for x in batch.rows() {
        counts[bin(x[0]) * k + bin(x[1])] += 1;
    }
    let mut stat = 0.0;
    for i in 0..k {
        for j in 0..k {
            let p = surv(edges[i], edges[j]) - surv(edges[i + 1], edges[j]) - surv(edges[i], edges[j + 1])
                + surv(edges[i + 1], edges[j + 1]);
            let e = p * nf;
            stat += (counts[i * k + j] as f64 - e).powi(2) / e;
        }
    }
    let chi_crit = 57.342;
    o.check(stat < chi_crit, format!("2D χ² = {stat:.2} < {chi_crit} (35 df, 1%)"));
    let again = sample(&m, n, 8).unwrap();
    let bytes = |p: &[f64]| p.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>();
    o.check(
        bytes(&batch.points) == bytes(&again.points),
        "fixed seed reproduces byte-identical samples".into(),
    );
    o
}

fn criterion_9a() -> Outcome {
    let mut o = Outcome::new();
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(5.0).unwrap());
    let grid = geometric_grid(1e2, 1e6, 12).unwrap();
    let est = rv_index_estimate(|t| conditional_moment_ratio(&m, 1, &[1], t).unwrap(), &grid).unwrap();
    o.check(
        (est.index - 1.0).abs() <= 0.02,
        format!("conditional moment slope {:.5} (+1 ± 0.02)", est.index),
    );
    o
}

fn criterion_9b() -> Outcome {
    let mut o = Outcome::new();
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(5.0).unwrap());
    let h = DrivingFunction::inverted_dirichlet(1.0).unwrap();
    let grid = geometric_grid(1e2, 1e6, 12).unwrap();
    let est = rv_index_estimate(|t| conditional_h_expectation(&m, 1, &h, t).unwrap(), &grid).unwrap();
    o.check(
        (est.index + 1.0).abs() <= 0.02,
        format!("h-expectation slope {:.5} ± {:.5} (−1 ± 0.02)", est.index, est.stderr),
    );
    // E((1+Y)^-1 | X1 = t) ~ (β−1) ln t / t when the free shape equals the index of h
    let t = 1e6f64;
    let v = conditional_h_expectation(&m, 1, &h, t).unwrap();
    o.note(format!("t·E/ln t at t=1e6: {:.4} (→ β−1 = 4 slowly)", v * t / t.ln()));
    o.note("blocked: a = γ = 1 gives a ln t factor; the fitted slope over [1e2,1e6] is about −1 + 1/ln t̄".into());
    o
}

fn criterion_9c() -> Outcome {
    let mut o = Outcome::new();
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(5.0).unwrap());
    let b = BoxRegion::orthant_corner(vec![1.0]).unwrap();
    let grid = geometric_grid(10.0, 1e6, 12).unwrap();
    let r = conditional_tail_ratio(&m, 1, &[1.0], &b, &grid, 0.02).unwrap();
    o.check(
        (r.probability_slope.index - r.expected_slope).abs() <= 0.05,
        format!(
            "conditional tail slope {:.5} (−β+a = {} ± 0.05)",
            r.probability_slope.index, r.expected_slope
        ),
    );
    o.note(format!(
        "limit curve: final rel error {:.2e}, flatness {:.2e}, fitted κ' {:.6}",
        r.curve.final_rel_error, r.flatness, r.fitted_kappa
    ));
    o.note(format!(
        "joint mass P(·|X1=t)·W^a g(t) slope {:.5}; P(X2>t | X1=t) = (1+t)^4/(1+2t)^4 is slowly varying",
        r.joint_mass_slope.index
    ));
    o.note("blocked: the stated slope belongs to the joint mass, not to the conditional probability".into());
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let mut mismatches = 0;
    let mut checked = 0;
    for (shapes, beta) in [(vec![1.0, 1.0], 3.0), (vec![0.5, 2.0, 1.0], 6.0)] {
        let m = model(shapes, DrivingFunction::inverted_dirichlet(beta).unwrap());
        let d = m.dim();
        let s = ScalingSpec::new(&m, vec![1.0; d]).unwrap();
        for x in [vec![1.0; d], (1..=d).map(|i| i as f64 * 0.7).collect()] {
            let same = limit_function(&m, &s, &x).unwrap().to_bits()
                == isotropic_limit_function(&m, &x).unwrap().to_bits();
            mismatches += usize::from(!same);
            checked += 1;
            for t in [10.0, 1e3, 1e6] {
                let a = density_ratio(&m, &s, &x, t).unwrap();
                let b = isotropic_density_ratio(&m, &x, t).unwrap();
                let va = scale_function_v(&m, &s, t).unwrap();
                let vb = isotropic_scale_function_v(&m, t).unwrap();
                mismatches += usize::from(a.to_bits() != b.to_bits());
                mismatches += usize::from(va.to_bits() != vb.to_bits());
                checked += 2;
            }
        }
    }
    o.check(mismatches == 0, format!("{checked} outputs bitwise equal, {mismatches} differ"));
    o
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_suite(out: &Path, parallel: bool) -> (Option<i32>, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_orv"));
    cmd.arg("--config")
        .arg(workspace_root().join("configs/paper-suite.json"))
        .arg("--out")
        .arg(out)
        .args(["--seed", "11"]);
    if parallel {
        cmd.arg("--parallel");
    }
    let status = cmd.output().expect("orv binary runs");
    let report = std::fs::read_to_string(out.join("report.json")).unwrap_or_default();
    (status.status.code(), report)
}

fn criterion_11() -> Outcome {
    let mut o = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (code_a, a) = run_suite(&dir.path().join("a"), false);
    let first = start.elapsed();
    let (code_b, b) = run_suite(&dir.path().join("b"), true);
    o.check(
        code_a.is_some_and(|c| c != 2) && code_a == code_b,
        format!("both runs completed, exit codes {code_a:?} / {code_b:?}"),
    );
    let same = !a.is_empty() && strip_timestamp(&a).unwrap() == strip_timestamp(&b).unwrap();
    o.check(same, "sequential and --parallel report.json identical apart from the timestamp".into());
    o.check(
        first < Duration::from_secs(180),
        format!("single suite run {:.1}s (< 180s)", first.as_secs_f64()),
    );
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&a) {
        let failing: Vec<&str> = v["scenarios"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|s| s["passed"] == false)
            .filter_map(|s| s["name"].as_str())
            .collect();
        o.note(format!("suite passed = {}; failing scenarios: {failing:?}", v["passed"]));
    }
    o
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("1", "operator algebra", 1.0, criterion_1),
        ("2", "Liouville normalization", 1.0, criterion_2),
        ("3", "density-ratio convergence", 1.0, criterion_3),
        ("4", "operator-scaled density ratio", 1.0, criterion_4),
        ("5", "tail-probability limit", 60.0, criterion_5),
        ("6", "intensity-measure scaling", 5.0, criterion_6),
        ("7", "Weyl integral and Karamata", 5.0, criterion_7),
        ("8", "sampler correctness", 30.0, criterion_8),
        ("9a", "conditional moment slope", 10.0, criterion_9a),
        ("9b", "conditional h-expectation slope", 10.0, criterion_9b),
        ("9c", "conditional tail slope", 10.0, criterion_9c),
        ("10", "reduction to the isotropic path", 1.0, criterion_10),
        ("11", "CLI determinism and suite runtime", 180.0, criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    for (id, title, bound, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = run();
        let secs = start.elapsed().as_secs_f64();
        outcome.check(secs < bound, format!("runtime {secs:.2}s (bound {bound}s)"));
        let known = KNOWN_RED.contains(&id);
        let verdict = match (outcome.passed, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, see analysis)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>3}  {title:<36} {verdict}");
        for n in &outcome.notes {
            println!("               {n}");
        }
        if !outcome.passed && !known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
