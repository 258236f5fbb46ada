use orv_core::driving::{weyl_integral, weyl_limit_constant, weyl_quadrature, DrivingFunction};
use orv_core::liouville::{condition, conditional_moment_ratio, marginal, LiouvilleModel};
use orv_core::quadrature::{integrate_box, integrate_interval, QuadOptions};
use orv_core::regvar::{
    density_ratio_curve, geometric_grid, limit_function, limiting_measure, rv_index_estimate,
    scale_function_v, BoxRegion, ScalingSpec,
};
use orv_core::special::gamma;

fn model(shapes: Vec<f64>, g: DrivingFunction) -> LiouvilleModel {
    LiouvilleModel::normalize(shapes, g).unwrap()
}

#[test]
fn weyl_closed_form_matches_quadrature() {
    for beta in [3.0, 4.0] {
        for alpha in [1.0, 2.0] {
            let g = DrivingFunction::inverted_dirichlet(beta).unwrap();
            for t in [0.0, 1.0, 37.0, 1e4] {
                let c = weyl_integral(&g, alpha, t).unwrap().value;
                let q = weyl_quadrature(&g, alpha, t).unwrap().value;
                assert!((c - q).abs() < 1e-6 * c, "β={beta} α={alpha} t={t}: {c} vs {q}");
            }
        }
    }
}

#[test]
fn weyl_karamata_slope_and_constant() {
    let grid = geometric_grid(1e2, 1e6, 12).unwrap();
    for beta in [3.0, 4.0] {
        for alpha in [1.0, 2.0] {
            let g = DrivingFunction::inverted_dirichlet(beta).unwrap();
            let e = rv_index_estimate(|t| weyl_quadrature(&g, alpha, t).unwrap().value, &grid).unwrap();
            assert!((e.index - (alpha - beta)).abs() < 0.02, "slope {}", e.index);
            let t = 1e5;
            let ratio = weyl_quadrature(&g, alpha, t).unwrap().value / (t.powf(alpha) * g.value(t));
            let c = weyl_limit_constant(alpha, beta).unwrap();
            assert!((ratio - c).abs() < 1e-3 * c);
        }
    }
}

#[test]
fn weyl_semigroup_on_pareto_log() {
    // W^a W^b g = W^{a+b} g, checked with quadrature on a family with no closed form
    let g = DrivingFunction::pareto_log(4.5, 0.7).unwrap();
    let inner = g.weyl_transform(0.8).unwrap();
    assert!(matches!(inner, DrivingFunction::Weyl { .. }));
    for t in [0.5, 3.0] {
        let nested = weyl_quadrature(&inner, 1.2, t).unwrap().value;
        let direct = weyl_quadrature(&g, 2.0, t).unwrap().value;
        assert!((nested - direct).abs() < 1e-6 * direct, "t={t}: {nested} vs {direct}");
    }
}

#[test]
fn marginal_density_integrates_joint() {
    let m = model(vec![0.7, 1.4, 1.0], DrivingFunction::pareto_log(5.0, 0.5).unwrap());
    let marg = marginal(&m, 1).unwrap();
    let opts = QuadOptions::default().with_rel_tol(1e-9).with_abs_tol(0.0);
    for x1 in [0.3, 2.0, 9.0] {
        let joint = integrate_box(
            |y: &[f64]| m.density(&[x1, y[0], y[1]]).unwrap(),
            &[0.0, 0.0],
            &[f64::INFINITY, f64::INFINITY],
            opts,
        );
        let md = marg.density(&[x1]).unwrap();
        assert!((joint.value - md).abs() < 1e-6 * md, "x1={x1}: {} vs {md}", joint.value);
    }
}

#[test]
fn marginal_regular_variation() {
    // W^a g ∈ RV_{a−β}
    let g = DrivingFunction::pareto_log(5.0, 0.0).unwrap();
    let grid = geometric_grid(1e2, 1e5, 12).unwrap();
    for a in [0.5, 1.5] {
        let e = rv_index_estimate(|t| weyl_quadrature(&g, a, t).unwrap().value, &grid).unwrap();
        assert!((e.index - (a - 5.0)).abs() < 0.02, "a={a}: {}", e.index);
    }
}

#[test]
fn conditional_density_is_normalized() {
    let m = model(vec![1.0, 0.5, 2.0], DrivingFunction::inverted_dirichlet(6.0).unwrap());
    let c = condition(&m, 1, &[1.7]).unwrap();
    let opts = QuadOptions::default().with_rel_tol(1e-9).with_abs_tol(0.0);
    let total = integrate_box(
        |y: &[f64]| c.density(y).unwrap_or(0.0),
        &[0.0, 0.0],
        &[f64::INFINITY, f64::INFINITY],
        opts,
    );
    assert!((total.value - 1.0).abs() < 1e-6, "{}", total.value);
    let expect_kappa = 1.0 / (gamma(0.5) * gamma(2.0));
    assert!((c.model.kappa() - expect_kappa).abs() < 1e-8 * expect_kappa);
}

#[test]
fn conditional_first_moment_matches_quadrature() {
    // E(X_2 | X_1 = x) = ∫ y f(x, y) dy / ∫ f(x, y) dy equals W^{a+1}g/W^a g · Γ(a+1)/Γ(a)
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(5.0).unwrap());
    let opts = QuadOptions::default().with_rel_tol(1e-11).with_abs_tol(0.0);
    for x in [0.5, 4.0, 40.0] {
        let num = integrate_interval(|y| y * m.density(&[x, y]).unwrap(), 0.0, f64::INFINITY, opts);
        let den = integrate_interval(|y| m.density(&[x, y]).unwrap(), 0.0, f64::INFINITY, opts);
        let ratio = conditional_moment_ratio(&m, 1, &[1], x).unwrap();
        assert!((num.value / den.value - ratio).abs() < 1e-8 * ratio);
    }
}

#[test]
fn estimator_recovers_scale_index() {
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap());
    let grid = geometric_grid(1e2, 1e6, 12).unwrap();
    for exps in [vec![1.0, 1.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 1.5]] {
        let s = ScalingSpec::new(&m, exps).unwrap();
        let e = rv_index_estimate(|t| scale_function_v(&m, &s, t).unwrap(), &grid).unwrap();
        assert!((e.index + s.rho()).abs() < 0.02, "{:?}: {} vs {}", s.exponents(), e.index, -s.rho());
    }
}

#[test]
fn density_ratio_converges_off_diagonal() {
    let m = model(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap());
    let s = ScalingSpec::isotropic(&m).unwrap();
    let grid = geometric_grid(10.0, 1e4, 12).unwrap();
    for x in [[1.0, 1.0], [2.0, 1.0], [0.1, 5.0]] {
        let r = density_ratio_curve(&m, &s, &x, &grid, 1e-3).unwrap();
        assert!(r.passed, "x = {x:?}: {r:?}");
        let lam = limit_function(&m, &s, &x).unwrap();
        assert_eq!(r.limit, lam);
    }
}

#[test]
fn operator_limit_with_non_unit_shapes() {
    // λ with a_i ≠ 1 and a strict argmax; checked on a box away from the axes
    let m = model(vec![0.5, 2.0], DrivingFunction::inverted_dirichlet(4.0).unwrap());
    let s = ScalingSpec::new(&m, vec![2.0, 1.0]).unwrap();
    assert_eq!(s.argmax_set(), &[0]);
    let grid = geometric_grid(10.0, 1e5, 12).unwrap();
    let r = density_ratio_curve(&m, &s, &[1.5, 0.5], &grid, 5e-3).unwrap();
    assert!(r.passed, "{r:?}");
    let b = BoxRegion::new(vec![1.0, 0.5], vec![f64::INFINITY, 3.0]).unwrap();
    // separable: κ ∫₁^∞ x^{-4.5} dx · ∫_{0.5}^{3} y dy
    let expect = m.kappa() * (1.0 / 3.5) * (9.0 - 0.25) / 2.0;
    let mu = limiting_measure(&m, &s, &b).unwrap();
    assert!((mu - expect).abs() < 1e-8 * expect);
}
