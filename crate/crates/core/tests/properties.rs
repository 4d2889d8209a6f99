use hardy_lab::correctors::*;
use hardy_lab::evolution::*;
use hardy_lab::forms::*;
use hardy_lab::quadrature::*;
use hardy_lab::spectral::*;
use hardy_lab::weights::*;
use proptest::prelude::*;

fn small_cases() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(small_cases())]

    #[test]
    fn power_integrals_are_exact_with_the_origin_tail(p in -0.95f64..4.0, q in 2.0f64..3.0) {
        let grid = graded_grid(0.0, 1.0, 256, q).unwrap();
        let v = integrate_with(|r: f64| r.powf(p), &grid, QuadOptions::with_tail(p)).unwrap();
        // In the mapped variable the integrand is s^{q(p+1)-1}; Gauss is only
        // spectrally accurate near the origin once that power is nonnegative.
        let tol = if q * (p + 1.0) >= 1.0 { 1e-9 } else { 1e-6 };
        prop_assert!((v.value * (p + 1.0) - 1.0).abs() < tol, "p={p}: {}", v.value);
    }

    #[test]
    fn scaled_exponential_integral_stays_between_log_bounds(x in 1e-3f64..50.0) {
        let v = scaled_exp_integral(x);
        let lo = 0.5 * (1.0 + 2.0 / x).ln();
        let hi = (1.0 + 1.0 / x).ln();
        prop_assert!(lo <= v * (1.0 + 1e-12) && v <= hi * (1.0 + 1e-12), "x={x}: {lo} <= {v} <= {hi}");
    }

    #[test]
    fn slack_is_quadratic_in_the_test_function(c in 0.1f64..10.0, eps in 0.1f64..1.0) {
        let spec = WeightSpec::power(4, 1.0).unwrap();
        let k = AdmissibleConstants::tied(0.0, -1.0, 4).unwrap();
        let phi = TestFunction::cutoff_power(k.optimal_alpha(4), eps, 0.5, 1.0).unwrap();
        let grid = phi.natural_grid(256).unwrap();
        let base = hardy_slack(&phi, &spec, None, &k, &grid).unwrap();
        let scaled = hardy_slack(&phi.scaled(c), &spec, None, &k, &grid).unwrap();
        prop_assert!((scaled.slack - c * c * base.slack).abs() <= 1e-9 * c * c * base.rhs());
        prop_assert!(base.slack >= 0.0);
    }

    #[test]
    fn pure_power_weights_satisfy_the_sharp_inequality(n in 3usize..7, frac in 0.0f64..0.9, eps in 0.1f64..1.0) {
        let gamma = frac * (n as f64 - 2.0);
        let spec = WeightSpec::power(n, gamma).unwrap();
        let k = AdmissibleConstants::tied(0.0, -gamma, n).unwrap();
        let phi = TestFunction::cutoff_power(k.optimal_alpha(n), eps, 0.3, 1.0).unwrap();
        let grid = phi.natural_grid(256).unwrap();
        let rep = hardy_slack(&phi, &spec, None, &k, &grid).unwrap();
        prop_assert!(rep.slack >= -1e-9 * rep.rhs(), "slack {}", rep.slack);
    }

    #[test]
    fn lattice_constants_pass_the_pointwise_condition(gamma in 0.0f64..1.5, beta in 0.2f64..2.0) {
        let spec = WeightSpec::power(4, gamma).unwrap();
        let g = CorrectorSpec::one_minus_power(beta).unwrap();
        let grid = graded_grid(0.0, 0.9, 128, 2.0).unwrap();
        let k = find_admissible_k2(&spec, &g, &grid).unwrap();
        let rep = check_h4(&spec, &g, k.optimal_alpha(4), &k, &grid).unwrap();
        prop_assert!(rep.holds(), "{k:?}: margin {}", rep.worst_margin);
    }

    #[test]
    fn rayleigh_quotients_bound_the_bottom_eigenvalue(
        c in 0.0f64..0.24,
        x in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let spec = WeightSpec::unit(3).unwrap();
        let vt = EffectivePotential::inverse_square(c).unwrap();
        let grid = scan_grid(1e-3, 1.0, 64).unwrap();
        let form = assemble_forms(&spec, |_| 1.0, Some(&vt), &grid, Boundary::NaturalLeftDirichletRight).unwrap();
        let res = bottom_eigenvalue(&form).unwrap();
        let v = &x[..form.len()];
        prop_assume!(v.iter().any(|t| t.abs() > 1e-3));
        prop_assert!(form.rayleigh(v) >= res.lambda1 * (1.0 - 1e-10));
        prop_assert_eq!(form.sturm_count(res.lambda1 * (1.0 - 1e-8)), 0);
        prop_assert!(form.sturm_count(res.lambda1 * (1.0 + 1e-8)) >= 1);
    }

    #[test]
    fn sturm_counts_are_monotone(a in -10.0f64..100.0, b in -10.0f64..100.0) {
        let spec = WeightSpec::unit(3).unwrap();
        let form = assemble_forms(&spec, |_| 1.0, None, &scan_grid(1e-2, 1.0, 64).unwrap(), Boundary::DirichletBoth).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(form.sturm_count(lo) <= form.sturm_count(hi));
    }

    #[test]
    fn implicit_euler_dissipates_and_keeps_sign(c in 0.0f64..0.24, dt in 1e-4f64..5e-2) {
        let spec = WeightSpec::unit(3).unwrap();
        let vt = EffectivePotential::inverse_square(c).unwrap();
        let grid = scan_grid(1e-3, 1.0, 96).unwrap();
        let u0 = default_u0(&spec, 1.0).unwrap();
        let cfg = EvolutionConfig::new(spec, vt, grid, dt, 16.0 * dt, Scheme::ImplicitEuler, u0).unwrap();
        let trace = run_with_states(&cfg).unwrap();
        prop_assert!(trace.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(positivity_check(&trace, &cfg).unwrap());
        let fit = fit_exponential(&trace).unwrap();
        prop_assert!(fit.bounds(&trace));
        prop_assert!(fit.m >= 1.0 - 1e-12);
    }
}

#[test]
fn single_precision_pipeline_agrees_with_double() {
    let spec = hardy_lab::WeightSpec32::power(4, 1.0).unwrap();
    let grid = graded_grid(0.0f32, 1.0, 256, 2.0).unwrap();
    let v = integrate_radial_with(|r: f32| (r * r).recip(), &spec, &grid, QuadOptions::with_tail(0.0)).unwrap();
    // σ₃ / (N - 2 - γ) = 2π²
    let exact = 2.0 * std::f32::consts::PI.powi(2);
    assert!((v.value / exact - 1.0).abs() < 1e-5, "{}", v.value);

    let k = AdmissibleConstants::tied(0.0f32, -1.0, 4).unwrap();
    let rows32 = sharpness_scan(&spec, &k, &[(1e-2, 512), (1e-3, 1024)]).unwrap();
    let spec64 = WeightSpec::power(4, 1.0f64).unwrap();
    let k64 = AdmissibleConstants::tied(0.0f64, -1.0, 4).unwrap();
    let rows64 = sharpness_scan(&spec64, &k64, &[(1e-2, 512), (1e-3, 1024)]).unwrap();
    for (a, b) in rows32.iter().zip(&rows64) {
        assert!((a.best_constant as f64 / b.best_constant - 1.0).abs() < 1e-3, "{} vs {}", a.best_constant, b.best_constant);
    }
}
