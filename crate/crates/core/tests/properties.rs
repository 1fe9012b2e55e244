//! Randomized invariants.

use num_rational::Ratio;
use proptest::prelude::*;
use stellar_core::energetics::{hls_ratio, variational_derivative_field};
use stellar_core::scaling::ScaleExponents;
use stellar_core::shooting::{mass_of_beta, solve_star};
use stellar_core::varmin::{self, collapse_crossover, collapse_family_energy, DiscreteDensity};
use stellar_core::{quad, radial, Density, Eos, FixedPointOptions, ShootingOptions, Verdict};

fn log_grid() -> Vec<f64> {
    (0..=60).map(|k| 10f64.powf(-6.0 + 0.2 * k as f64)).collect()
}

fn solver_cases() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #[test]
    fn polytropic_kernels_are_consistent(k in 0.1f64..10.0, gamma in 1.05f64..4.0) {
        let eos = Eos::polytropic(k, gamma).unwrap();
        let mut previous = 0.0;
        for s in log_grid() {
            let p = eos.pressure(s).unwrap();
            let a = eos.internal_energy_density(s).unwrap();
            let da = eos.a_prime(s).unwrap();
            prop_assert!((da * s - a - p).abs() <= 1e-10 * p.max(1.0));
            prop_assert!((eos.phi(da).unwrap() - s).abs() <= 1e-10 * s);
            prop_assert!(eos.a_second(s).unwrap() >= 0.0);
            prop_assert!(da > previous);
            previous = da;
        }
    }

    #[test]
    fn quadrature_kernel_matches_closed_form(k in 0.1f64..10.0, gamma in 1.05f64..4.0, s in 1e-3f64..1e3) {
        let eos = Eos::polytropic(k, gamma).unwrap();
        let closed = eos.internal_energy_density(s).unwrap();
        let quad = eos.internal_energy_density_quadrature(s).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-9 * closed, "{} vs {}", closed, quad);
    }

    #[test]
    fn tabulated_kernels_satisfy_the_identity(k in 0.5f64..2.0, gamma in 1.4f64..3.0) {
        let s: Vec<f64> = (0..=80).map(|i| 10.0 * (i as f64 / 80.0).powi(2)).collect();
        let p: Vec<f64> = s.iter().map(|x| k * x.powf(gamma)).collect();
        let tol = 1e-10;
        let eos = Eos::tabulated(s, p, tol).unwrap();
        for x in [0.01, 0.3, 1.0, 4.0, 9.5] {
            let lhs = eos.a_prime(x).unwrap() * x - eos.internal_energy_density(x).unwrap();
            let p = eos.pressure(x).unwrap();
            prop_assert!((lhs - p).abs() <= 10.0 * tol * p.max(1.0), "{} vs {}", lhs, p);
        }
    }

    #[test]
    fn supercritical_polytropes_have_convex_f(k in 0.1f64..10.0, gamma in 1.34f64..4.0) {
        let eos = Eos::polytropic(k, gamma).unwrap();
        let report = eos.check_assumptions(&log_grid()).unwrap();
        prop_assert_eq!(report.f_convex, Verdict::Pass);
        prop_assert!(report.min_f_curvature > 0.0);
    }

    #[test]
    fn rational_exponents_obey_the_mass_relations(num in 5i64..40, den in 1i64..10) {
        let gamma = Ratio::new(num, den);
        prop_assume!(gamma * Ratio::from_integer(3) != Ratio::from_integer(4));
        let one = Ratio::from_integer(1);
        match ScaleExponents::new(gamma) {
            Ok(e) => {
                prop_assert!(gamma > Ratio::new(4, 3));
                prop_assert_eq!(e.energy, e.multiplier + one);
                prop_assert_eq!(Ratio::from_integer(3) * e.radius - e.density_divisor, one);
                prop_assert_eq!(e.multiplier, e.density_divisor * (one - gamma));
                let float = ScaleExponents::new(*gamma.numer() as f64 / *gamma.denom() as f64).unwrap();
                let as_f64 = |q: Ratio<i64>| *q.numer() as f64 / *q.denom() as f64;
                prop_assert!((float.energy - as_f64(e.energy)).abs() < 1e-12);
                prop_assert!((float.radius - as_f64(e.radius)).abs() < 1e-12);
            }
            Err(_) => prop_assert!(gamma < Ratio::new(4, 3)),
        }
    }

    #[test]
    fn hollow_shells_exert_no_interior_force(inner in 0.2f64..2.0, width in 0.1f64..2.0, power in 2i32..5) {
        let outer = inner + width;
        let r = quad::uniform_grid(0.0, outer, 1501);
        let sigma = r.iter().map(|&x| if x > inner { ((x - inner) * (outer - x)).powi(power) } else { 0.0 }).collect();
        let shell = Density::relaxed(r, sigma).unwrap();
        let v = radial::potential_profile(&shell);
        let reference = v.at(0.0);
        for k in 0..=50 {
            let x = 0.95 * inner * k as f64 / 50.0;
            prop_assert!((v.at(x) - reference).abs() <= 1e-12 * reference.abs().max(1e-300));
            prop_assert!(radial::potential_gradient(&shell, x).unwrap().abs() <= 1e-12);
        }
        for k in 0..=20 {
            let x = outer * (1.0 + k as f64);
            prop_assert!((v.at(x) - shell.mass() / x).abs() <= 1e-12 * shell.mass() / x);
        }
    }

    #[test]
    fn dilation_preserves_mass_and_hls_ratio(delta in 1e-3f64..1e3, m in 0.1f64..10.0) {
        let ball = Density::uniform_ball(m, 1.0, 401).unwrap();
        let d = ball.dilate(delta).unwrap();
        prop_assert!((d.mass() - ball.mass()).abs() <= 1e-12 * m);
        let (a, b) = (hls_ratio(&ball).unwrap(), hls_ratio(&d).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn collapse_families_diverge_past_the_crossover(gamma in 1.05f64..1.3, k in 0.1f64..5.0, m in 0.1f64..5.0) {
        let crossover = collapse_crossover(gamma, k, m).unwrap();
        let mut previous = collapse_family_energy(gamma, k, m, crossover).unwrap();
        for i in 1..=30 {
            let e = collapse_family_energy(gamma, k, m, crossover * 0.7f64.powi(i)).unwrap();
            prop_assert!(e < previous);
            previous = e;
        }
        let high = 3.0 - (gamma - 1.05);
        let crossover = collapse_crossover(high, k, m).unwrap();
        let mut previous = collapse_family_energy(high, k, m, crossover).unwrap();
        for i in 1..=30 {
            let e = collapse_family_energy(high, k, m, crossover * 0.7f64.powi(i)).unwrap();
            prop_assert!(e > previous);
            previous = e;
        }
    }
}

proptest! {
    #![proptest_config(solver_cases())]

    #[test]
    fn solved_stars_satisfy_equilibrium_invariants(gamma in 1.6f64..3.0, k in 0.3f64..3.0, log_beta in -2.0f64..1.5) {
        let opts = ShootingOptions::default();
        let eos = Eos::polytropic(k, gamma).unwrap();
        let sol = solve_star(&eos, 10f64.powf(log_beta), &opts).unwrap();
        let th = &sol.theta.theta;
        prop_assert!(th.windows(2).all(|w| w[1] < w[0]));
        prop_assert!((sol.lambda_central - sol.lambda).abs() <= opts.consistency_tol() * sol.lambda.abs());
        prop_assert!(sol.energies.e0 < 0.0 && sol.lambda < 0.0);
        prop_assert!(sol.energies.worst_residual() <= 1e-6, "{:?}", sol.energies);

        let field = variational_derivative_field(&eos, &sol.density).unwrap();
        let r = sol.density.r();
        let interior: Vec<f64> = field[1..field.len() - 1].to_vec();
        let spread = interior.iter().cloned().fold(f64::MIN, f64::max) - interior.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(spread <= 1e-6 * sol.lambda.abs(), "spread {}", spread);

        // d/dr A'(σ) = -m(r)/r² at interior points, by centered differences.
        let scale = sol.mass / (sol.radius * sol.radius);
        for i in (r.len() / 10..r.len() * 9 / 10).step_by(50) {
            let (x, h) = (r[i], 1e-5 * sol.radius);
            let slope = (eos.a_prime(sol.density_at(x + h)).unwrap() - eos.a_prime(sol.density_at(x - h)).unwrap()) / (2.0 * h);
            prop_assert!((slope + sol.mass_at(x) / (x * x)).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn mass_increases_with_central_value(gamma in 1.6f64..3.0, log_beta in -2.0f64..1.0, factor in 1.01f64..5.0) {
        let opts = ShootingOptions::default();
        let eos = Eos::polytropic(1.0, gamma).unwrap();
        let beta = 10f64.powf(log_beta);
        prop_assert!(mass_of_beta(&eos, beta * factor, &opts).unwrap() > mass_of_beta(&eos, beta, &opts).unwrap());
    }

    #[test]
    fn discrete_gradient_matches_finite_differences(
        gamma in 1.4f64..3.0,
        amp in 0.05f64..1.0,
        width in 0.2f64..1.0,
        floor in 1e-3f64..1e-2,
    ) {
        let eos = Eos::polytropic(1.0, gamma).unwrap();
        let rho = quad::uniform_grid(0.0, 2.0, 200).iter().map(|&x: &f64| floor + amp * (-(x / width).powi(2)).exp()).collect();
        let d = DiscreteDensity::from_samples(2.0, rho).unwrap();
        let grad = varmin::discrete_gradient(&eos, &d).unwrap();
        let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        for (i, &g) in grad.iter().enumerate() {
            let step = (1e-5 * d.rho()[i]).max(1e-7);
            let fd = (varmin::discrete_energy(&eos, &d.perturbed(i, step)).unwrap()
                - varmin::discrete_energy(&eos, &d.perturbed(i, -step)).unwrap()) / (2.0 * step);
            prop_assert!((fd - g).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn fixed_point_descends_and_satisfies_el(gamma in 1.6f64..3.0, m in 0.2f64..5.0, damping in 0.1f64..0.5) {
        let eos = Eos::polytropic(1.0, gamma).unwrap();
        let opts = FixedPointOptions { damping, grid_points: 400, ..Default::default() };
        let out = varmin::fixed_point_minimize(&eos, m, &opts).unwrap();
        // Near convergence the per-step descent drops below rounding in the energy sum.
        prop_assert!(out.history.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs()));
        prop_assert!(varmin::el_residual(&eos, &out.density).unwrap() <= 10.0 * opts.tol);
        prop_assert!((out.density.mass() - m).abs() <= 1e-10 * m);
        prop_assert!(out.density.rho().iter().all(|x| *x >= 0.0));
    }
}
