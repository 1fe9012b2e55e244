//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stellar_core::scaling::{self, geometric_masses, sweep_row};
use stellar_core::shooting::{beta_of_mass, mass_of_beta, solve_star};
use stellar_core::varmin::{self, collapse_family_energy, fixed_point_minimize};
use stellar_core::{energetics, quad, radial, Density, Eos, FixedPointOptions, ShootingOptions, Solution};

type Outcome = (bool, String);
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn opts() -> ShootingOptions<f64> {
    ShootingOptions::default()
}

fn polytrope(k: f64, gamma: f64) -> Eos {
    Eos::polytropic(k, gamma).unwrap()
}

fn star_of_mass(eos: &Eos, m: f64) -> Solution {
    let beta = beta_of_mass(eos, m, None, &opts()).unwrap();
    solve_star(eos, beta, &opts()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn closed_form_star() -> Outcome {
    let start = Instant::now();
    let sol = solve_star(&polytrope(2.0 * PI, 2.0), 1.0, &opts()).unwrap();
    let elapsed = start.elapsed();
    let mut theta_err: f64 = 0.0;
    for (&x, &t) in sol.theta.r.iter().zip(&sol.theta.theta) {
        let exact = if x == 0.0 { 1.0 } else { x.sin() / x };
        theta_err = theta_err.max((t - exact).abs());
    }
    for k in 0..=1000 {
        let x = PI * k as f64 / 1000.0;
        let exact = if x == 0.0 { 1.0 } else { x.sin() / x };
        theta_err = theta_err.max((sol.theta.eval(&sol.eos, x).0 - exact).abs());
    }
    let ok = (sol.radius - PI).abs() <= 1e-6
        && (sol.mass - PI).abs() <= 1e-6
        && (sol.lambda + 1.0).abs() <= 1e-6
        && theta_err <= 1e-6
        && elapsed < Duration::from_secs(1);
    let detail = format!(
        "R-pi={:.1e} M-pi={:.1e} lambda+1={:.1e} theta={:.1e} t={:?}",
        sol.radius - PI,
        sol.mass - PI,
        sol.lambda + 1.0,
        theta_err,
        elapsed
    );
    (ok, detail)
}

fn virial_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    for gamma in [1.6, 5.0 / 3.0, 2.0, 2.5, 3.0] {
        let sol = solve_star(&polytrope(1.0, gamma), 1.0, &opts()).unwrap();
        let e = &sol.energies;
        let u = e.u.abs();
        worst = worst
            .max((e.g - (6.0 * gamma - 6.0) * e.u).abs() / u)
            .max((e.e0 - (4.0 - 3.0 * gamma) * e.u).abs() / u)
            .max((e.e0 - e.e0_pohozaev).abs() / u);
        worst_lambda = worst_lambda.max(rel(sol.lambda_central, -sol.mass / sol.radius));
    }
    (
        worst <= 1e-6 && worst_lambda <= 1e-6,
        format!("energy identities {worst:.1e}, multiplier {worst_lambda:.1e}"),
    )
}

fn scaling_law() -> Outcome {
    let mut sigma_err: f64 = 0.0;
    let mut energy_err: f64 = 0.0;
    for gamma in [5.0 / 3.0, 2.0, 2.5] {
        let eos = polytrope(1.0, gamma);
        let exps = scaling::scale_exponents(gamma).unwrap();
        let src = star_of_mass(&eos, 1.0);
        for ratio in [0.5, 2.0, 10.0] {
            let m = ratio * src.mass;
            let rescaled = scaling::rescale_solution(&src, m).unwrap();
            let direct = star_of_mass(&eos, m);
            let peak = direct.density.sigma()[0];
            for (&x, &s) in direct.density.r().iter().zip(direct.density.sigma()) {
                sigma_err = sigma_err.max((s - rescaled.density_at(x)).abs() / peak);
            }
            let predicted = scaling::mass_power(ratio, exps.energy);
            energy_err = energy_err.max(rel(direct.energies.e0 / src.energies.e0, predicted));
        }
    }
    (
        sigma_err <= 1e-6 && energy_err <= 1e-8,
        format!("sigma {sigma_err:.1e}, energy ratio {energy_err:.1e}"),
    )
}

fn multiplier_formula() -> Outcome {
    let h = 1e-3;
    let mut solver_err: f64 = 0.0;
    let mut fd_err: f64 = 0.0;
    for gamma in [5.0 / 3.0, 2.0, 2.5] {
        let eos = polytrope(1.0, gamma);
        let u_unit = star_of_mass(&eos, 1.0).energies.u;
        for m in geometric_masses(0.2, 5.0, 10).unwrap() {
            let predicted = scaling::predicted_multiplier(gamma, m, u_unit).unwrap();
            let sol = star_of_mass(&eos, m);
            solver_err = solver_err.max(rel(sol.lambda, predicted));
            let up = sweep_row(&eos, m * (1.0 + h), &opts()).unwrap().e0;
            let down = sweep_row(&eos, m * (1.0 - h), &opts()).unwrap().e0;
            fd_err = fd_err.max(rel((up - down) / (2.0 * h * m), predicted));
        }
    }
    (
        solver_err <= 1e-6 && fd_err <= 1e-4,
        format!("solver {solver_err:.1e}, finite difference {fd_err:.1e}"),
    )
}

fn monotonicity() -> Outcome {
    let betas = geometric_masses(1e-2, 1e1, 20).unwrap();
    let mut increasing = true;
    let mut nested = true;
    let mut min_gap = f64::INFINITY;
    for gamma in [1.6, 5.0 / 3.0, 2.0, 2.5, 3.0] {
        let eos = polytrope(1.0, gamma);
        let stars: Vec<Solution> = betas.iter().map(|&b| solve_star(&eos, b, &opts()).unwrap()).collect();
        for pair in stars.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            increasing &= hi.mass > lo.mass;
            let shared = lo.radius.min(hi.radius);
            for k in 1..200 {
                let x = shared * k as f64 / 200.0;
                let gap = hi.mass_at(x) - lo.mass_at(x);
                min_gap = min_gap.min(gap / hi.mass_at(x));
                nested &= gap > 0.0;
            }
        }
    }
    (
        increasing && nested,
        format!("M(beta) increasing: {increasing}, nested profiles: {nested} (min relative gap {min_gap:.1e})"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for gamma in [5.0 / 3.0, 2.0, 2.5] {
        let eos = polytrope(1.0, gamma);
        for m in [0.5, 1.0, 4.0] {
            let sol = star_of_mass(&eos, m);
            let start = Instant::now();
            let out = fixed_point_minimize(&eos, m, &FixedPointOptions::default()).unwrap();
            slowest = slowest.max(start.elapsed());
            let d = &out.density;
            let peak = sol.density.sigma()[0];
            for (&x, &s) in d.r().iter().zip(d.rho()) {
                worst = worst.max((s - sol.density_at(x)).abs() / peak);
            }
        }
    }
    (
        worst <= 1e-3 && slowest < Duration::from_secs(30),
        format!("sup-norm {worst:.1e}, slowest run {slowest:?}"),
    )
}

/// Fixed-step RK4 for `θ'' + 2θ'/ξ + θ^n = 0`, returning the first zero.
fn lane_emden_zero(n: f64, h: f64) -> f64 {
    let rhs = |x: f64, y: [f64; 2]| [y[1], -y[0].max(0.0).powf(n) - 2.0 * y[1] / x];
    let mut x = h;
    let mut y = [1.0 - h * h / 6.0 + n * h.powi(4) / 120.0, -h / 3.0 + n * h.powi(3) / 30.0];
    loop {
        let k1 = rhs(x, y);
        let k2 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let next = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 {
            return x + h * y[0] / (y[0] - next[0]);
        }
        x += h;
        y = next;
    }
}

fn lane_emden() -> Outcome {
    let coarse = lane_emden_zero(1.5, 1e-3);
    let fine = lane_emden_zero(1.5, 1e-4);
    let eos = polytrope(1.0, 5.0 / 3.0);
    let sol = solve_star(&eos, 1.0, &opts()).unwrap();
    let xi = sol.radius / sol.theta.length_scale(&eos).unwrap();
    let ok = (fine - 3.65375).abs() <= 1e-3 && (xi - fine).abs() <= 1e-3 && (xi - 3.65375).abs() <= 1e-3;
    (ok, format!("solver {xi:.6}, reference h {coarse:.6}, h/10 {fine:.6}"))
}

fn two_body() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total_err: f64 = 0.0;
    let mut worst_term: f64 = 0.0;
    for _ in 0..5 {
        let gamma = [5.0 / 3.0, 2.0, 2.5][rng.random_range(0..3)];
        let eos = polytrope(1.0, gamma);
        let a = star_of_mass(&eos, rng.random_range(0.5..3.0));
        let b = star_of_mass(&eos, rng.random_range(0.5..3.0));
        let gap = (a.radius + b.radius) * rng.random_range(1.05..3.0);
        let exact = radial::two_sphere_energy(&a.density, &b.density, gap).unwrap();
        let series = radial::mutual_energy_quadrature(&a.density, &b.density, gap, 4).unwrap();
        total_err = total_err.max(rel(series.total, exact));
        worst_term = series.terms[1..=4].iter().fold(worst_term, |w, t| w.max(t.abs()));
    }
    (
        total_err <= 1e-6 && worst_term <= 1e-8,
        format!("total {total_err:.1e}, largest l>=1 term {worst_term:.1e}"),
    )
}

/// `V(x) = 2π ∫ σ(r) r² ∫ dμ / sqrt(r² + x² - 2rxμ) dr` by direct quadrature.
fn direct_potential(d: &Density, x: f64, mu: &[f64], w: &[f64]) -> f64 {
    let integrand: Vec<f64> = d
        .r()
        .iter()
        .zip(d.sigma())
        .map(|(&r, &s)| {
            if r == 0.0 {
                return 0.0;
            }
            let angular: f64 = mu
                .iter()
                .zip(w)
                .map(|(&c, &wt)| wt / (r * r + x * x - 2.0 * r * x * c).max(0.0).sqrt())
                .sum();
            2.0 * PI * s * r * r * angular
        })
        .collect();
    quad::integrate(d.r(), &integrand)
}

fn shell_theorem() -> Outcome {
    let (mu, w) = quad::gauss_legendre::<f64>(128);
    let mut exterior: f64 = 0.0;
    for gamma in [1.6, 5.0 / 3.0, 2.0, 2.5, 3.0] {
        for beta in [0.1, 1.0, 10.0] {
            let sol = solve_star(&polytrope(1.0, gamma), beta, &opts()).unwrap();
            for k in 0..=10 {
                let x = sol.radius * (1.05 + k as f64);
                let direct = direct_potential(&sol.density, x, &mu, &w);
                exterior = exterior.max((direct - sol.mass / x).abs());
                exterior = exterior.max((sol.potential.at(x) - direct).abs());
            }
        }
    }
    let (inner, outer) = (1.0, 2.0);
    let r = quad::uniform_grid(0.0, outer, 2001);
    let sigma = r
        .iter()
        .map(|&x: &f64| if x > inner { ((x - inner) * (outer - x)).powi(2) } else { 0.0 })
        .collect();
    let shell = Density::relaxed(r, sigma).unwrap();
    let samples: Vec<f64> = (0..=20)
        .map(|k| direct_potential(&shell, 0.9 * inner * k as f64 / 20.0, &mu, &w))
        .collect();
    let spread = samples.iter().cloned().fold(f64::MIN, f64::max) - samples.iter().cloned().fold(f64::MAX, f64::min);
    let v = radial::potential_profile(&shell);
    let profile_gap = (v.at(0.5 * inner) - samples[0]).abs();
    (
        exterior <= 1e-8 && spread <= 1e-8 && profile_gap <= 1e-8,
        format!("exterior {exterior:.1e}, interior variation {spread:.1e}, profile vs direct {profile_gap:.1e}"),
    )
}

fn boundedness() -> Outcome {
    let energies = |gamma: f64| -> Vec<f64> {
        (1..=7)
            .map(|k| collapse_family_energy(gamma, 1.0, 1.0, 10f64.powi(-k)).unwrap())
            .collect()
    };
    let low = energies(1.2);
    let high = energies(3.0);
    let falls = low.windows(2).all(|w| w[1] < w[0]) && *low.last().unwrap() < -1e5;
    let rises = high.windows(2).all(|w| w[1] > w[0]) && *high.last().unwrap() > 1e5;
    (
        falls && rises,
        format!("gamma 1.2 ends at {:.3e}, gamma 3 ends at {:.3e}", low[6], high[6]),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let gamma = rng.random_range(1.4..3.0);
        let eos = polytrope(rng.random_range(0.5..2.0), gamma);
        let r_box = rng.random_range(1.0..4.0);
        let (amp, width, bump, centre) = (
            rng.random_range(0.1..1.0),
            rng.random_range(0.3..1.0) * r_box,
            rng.random_range(0.0..0.5),
            rng.random_range(0.2..0.8) * r_box,
        );
        let rho = quad::uniform_grid(0.0, r_box, 400)
            .iter()
            .map(|&x: &f64| amp * (-(x / width).powi(2)).exp() + bump * (-((x - centre) / (0.1 * r_box)).powi(2)).exp())
            .collect();
        let d = varmin::DiscreteDensity::from_samples(r_box, rho).unwrap();
        let grad = varmin::discrete_gradient(&eos, &d).unwrap();
        let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        for (i, &g) in grad.iter().enumerate() {
            let step = (1e-5 * d.rho()[i]).max(1e-7);
            let up = varmin::discrete_energy(&eos, &d.perturbed(i, step)).unwrap();
            let down = varmin::discrete_energy(&eos, &d.perturbed(i, -step)).unwrap();
            worst = worst.max(((up - down) / (2.0 * step) - g).abs() / scale);
        }
    }
    let ball = Density::uniform_ball(1.0, 1.0, 801).unwrap();
    let base = energetics::hls_ratio(&ball).unwrap();
    let mut drift: f64 = 0.0;
    for delta in [1e-3, 0.1, 0.5, 3.0, 40.0] {
        drift = drift.max(rel(energetics::hls_ratio(&ball.dilate(delta).unwrap()).unwrap(), base));
    }
    (
        worst <= 1e-5 && drift <= 1e-10,
        format!("gradient {worst:.1e}, ratio drift under dilation {drift:.1e}"),
    )
}

fn concavity() -> Outcome {
    let mut largest = f64::NEG_INFINITY;
    for gamma in [5.0 / 3.0, 2.0, 2.5] {
        let eos = polytrope(1.0, gamma);
        let masses = geometric_masses(0.1, 10.0, 12).unwrap();
        let e: Vec<f64> = masses
            .iter()
            .map(|&m| {
                let beta = beta_of_mass(&eos, m, None, &opts()).unwrap();
                debug_assert!(rel(mass_of_beta(&eos, beta, &opts()).unwrap(), m) < 1e-9);
                solve_star(&eos, beta, &opts()).unwrap().energies.e0
            })
            .collect();
        for k in 1..e.len() - 1 {
            let (h0, h1) = (masses[k] - masses[k - 1], masses[k + 1] - masses[k]);
            let second = 2.0 * ((e[k + 1] - e[k]) / h1 - (e[k] - e[k - 1]) / h0) / (h0 + h1);
            largest = largest.max(second);
        }
    }
    (largest < 0.0, format!("largest second difference {largest:.3e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("AC1", "closed-form gamma=2 star", closed_form_star),
        ("AC2", "virial and identity suite", virial_suite),
        ("AC3", "solve vs rescale", scaling_law),
        ("AC4", "multiplier formula", multiplier_formula),
        ("AC5", "mass monotonicity", monotonicity),
        ("AC6", "fixed point vs shooting", oracle_equivalence),
        ("AC7", "Lane-Emden first zero", lane_emden),
        ("AC8", "two-body energy", two_body),
        ("AC9", "shell theorem", shell_theorem),
        ("AC10", "collapse and blow-up families", boundedness),
        ("AC11", "gradient and dilation checks", gradient_check),
        ("AC12", "concavity of e0(m)", concavity),
    ];
    let mut failures = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !ok {
            failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {detail} ({:.2?})", start.elapsed());
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
