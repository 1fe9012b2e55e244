//! Identity suite behind `stellar verify`.

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stellar_core::quad::uniform_grid;
use stellar_core::scaling;
use stellar_core::shooting::{beta_of_mass, solve_star};
use stellar_core::varmin::{self, DiscreteDensity};
use stellar_core::{Eos, FixedPointOptions};

use crate::{thread_pool, VerifyArgs};

struct Row {
    gamma: f64,
    check: &'static str,
    value: f64,
    limit: f64,
}

impl Row {
    fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn suite(gamma: f64, args: &VerifyArgs) -> Result<Vec<Row>> {
    let opts = args.numerics.options();
    let eos = Eos::polytropic(args.k, gamma)?;
    let unit = solve_star(&eos, beta_of_mass(&eos, 1.0, None, &opts)?, &opts)?;
    let e = &unit.energies;
    let u = e.u.abs();
    let mut rows = vec![
        ("G = (6g-6)U", (e.g - (6.0 * gamma - 6.0) * e.u).abs() / u, 1e-6),
        ("E0 = (4-3g)U", (e.e0 - (4.0 - 3.0 * gamma) * e.u).abs() / u, 1e-6),
        ("E0 = int(4A - 3sA')", (e.e0 - e.e0_pohozaev).abs() / u, 1e-6),
        ("lambda = -M/R", rel(unit.lambda_central, -unit.mass / unit.radius), 1e-6),
        ("Euler-Lagrange", e.el_residual / unit.lambda.abs(), 1e-6),
    ];

    let predicted = scaling::predicted_multiplier(gamma, unit.mass, e.u)?;
    rows.push(("multiplier law", rel(unit.lambda, predicted), 1e-6));

    let target = 2.0 * unit.mass;
    let rescaled = scaling::rescale_solution(&unit, target)?;
    let direct = solve_star(&eos, beta_of_mass(&eos, target, None, &opts)?, &opts)?;
    let peak = direct.density.sigma()[0];
    let sigma_gap = direct
        .density
        .r()
        .iter()
        .zip(direct.density.sigma())
        .fold(0.0f64, |w, (&x, &s)| w.max((s - rescaled.density_at(x)).abs() / peak));
    rows.push(("solve vs rescale", sigma_gap, 1e-6));

    let min = varmin::fixed_point_minimize(&eos, unit.mass, &FixedPointOptions::default())?;
    let peak = unit.density.sigma()[0];
    let oracle_gap = min
        .density
        .r()
        .iter()
        .zip(min.density.rho())
        .fold(0.0f64, |w, (&x, &s)| w.max((s - unit.density_at(x)).abs() / peak));
    rows.push(("fixed point vs shooting", oracle_gap, 1e-3));

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ gamma.to_bits());
    let (floor, amp, width) = (
        rng.random_range(1e-3..1e-2),
        rng.random_range(0.05..1.0),
        rng.random_range(0.2..1.0),
    );
    let rho = uniform_grid(0.0, 2.0, 200)
        .iter()
        .map(|&x: &f64| floor + amp * (-(x / width).powi(2)).exp())
        .collect();
    let d = DiscreteDensity::from_samples(2.0, rho)?;
    let grad = varmin::discrete_gradient(&eos, &d)?;
    let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let mut grad_gap = 0.0f64;
    for (i, &g) in grad.iter().enumerate() {
        let step = (1e-5 * d.rho()[i]).max(1e-7);
        let fd = (varmin::discrete_energy(&eos, &d.perturbed(i, step))?
            - varmin::discrete_energy(&eos, &d.perturbed(i, -step))?)
            / (2.0 * step);
        grad_gap = grad_gap.max((fd - g).abs() / scale);
    }
    rows.push(("discrete gradient", grad_gap, 1e-5));

    Ok(rows
        .into_iter()
        .map(|(check, value, limit)| Row {
            gamma,
            check,
            value,
            limit,
        })
        .collect())
}

/// Prints the table; `Ok(false)` when any row fails.
pub fn run(args: &VerifyArgs) -> Result<bool> {
    let tables = thread_pool()?.install(|| {
        args.gamma_list
            .par_iter()
            .map(|&g| suite(g, args))
            .collect::<Result<Vec<_>>>()
    })?;
    println!("{:<8} {:<26} {:>10} {:>10}  status", "gamma", "check", "value", "limit");
    let mut all = true;
    for row in tables.iter().flatten() {
        let status = if row.passed() { "PASS" } else { "FAIL" };
        all &= row.passed();
        println!(
            "{:<8} {:<26} {:>10.2e} {:>10.1e}  {status}",
            row.gamma, row.check, row.value, row.limit
        );
    }
    Ok(all)
}
