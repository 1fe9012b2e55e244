//! Direct minimization of `E₀ = U - G/2` over radial densities of fixed mass.
//!
//! The density lives on a uniform grid over `[0, r_box]` with trapezoid
//! volume weights `Wᵢ = 4π rᵢ² wᵢ`. The discrete potential uses the radial
//! kernel `1/max(rᵢ, rⱼ)`, so `G = Σᵢ Wᵢ ρᵢ Vᵢ` and the gradient of the
//! discrete energy is `Wᵢ (A'(ρᵢ) - Vᵢ)`.
//!
//! Each step moves towards `T(ρ) = φ([V_ρ + λ̂]_+)`, the minimizer of the
//! energy linearized in its interaction part, with `λ̂` fixed by the mass.

use std::io::Write;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::format::sig;
use crate::quad;
use crate::real::Real;

const BISECTION_STEPS: usize = 200;
const HISTORY_TAIL: usize = 10;

/// Nonnegative density samples on a uniform radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity<T> {
    r: Vec<T>,
    weights: Vec<T>,
    rho: Vec<T>,
    mass: T,
    lambda_hat: Option<T>,
}

fn volume_weights<T: Real>(r: &[T]) -> Vec<T> {
    let n = r.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let h = r[1] - r[0];
    let four_pi = T::lit(4.0) * T::PI();
    r.iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = if i == 0 || i == n - 1 { h * T::lit(0.5) } else { h };
            four_pi * x * x * w
        })
        .collect()
}

impl<T: Real> DiscreteDensity<T> {
    /// Samples on `n` evenly spaced points from `0` to `r_box`.
    pub fn from_samples(r_box: T, rho: Vec<T>) -> Result<Self> {
        if !(r_box > T::zero()) || !r_box.is_finite() {
            return Err(Error::domain("box radius must be positive and finite"));
        }
        if rho.len() < 2 {
            return Err(Error::domain("a discrete density needs at least two samples"));
        }
        if rho.iter().any(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::domain("density samples must be finite and nonnegative"));
        }
        let r = quad::uniform_grid(T::zero(), r_box, rho.len());
        let weights = volume_weights(&r);
        let mass = dot(&weights, &rho);
        Ok(Self {
            r,
            weights,
            rho,
            mass,
            lambda_hat: None,
        })
    }

    pub fn zeros(r_box: T, n: usize) -> Result<Self> {
        Self::from_samples(r_box, vec![T::zero(); n])
    }

    /// Uniform ball of mass `m` and radius `radius`, truncated to the grid and
    /// renormalized so the quadrature mass is exactly `m`.
    pub fn uniform_ball(m: T, radius: T, r_box: T, n: usize) -> Result<Self> {
        let r = quad::uniform_grid(T::zero(), r_box, n);
        let rho: Vec<T> = r.iter().map(|&x| if x <= radius { T::one() } else { T::zero() }).collect();
        let mut d = Self::from_samples(r_box, rho)?;
        if d.mass > T::zero() {
            let factor = m / d.mass;
            d.rho.iter_mut().for_each(|x| *x *= factor);
            d.mass = m;
        }
        Ok(d)
    }

    pub fn r(&self) -> &[T] {
        &self.r
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    /// Volume quadrature weights `4π rᵢ² wᵢ`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn lambda_hat(&self) -> Option<T> {
        self.lambda_hat
    }

    pub fn r_box(&self) -> T {
        *self.r.last().unwrap()
    }

    fn with_rho(&self, rho: Vec<T>) -> Self {
        let mass = dot(&self.weights, &rho);
        Self {
            r: self.r.clone(),
            weights: self.weights.clone(),
            rho,
            mass,
            lambda_hat: self.lambda_hat,
        }
    }

    /// Copy with sample `i` shifted by `delta` (clamped at zero).
    pub fn perturbed(&self, i: usize, delta: T) -> Self {
        let mut rho = self.rho.clone();
        rho[i] = (rho[i] + delta).max(T::zero());
        self.with_rho(rho)
    }

    /// Writes `r,rho` rows with 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "rho"])?;
        for (x, s) in self.r.iter().zip(&self.rho) {
            w.write_record([sig(x.as_f64(), 12), sig(s.as_f64(), 12)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `Vᵢ = (1/rᵢ) Σ_{j≤i} Wⱼρⱼ + Σ_{j>i} Wⱼρⱼ/rⱼ`.
pub fn discrete_potential<T: Real>(d: &DiscreteDensity<T>) -> Vec<T> {
    let n = d.r.len();
    let mut outer = vec![T::zero(); n];
    for i in (0..n - 1).rev() {
        let j = i + 1;
        outer[i] = outer[j] + d.weights[j] * d.rho[j] / d.r[j];
    }
    let mut inner = T::zero();
    (0..n)
        .map(|i| {
            inner += d.weights[i] * d.rho[i];
            let near = if d.r[i] > T::zero() { inner / d.r[i] } else { T::zero() };
            near + outer[i]
        })
        .collect()
}

fn energy_with<T: Real>(eos: &EquationOfState<T>, d: &DiscreteDensity<T>, v: &[T]) -> Result<T> {
    let mut total = T::zero();
    for ((&rho, &w), &pot) in d.rho.iter().zip(&d.weights).zip(v) {
        if rho > T::zero() {
            total += w * (eos.internal_energy_density(rho)? - T::lit(0.5) * rho * pot);
        }
    }
    Ok(total)
}

/// `Σ Wᵢ A(ρᵢ) - ½ Σ Wᵢ ρᵢ Vᵢ`.
pub fn discrete_energy<T: Real>(eos: &EquationOfState<T>, d: &DiscreteDensity<T>) -> Result<T> {
    energy_with(eos, d, &discrete_potential(d))
}

/// `∂E/∂ρᵢ = Wᵢ (A'(ρᵢ) - Vᵢ)`.
pub fn discrete_gradient<T: Real>(eos: &EquationOfState<T>, d: &DiscreteDensity<T>) -> Result<Vec<T>> {
    let v = discrete_potential(d);
    d.rho
        .iter()
        .zip(&v)
        .zip(&d.weights)
        .map(|((&rho, &pot), &w)| Ok(w * (eos.a_prime(rho)? - pot)))
        .collect()
}

/// `φ([y]_+)` on the running minimum of `y`, so the target is nonincreasing in `r`.
fn target_profile<T: Real>(eos: &EquationOfState<T>, v: &[T], lambda: T) -> Result<Vec<T>> {
    let mut level = T::infinity();
    v.iter()
        .map(|&pot| {
            level = level.min(pot + lambda);
            eos.phi(level.max(T::zero()))
        })
        .collect()
}

/// Multiplier `λ̂` at which the target profile carries mass `m`.
fn solve_multiplier<T: Real>(eos: &EquationOfState<T>, d: &DiscreteDensity<T>, v: &[T], m: T) -> Result<(T, Vec<T>)> {
    let mass_at = |lambda: T| -> Result<(T, Vec<T>)> {
        let t = target_profile(eos, v, lambda)?;
        Ok((dot(&d.weights, &t), t))
    };
    let v_max = v.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let mut lo = -v_max;
    let mut hi = T::zero();
    let mut step = v_max.max(T::one());
    let mut best = mass_at(hi)?;
    let mut widenings = 0;
    while best.0 < m {
        lo = hi;
        hi += step;
        step *= T::lit(2.0);
        best = mass_at(hi)?;
        widenings += 1;
        if widenings > 200 || !hi.is_finite() {
            return Err(Error::Bracket {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let trial = mass_at(mid)?;
        if trial.0 < m {
            lo = mid;
        } else {
            hi = mid;
            best = trial;
        }
    }
    let (mass, mut t) = best;
    if mass > T::zero() {
        let factor = m / mass;
        t.iter_mut().for_each(|x| *x *= factor);
    }
    Ok((hi, t))
}

/// Settings for [`fixed_point_minimize`].
#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions<T> {
    /// Box radius; `None` uses twice the radius of the energy-minimizing uniform ball.
    pub r_box: Option<T>,
    pub damping: T,
    /// Stopping threshold on the sup-norm change between iterates.
    pub tol: T,
    pub max_iter: usize,
    pub grid_points: usize,
}

impl<T: Real> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self {
            r_box: None,
            damping: T::lit(0.3),
            tol: T::lit(1e-10),
            max_iter: 20_000,
            grid_points: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub energy: T,
    /// `sup |ρ - T(ρ)|` before the update.
    pub residual: T,
    pub lambda_hat: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimization<T> {
    pub density: DiscreteDensity<T>,
    pub history: Vec<IterationRecord<T>>,
}

impl<T: Real> Minimization<T> {
    pub fn energy(&self) -> T {
        self.history.last().map(|h| h.energy).unwrap_or_else(T::zero)
    }

    /// Writes `iter,energy,residual,lambda_hat` rows with 12 significant digits.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "energy", "residual", "lambda_hat"])?;
        for h in &self.history {
            w.write_record([
                h.iter.to_string(),
                sig(h.energy.as_f64(), 12),
                sig(h.residual.as_f64(), 12),
                sig(h.lambda_hat.as_f64(), 12),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stationary radius of the uniform-ball energy: its minimum for `γ > 4/3`,
/// its maximum for `γ < 4/3`. Below it the family energy runs off to `±∞`.
pub fn collapse_crossover<T: Real>(gamma: T, k: T, m: T) -> Result<T> {
    if !(gamma > T::one()) || !(k > T::zero()) || !(m > T::zero()) {
        return Err(Error::domain("crossover needs gamma > 1 and positive K, m"));
    }
    let exponent = T::lit(4.0) - T::lit(3.0) * gamma;
    if exponent.abs() < T::lit(1e-12) {
        return Err(Error::SingularExponent);
    }
    let prefactor = collapse_prefactor(gamma, k, m);
    let ratio = T::lit(0.6) * m * m / ((T::lit(3.0) * gamma - T::lit(3.0)) * prefactor);
    Ok(ratio.powf(T::one() / exponent))
}

fn collapse_prefactor<T: Real>(gamma: T, k: T, m: T) -> T {
    let three_over_four_pi = T::lit(3.0) / (T::lit(4.0) * T::PI());
    k / (gamma - T::one()) * m.powf(gamma) * three_over_four_pi.powf(gamma - T::one())
}

/// `E₀` of the uniform ball of mass `m` and radius `δ` under `P = K s^γ`:
/// `K/(γ-1) m^γ (3/4π)^(γ-1) δ^(3-3γ) - (3/5) m²/δ`.
pub fn collapse_family_energy<T: Real>(gamma: T, k: T, m: T, delta: T) -> Result<T> {
    if !(gamma > T::one()) || !(k > T::zero()) || !(m > T::zero()) || !(delta > T::zero()) {
        return Err(Error::domain("collapse family needs gamma > 1 and positive K, m, delta"));
    }
    let u = collapse_prefactor(gamma, k, m) * delta.powf(T::lit(3.0) - T::lit(3.0) * gamma);
    Ok(u - T::lit(0.6) * m * m / delta)
}

fn check_options<T: Real>(eos: &EquationOfState<T>, m: T, opts: &FixedPointOptions<T>) -> Result<()> {
    if let Some(gamma) = eos.gamma() {
        if !(gamma > T::lit(4.0 / 3.0)) {
            return Err(Error::domain(format!(
                "gamma = {gamma} <= 4/3: the energy is unbounded below or degenerate, no minimizer exists"
            )));
        }
    }
    if m.is_nan() || m < T::zero() {
        return Err(Error::domain("mass must be nonnegative"));
    }
    if !(opts.damping > T::zero() && opts.damping <= T::one()) {
        return Err(Error::domain("damping must lie in (0, 1]"));
    }
    if !(opts.tol > T::zero()) || opts.grid_points < 3 {
        return Err(Error::domain("tolerance must be positive and the grid needs at least three points"));
    }
    Ok(())
}

fn default_box<T: Real>(eos: &EquationOfState<T>, m: T) -> Result<T> {
    match (eos.gamma(), eos.k()) {
        (Some(gamma), Some(k)) => Ok(T::lit(2.0) * collapse_crossover(gamma, k, m)?),
        _ => Err(Error::domain("a box radius is required for tabulated equations of state")),
    }
}

/// Damped fixed-point iteration `ρ ← (1-d)ρ + d·T(ρ)` from a uniform ball,
/// stopped once successive iterates differ by at most `tol` in sup-norm.
pub fn fixed_point_minimize<T: Real>(
    eos: &EquationOfState<T>,
    m: T,
    opts: &FixedPointOptions<T>,
) -> Result<Minimization<T>> {
    check_options(eos, m, opts)?;
    let r_box = match opts.r_box {
        Some(b) => b,
        None if m == T::zero() => T::one(),
        None => default_box(eos, m)?,
    };
    if m == T::zero() {
        let mut density = DiscreteDensity::zeros(r_box, opts.grid_points)?;
        density.lambda_hat = Some(T::zero());
        let history = vec![IterationRecord {
            iter: 0,
            energy: T::zero(),
            residual: T::zero(),
            lambda_hat: T::zero(),
        }];
        return Ok(Minimization { density, history });
    }
    let mut d = DiscreteDensity::uniform_ball(m, r_box * T::lit(0.5), r_box, opts.grid_points)?;
    let mut history: Vec<IterationRecord<T>> = Vec::new();
    let slack = T::lit(1e3) * T::epsilon();
    for iter in 0..opts.max_iter {
        let v = discrete_potential(&d);
        let energy = energy_with(eos, &d, &v)?;
        if let Some(prev) = history.last() {
            if energy > prev.energy + slack * (prev.energy.abs() + energy.abs()) {
                return Err(Error::EnergyIncrease {
                    iteration: iter,
                    previous: prev.energy.as_f64(),
                    current: energy.as_f64(),
                });
            }
        }
        let (lambda, target) = solve_multiplier(eos, &d, &v, m)?;
        let residual = d
            .rho
            .iter()
            .zip(&target)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        history.push(IterationRecord {
            iter,
            energy,
            residual,
            lambda_hat: lambda,
        });
        d.lambda_hat = Some(lambda);
        if residual * opts.damping <= opts.tol {
            return Ok(Minimization { density: d, history });
        }
        let rho = d
            .rho
            .iter()
            .zip(&target)
            .map(|(&a, &b)| a + opts.damping * (b - a))
            .collect();
        d = d.with_rho(rho);
    }
    let tail = history
        .iter()
        .rev()
        .take(HISTORY_TAIL)
        .rev()
        .map(|h| h.residual.as_f64())
        .collect();
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        tail,
    })
}

/// `sup |ρ - φ([V_ρ + λ̂]_+)|`, in density units; zero only at a fixed point.
pub fn el_residual<T: Real>(eos: &EquationOfState<T>, d: &DiscreteDensity<T>) -> Result<T> {
    let v = discrete_potential(d);
    let lambda = match d.lambda_hat {
        Some(l) => l,
        None => solve_multiplier(eos, d, &v, d.mass)?.0,
    };
    let target = target_profile(eos, &v, lambda)?;
    Ok(d.rho
        .iter()
        .zip(&target)
        .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
}
