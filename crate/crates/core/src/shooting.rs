//! Outward shooting for the radial equation `Θ'' + (2/r)Θ' = -4π φ(Θ)`,
//! `Θ(0) = β`, `Θ'(0) = 0`, up to the first zero `R(β)`.
//!
//! `Θ = V + λ` on the support, so the equilibrium density is `σ = φ(Θ)` and
//! the multiplier follows from `Θ(R) = 0` as `λ = -M/R`.

use std::cell::RefCell;

use crate::energetics::{self, EnergyReport};
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::ode::{self, DenseStep, StepControl};
use crate::quad;
use crate::radial::{self, PotentialProfile, RadialDensity};
use crate::real::Real;

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Event tolerance on `|Θ(R)|`, relative to `β`.
    pub event_tol: T,
    pub grid_points: usize,
    /// Radius beyond which a missing zero is reported as unbounded support.
    pub r_max: T,
    /// Series start radius as a fraction of the natural length `sqrt(β / 4πφ(β))`.
    pub start_fraction: T,
    pub max_steps: usize,
}

impl<T: Real> Default for ShootingOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            event_tol: T::lit(1e-12),
            grid_points: 2000,
            r_max: T::lit(1e4),
            start_fraction: T::lit(1e-6),
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> ShootingOptions<T> {
    /// Relative tolerance for agreement of the two multiplier determinations.
    pub fn consistency_tol(&self) -> T {
        T::lit(10.0) * self.rtol.max(self.atol)
    }
}

/// `Θ` and `Θ'` sampled from the centre to the first zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaProfile<T> {
    pub beta: T,
    pub r: Vec<T>,
    pub theta: Vec<T>,
    pub theta_prime: Vec<T>,
    pub radius: T,
}

impl<T: Real> ThetaProfile<T> {
    /// `(Θ, Θ')` at any radius by cubic Hermite interpolation, using the ODE
    /// itself for `Θ''`. Beyond the support `Θ = -M (1/R - 1/r)` continues
    /// harmonically.
    pub fn eval(&self, eos: &EquationOfState<T>, x: T) -> (T, T) {
        let n = self.r.len();
        if x >= self.radius {
            let m = -self.radius * self.radius * self.theta_prime[n - 1];
            return (m / x - m / self.radius, -m / (x * x));
        }
        let k = match self.r.iter().position(|&ri| ri > x) {
            Some(0) | None => 0,
            Some(k) => k - 1,
        };
        let (a, b) = (self.r[k], self.r[k + 1]);
        let h = b - a;
        let t = (x - a) / h;
        let second = |i: usize| theta_second(eos, self.r[i], self.theta[i], self.theta_prime[i]);
        let theta = hermite(t, h, self.theta[k], self.theta_prime[k], self.theta[k + 1], self.theta_prime[k + 1]);
        let dtheta = hermite(t, h, self.theta_prime[k], second(k), self.theta_prime[k + 1], second(k + 1));
        (theta, dtheta)
    }

    /// Natural length `sqrt(β / 4πφ(β))`; for polytropes the radius divided by
    /// it is the classical Lane–Emden first zero.
    pub fn length_scale(&self, eos: &EquationOfState<T>) -> Result<T> {
        natural_length(eos, self.beta)
    }
}

fn hermite<T: Real>(t: T, h: T, y0: T, d0: T, y1: T, d1: T) -> T {
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    let t2 = t * t;
    let t3 = t2 * t;
    (two * t3 - three * t2 + one) * y0 + (t3 - two * t2 + t) * h * d0 + (three * t2 - two * t3) * y1 + (t3 - t2) * h * d1
}

fn theta_second<T: Real>(eos: &EquationOfState<T>, r: T, theta: T, theta_prime: T) -> T {
    let source = T::lit(4.0) * T::PI() * eos.phi(theta.max(T::zero())).unwrap_or(T::nan());
    if r == T::zero() {
        // Θ'' (0) = -(4π/3) φ(β)
        -source / T::lit(3.0)
    } else {
        -source - T::lit(2.0) * theta_prime / r
    }
}

fn natural_length<T: Real>(eos: &EquationOfState<T>, beta: T) -> Result<T> {
    let rho_c = eos.phi(beta)?;
    Ok((beta / (T::lit(4.0) * T::PI() * rho_c)).sqrt())
}

fn check_equilibrium_eos<T: Real>(eos: &EquationOfState<T>) -> Result<()> {
    if let Some(gamma) = eos.gamma() {
        if gamma <= T::lit(4.0) / T::lit(3.0) {
            return Err(Error::domain(format!(
                "gamma = {gamma} <= 4/3: the energy is unbounded below and no equilibrium is sought"
            )));
        }
    }
    Ok(())
}

/// Integrates the radial `Θ` equation from `β` to its first zero.
pub fn integrate_theta<T: Real>(eos: &EquationOfState<T>, beta: T, opts: &ShootingOptions<T>) -> Result<ThetaProfile<T>> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::domain(format!("central value beta must be positive, got {beta}")));
    }
    if opts.grid_points < 4 {
        return Err(Error::domain("output grid needs at least 4 points"));
    }
    check_equilibrium_eos(eos)?;
    let four_pi = T::lit(4.0) * T::PI();
    let rho_c = eos.phi(beta)?;
    let scale = natural_length(eos, beta)?;
    let r0 = opts.start_fraction * scale;
    // two-term series about the regular singular point
    let theta0 = beta - four_pi / T::lit(6.0) * rho_c * r0 * r0;
    let dtheta0 = -four_pi / T::lit(3.0) * rho_c * r0;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let rhs = |r: T, y: &[T; 2]| -> [T; 2] {
        let source = match eos.phi(y[0].max(T::zero())) {
            Ok(s) => s,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        };
        [y[1], -four_pi * source - T::lit(2.0) * y[1] / r]
    };
    let ctl = StepControl {
        rtol: opts.rtol,
        atol: opts.atol * beta.max(T::one()),
        initial_step: scale * T::lit(1e-3),
        min_step: scale * T::epsilon() * T::lit(16.0),
        max_steps: opts.max_steps,
    };
    let steps = ode::integrate(rhs, r0, [theta0, dtheta0], opts.r_max, &ctl, |s| s.y1[0] > T::zero());
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let steps = steps?;
    let last = steps.last().ok_or_else(|| Error::Consistency("integrator produced no steps".into()))?;
    if last.y1[0] > T::zero() {
        return Err(Error::UnboundedSupport {
            r_max: opts.r_max.as_f64(),
            last_theta: last.y1[0].as_f64(),
        });
    }
    let radius = locate_zero(last, beta * opts.event_tol);

    let r = quad::surface_grid(radius, opts.grid_points);
    let n = r.len();
    let mut theta = Vec::with_capacity(n);
    let mut theta_prime = Vec::with_capacity(n);
    let mut k = 0;
    for (i, &x) in r.iter().enumerate() {
        if i == 0 {
            theta.push(beta);
            theta_prime.push(T::zero());
            continue;
        }
        if x <= r0 {
            theta.push(beta - four_pi / T::lit(6.0) * rho_c * x * x);
            theta_prime.push(-four_pi / T::lit(3.0) * rho_c * x);
            continue;
        }
        while k + 1 < steps.len() && steps[k].x1() < x {
            k += 1;
        }
        let y = steps[k].eval(x);
        theta.push(y[0]);
        theta_prime.push(y[1]);
    }
    theta[n - 1] = T::zero();

    Ok(ThetaProfile {
        beta,
        r,
        theta,
        theta_prime,
        radius,
    })
}

/// Bisection on the dense output of the step that crossed zero.
fn locate_zero<T: Real>(step: &DenseStep<T, 2>, tol: T) -> T {
    if step.y1[0] == T::zero() {
        return step.x1();
    }
    let (mut lo, mut hi) = (step.x0, step.x1());
    let mut mid = (lo + hi) * T::lit(0.5);
    for _ in 0..200 {
        mid = (lo + hi) * T::lit(0.5);
        let v = step.eval(mid)[0];
        if v.abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if v > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Complete equilibrium record.
#[derive(Debug, Clone, PartialEq)]
pub struct StellarSolution<T> {
    pub eos: EquationOfState<T>,
    pub beta: T,
    pub radius: T,
    pub mass: T,
    /// Canonical multiplier `-M/R`.
    pub lambda: T,
    /// Independent determination `Θ(0) - V(0)`.
    pub lambda_central: T,
    pub theta: ThetaProfile<T>,
    pub density: RadialDensity<T>,
    pub mass_profile: Vec<T>,
    pub potential: PotentialProfile<T>,
    pub energies: EnergyReport<T>,
}

impl<T: Real> StellarSolution<T> {
    pub fn vacuum(eos: &EquationOfState<T>) -> Self {
        let density = RadialDensity::vacuum();
        Self {
            eos: eos.clone(),
            beta: T::zero(),
            radius: T::zero(),
            mass: T::zero(),
            lambda: T::zero(),
            lambda_central: T::zero(),
            theta: ThetaProfile {
                beta: T::zero(),
                r: vec![T::zero()],
                theta: vec![T::zero()],
                theta_prime: vec![T::zero()],
                radius: T::zero(),
            },
            mass_profile: vec![T::zero()],
            potential: radial::potential_profile(&density),
            density,
            energies: EnergyReport::vacuum(),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.mass == T::zero()
    }

    /// Builds every derived field from a `Θ` profile.
    pub fn assemble(eos: &EquationOfState<T>, theta: ThetaProfile<T>, consistency_tol: T) -> Result<Self> {
        let mut sol = Self::assemble_without_energies(eos, theta, consistency_tol)?;
        sol.energies = energetics::virial_report(&sol)?;
        Ok(sol)
    }

    fn assemble_without_energies(eos: &EquationOfState<T>, theta: ThetaProfile<T>, consistency_tol: T) -> Result<Self> {
        let sigma = theta
            .theta
            .iter()
            .map(|&t| eos.phi(t.max(T::zero())))
            .collect::<Result<Vec<T>>>()?;
        let density = RadialDensity::new(theta.r.clone(), sigma)?;
        let mass_profile = radial::cumulative_mass(&density);
        let potential = radial::potential_profile(&density);
        let mass = density.mass();
        let radius = theta.radius;
        let lambda = -mass / radius;
        let lambda_central = theta.beta - potential.v_at_zero;
        // Grid quadrature error, gauged against the ODE's own surface mass.
        let surface_slope = theta.theta_prime.last().copied().unwrap_or_else(T::zero);
        let ode_mass = -radius * radius * surface_slope;
        let grid_error = if ode_mass > T::zero() {
            (mass - ode_mass).abs() / ode_mass
        } else {
            T::zero()
        };
        let gap = (lambda_central - lambda).abs();
        if gap > (consistency_tol + T::lit(10.0) * grid_error) * lambda.abs() {
            return Err(Error::Consistency(format!(
                "multiplier determinations disagree: theta(0) - V(0) = {lambda_central}, -M/R = {lambda}"
            )));
        }
        Ok(Self {
            eos: eos.clone(),
            beta: theta.beta,
            radius,
            mass,
            lambda,
            lambda_central,
            theta,
            density,
            mass_profile,
            potential,
            energies: EnergyReport::vacuum(),
        })
    }

    /// Equilibrium density at any radius from the interpolated `Θ`.
    pub fn density_at(&self, x: T) -> T {
        if self.is_vacuum() || x >= self.radius {
            return T::zero();
        }
        let (theta, _) = self.theta.eval(&self.eos, x);
        self.eos.phi(theta.max(T::zero())).unwrap_or(T::zero())
    }

    /// Enclosed mass `m(r) = -r² Θ'(r)` at any radius.
    pub fn mass_at(&self, x: T) -> T {
        if self.is_vacuum() || x <= T::zero() {
            return T::zero();
        }
        if x >= self.radius {
            return self.mass;
        }
        let (_, dtheta) = self.theta.eval(&self.eos, x);
        -x * x * dtheta
    }
}

/// Solves for the equilibrium with central value `β`; `β = 0` is the vacuum.
pub fn solve_star<T: Real>(eos: &EquationOfState<T>, beta: T, opts: &ShootingOptions<T>) -> Result<StellarSolution<T>> {
    if beta == T::zero() {
        return Ok(StellarSolution::vacuum(eos));
    }
    let theta = integrate_theta(eos, beta, opts)?;
    StellarSolution::assemble(eos, theta, opts.consistency_tol())
}

/// Total mass of the equilibrium with central value `β`.
pub fn mass_of_beta<T: Real>(eos: &EquationOfState<T>, beta: T, opts: &ShootingOptions<T>) -> Result<T> {
    if beta == T::zero() {
        return Ok(T::zero());
    }
    let theta = integrate_theta(eos, beta, opts)?;
    Ok(StellarSolution::assemble_without_energies(eos, theta, opts.consistency_tol())?.mass)
}

/// Central value `β` of the equilibrium with mass `m`, by bisection on the
/// strictly increasing map `β ↦ M(β)`.
///
/// Polytropes need no bracket: `M(β) ∝ β^((3γ-4)/(2γ-2))`, so one solve at
/// `β = 1` predicts `β(m)` and seeds a tight bracket.
pub fn beta_of_mass<T: Real>(
    eos: &EquationOfState<T>,
    m: T,
    bracket: Option<(T, T)>,
    opts: &ShootingOptions<T>,
) -> Result<T> {
    if m.is_nan() || m < T::zero() {
        return Err(Error::domain(format!("mass must be nonnegative, got {m}")));
    }
    if m == T::zero() {
        return Ok(T::zero());
    }
    let residual = |beta: T| -> Result<T> { Ok(mass_of_beta(eos, beta, opts)? - m) };
    let (mut lo, mut hi, mut f_lo, mut f_hi);
    match (bracket, predicted_beta(eos, m, opts)?) {
        (Some((a, b)), _) => {
            lo = a.min(b);
            hi = a.max(b);
            f_lo = residual(lo)?;
            f_hi = residual(hi)?;
            if f_lo * f_hi > T::zero() {
                return Err(Error::Bracket {
                    lo: lo.as_f64(),
                    hi: hi.as_f64(),
                });
            }
        }
        (None, Some(seed)) => {
            let mut width = T::lit(1e-6);
            loop {
                lo = seed * (T::one() - width);
                hi = seed * (T::one() + width);
                f_lo = residual(lo)?;
                f_hi = residual(hi)?;
                if f_lo * f_hi <= T::zero() {
                    break;
                }
                width *= T::lit(8.0);
                if width >= T::one() {
                    return Err(Error::Bracket {
                        lo: lo.as_f64(),
                        hi: hi.as_f64(),
                    });
                }
            }
        }
        (None, None) => {
            return Err(Error::domain("a bracket is required for tabulated equations of state"));
        }
    }
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi || (hi - lo) <= T::lit(4.0) * T::epsilon() * hi {
            break;
        }
        let f_mid = residual(mid)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if (f_mid < T::zero()) == (f_lo < T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Scaling-law prediction of `β(m)` for polytropes.
pub fn predicted_beta<T: Real>(eos: &EquationOfState<T>, m: T, opts: &ShootingOptions<T>) -> Result<Option<T>> {
    let Some(gamma) = eos.gamma() else {
        return Ok(None);
    };
    check_equilibrium_eos(eos)?;
    let unit_mass = mass_of_beta(eos, T::one(), opts)?;
    let exponent = T::lit(2.0) * (gamma - T::one()) / (T::lit(3.0) * gamma - T::lit(4.0));
    Ok(Some((exponent * (m / unit_mass).ln()).exp()))
}

/// Sup-norm residual of `A'(σ) = [V + λ]_+` for a density and multiplier.
pub fn el_residual_of<T: Real>(eos: &EquationOfState<T>, density: &RadialDensity<T>, lambda: T) -> Result<T> {
    if density.is_vacuum() {
        return Ok(T::zero());
    }
    let v = radial::potential_profile(density);
    let mut worst = T::zero();
    for (i, &s) in density.sigma().iter().enumerate() {
        let target = (v.v[i] + lambda).max(T::zero());
        worst = worst.max((eos.a_prime(s)? - target).abs());
    }
    let radius = density.support_radius();
    for k in 1..=50 {
        let x = radius * (T::one() + T::lit(k as f64) * T::lit(9.0 / 50.0));
        worst = worst.max((v.at(x) + lambda).max(T::zero()));
    }
    Ok(worst)
}

/// Euler–Lagrange residual of a solved star over the support and outside it.
pub fn el_residual<T: Real>(sol: &StellarSolution<T>) -> Result<T> {
    el_residual_of(&sol.eos, &sol.density, sol.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gamma_two() -> EquationOfState<f64> {
        EquationOfState::polytropic(2.0 * PI, 2.0).unwrap()
    }

    #[test]
    fn closed_form_gamma_two_profile() {
        let opts = ShootingOptions::default();
        let p = integrate_theta(&gamma_two(), 1.0, &opts).unwrap();
        assert!((p.radius - PI).abs() < 1e-9, "{}", p.radius - PI);
        assert_eq!(p.theta_prime[0], 0.0);
        assert_eq!(p.theta[0], 1.0);
        let (mid, _) = p.eval(&gamma_two(), PI / 2.0);
        assert!((mid - 2.0 / PI).abs() < 1e-9);
        let worst = p
            .r
            .iter()
            .zip(&p.theta)
            .map(|(&r, &t)| if r == 0.0 { (t - 1.0).abs() } else { (t - r.sin() / r).abs() })
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
        assert!(p.theta.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn solve_star_examples() {
        let opts = ShootingOptions::default();
        let s = solve_star(&gamma_two(), 1.0, &opts).unwrap();
        assert!((s.radius - PI).abs() < 1e-9);
        assert!((s.mass - PI).abs() < 1e-9);
        assert!((s.lambda + 1.0).abs() < 1e-9);
        let s2 = solve_star(&gamma_two(), 2.0, &opts).unwrap();
        assert!((s2.mass - 2.0 * PI).abs() < 1e-8);
        assert!((s2.lambda + 2.0).abs() < 1e-8);
        let v = solve_star(&gamma_two(), 0.0, &opts).unwrap();
        assert_eq!((v.mass, v.lambda), (0.0, 0.0));
    }

    #[test]
    fn beta_of_mass_examples() {
        let opts = ShootingOptions::default();
        let e = gamma_two();
        assert!((beta_of_mass(&e, PI, None, &opts).unwrap() - 1.0).abs() < 1e-9);
        assert!((beta_of_mass(&e, 2.0 * PI, None, &opts).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(beta_of_mass(&e, 0.0, None, &opts).unwrap(), 0.0);
        let b = beta_of_mass(&e, PI, Some((0.5, 3.0)), &opts).unwrap();
        assert!((b - 1.0).abs() < 1e-9);
        assert!(matches!(beta_of_mass(&e, PI, Some((2.0, 3.0)), &opts), Err(Error::Bracket { .. })));
    }

    #[test]
    fn el_residual_examples() {
        let opts = ShootingOptions::default();
        let s = solve_star(&gamma_two(), 1.0, &opts).unwrap();
        assert!(el_residual(&s).unwrap() < 1e-9);
        let bumped = s.density.scaled(1.01).unwrap();
        let r = el_residual_of(&s.eos, &bumped, s.lambda).unwrap();
        assert!(r > 1e-3 && (r - 0.01).abs() < 1e-6, "{r}");
        let v = StellarSolution::vacuum(&gamma_two());
        assert_eq!(el_residual(&v).unwrap(), 0.0);
    }

    #[test]
    fn subcritical_gamma_is_rejected_and_sentinel_fires() {
        let opts = ShootingOptions::default();
        let e = EquationOfState::polytropic(1.0, 1.3).unwrap();
        assert!(matches!(integrate_theta(&e, 1.0, &opts), Err(Error::Domain(_))));
        let mut tight = opts;
        tight.r_max = 1.0;
        assert!(matches!(
            integrate_theta(&gamma_two(), 1.0, &tight),
            Err(Error::UnboundedSupport { .. })
        ));
        assert!(integrate_theta(&gamma_two(), -1.0, &opts).is_err());
    }

    #[test]
    fn single_precision_solve() {
        let e = EquationOfState::<f32>::polytropic(2.0 * std::f32::consts::PI, 2.0).unwrap();
        let opts = ShootingOptions::<f32> {
            rtol: 1e-5,
            atol: 1e-6,
            event_tol: 1e-6,
            grid_points: 400,
            ..Default::default()
        };
        let s = solve_star(&e, 1.0, &opts).unwrap();
        assert!((s.radius - std::f32::consts::PI).abs() < 1e-3);
        assert!((s.lambda + 1.0).abs() < 1e-3);
    }
}
