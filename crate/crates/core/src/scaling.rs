//! Mass scaling of polytropic equilibria.
//!
//! If `σ` is the unit-mass equilibrium, the mass-`m` equilibrium is
//! `σ_m(x) = σ(x/B)/A` with `A = m^(-2/(3γ-4))` and `B = m^((γ-2)/(3γ-4))`.
//! Potentials and multipliers pick up `m^((2γ-2)/(3γ-4))` and energies
//! `m^((5γ-6)/(3γ-4))`.

use std::io::Write;

use num_traits::{FromPrimitive, Num};

use crate::energetics;
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::format::sig;
use crate::quad;
use crate::real::Real;
use crate::shooting::{self, ShootingOptions, StellarSolution, ThetaProfile};

/// Relative agreement required between a rescaled profile's recomputed
/// quantities and the exponent-law predictions.
const RESCALE_TOL: f64 = 1e-9;

/// Exponents of `m` in the scaling laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleExponents<Q> {
    /// Exponent of the density divisor `A`: `-2/(3γ-4)`.
    pub density_divisor: Q,
    /// Radius exponent `(γ-2)/(3γ-4)`.
    pub radius: Q,
    /// Energy exponent `(5γ-6)/(3γ-4)`.
    pub energy: Q,
    /// Multiplier and variational-derivative exponent `(2γ-2)/(3γ-4)`.
    pub multiplier: Q,
}

impl<Q> ScaleExponents<Q>
where
    Q: Clone + Num + PartialOrd + FromPrimitive,
{
    /// Works for floats and for exact rationals such as `Ratio<i64>`.
    pub fn new(gamma: Q) -> Result<Self> {
        let int = |k: i32| Q::from_i32(k).expect("small integer");
        let den = int(3) * gamma.clone() - int(4);
        let tiny = Q::from_f64(1e-12).unwrap_or_else(Q::zero);
        if den == Q::zero() || (den < tiny && Q::zero() - den.clone() < tiny) {
            return Err(Error::SingularExponent);
        }
        if den < Q::zero() {
            return Err(Error::domain("scaling laws need gamma > 4/3"));
        }
        Ok(Self {
            density_divisor: Q::zero() - int(2) / den.clone(),
            radius: (gamma.clone() - int(2)) / den.clone(),
            energy: (int(5) * gamma.clone() - int(6)) / den.clone(),
            multiplier: (int(2) * gamma - int(2)) / den,
        })
    }

    /// Central density exponent `2/(3γ-4)`.
    pub fn central_density(&self) -> Q {
        Q::zero() - self.density_divisor.clone()
    }
}

pub fn scale_exponents<T: Real>(gamma: T) -> Result<ScaleExponents<T>> {
    if !gamma.is_finite() {
        return Err(Error::domain("gamma must be finite"));
    }
    ScaleExponents::new(gamma)
}

/// `ratio^exponent` evaluated in log space.
pub fn mass_power<T: Real>(ratio: T, exponent: T) -> T {
    (exponent * ratio.ln()).exp()
}

fn polytropic_gamma<T: Real>(eos: &EquationOfState<T>) -> Result<T> {
    eos.gamma()
        .ok_or_else(|| Error::domain("scaling laws apply to polytropic equations of state only"))
}

fn relative_gap<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / b.abs().max(T::min_positive_value())
}

/// Carries an equilibrium to mass `m_target` by the dilation law, recomputes
/// every derived field, and checks them against the exponent predictions.
pub fn rescale_solution<T: Real>(sol: &StellarSolution<T>, m_target: T) -> Result<StellarSolution<T>> {
    if !(sol.mass > T::zero()) || !(m_target > T::zero()) {
        return Err(Error::domain("rescaling needs positive source and target masses"));
    }
    let gamma = polytropic_gamma(&sol.eos)?;
    let ex = scale_exponents(gamma)?;
    let ratio = m_target / sol.mass;
    let b = mass_power(ratio, ex.radius);
    let level = mass_power(ratio, ex.multiplier);
    let energy = mass_power(ratio, ex.energy);
    let src = &sol.theta;
    let theta = ThetaProfile {
        beta: src.beta * level,
        r: src.r.iter().map(|&x| x * b).collect(),
        theta: src.theta.iter().map(|&t| t * level).collect(),
        theta_prime: src.theta_prime.iter().map(|&t| t * level / b).collect(),
        radius: src.radius * b,
    };
    let tol = T::lit(RESCALE_TOL);
    let out = StellarSolution::assemble(&sol.eos, theta, tol.max(T::epsilon() * T::lit(1e4)))?;
    let checks = [
        ("radius", out.radius, sol.radius * b),
        ("mass", out.mass, m_target),
        ("lambda", out.lambda, sol.lambda * level),
        ("E0", out.energies.e0, sol.energies.e0 * energy),
        ("U", out.energies.u, sol.energies.u * energy),
    ];
    let tol = tol.max(T::epsilon() * T::lit(1e4));
    for (name, got, predicted) in checks {
        if relative_gap(got, predicted) > tol {
            return Err(Error::Consistency(format!(
                "rescaled {name} = {got} disagrees with exponent law {predicted}"
            )));
        }
    }
    Ok(out)
}

/// `λ_m = -(5γ-6) m^((2γ-2)/(3γ-4)) U₁` with `U₁` the unit-mass internal energy.
pub fn predicted_multiplier<T: Real>(gamma: T, m: T, u_unit: T) -> Result<T> {
    let ex = scale_exponents(gamma)?;
    if m.is_nan() || m < T::zero() {
        return Err(Error::domain("mass must be nonnegative"));
    }
    if m == T::zero() {
        return Ok(T::zero());
    }
    Ok(-(T::lit(5.0) * gamma - T::lit(6.0)) * mass_power(m, ex.multiplier) * u_unit)
}

/// Behaviour of the support radius as `m → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusTrend {
    Shrinks,
    Fixed,
    Grows,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsReport<T> {
    pub gamma: T,
    /// Central density `∝ m^central_density_exponent`, vanishing as `m → 0`.
    pub central_density_exponent: T,
    /// Support radius `∝ m^radius_exponent`.
    pub radius_exponent: T,
    pub radius_trend: RadiusTrend,
}

pub fn asymptotics_report<T: Real>(gamma: T) -> Result<AsymptoticsReport<T>> {
    let ex = scale_exponents(gamma)?;
    let radius_trend = if ex.radius > T::zero() {
        RadiusTrend::Shrinks
    } else if ex.radius < T::zero() {
        RadiusTrend::Grows
    } else {
        RadiusTrend::Fixed
    };
    Ok(AsymptoticsReport {
        gamma,
        central_density_exponent: ex.central_density(),
        radius_exponent: ex.radius,
        radius_trend,
    })
}

/// Sup-norm relative gap between the variational derivative of an
/// independently solved mass-`m_target` equilibrium and the exponent-law
/// image `m^((2γ-2)/(3γ-4)) E₀'(σ)(x/B)` of the source field.
pub fn rescaled_derivative_check<T: Real>(
    sol: &StellarSolution<T>,
    m_target: T,
    opts: &ShootingOptions<T>,
) -> Result<T> {
    if !(sol.mass > T::zero()) || !(m_target > T::zero()) {
        return Err(Error::domain("derivative check needs positive masses"));
    }
    let gamma = polytropic_gamma(&sol.eos)?;
    let ex = scale_exponents(gamma)?;
    let target = if m_target == sol.mass {
        sol.clone()
    } else {
        let beta = shooting::beta_of_mass(&sol.eos, m_target, None, opts)?;
        shooting::solve_star(&sol.eos, beta, opts)?
    };
    let ratio = m_target / sol.mass;
    let b = mass_power(ratio, ex.radius);
    let level = mass_power(ratio, ex.multiplier);
    let src_field = energetics::variational_derivative_field(&sol.eos, &sol.density)?;
    let dst_field = energetics::variational_derivative_field(&target.eos, &target.density)?;
    let src_at = |x: T| -> T {
        if x >= sol.radius {
            -sol.mass / x
        } else {
            quad::interpolate(sol.density.r(), &src_field, x)
        }
    };
    let mut worst = T::zero();
    let mut scale = T::zero();
    for (&x, &f) in target.density.r().iter().zip(&dst_field) {
        worst = worst.max((f - level * src_at(x / b)).abs());
        scale = scale.max(f.abs());
    }
    Ok(worst / scale.max(T::min_positive_value()))
}

/// One row of a mass sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub gamma: T,
    pub m: T,
    pub beta: T,
    pub radius: T,
    pub mass: T,
    pub lambda: T,
    pub u: T,
    pub g: T,
    pub e0: T,
}

/// Solves the equilibrium of mass `m` and summarises it.
pub fn sweep_row<T: Real>(eos: &EquationOfState<T>, m: T, opts: &ShootingOptions<T>) -> Result<SweepRow<T>> {
    let gamma = polytropic_gamma(eos)?;
    let beta = shooting::beta_of_mass(eos, m, None, opts)?;
    let sol = shooting::solve_star(eos, beta, opts)?;
    Ok(SweepRow {
        gamma,
        m,
        beta,
        radius: sol.radius,
        mass: sol.mass,
        lambda: sol.lambda,
        u: sol.energies.u,
        g: sol.energies.g,
        e0: sol.energies.e0,
    })
}

/// Geometric mass grid from `m_min` to `m_max` inclusive.
pub fn geometric_masses<T: Real>(m_min: T, m_max: T, points: usize) -> Result<Vec<T>> {
    if !(m_min > T::zero()) || !(m_max >= m_min) || points == 0 {
        return Err(Error::domain("mass range must be positive and ordered with at least one point"));
    }
    if points == 1 {
        return Ok(vec![m_min]);
    }
    let (lo, hi) = (m_min.ln(), m_max.ln());
    let last = T::lit((points - 1) as f64);
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                m_max
            } else {
                (lo + (hi - lo) * T::lit(i as f64) / last).exp()
            }
        })
        .collect())
}

pub fn sweep<T: Real>(eos: &EquationOfState<T>, masses: &[T], opts: &ShootingOptions<T>) -> Result<Vec<SweepRow<T>>> {
    masses.iter().map(|&m| sweep_row(eos, m, opts)).collect()
}

/// Writes `gamma,m,beta,R,M,lambda,U,G,E0` rows with 12 significant digits.
pub fn write_sweep_csv<T: Real, W: Write>(rows: &[SweepRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "m", "beta", "R", "M", "lambda", "U", "G", "E0"])?;
    for r in rows {
        let fields = [r.gamma, r.m, r.beta, r.radius, r.mass, r.lambda, r.u, r.g, r.e0];
        w.write_record(fields.iter().map(|x| sig(x.as_f64(), 12)))?;
    }
    w.flush()?;
    Ok(())
}
