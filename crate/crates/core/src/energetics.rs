//! Energy functionals `U`, `G`, `E₀ = U - G/2` and the identities that hold
//! between them at equilibrium.

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::radial::{self, RadialDensity};
use crate::real::Real;
use crate::shooting::{self, StellarSolution};

/// Relative residuals of the polytropic virial identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialResiduals<T> {
    /// `|G - (6γ-6)U| / |U|`.
    pub interaction: T,
    /// `|E₀ - (4-3γ)U| / |U|`.
    pub total: T,
    /// `|λ - (6-5γ)U/M| / |(6-5γ)U/M|`, i.e. the multiplier of the unit-mass
    /// star `(6-5γ)U₁` carried to mass `M` by the scaling law.
    pub multiplier: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport<T> {
    pub u: T,
    pub g: T,
    pub e0: T,
    /// `∫(4A(σ) - 3σA'(σ))`.
    pub e0_pohozaev: T,
    /// `|E₀ - E₀_pohozaev| / |U|`.
    pub pohozaev_residual: T,
    /// Only defined for polytropic laws.
    pub virial: Option<VirialResiduals<T>>,
    pub el_residual: T,
}

impl<T: Real> EnergyReport<T> {
    pub fn vacuum() -> Self {
        Self {
            u: T::zero(),
            g: T::zero(),
            e0: T::zero(),
            e0_pohozaev: T::zero(),
            pohozaev_residual: T::zero(),
            virial: Some(VirialResiduals {
                interaction: T::zero(),
                total: T::zero(),
                multiplier: T::zero(),
            }),
            el_residual: T::zero(),
        }
    }

    /// Largest of all identity residuals.
    pub fn worst_residual(&self) -> T {
        let mut worst = self.pohozaev_residual;
        if let Some(v) = self.virial {
            worst = worst.max(v.interaction).max(v.total).max(v.multiplier);
        }
        worst
    }
}

fn sampled<T: Real>(d: &RadialDensity<T>, f: impl Fn(T) -> Result<T>) -> Result<Vec<T>> {
    d.sigma().iter().map(|&s| f(s)).collect()
}

/// `U = 4π ∫ A(σ) r² dr`.
pub fn internal_energy<T: Real>(eos: &EquationOfState<T>, d: &RadialDensity<T>) -> Result<T> {
    let a = sampled(d, |s| eos.internal_energy_density(s))?;
    Ok(d.volume_integral(&a))
}

/// `E₀ = U - G/2`.
pub fn total_energy<T: Real>(eos: &EquationOfState<T>, d: &RadialDensity<T>) -> Result<T> {
    Ok(internal_energy(eos, d)? - radial::interaction_energy(d) / T::lit(2.0))
}

/// `∫(4A(σ) - 3σA'(σ))`, equal to `E₀` for equilibria only.
pub fn pohozaev_energy<T: Real>(eos: &EquationOfState<T>, d: &RadialDensity<T>) -> Result<T> {
    let g = sampled(d, |s| eos.g_profile(s))?;
    Ok(d.volume_integral(&g))
}

fn floored<T: Real>(x: T) -> T {
    x.abs().max(T::epsilon())
}

/// Energies and identity residuals for a solved star.
pub fn virial_report<T: Real>(sol: &StellarSolution<T>) -> Result<EnergyReport<T>> {
    if sol.is_vacuum() {
        return Ok(EnergyReport::vacuum());
    }
    let eos = &sol.eos;
    let d = &sol.density;
    let u = internal_energy(eos, d)?;
    let g = radial::interaction_energy(d);
    let e0 = u - g / T::lit(2.0);
    let e0_pohozaev = pohozaev_energy(eos, d)?;
    let scale = floored(u);
    let virial = eos.gamma().map(|gamma| {
        let (three, four, five, six) = (T::lit(3.0), T::lit(4.0), T::lit(5.0), T::lit(6.0));
        let predicted_lambda = (six - five * gamma) * u / sol.mass;
        VirialResiduals {
            interaction: (g - (six * gamma - six) * u).abs() / scale,
            total: (e0 - (four - three * gamma) * u).abs() / scale,
            multiplier: (sol.lambda - predicted_lambda).abs() / floored(predicted_lambda),
        }
    });
    Ok(EnergyReport {
        u,
        g,
        e0,
        e0_pohozaev,
        pohozaev_residual: (e0 - e0_pohozaev).abs() / scale,
        virial,
        el_residual: shooting::el_residual(sol)?,
    })
}

/// `E₀'(ρ)(r) = A'(σ(r)) - V(r)` on the density grid.
pub fn variational_derivative_field<T: Real>(eos: &EquationOfState<T>, d: &RadialDensity<T>) -> Result<Vec<T>> {
    let v = radial::potential_profile(d);
    d.sigma()
        .iter()
        .zip(&v.v)
        .map(|(&s, &pot)| Ok(eos.a_prime(s)? - pot))
        .collect()
}

/// Scale-invariant ratio `|∫ρV_ρ| / (‖ρ‖₁^(2/3) ∫ρ^(4/3))`.
pub fn hls_ratio<T: Real>(d: &RadialDensity<T>) -> Result<T> {
    if d.is_vacuum() || d.mass() == T::zero() {
        return Err(Error::domain("ratio is undefined for the zero density"));
    }
    let four_thirds = T::lit(4.0) / T::lit(3.0);
    let p: Vec<T> = d.sigma().iter().map(|&s| s.powf(four_thirds)).collect();
    let norm = d.volume_integral(&p);
    let g = radial::interaction_energy(d);
    Ok(g.abs() / (d.mass().powf(T::lit(2.0) / T::lit(3.0)) * norm))
}
