//! Potential theory for spherically symmetric densities.
//!
//! With `m(r) = 4π ∫_0^r σ(t) t² dt`, the potential of a radial density is
//! `V(r) = m(r)/r + 4π ∫_r^∞ t σ(t) dt`, its gradient is `-m(r)/r²`, and the
//! self-interaction reduces to `G(σ, σ) = 8π ∫ m(r) σ(r) r dr`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::format::sig;
use crate::quad::{self, gauss_legendre, legendre};
use crate::real::Real;

/// Radial density samples on a grid starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity<T> {
    r: Vec<T>,
    sigma: Vec<T>,
    mass: T,
    relaxed: bool,
}

fn four_pi<T: Real>() -> T {
    T::lit(4.0) * T::PI()
}

impl<T: Real> RadialDensity<T> {
    /// Equilibrium-shaped density: nonnegative, radially nonincreasing, and
    /// vanishing at the last grid point.
    pub fn new(r: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        let d = Self::build(r, sigma, false)?;
        let peak = d.sigma[0];
        let slack = peak * T::lit(1e-12);
        if d.sigma.windows(2).any(|w| w[1] > w[0] + slack) {
            return Err(Error::domain("density must be radially nonincreasing (use `relaxed`)"));
        }
        if *d.sigma.last().unwrap() > slack {
            return Err(Error::domain("density must vanish at the support radius (use `relaxed`)"));
        }
        Ok(d)
    }

    /// Any nonnegative density; the value at the last grid point is treated as
    /// the inner limit at the support radius and zero beyond it.
    pub fn relaxed(r: Vec<T>, sigma: Vec<T>) -> Result<Self> {
        Self::build(r, sigma, true)
    }

    fn build(r: Vec<T>, sigma: Vec<T>, relaxed: bool) -> Result<Self> {
        if r.len() != sigma.len() || r.is_empty() {
            return Err(Error::domain("radial grid and density must be non-empty and equally long"));
        }
        if r[0] != T::zero() {
            return Err(Error::domain("radial grid must start at the origin"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("radial grid must be finite and strictly increasing"));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return Err(Error::domain("density must be finite and nonnegative"));
        }
        let integrand: Vec<T> = r.iter().zip(&sigma).map(|(&x, &s)| four_pi::<T>() * s * x * x).collect();
        let mass = quad::integrate(&r, &integrand);
        Ok(Self {
            r,
            sigma,
            mass,
            relaxed,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            r: vec![T::zero()],
            sigma: vec![T::zero()],
            mass: T::zero(),
            relaxed: false,
        }
    }

    /// Uniform ball of the given mass and radius on an `n`-point grid.
    pub fn uniform_ball(mass: T, radius: T, n: usize) -> Result<Self> {
        if !(radius > T::zero()) || mass < T::zero() {
            return Err(Error::domain("uniform ball needs positive radius and nonnegative mass"));
        }
        let rho = mass / (four_pi::<T>() / T::lit(3.0) * radius.powi(3));
        let r = quad::uniform_grid(T::zero(), radius, n);
        let sigma = vec![rho; n];
        Self::relaxed(r, sigma)
    }

    pub fn r(&self) -> &[T] {
        &self.r
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn support_radius(&self) -> T {
        *self.r.last().unwrap()
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn is_vacuum(&self) -> bool {
        self.mass == T::zero() && self.sigma.iter().all(|s| *s == T::zero())
    }

    /// `4π ∫ f(r) r² dr` for samples `f` on this grid.
    pub fn volume_integral(&self, f: &[T]) -> T {
        let integrand: Vec<T> = self.r.iter().zip(f).map(|(&x, &v)| four_pi::<T>() * v * x * x).collect();
        quad::integrate(&self.r, &integrand)
    }

    /// Density at radius `x`, zero outside the support.
    pub fn density_at(&self, x: T) -> T {
        if x > self.support_radius() || self.r.len() == 1 {
            return T::zero();
        }
        quad::interpolate(&self.r, &self.sigma, x).max(T::zero())
    }

    /// Mass-preserving dilation `σ_δ(x) = δ⁻³ σ(x/δ)`.
    pub fn dilate(&self, delta: T) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::domain("dilation factor must be positive"));
        }
        let cube = delta * delta * delta;
        let r = self.r.iter().map(|&x| x * delta).collect();
        let sigma = self.sigma.iter().map(|&s| s / cube).collect();
        Self::build(r, sigma, self.relaxed)
    }

    /// Pointwise multiple of the density on the same grid.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let sigma = self.sigma.iter().map(|&s| s * factor).collect();
        Self::build(self.r.clone(), sigma, self.relaxed)
    }

    /// Writes `r,sigma,mass,V` rows with 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = cumulative_mass(self);
        let v = potential_profile(self);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "sigma", "mass", "V"])?;
        for (((x, s), mass), pot) in self.r.iter().zip(&self.sigma).zip(&m).zip(&v.v) {
            w.write_record([
                sig(x.as_f64(), 12),
                sig(s.as_f64(), 12),
                sig(mass.as_f64(), 12),
                sig(pot.as_f64(), 12),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Potential samples with the exterior point-mass tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile<T> {
    pub r: Vec<T>,
    pub v: Vec<T>,
    pub v_at_zero: T,
    /// Exterior coefficient: `V(r) = mass / r` beyond the support.
    pub mass: T,
}

impl<T: Real> PotentialProfile<T> {
    pub fn support_radius(&self) -> T {
        *self.r.last().unwrap()
    }

    /// Potential at any radius.
    pub fn at(&self, x: T) -> T {
        if x >= self.support_radius() {
            if x == T::zero() {
                return self.v_at_zero;
            }
            return self.mass / x;
        }
        quad::interpolate(&self.r, &self.v, x)
    }
}

/// `m(r_i)` on the density grid.
pub fn cumulative_mass<T: Real>(d: &RadialDensity<T>) -> Vec<T> {
    let integrand: Vec<T> = d.r.iter().zip(&d.sigma).map(|(&x, &s)| four_pi::<T>() * s * x * x).collect();
    quad::cumulative(&d.r, &integrand)
}

/// `m(r)` at any radius.
pub fn mass_within<T: Real>(d: &RadialDensity<T>, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= d.support_radius() {
        return d.mass;
    }
    quad::interpolate(&d.r, &cumulative_mass(d), x).max(T::zero())
}

pub fn potential_profile<T: Real>(d: &RadialDensity<T>) -> PotentialProfile<T> {
    let m = cumulative_mass(d);
    let integrand: Vec<T> = d.r.iter().zip(&d.sigma).map(|(&x, &s)| four_pi::<T>() * s * x).collect();
    let outer = quad::cumulative(&d.r, &integrand);
    let total = *outer.last().unwrap();
    let v: Vec<T> = (0..d.r.len())
        .map(|i| {
            let tail = total - outer[i];
            if d.r[i] == T::zero() {
                tail
            } else {
                m[i] / d.r[i] + tail
            }
        })
        .collect();
    PotentialProfile {
        v_at_zero: total,
        r: d.r.clone(),
        v,
        mass: m.last().copied().unwrap_or_else(T::zero),
    }
}

/// `dV/dr = -m(r)/r²`, exactly zero at the origin.
pub fn potential_gradient<T: Real>(d: &RadialDensity<T>, r: T) -> Result<T> {
    if r.is_nan() || r < T::zero() {
        return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
    }
    if r == T::zero() {
        return Ok(T::zero());
    }
    Ok(-mass_within(d, r) / (r * r))
}

/// Potential `M/x` at or beyond the support radius.
pub fn exterior_potential<T: Real>(d: &RadialDensity<T>, x: T) -> Result<T> {
    if !(x >= d.support_radius()) || x == T::zero() {
        return Err(Error::domain(format!(
            "distance {x} lies inside the support radius {}; use potential_profile",
            d.support_radius()
        )));
    }
    Ok(d.mass / x)
}

/// `G(σ, σ) = 8π ∫ m(r) σ(r) r dr`.
pub fn interaction_energy<T: Real>(d: &RadialDensity<T>) -> T {
    let m = cumulative_mass(d);
    let integrand: Vec<T> = (0..d.r.len())
        .map(|i| T::lit(8.0) * T::PI() * m[i] * d.sigma[i] * d.r[i])
        .collect();
    quad::integrate(&d.r, &integrand)
}

/// Mutual energy `m₁ m₂ / D` of two non-overlapping spherical bodies.
pub fn two_sphere_energy<T: Real>(d1: &RadialDensity<T>, d2: &RadialDensity<T>, separation: T) -> Result<T> {
    let reach = d1.support_radius() + d2.support_radius();
    if !(separation >= reach) || !(separation > T::zero()) {
        return Err(Error::domain(format!(
            "bodies overlap: separation {separation} is below the sum of radii {reach}"
        )));
    }
    Ok(d1.mass * d2.mass / separation)
}

/// Term-by-term evaluation of the mutual energy.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualEnergy<T> {
    /// Sum of all retained multipole terms.
    pub total: T,
    /// Contribution of each Legendre order `0..=l_max`.
    pub terms: Vec<T>,
}

/// Number of angular Gauss–Legendre nodes for the multipole integrals.
const ANGULAR_NODES: usize = 32;

/// Mutual energy from the Legendre expansion of `1/|x - D|` about the centre
/// of the first body, after replacing the second body by its exterior field.
///
/// Term `ℓ` is `(m₂/D) ∫ ρ₁(x) (|x|/D)^ℓ P_ℓ(cos γ) dx`, integrated over a
/// radial grid times an angular Gauss–Legendre rule.
pub fn mutual_energy_quadrature<T: Real>(
    d1: &RadialDensity<T>,
    d2: &RadialDensity<T>,
    separation: T,
    l_max: usize,
) -> Result<MutualEnergy<T>> {
    let reach = d1.support_radius() + d2.support_radius();
    if !(separation > reach) {
        return Err(Error::domain(format!(
            "expansion needs separation {separation} above the sum of radii {reach}"
        )));
    }
    let (mu, w) = gauss_legendre::<T>(ANGULAR_NODES.max(l_max + 2));
    let m2 = d2.mass;
    let prefactor = m2 / separation * T::lit(2.0) * T::PI();
    let mut terms = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let radial: Vec<T> = d1
            .r
            .iter()
            .zip(&d1.sigma)
            .map(|(&x, &s)| s * x * x * (x / separation).powi(l as i32))
            .collect();
        let radial = quad::integrate(&d1.r, &radial);
        let angular = mu
            .iter()
            .zip(&w)
            .fold(T::zero(), |acc, (&m, &wt)| acc + wt * legendre(l, m));
        let term = prefactor * radial * angular;
        if !term.is_finite() {
            return Err(Error::Quadrature {
                a: 0.0,
                b: d1.support_radius().as_f64(),
                estimate: term.as_f64(),
                error: f64::NAN,
            });
        }
        terms.push(term);
    }
    let total = terms.iter().fold(T::zero(), |a, &b| a + b);
    Ok(MutualEnergy { total, terms })
}
