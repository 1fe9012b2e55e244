//! Equilibria of non-rotating self-gravitating gaseous stars.
//!
//! The crate solves the radial equilibrium problem `A'(σ) = [V_σ + λ]_+` for
//! polytropic and tabulated pressure laws by outward shooting, evaluates the
//! energy functional `E₀ = U - G/2`, and checks the identities that tie
//! energies, multipliers, radii and central densities together across masses.
//! An independent damped fixed-point minimizer cross-checks the shooting
//! solutions.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the tolerances are tuned for.
//! Units set the gravitational constant to one.
//!
//! # Modules
//!
//! - [`eos`]: pressure laws and the kernels `A`, `A'`, `A''`, `φ`.
//! - [`radial`]: mass, potential, and interaction energies of radial densities.
//! - [`shooting`]: the `Θ` equation, equilibrium assembly, mass/central-value maps.
//! - [`energetics`]: `U`, `G`, `E₀` and the virial identities.
//! - [`scaling`]: exponent laws relating equilibria of different mass.
//! - [`varmin`]: the fixed-point energy minimizer and collapse demonstrators.
//! - [`io`]: JSON and CSV documents.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energetics;
pub mod eos;
pub mod error;
pub mod format;
pub mod io;
pub mod ode;
pub mod quad;
pub mod radial;
pub mod real;
pub mod scaling;
pub mod shooting;
pub mod varmin;

pub use energetics::{EnergyReport, VirialResiduals};
pub use eos::{AssumptionReport, EosKind, EquationOfState, Verdict};
pub use error::{Error, Result};
pub use radial::{MutualEnergy, PotentialProfile, RadialDensity};
pub use real::Real;
pub use scaling::{AsymptoticsReport, RadiusTrend, ScaleExponents};
pub use shooting::{ShootingOptions, StellarSolution, ThetaProfile};
pub use varmin::{DiscreteDensity, FixedPointOptions, IterationRecord, Minimization};

pub type Eos = EquationOfState<f64>;
pub type Density = RadialDensity<f64>;
pub type Potential = PotentialProfile<f64>;
pub type Theta = ThetaProfile<f64>;
pub type Solution = StellarSolution<f64>;
pub type Energies = EnergyReport<f64>;
pub type Exponents = ScaleExponents<f64>;
/// Exact exponents for rational adiabatic indices.
pub type RationalExponents = ScaleExponents<num_rational::Ratio<i64>>;
pub type Grid = DiscreteDensity<f64>;
