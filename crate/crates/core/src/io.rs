//! JSON documents for solved stars.
//!
//! Numbers are written with 17 significant digits, non-finite values and
//! undefined residuals as `null`. Field order is fixed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::format::sig;
use crate::real::Real;
use crate::shooting::{StellarSolution, ThetaProfile};

/// Relative tolerance used when re-assembling a star from its document.
const RELOAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(Option<f64>);

impl Num {
    fn of<T: Real>(x: T) -> Self {
        let v = x.as_f64();
        Num(v.is_finite().then_some(v))
    }

    fn some<T: Real>(x: Option<T>) -> Self {
        x.map(Num::of).unwrap_or(Num(None))
    }

    fn need(self, field: &str) -> Result<f64> {
        self.0.ok_or_else(|| Error::Parse(format!("field `{field}` must be a number")))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => RawValue::from_string(sig(v, 17)).map_err(S::Error::custom)?.serialize(s),
            None => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Option::<f64>::deserialize(d).map(Num)
    }
}

#[derive(Serialize, Deserialize)]
struct ResidualsDoc {
    #[serde(rename = "G")]
    interaction: Num,
    #[serde(rename = "E0")]
    total: Num,
    lambda: Num,
    pohozaev: Num,
    el: Num,
}

#[derive(Serialize, Deserialize)]
struct EnergiesDoc {
    #[serde(rename = "U")]
    u: Num,
    #[serde(rename = "G")]
    g: Num,
    #[serde(rename = "E0")]
    e0: Num,
    #[serde(rename = "E0_pohozaev")]
    e0_pohozaev: Num,
    virial_residuals: ResidualsDoc,
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    r: Num,
    theta: Num,
    sigma: Num,
    mass: Num,
    #[serde(rename = "V")]
    v: Num,
}

#[derive(Serialize, Deserialize)]
struct SolutionDoc {
    gamma: Num,
    #[serde(rename = "K")]
    k: Num,
    beta: Num,
    #[serde(rename = "R")]
    radius: Num,
    #[serde(rename = "M")]
    mass: Num,
    lambda: Num,
    energies: EnergiesDoc,
    profile: Vec<ProfileRow>,
}

fn document<T: Real>(sol: &StellarSolution<T>) -> SolutionDoc {
    let e = &sol.energies;
    let virial = e.virial;
    let profile = (0..sol.density.r().len())
        .map(|i| ProfileRow {
            r: Num::of(sol.density.r()[i]),
            theta: Num::of(sol.theta.theta[i]),
            sigma: Num::of(sol.density.sigma()[i]),
            mass: Num::of(sol.mass_profile[i]),
            v: Num::of(sol.potential.v[i]),
        })
        .collect();
    SolutionDoc {
        gamma: Num::some(sol.eos.gamma()),
        k: Num::some(sol.eos.k()),
        beta: Num::of(sol.beta),
        radius: Num::of(sol.radius),
        mass: Num::of(sol.mass),
        lambda: Num::of(sol.lambda),
        energies: EnergiesDoc {
            u: Num::of(e.u),
            g: Num::of(e.g),
            e0: Num::of(e.e0),
            e0_pohozaev: Num::of(e.e0_pohozaev),
            virial_residuals: ResidualsDoc {
                interaction: Num::some(virial.map(|v| v.interaction)),
                total: Num::some(virial.map(|v| v.total)),
                lambda: Num::some(virial.map(|v| v.multiplier)),
                pohozaev: Num::of(e.pohozaev_residual),
                el: Num::of(e.el_residual),
            },
        },
        profile,
    }
}

/// Serializes a solution as pretty-printed JSON.
pub fn solution_to_json<T: Real>(sol: &StellarSolution<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&document(sol))?)
}

pub fn write_solution<T: Real, W: Write>(sol: &StellarSolution<T>, mut out: W) -> Result<()> {
    out.write_all(solution_to_json(sol)?.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_solution_path<T: Real>(sol: &StellarSolution<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_solution(sol, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Rebuilds a polytropic solution from its document; every derived field is
/// recomputed from the stored `Θ` profile and enclosed masses.
pub fn read_solution<T: Real, R: Read>(input: R) -> Result<StellarSolution<T>> {
    let doc: SolutionDoc = serde_json::from_reader(input)?;
    let eos = EquationOfState::polytropic(T::lit(doc.k.need("K")?), T::lit(doc.gamma.need("gamma")?))?;
    rebuild(doc, &eos)
}

/// Rebuilds a solution under a caller-supplied pressure law.
pub fn read_solution_with_eos<T: Real, R: Read>(input: R, eos: &EquationOfState<T>) -> Result<StellarSolution<T>> {
    let doc: SolutionDoc = serde_json::from_reader(input)?;
    rebuild(doc, eos)
}

pub fn read_solution_path<T: Real>(path: impl AsRef<Path>) -> Result<StellarSolution<T>> {
    read_solution(BufReader::new(File::open(path)?))
}

fn rebuild<T: Real>(doc: SolutionDoc, eos: &EquationOfState<T>) -> Result<StellarSolution<T>> {
    let beta = T::lit(doc.beta.need("beta")?);
    if beta == T::zero() {
        return Ok(StellarSolution::vacuum(eos));
    }
    let n = doc.profile.len();
    if n < 2 {
        return Err(Error::Parse("profile needs at least two rows".into()));
    }
    let mut r = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut theta_prime = Vec::with_capacity(n);
    for row in &doc.profile {
        let x = T::lit(row.r.need("r")?);
        let m = T::lit(row.mass.need("mass")?);
        r.push(x);
        theta.push(T::lit(row.theta.need("theta")?));
        theta_prime.push(if x > T::zero() { -m / (x * x) } else { T::zero() });
    }
    let radius = T::lit(doc.radius.need("R")?);
    let profile = ThetaProfile {
        beta,
        r,
        theta,
        theta_prime,
        radius,
    };
    StellarSolution::assemble(eos, profile, T::lit(RELOAD_TOL))
}
