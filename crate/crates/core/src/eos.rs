//! Pressure laws and the thermodynamic kernels derived from them.
//!
//! For a pressure `P(s)` the internal energy density is
//! `A(s) = s ∫_0^s P(τ) τ⁻² dτ`, with `A'(s) s - A(s) = P(s)` and
//! `A''(s) = P'(s) / s`. The inverse `φ = (A')⁻¹` maps a potential level back
//! to a density and drives the radial equilibrium equation.

use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::real::Real;

/// Exponent of the `τ = s u^q` substitution used to tame the origin of `P(τ)/τ²`.
const SUBSTITUTION_POWER: i32 = 4;

/// Default relative tolerance for quadrature of the internal energy integral.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// Pressure law.
#[derive(Debug, Clone, PartialEq)]
pub enum EosKind<T> {
    /// `P(s) = K s^γ`.
    Polytropic { k: T, gamma: T },
    /// Monotone cubic Hermite interpolation of `(s_i, P_i)` samples.
    Tabulated(Table<T>),
}

/// Tabulated pressure samples with monotone Hermite slopes and cached
/// knot values of `∫_0^{s_i} P(τ)τ⁻² dτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    s: Vec<T>,
    p: Vec<T>,
    slope: Vec<T>,
    knot_integral: Vec<T>,
}

impl<T: Real> Table<T> {
    pub fn densities(&self) -> &[T] {
        &self.s
    }

    pub fn pressures(&self) -> &[T] {
        &self.p
    }

    pub fn max_density(&self) -> T {
        *self.s.last().expect("non-empty table")
    }

    fn segment(&self, s: T) -> usize {
        let n = self.s.len();
        match self.s.iter().position(|&x| x > s) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        }
    }

    fn eval(&self, s: T) -> (T, T) {
        let k = self.segment(s);
        let h = self.s[k + 1] - self.s[k];
        let t = (s - self.s[k]) / h;
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = two * t3 - three * t2 + one;
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        let p = h00 * self.p[k] + h10 * h * self.slope[k] + h01 * self.p[k + 1] + h11 * h * self.slope[k + 1];
        let six = T::lit(6.0);
        let dh00 = (six * t2 - six * t) / h;
        let dh10 = three * t2 - T::lit(4.0) * t + one;
        let dh01 = (six * t - six * t2) / h;
        let dh11 = three * t2 - two * t;
        let dp = dh00 * self.p[k] + dh10 * self.slope[k] + dh01 * self.p[k + 1] + dh11 * self.slope[k + 1];
        (p.max(T::zero()), dp)
    }
}

/// Fritsch–Butland monotone slopes, with the slope at the origin pinned to zero.
fn monotone_slopes<T: Real>(s: &[T], p: &[T]) -> Vec<T> {
    let n = s.len();
    let h: Vec<T> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|k| (p[k + 1] - p[k]) / h[k]).collect();
    let mut d = vec![T::zero(); n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b <= T::zero() {
            continue;
        }
        let w1 = T::lit(2.0) * h[k] + h[k - 1];
        let w2 = h[k] + T::lit(2.0) * h[k - 1];
        d[k] = (w1 + w2) / (w1 / a + w2 / b);
    }
    let last = n - 1;
    d[last] = if n == 2 {
        delta[0]
    } else {
        let (h0, h1) = (h[last - 1], h[last - 2]);
        let (d0, d1) = (delta[last - 1], delta[last - 2]);
        let mut e = ((T::lit(2.0) * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if e * d0 <= T::zero() {
            e = T::zero();
        } else if d0 * d1 <= T::zero() && e.abs() > T::lit(3.0) * d0.abs() {
            e = T::lit(3.0) * d0;
        }
        e
    };
    d
}

/// A pressure law together with the quadrature tolerance used for `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationOfState<T> {
    kind: EosKind<T>,
    quad_tol: T,
}

fn check_density<T: Real>(s: T, what: &str) -> Result<()> {
    if s.is_nan() || s < T::zero() {
        return Err(Error::domain(format!("{what} requires a nonnegative density, got {s}")));
    }
    Ok(())
}

impl<T: Real> EquationOfState<T> {
    /// Polytropic law `P = K s^γ`. Requires `K > 0` and `γ > 1`; exponents at or
    /// below 4/3 are accepted here and rejected by the equilibrium solvers.
    pub fn polytropic(k: T, gamma: T) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::domain(format!("K must be positive, got {k}")));
        }
        if !(gamma > T::one()) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self {
            kind: EosKind::Polytropic { k, gamma },
            quad_tol: T::lit(DEFAULT_QUAD_TOL).max(T::epsilon() * T::lit(64.0)),
        })
    }

    /// Tabulated law from samples with `s_0 = 0`, `P_0 = 0`, strictly increasing
    /// `s` and nondecreasing `P`. Plateaus are accepted so that
    /// [`check_assumptions`](Self::check_assumptions) can report them.
    pub fn tabulated(s: Vec<T>, p: Vec<T>, quad_tol: T) -> Result<Self> {
        if s.len() != p.len() {
            return Err(Error::domain("density and pressure columns differ in length"));
        }
        if s.len() < 2 {
            return Err(Error::domain("table needs at least two rows"));
        }
        if s[0] != T::zero() || p[0] != T::zero() {
            return Err(Error::domain("first table row must be (0, 0)"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("table densities must be strictly increasing"));
        }
        if p.windows(2).any(|w| w[1] < w[0]) || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("table pressures must be finite and nondecreasing"));
        }
        if !(quad_tol > T::zero()) {
            return Err(Error::domain("quadrature tolerance must be positive"));
        }
        let slope = monotone_slopes(&s, &p);
        let mut table = Table {
            s,
            p,
            slope,
            knot_integral: Vec::new(),
        };
        let mut acc = T::zero();
        let mut knots = vec![T::zero()];
        for k in 0..table.s.len() - 1 {
            acc += pressure_over_tau2(&table, table.s[k], table.s[k + 1], quad_tol)?;
            knots.push(acc);
        }
        table.knot_integral = knots;
        Ok(Self {
            kind: EosKind::Tabulated(table),
            quad_tol,
        })
    }

    /// Reads a `s,P` CSV table.
    pub fn from_csv_reader<R: Read>(reader: R, quad_tol: T) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "P" {
            return Err(Error::Parse(format!("expected header \"s,P\", got {:?}", headers)));
        }
        let (mut s, mut p) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<T> {
                rec[i]
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            s.push(parse(0)?);
            p.push(parse(1)?);
        }
        Self::tabulated(s, p, quad_tol)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, quad_tol: T) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, quad_tol)
    }

    pub fn kind(&self) -> &EosKind<T> {
        &self.kind
    }

    pub fn quad_tol(&self) -> T {
        self.quad_tol
    }

    pub fn with_quad_tol(mut self, quad_tol: T) -> Self {
        self.quad_tol = quad_tol;
        self
    }

    /// Adiabatic exponent of a polytropic law.
    pub fn gamma(&self) -> Option<T> {
        match self.kind {
            EosKind::Polytropic { gamma, .. } => Some(gamma),
            EosKind::Tabulated(_) => None,
        }
    }

    pub fn k(&self) -> Option<T> {
        match self.kind {
            EosKind::Polytropic { k, .. } => Some(k),
            EosKind::Tabulated(_) => None,
        }
    }

    /// Largest density for which the law is defined.
    pub fn max_density(&self) -> T {
        match &self.kind {
            EosKind::Polytropic { .. } => T::infinity(),
            EosKind::Tabulated(t) => t.max_density(),
        }
    }

    fn check_range(&self, s: T, what: &str) -> Result<()> {
        check_density(s, what)?;
        if s > self.max_density() {
            return Err(Error::domain(format!(
                "{what}: density {s} beyond tabulated range {}",
                self.max_density()
            )));
        }
        Ok(())
    }

    pub fn pressure(&self, s: T) -> Result<T> {
        self.check_range(s, "pressure")?;
        Ok(match &self.kind {
            EosKind::Polytropic { k, gamma } => *k * s.powf(*gamma),
            EosKind::Tabulated(t) => t.eval(s).0,
        })
    }

    /// `P'(s)`.
    pub fn pressure_derivative(&self, s: T) -> Result<T> {
        self.check_range(s, "pressure derivative")?;
        Ok(match &self.kind {
            EosKind::Polytropic { k, gamma } => *k * *gamma * s.powf(*gamma - T::one()),
            EosKind::Tabulated(t) => t.eval(s).1,
        })
    }

    /// Internal energy density `A(s)`: closed form for polytropes, quadrature
    /// for tables.
    pub fn internal_energy_density(&self, s: T) -> Result<T> {
        self.check_range(s, "internal energy")?;
        match &self.kind {
            EosKind::Polytropic { k, gamma } => Ok(*k / (*gamma - T::one()) * s.powf(*gamma)),
            EosKind::Tabulated(t) => {
                if s == T::zero() {
                    return Ok(T::zero());
                }
                let seg = t.segment(s);
                let partial = pressure_over_tau2(t, t.s[seg], s, self.quad_tol)?;
                Ok(s * (t.knot_integral[seg] + partial))
            }
        }
    }

    /// `A(s)` by direct quadrature of `s ∫_0^s P(τ)τ⁻² dτ`, whatever the kind.
    pub fn internal_energy_density_quadrature(&self, s: T) -> Result<T> {
        self.check_range(s, "internal energy")?;
        if s == T::zero() {
            return Ok(T::zero());
        }
        let tol = self.quad_tol;
        let integral = match &self.kind {
            EosKind::Polytropic { gamma, .. } => {
                let power = substitution_power(*gamma);
                origin_integral(|x| self.pressure(x).unwrap_or(T::nan()), s, tol, power)?
            }
            EosKind::Tabulated(t) => {
                let seg = t.segment(s);
                let mut acc = T::zero();
                for k in 0..seg {
                    acc += pressure_over_tau2(t, t.s[k], t.s[k + 1], tol)?;
                }
                acc + pressure_over_tau2(t, t.s[seg], s, tol)?
            }
        };
        Ok(s * integral)
    }

    /// Marginal internal energy `A'(s) = (A(s) + P(s)) / s`, zero at the origin.
    pub fn a_prime(&self, s: T) -> Result<T> {
        self.check_range(s, "A'")?;
        match &self.kind {
            EosKind::Polytropic { k, gamma } => {
                let g1 = *gamma - T::one();
                Ok(*k * *gamma / g1 * s.powf(g1))
            }
            EosKind::Tabulated(_) => {
                if s == T::zero() {
                    return Ok(T::zero());
                }
                Ok((self.internal_energy_density(s)? + self.pressure(s)?) / s)
            }
        }
    }

    /// `A''(s) = P'(s)/s`, undefined at the origin.
    pub fn a_second(&self, s: T) -> Result<T> {
        if !(s > T::zero()) {
            return Err(Error::domain(format!("A'' requires a positive density, got {s}")));
        }
        Ok(self.pressure_derivative(s)? / s)
    }

    /// `φ = (A')⁻¹`.
    pub fn phi(&self, y: T) -> Result<T> {
        if y.is_nan() || y < T::zero() {
            return Err(Error::domain(format!("phi requires a nonnegative level, got {y}")));
        }
        if y == T::zero() {
            return Ok(T::zero());
        }
        match &self.kind {
            EosKind::Polytropic { k, gamma } => {
                let g1 = *gamma - T::one();
                Ok((g1 * y / (*k * *gamma)).powf(T::one() / g1))
            }
            EosKind::Tabulated(t) => {
                let top = t.max_density();
                if y > self.a_prime(top)? {
                    return Err(Error::domain(format!("phi: level {y} beyond tabulated range")));
                }
                let (mut lo, mut hi) = (T::zero(), top);
                for _ in 0..200 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.a_prime(mid)? < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok((lo + hi) * T::lit(0.5))
            }
        }
    }

    /// `g(s) = 4A(s) - 3sA'(s)`, the integrand of the equilibrium energy.
    pub fn g_profile(&self, s: T) -> Result<T> {
        Ok(T::lit(4.0) * self.internal_energy_density(s)? - T::lit(3.0) * s * self.a_prime(s)?)
    }

    /// `f(s) = A'(s³)`.
    pub fn f_profile(&self, s: T) -> Result<T> {
        check_density(s, "f")?;
        self.a_prime(s * s * s)
    }

    /// Scans the assumptions on the pressure law over `grid`.
    pub fn check_assumptions(&self, grid: &[T]) -> Result<AssumptionReport> {
        if grid.is_empty() || grid.iter().any(|&s| !(s > T::zero())) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sample grid must be positive and strictly increasing"));
        }
        let in_range: Vec<T> = grid.iter().copied().filter(|&s| s <= self.max_density()).collect();

        let mut f1 = Verdict::Pass;
        let mut prev = self.pressure(T::zero())?;
        for &s in &in_range {
            let p = self.pressure(s)?;
            if !(p > prev) {
                f1 = Verdict::Fail;
            }
            prev = p;
        }
        let f4 = if in_range.iter().all(|&s| self.pressure_derivative(s).map(|d| d > T::zero()).unwrap_or(false)) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let (f2, f3) = match &self.kind {
            EosKind::Polytropic { gamma, .. } => {
                let v = if *gamma > T::lit(4.0) / T::lit(3.0) {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                (v, v)
            }
            EosKind::Tabulated(t) => tabulated_limits(t),
        };

        let f_curv: Vec<Option<f64>> = grid.iter().map(|&s| relative_curvature(|x| self.f_profile(x), s)).collect();
        let g_curv: Vec<Option<f64>> = grid
            .iter()
            .map(|&s| relative_curvature(|x| self.g_profile(x), s))
            .collect();
        let f_min = f_curv.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let g_max = g_curv.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let f_convex = curvature_verdict(f_min, f_curv.iter().flatten().count());
        let g_concave = curvature_verdict(-g_max, g_curv.iter().flatten().count());
        let f_positive_near_zero = match f_curv.first().copied().flatten() {
            Some(q) if q > CURVATURE_TOL => Verdict::Pass,
            Some(q) if q < -CURVATURE_TOL => Verdict::Fail,
            _ => Verdict::Inconclusive,
        };
        Ok(AssumptionReport {
            f1_monotone: f1,
            f2_small_density: f2,
            f3_large_density: f3,
            f4_differentiable: f4,
            f_convex,
            g_concave,
            f_positive_near_zero,
            min_f_curvature: f_min,
            max_g_curvature: g_max,
        })
    }
}

fn pressure_over_tau2<T: Real>(t: &Table<T>, a: T, b: T, tol: T) -> Result<T> {
    if a == T::zero() {
        origin_integral(|x| t.eval(x).0, b, tol, SUBSTITUTION_POWER)
    } else {
        adaptive_simpson(|x: T| t.eval(x).0 / (x * x), a, b, tol)
    }
}

/// Smallest power `q ≥ 4` with `q(γ-1) ≥ 2`.
fn substitution_power<T: Real>(gamma: T) -> i32 {
    let needed = (T::lit(2.0) / (gamma - T::one())).ceil().as_f64();
    if needed.is_finite() {
        (needed as i32).clamp(SUBSTITUTION_POWER, 400)
    } else {
        400
    }
}

/// `∫_0^b P(τ)τ⁻² dτ` with `τ = b u^q`, which turns the integrable endpoint
/// behaviour `τ^(γ-2)` into the power `u^(q(γ-1)-1)`.
fn origin_integral<T: Real, F: Fn(T) -> T>(pressure: F, b: T, tol: T, power: i32) -> Result<T> {
    let q = T::lit(power as f64);
    let v = adaptive_simpson(
        |u: T| {
            if u == T::zero() {
                return T::zero();
            }
            let uq = u.powi(power);
            pressure(b * uq) * q / (b * uq * u)
        },
        T::zero(),
        T::one(),
        tol,
    )?;
    Ok(v)
}

const CURVATURE_TOL: f64 = 1e-6;
const CURVATURE_FAIL: f64 = 1e-3;
const SLOPE_MARGIN: f64 = 0.05;

/// `s² f''(s) / |f(s)|` from centered differences with `h = 1e-3 s`.
fn relative_curvature<T: Real, F: Fn(T) -> Result<T>>(f: F, s: T) -> Option<f64> {
    let h = s * T::lit(1e-3);
    let (a, b, c) = (f(s - h).ok()?, f(s).ok()?, f(s + h).ok()?);
    let d2 = (a - T::lit(2.0) * b + c).as_f64() * 1e6;
    let scale = b.abs().as_f64().max(f64::MIN_POSITIVE);
    Some(d2 / scale)
}

fn curvature_verdict(min_q: f64, count: usize) -> Verdict {
    if count == 0 {
        Verdict::Inconclusive
    } else if min_q >= -CURVATURE_TOL {
        Verdict::Pass
    } else if min_q >= -CURVATURE_FAIL {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    }
}

/// Log-log slope test over the first and last decade of nonzero samples.
fn tabulated_limits<T: Real>(t: &Table<T>) -> (Verdict, Verdict) {
    let pts: Vec<(f64, f64)> = t
        .s
        .iter()
        .zip(&t.p)
        .filter(|(s, p)| **s > T::zero() && **p > T::zero())
        .map(|(s, p)| (s.as_f64().ln(), p.as_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return (Verdict::Inconclusive, Verdict::Inconclusive);
    }
    let decade = std::f64::consts::LN_10;
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    let first: Vec<_> = pts.iter().copied().filter(|(x, _)| *x <= lo + decade).collect();
    let last: Vec<_> = pts.iter().copied().filter(|(x, _)| *x >= hi - decade).collect();
    // both limits hold when P outgrows s^(4/3) locally in the fitted decade
    let verdict = |sample: &[(f64, f64)]| match log_slope(sample) {
        None => Verdict::Inconclusive,
        Some(k) if k > 4.0 / 3.0 + SLOPE_MARGIN => Verdict::Pass,
        Some(k) if k < 4.0 / 3.0 - SLOPE_MARGIN => Verdict::Fail,
        Some(_) => Verdict::Inconclusive,
    };
    let f2 = verdict(&first);
    let f3 = verdict(&last);
    (f2, f3)
}

fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Outcome of one assumption check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Per-assumption verdicts for an equation of state on a sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub f1_monotone: Verdict,
    pub f2_small_density: Verdict,
    pub f3_large_density: Verdict,
    pub f4_differentiable: Verdict,
    /// `f(s) = A'(s³)` convex on the grid.
    pub f_convex: Verdict,
    /// `g(s) = 4A - 3sA'` concave on the grid.
    pub g_concave: Verdict,
    /// `f'' > 0` at the smallest grid density.
    pub f_positive_near_zero: Verdict,
    pub min_f_curvature: f64,
    pub max_g_curvature: f64,
}

impl AssumptionReport {
    /// F1 through F4 all pass.
    pub fn equilibrium_ready(&self) -> bool {
        [
            self.f1_monotone,
            self.f2_small_density,
            self.f3_large_density,
            self.f4_differentiable,
        ]
        .iter()
        .all(|v| *v == Verdict::Pass)
    }
}
