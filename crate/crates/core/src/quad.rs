//! Quadrature helpers: adaptive Simpson for callables, Gauss–Legendre rules,
//! Legendre polynomials, and high-order cumulative integration of sampled data.

use crate::error::{Error, Result};
use crate::real::Real;

const MAX_DEPTH: usize = 48;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    // absolute floor so that integrals which vanish identically still terminate
    let atol = tol * whole.abs().max(T::epsilon());
    let mut worst = T::zero();
    let value = recurse(&f, a, b, fa, fm, fb, whole, atol, MAX_DEPTH, &mut worst);
    if !value.is_finite() || worst > atol * T::lit(1e3) {
        return Err(Error::Quadrature {
            a: a.as_f64(),
            b: b.as_f64(),
            estimate: value.as_f64(),
            error: worst.as_f64(),
        });
    }
    Ok(value)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    atol: T,
    depth: usize,
    worst: &mut T,
) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * atol {
        if depth == 0 {
            *worst = worst.max(delta.abs());
        }
        return left + right + delta / T::lit(15.0);
    }
    recurse(f, a, m, fa, flm, fm, left, atol * half, depth - 1, worst)
        + recurse(f, m, b, fm, frm, fb, right, atol * half, depth - 1, worst)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n in f64 from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre<T: Real>(l: usize, x: T) -> T {
    let (mut p0, mut p1) = (T::one(), x);
    if l == 0 {
        return p0;
    }
    for k in 2..=l {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Grid on `[0, radius]` with `n` points, uniform in `u` under
/// `r = radius * (1 - (1 - u)^2)`, so points cluster towards the outer edge.
///
/// Power-law edge behaviour `(R - r)^p` becomes `(1 - u)^(2p)` in the index
/// coordinate, which keeps [`cumulative`] high order up to a free surface.
pub fn surface_grid<T: Real>(radius: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "grid needs at least two points");
    let last = T::lit((n - 1) as f64);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                return radius;
            }
            let w = T::one() - T::lit(i as f64) / last;
            radius * (T::one() - w * w)
        })
        .collect()
}

/// Evenly spaced grid on `[a, b]`.
pub fn uniform_grid<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "grid needs at least two points");
    let last = T::lit((n - 1) as f64);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * T::lit(i as f64) / last
            }
        })
        .collect()
}

fn lagrange(p: usize, k: usize, t: f64) -> f64 {
    (0..p)
        .filter(|&j| j != k)
        .map(|j| (t - j as f64) / (k as f64 - j as f64))
        .product()
}

fn lagrange_derivative(p: usize, k: usize, t: f64) -> f64 {
    (0..p)
        .filter(|&m| m != k)
        .map(|m| {
            let rest: f64 = (0..p)
                .filter(|&j| j != k && j != m)
                .map(|j| (t - j as f64) / (k as f64 - j as f64))
                .product();
            rest / (k as f64 - m as f64)
        })
        .sum()
}

/// Weights `c[o][k][j]` such that the integral over local interval `[o, o+1]`
/// equals `sum_kj c[o][k][j] f_k r_j` for a `p`-point stencil.
fn stencil_weights(p: usize) -> Vec<Vec<Vec<f64>>> {
    let g = (0.6f64).sqrt() * 0.5;
    let xs = [0.5 - g, 0.5, 0.5 + g];
    let ws = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    (0..p - 1)
        .map(|o| {
            (0..p)
                .map(|k| {
                    (0..p)
                        .map(|j| {
                            xs.iter()
                                .zip(ws.iter())
                                .map(|(&x, &w)| {
                                    let t = o as f64 + x;
                                    w * lagrange(p, k, t) * lagrange_derivative(p, j, t)
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Cumulative integral `F_i = ∫_{r_0}^{r_i} f dr` of samples on an increasing grid.
///
/// Both `f` and `r` are interpolated by local cubics in the index coordinate,
/// so the rule is fourth order for any grid that is a smooth image of a
/// uniform one.
pub fn cumulative<T: Real>(r: &[T], f: &[T]) -> Vec<T> {
    assert_eq!(r.len(), f.len(), "grid and samples differ in length");
    let n = r.len();
    let mut out = vec![T::zero(); n];
    if n < 2 {
        return out;
    }
    let p = n.min(4);
    let table: Vec<Vec<Vec<T>>> = stencil_weights(p)
        .into_iter()
        .map(|a| a.into_iter().map(|b| b.into_iter().map(T::lit).collect()).collect())
        .collect();
    for i in 0..n - 1 {
        let s = i.saturating_sub(1).min(n - p);
        let o = i - s;
        let mut acc = T::zero();
        for k in 0..p {
            let mut inner = T::zero();
            for j in 0..p {
                inner += table[o][k][j] * r[s + j];
            }
            acc += inner * f[s + k];
        }
        out[i + 1] = out[i] + acc;
    }
    out
}

/// Definite integral of samples over the whole grid.
pub fn integrate<T: Real>(r: &[T], f: &[T]) -> T {
    cumulative(r, f).last().copied().unwrap_or_else(T::zero)
}

/// Cubic Lagrange interpolation of samples on an increasing grid.
pub fn interpolate<T: Real>(r: &[T], f: &[T], x: T) -> T {
    let n = r.len();
    if n == 0 {
        return T::zero();
    }
    if n == 1 {
        return f[0];
    }
    let i = match r.iter().position(|&ri| ri > x) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => n - 2,
    };
    let p = n.min(4);
    let s = i.saturating_sub(1).min(n - p);
    let mut acc = T::zero();
    for k in 0..p {
        let mut l = T::one();
        for j in 0..p {
            if j != k {
                l = l * (x - r[s + j]) / (r[s + k] - r[s + j]);
            }
        }
        acc += l * f[s + k];
    }
    acc
}
