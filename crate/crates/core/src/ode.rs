//! Dormand–Prince 5(4) integrator with Hairer's fourth-order dense output.

use crate::error::{Error, Result};
use crate::real::Real;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth minus embedded fourth order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    pub rtol: T,
    pub atol: T,
    pub initial_step: T,
    pub min_step: T,
    pub max_steps: usize,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<T, const N: usize> {
    pub x0: T,
    pub h: T,
    pub y0: [T; N],
    pub y1: [T; N],
    cont: [[T; N]; 4],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    pub fn x1(&self) -> T {
        self.x0 + self.h
    }

    /// Dense output at `x` in `[x0, x0 + h]`.
    pub fn eval(&self, x: T) -> [T; N] {
        let theta = (x - self.x0) / self.h;
        let theta1 = T::one() - theta;
        let mut out = [T::zero(); N];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.y0[i]
                + theta
                    * (self.cont[0][i]
                        + theta1 * (self.cont[1][i] + theta * (self.cont[2][i] + theta1 * self.cont[3][i])));
        }
        out
    }
}

/// Integrates `y' = f(x, y)` from `x0` until `keep_going` returns false for an
/// accepted step or `x_end` is reached. Returns every accepted step.
pub fn integrate<T, F, S, const N: usize>(
    f: F,
    x0: T,
    y0: [T; N],
    x_end: T,
    ctl: &StepControl<T>,
    mut keep_going: S,
) -> Result<Vec<DenseStep<T, N>>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
    S: FnMut(&DenseStep<T, N>) -> bool,
{
    let c: [T; 7] = C.map(T::lit);
    let a: [[T; 6]; 7] = A.map(|row| row.map(T::lit));
    let e: [T; 7] = E.map(T::lit);
    let d: [T; 7] = D.map(T::lit);

    let mut x = x0;
    let mut y = y0;
    let mut h = ctl.initial_step.min(x_end - x0);
    let mut k1 = f(x, &y);
    let mut steps = Vec::new();
    let mut attempts = 0usize;

    while x < x_end {
        attempts += 1;
        if attempts > ctl.max_steps {
            return Err(Error::StepUnderflow {
                r: x.as_f64(),
                h: h.as_f64(),
            });
        }
        if h < ctl.min_step {
            return Err(Error::StepUnderflow {
                r: x.as_f64(),
                h: h.as_f64(),
            });
        }
        if x + h > x_end {
            h = x_end - x;
        }
        let mut k = [[T::zero(); N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = T::zero();
                for j in 0..s {
                    acc += a[s][j] * k[j][i];
                }
                ys[i] += h * acc;
            }
            k[s] = f(x + c[s] * h, &ys);
        }
        // row 6 of A holds the fifth order weights, so the stage-7 argument is y1
        let mut y1 = y;
        for i in 0..N {
            let mut acc = T::zero();
            for j in 0..6 {
                acc += a[6][j] * k[j][i];
            }
            y1[i] += h * acc;
        }
        let mut err2 = T::zero();
        for i in 0..N {
            let mut acc = T::zero();
            for j in 0..7 {
                acc += e[j] * k[j][i];
            }
            let sk = ctl.atol + ctl.rtol * y[i].abs().max(y1[i].abs());
            let r = h * acc / sk;
            err2 += r * r;
        }
        let err = (err2 / T::lit(N as f64)).sqrt();
        if !err.is_finite() {
            h *= T::lit(0.2);
            continue;
        }
        let fac = if err == T::zero() {
            T::lit(10.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(10.0))
        };
        if err <= T::one() {
            let mut cont = [[T::zero(); N]; 4];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = ydiff;
                cont[1][i] = bspl;
                cont[2][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = T::zero();
                for j in 0..7 {
                    acc += d[j] * k[j][i];
                }
                cont[3][i] = h * acc;
            }
            let step = DenseStep {
                x0: x,
                h,
                y0: y,
                y1,
                cont,
            };
            steps.push(step);
            x += h;
            y = y1;
            k1 = k[6];
            h *= fac;
            if !keep_going(&step) {
                break;
            }
        } else {
            h *= fac.min(T::one());
        }
    }
    Ok(steps)
}
