//! Adaptive explicit Runge–Kutta integration with dense output.
//!
//! The stepper is the Dormand–Prince 8(5,3) pair with Hairer's step-size
//! control and a continuous extension of order 7. Each accepted step yields
//! a [`DenseStep`] that can be evaluated anywhere inside the step, which is
//! what event location relies on.

mod coefficients;

use thiserror::Error;

use crate::scalar::Real;
use coefficients::*;

/// Right-hand side of `y' = f(t, y)`.
///
/// Returning `None` signals that `y` lies outside the domain of the vector
/// field. The stepper then rejects the trial step and retries with a
/// smaller one.
pub trait OdeSystem<T: Real, const N: usize> {
    fn rhs(&self, t: T, y: &[T; N]) -> Option<[T; N]>;
}

impl<T: Real, const N: usize, F> OdeSystem<T, N> for F
where
    F: Fn(T, &[T; N]) -> Option<[T; N]>,
{
    fn rhs(&self, t: T, y: &[T; N]) -> Option<[T; N]> {
        self(t, y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("initial state lies outside the domain of the vector field")]
    InitialDomain,
    #[error("step size underflow at t = {t:e}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t:e}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("integration span must be positive and finite")]
    BadSpan,
}

#[derive(Debug, Clone, Copy)]
pub struct Options<T> {
    pub rtol: T,
    pub atol: T,
    pub h_max: Option<T>,
    pub h_init: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Options<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { rtol: tol, atol: tol, h_max: None, h_init: None, max_steps: 10_000_000 }
    }
}

/// Continuous extension of one accepted step on `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<T, const N: usize> {
    pub t0: T,
    pub h: T,
    cont: [[T; N]; 8],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn start(&self) -> [T; N] {
        self.cont[0]
    }

    pub fn end(&self) -> [T; N] {
        let mut y = [T::zero(); N];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.cont[0][i] + self.cont[1][i];
        }
        y
    }

    /// Evaluates the interpolant at `t`; accurate to the integration
    /// tolerance for `t` inside the step.
    pub fn eval(&self, t: T) -> [T; N] {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let c = &self.cont;
        let mut y = [T::zero(); N];
        for i in 0..N {
            let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
            y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)));
        }
        y
    }
}

#[inline]
fn combo<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = T::zero();
        for &(c, k) in terms {
            acc += T::lit(c) * k[i];
        }
        out[i] += h * acc;
    }
    out
}

#[inline]
fn weighted<T: Real, const N: usize>(terms: &[(f64, &[T; N])]) -> [T; N] {
    combo(&[T::zero(); N], T::one(), terms)
}

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const BETA: f64 = 0.0;

/// Stateful DOP853 stepper for forward integration.
pub struct Dop853<'a, S, T, const N: usize> {
    sys: &'a S,
    t: T,
    y: [T; N],
    f: [T; N],
    h: T,
    opts: Options<T>,
    facold: T,
    reject: bool,
    accepted: usize,
    rejected: usize,
    evals: usize,
}

impl<'a, S, T, const N: usize> Dop853<'a, S, T, N>
where
    S: OdeSystem<T, N>,
    T: Real,
{
    pub fn new(sys: &'a S, t0: T, y0: [T; N], opts: Options<T>) -> Result<Self, OdeError> {
        let f = sys.rhs(t0, &y0).ok_or(OdeError::InitialDomain)?;
        let mut stepper = Self {
            sys,
            t: t0,
            y: y0,
            f,
            h: T::zero(),
            opts,
            facold: T::lit(1e-4),
            reject: false,
            accepted: 0,
            rejected: 0,
            evals: 1,
        };
        stepper.h = match opts.h_init {
            Some(h) => h,
            None => stepper.initial_step(),
        };
        Ok(stepper)
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> &[T; N] {
        &self.y
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn evaluations(&self) -> usize {
        self.evals
    }

    fn scale(&self, a: T, b: T) -> T {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn eval(&mut self, t: T, y: &[T; N]) -> Option<[T; N]> {
        self.evals += 1;
        self.sys.rhs(t, y)
    }

    fn h_max(&self) -> T {
        self.opts.h_max.unwrap_or(T::infinity())
    }

    fn initial_step(&mut self) -> T {
        let n = T::from_count(N);
        let (mut dnf, mut dny) = (T::zero(), T::zero());
        for i in 0..N {
            let sk = self.scale(self.y[i], self.y[i]);
            dnf += (self.f[i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        dnf = (dnf / n).sqrt();
        dny = (dny / n).sqrt();
        let tiny = T::lit(1e-5);
        let mut h = if dnf <= tiny || dny <= tiny { T::lit(1e-6) } else { T::lit(0.01) * dny / dnf };
        h = h.min(self.h_max());
        let y1 = combo(&self.y, h, &[(1.0, &self.f)]);
        let Some(f1) = self.eval(self.t + h, &y1) else {
            return h * T::lit(1e-3);
        };
        let mut der2 = T::zero();
        for i in 0..N {
            let sk = self.scale(self.y[i], self.y[i]);
            der2 += ((f1[i] - self.f[i]) / sk).powi(2);
        }
        der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max(dnf);
        let h1 = if der12 <= T::lit(1e-15) {
            T::lit(1e-6).max(h * T::lit(1e-3))
        } else {
            (T::lit(0.01) / der12).powf(T::lit(1.0 / 8.0))
        };
        (h * T::lit(100.0)).min(h1).min(self.h_max())
    }

    /// Advances by one accepted step without passing `t_end` and returns its
    /// dense output.
    pub fn step(&mut self, t_end: T) -> Result<DenseStep<T, N>, OdeError> {
        if !(t_end > self.t) {
            return Err(OdeError::BadSpan);
        }
        let uround = T::epsilon();
        let expo1 = T::lit(1.0 / 8.0 - BETA * 0.2);
        let (facc1, facc2) = (T::lit(1.0 / FAC1), T::lit(1.0 / FAC2));
        loop {
            if self.accepted + self.rejected >= self.opts.max_steps {
                return Err(OdeError::MaxSteps {
                    t: self.t.to_f64().unwrap_or(f64::NAN),
                    max_steps: self.opts.max_steps,
                });
            }
            let mut h = self.h.min(self.h_max());
            if T::lit(0.1) * h.abs() <= self.t.abs() * uround || h <= T::zero() {
                return Err(OdeError::StepUnderflow { t: self.t.to_f64().unwrap_or(f64::NAN) });
            }
            if self.t + T::lit(1.01) * h >= t_end {
                h = t_end - self.t;
            }
            let trial = self.attempt(h);
            let Some(trial) = trial else {
                // Stage left the domain: shrink and retry.
                self.h = h * T::lit(0.25);
                self.reject = true;
                self.rejected += 1;
                continue;
            };
            let err = trial.err;
            let fac11 = err.powf(expo1);
            let fac = (fac11 / self.facold.powf(T::lit(BETA)))
                .div(T::lit(SAFE))
                .min(facc1)
                .max(facc2);
            let mut h_new = h / fac;
            if err <= T::one() {
                let t_new = self.t + h;
                let Some(f_new) = self.eval(t_new, &trial.y_new) else {
                    self.h = h * T::lit(0.25);
                    self.reject = true;
                    self.rejected += 1;
                    continue;
                };
                self.facold = err.max(T::lit(1e-4));
                let dense = self.dense(h, &trial, &f_new);
                self.t = t_new;
                self.y = trial.y_new;
                self.f = f_new;
                self.accepted += 1;
                if self.reject {
                    h_new = h_new.abs().min(h.abs());
                    self.reject = false;
                }
                self.h = h_new;
                return Ok(dense);
            }
            self.h = h / facc1.min(fac11 / T::lit(SAFE));
            self.reject = true;
            self.rejected += 1;
        }
    }

    fn attempt(&mut self, h: T) -> Option<Trial<T, N>> {
        let (t, y, k1) = (self.t, self.y, self.f);
        let k2 = self.eval(t + T::lit(C2) * h, &combo(&y, h, &[(A21, &k1)]))?;
        let k3 = self.eval(t + T::lit(C3) * h, &combo(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = self.eval(t + T::lit(C4) * h, &combo(&y, h, &[(A41, &k1), (A43, &k3)]))?;
        let k5 = self.eval(
            t + T::lit(C5) * h,
            &combo(&y, h, &[(A51, &k1), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = self.eval(
            t + T::lit(C6) * h,
            &combo(&y, h, &[(A61, &k1), (A64, &k4), (A65, &k5)]),
        )?;
        let k7 = self.eval(
            t + T::lit(C7) * h,
            &combo(&y, h, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
        )?;
        let k8 = self.eval(
            t + T::lit(C8) * h,
            &combo(&y, h, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
        )?;
        let k9 = self.eval(
            t + T::lit(C9) * h,
            &combo(
                &y,
                h,
                &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)],
            ),
        )?;
        let k10 = self.eval(
            t + T::lit(C10) * h,
            &combo(
                &y,
                h,
                &[
                    (A101, &k1),
                    (A104, &k4),
                    (A105, &k5),
                    (A106, &k6),
                    (A107, &k7),
                    (A108, &k8),
                    (A109, &k9),
                ],
            ),
        )?;
        let k11 = self.eval(
            t + T::lit(C11) * h,
            &combo(
                &y,
                h,
                &[
                    (A111, &k1),
                    (A114, &k4),
                    (A115, &k5),
                    (A116, &k6),
                    (A117, &k7),
                    (A118, &k8),
                    (A119, &k9),
                    (A1110, &k10),
                ],
            ),
        )?;
        let k12 = self.eval(
            t + h,
            &combo(
                &y,
                h,
                &[
                    (A121, &k1),
                    (A124, &k4),
                    (A125, &k5),
                    (A126, &k6),
                    (A127, &k7),
                    (A128, &k8),
                    (A129, &k9),
                    (A1210, &k10),
                    (A1211, &k11),
                ],
            ),
        )?;
        let incr = weighted(&[
            (B1, &k1),
            (B6, &k6),
            (B7, &k7),
            (B8, &k8),
            (B9, &k9),
            (B10, &k10),
            (B11, &k11),
            (B12, &k12),
        ]);
        let y_new = combo(&y, h, &[(1.0, &incr)]);

        let (mut err, mut err2) = (T::zero(), T::zero());
        for i in 0..N {
            let sk = self.scale(y[i], y_new[i]);
            let e2 = incr[i] - T::lit(BHH1) * k1[i] - T::lit(BHH2) * k9[i] - T::lit(BHH3) * k12[i];
            err2 += (e2 / sk).powi(2);
            let e = T::lit(ER1) * k1[i]
                + T::lit(ER6) * k6[i]
                + T::lit(ER7) * k7[i]
                + T::lit(ER8) * k8[i]
                + T::lit(ER9) * k9[i]
                + T::lit(ER10) * k10[i]
                + T::lit(ER11) * k11[i]
                + T::lit(ER12) * k12[i];
            err += (e / sk).powi(2);
        }
        let mut deno = err + T::lit(0.01) * err2;
        if deno <= T::zero() {
            deno = T::one();
        }
        let err = h.abs() * err * (T::one() / (deno * T::from_count(N))).sqrt();
        if !err.is_finite() {
            return None;
        }
        Some(Trial { err, y_new, k: [k1, k6, k7, k8, k9, k10, k11, k12] })
    }

    fn dense(&mut self, h: T, trial: &Trial<T, N>, f_new: &[T; N]) -> DenseStep<T, N> {
        let y = self.y;
        let [k1, k6, k7, k8, k9, k10, k11, k12] = trial.k;
        let mut cont = [[T::zero(); N]; 8];
        for i in 0..N {
            let ydiff = trial.y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            cont[0][i] = y[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * f_new[i] - bspl;
        }
        let stage = |d: [f64; 8]| {
            weighted(&[
                (d[0], &k1),
                (d[1], &k6),
                (d[2], &k7),
                (d[3], &k8),
                (d[4], &k9),
                (d[5], &k10),
                (d[6], &k11),
                (d[7], &k12),
            ])
        };
        cont[4] = stage([D41, D46, D47, D48, D49, D410, D411, D412]);
        cont[5] = stage([D51, D56, D57, D58, D59, D510, D511, D512]);
        cont[6] = stage([D61, D66, D67, D68, D69, D610, D611, D612]);
        cont[7] = stage([D71, D76, D77, D78, D79, D710, D711, D712]);

        // Three extra stages for the order-7 extension. A stage outside the
        // domain falls back to the cubic Hermite part only.
        let t = self.t;
        let extra = (|| {
            let k14 = self.eval(
                t + T::lit(C14) * h,
                &combo(
                    &y,
                    h,
                    &[
                        (A141, &k1),
                        (A147, &k7),
                        (A148, &k8),
                        (A149, &k9),
                        (A1410, &k10),
                        (A1411, &k11),
                        (A1412, &k12),
                        (A1413, f_new),
                    ],
                ),
            )?;
            let k15 = self.eval(
                t + T::lit(C15) * h,
                &combo(
                    &y,
                    h,
                    &[
                        (A151, &k1),
                        (A156, &k6),
                        (A157, &k7),
                        (A158, &k8),
                        (A1511, &k11),
                        (A1512, &k12),
                        (A1513, f_new),
                        (A1514, &k14),
                    ],
                ),
            )?;
            let k16 = self.eval(
                t + T::lit(C16) * h,
                &combo(
                    &y,
                    h,
                    &[
                        (A161, &k1),
                        (A166, &k6),
                        (A167, &k7),
                        (A168, &k8),
                        (A169, &k9),
                        (A1613, f_new),
                        (A1614, &k14),
                        (A1615, &k15),
                    ],
                ),
            )?;
            Some((k14, k15, k16))
        })();
        match extra {
            Some((k14, k15, k16)) => {
                let tails = [
                    [D413, D414, D415, D416],
                    [D513, D514, D515, D516],
                    [D613, D614, D615, D616],
                    [D713, D714, D715, D716],
                ];
                for (row, d) in tails.iter().enumerate() {
                    let tail = weighted(&[(d[0], f_new), (d[1], &k14), (d[2], &k15), (d[3], &k16)]);
                    for i in 0..N {
                        cont[4 + row][i] = h * (cont[4 + row][i] + tail[i]);
                    }
                }
            }
            None => {
                for row in cont.iter_mut().skip(4) {
                    *row = [T::zero(); N];
                }
            }
        }
        DenseStep { t0: self.t, h, cont }
    }
}

struct Trial<T, const N: usize> {
    err: T,
    y_new: [T; N],
    k: [[T; N]; 8],
}

/// Integrates from `t0` to `t_end`, returning every accepted step.
pub fn integrate<S, T, const N: usize>(
    sys: &S,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: Options<T>,
) -> Result<Vec<DenseStep<T, N>>, OdeError>
where
    S: OdeSystem<T, N>,
    T: Real,
{
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(OdeError::BadSpan);
    }
    let mut stepper = Dop853::new(sys, t0, y0, opts)?;
    let mut steps = Vec::new();
    while stepper.t() < t_end {
        steps.push(stepper.step(t_end)?);
    }
    Ok(steps)
}

/// Locates a zero of `g` inside `[a, b]` by bisection, given a sign change
/// between `ga = g(a)` and `g(b)`. Stops when the bracket is narrower than
/// `t_tol`.
pub fn bisect<T: Real>(mut a: T, mut b: T, mut ga: T, t_tol: T, g: impl Fn(T) -> T) -> T {
    for _ in 0..200 {
        if (b - a).abs() <= t_tol {
            break;
        }
        let m = a + (b - a) * T::half();
        let gm = g(m);
        if gm == T::zero() {
            return m;
        }
        if (gm < T::zero()) == (ga < T::zero()) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    a + (b - a) * T::half()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        Some([y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let steps = integrate(&oscillator, 0.0, [1.0, 0.0], 20.0, Options::with_tol(1e-12)).unwrap();
        let end = steps.last().unwrap().end();
        assert!((end[0] - 20f64.cos()).abs() < 1e-10, "{end:?}");
        assert!((end[1] + 20f64.sin()).abs() < 1e-10);
        assert!((steps.last().unwrap().t1() - 20.0).abs() < 1e-14);
    }

    #[test]
    fn dense_output_accuracy() {
        let steps = integrate(&oscillator, 0.0, [1.0, 0.0], 10.0, Options::with_tol(1e-11)).unwrap();
        let mut worst = 0.0_f64;
        for s in &steps {
            for q in 0..=10 {
                let t = s.t0 + s.h * (q as f64) / 10.0;
                let y = s.eval(t);
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
            }
        }
        assert!(worst < 1e-9, "dense error {worst:e}");
    }

    #[test]
    fn eighth_order_convergence() {
        // Error at fixed steps, driving h_init with a huge tolerance so the
        // controller never shrinks: use max step instead.
        let run = |h: f64| {
            let opts = Options { rtol: 1.0, atol: 1.0, h_max: Some(h), h_init: Some(h), max_steps: 1_000_000 };
            let steps = integrate(&oscillator, 0.0, [1.0, 0.0], 4.0, opts).unwrap();
            let end = steps.last().unwrap().end();
            (end[0] - 4f64.cos()).abs().max((end[1] + 4f64.sin()).abs())
        };
        let e1 = run(0.4);
        let e2 = run(0.2);
        let order = (e1 / e2).log2();
        assert!(order > 7.0 && order < 9.5, "observed order {order}");
    }

    #[test]
    fn domain_exit_is_retried() {
        // y' = -1/(2 sqrt(1 - t)) * ... stays away from the boundary only with
        // small steps; the field rejects y outside [0, 1].
        let sys = |_t: f64, y: &[f64; 1]| {
            if y[0] <= 0.0 {
                None
            } else {
                Some([-0.5])
            }
        };
        let steps = integrate(&sys, 0.0, [1.0], 1.9, Options::with_tol(1e-10)).unwrap();
        assert!((steps.last().unwrap().end()[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn initial_domain_error() {
        let sys = |_t: f64, _y: &[f64; 1]| -> Option<[f64; 1]> { None };
        assert_eq!(
            integrate(&sys, 0.0, [1.0], 1.0, Options::with_tol(1e-8)).unwrap_err(),
            OdeError::InitialDomain
        );
    }

    #[test]
    fn works_in_single_precision() {
        let sys = |_t: f32, y: &[f32; 2]| Some([y[1], -y[0]]);
        let steps = integrate(&sys, 0.0_f32, [1.0, 0.0], 3.0, Options::with_tol(1e-6)).unwrap();
        let end = steps.last().unwrap().end();
        assert!((end[0] - 3f32.cos()).abs() < 1e-4);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(0.0, 2.0, -1.0, 1e-14, |x: f64| x * x - 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }
}
