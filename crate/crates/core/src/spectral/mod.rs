//! Split-step Fourier solver for `i u_t + u_xx = nu |u|^4 u` on the circle.
//!
//! The linear flow is diagonal in Fourier space, `u_j -> e^{-i j^2 t} u_j`.
//! The nonlinear flow keeps `|u|` fixed pointwise, so it is the exact
//! rotation `u -> u e^{-i nu |u|^4 t}`, applied on a zero-padded grid and
//! truncated back to `|j| <= M`. Strang splitting combines the two.

mod field;

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use field::SpectralField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid simulation parameters: {0}")]
    Params(String),
    #[error("non-finite field at t = {t} (step {step}); last finite state kept")]
    BlowUp { t: f64, step: u64, last_good: Box<SpectralField<f64>> },
}

pub type Result<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams<T> {
    pub nu: T,
    pub dt: T,
    pub m: usize,
    /// Grid oversampling for the nonlinear step; at least 3.
    pub pad: usize,
    /// Steps between recorded diagnostics.
    pub sample_stride: usize,
}

impl<T: Real> SimParams<T> {
    pub fn new(nu: T, dt: T, m: usize) -> Self {
        Self { nu, dt, m, pad: 3, sample_stride: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(SpectralError::Params(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.nu.is_finite() {
            return Err(SpectralError::Params("nu must be finite".into()));
        }
        if self.pad < 3 {
            return Err(SpectralError::Params(format!("pad must be at least 3, got {}", self.pad)));
        }
        if self.sample_stride == 0 {
            return Err(SpectralError::Params("sample_stride must be positive".into()));
        }
        Ok(())
    }

    /// Step-size guideline `0.5 / M^2`; larger steps remain stable but
    /// resolve the fastest linear phase poorly.
    pub fn dt_guideline(&self) -> T {
        T::half() / T::from_count((self.m * self.m).max(1))
    }
}

/// Grid size used for a truncation `m` and oversampling `pad`.
pub fn grid_size(m: usize, pad: usize) -> usize {
    (pad * (2 * m + 1)).next_power_of_two()
}

/// FFT plans and work buffers for one lattice size.
pub struct SplitStep<T: Real> {
    m: usize,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    /// Linear phases for the two most recent step sizes.
    phase_cache: Vec<(T, Vec<Complex<T>>)>,
}

impl<T: Real> SplitStep<T> {
    pub fn new(m: usize, pad: usize) -> Self {
        let n = grid_size(m, pad);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let zero = Complex::new(T::zero(), T::zero());
        Self { m, n, fwd, inv, buf: vec![zero; n], scratch: vec![zero; scratch_len], phase_cache: Vec::new() }
    }

    pub fn for_params(p: &SimParams<T>) -> Self {
        Self::new(p.m, p.pad)
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    fn check(&self, field: &SpectralField<T>) {
        assert_eq!(field.m(), self.m, "field truncation does not match the solver");
    }

    /// Samples of `u` on the uniform grid `x_k = 2 pi k / N`.
    pub fn to_physical(&mut self, field: &SpectralField<T>) -> Vec<Complex<T>> {
        self.load(field);
        self.buf.clone()
    }

    fn load(&mut self, field: &SpectralField<T>) {
        self.check(field);
        let zero = Complex::new(T::zero(), T::zero());
        self.buf.iter_mut().for_each(|c| *c = zero);
        let n = self.n as i64;
        for (j, c) in field.modes().zip(field.coeffs()) {
            self.buf[j.rem_euclid(n) as usize] = *c;
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
    }

    fn store(&mut self, field: &mut SpectralField<T>) {
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let n = self.n as i64;
        let norm = T::one() / T::from_count(self.n);
        let modes: Vec<i64> = field.modes().collect();
        for (j, c) in modes.into_iter().zip(field.coeffs_mut()) {
            *c = self.buf[j.rem_euclid(n) as usize] * norm;
        }
    }

    /// `u_j -> e^{-i j^2 t} u_j`.
    pub fn linear_step(&mut self, field: &mut SpectralField<T>, t: T) {
        self.check(field);
        if t == T::zero() {
            return;
        }
        let slot = match self.phase_cache.iter().position(|(tc, _)| *tc == t) {
            Some(i) => i,
            None => {
                let phases = field
                    .modes()
                    .map(|j| {
                        // One Newton step on |p| = 1: the same factors are reused
                        // every step, so any modulus bias would add up linearly.
                        let p = Complex::from_polar(T::one(), -T::lit((j * j) as f64) * t);
                        p * ((T::lit(3.0) - p.norm_sqr()) * T::half())
                    })
                    .collect();
                if self.phase_cache.len() == 2 {
                    self.phase_cache.remove(0);
                }
                self.phase_cache.push((t, phases));
                self.phase_cache.len() - 1
            }
        };
        for (c, p) in field.coeffs_mut().iter_mut().zip(&self.phase_cache[slot].1) {
            *c = *c * *p;
        }
    }

    /// `u -> u e^{-i nu |u|^4 t}` pointwise, then truncation to `|j| <= M`.
    pub fn nonlinear_step(&mut self, field: &mut SpectralField<T>, nu: T, t: T) {
        self.check(field);
        let angle = nu * t;
        if angle == T::zero() {
            return;
        }
        self.load(field);
        for u in self.buf.iter_mut() {
            let a2 = u.norm_sqr();
            *u = *u * Complex::from_polar(T::one(), -angle * a2 * a2);
        }
        self.store(field);
    }

    /// `|u|^4 u` projected onto `|j| <= M`, computed on the padded grid.
    pub fn nonlinearity(&mut self, field: &SpectralField<T>) -> SpectralField<T> {
        self.load(field);
        for u in self.buf.iter_mut() {
            let a2 = u.norm_sqr();
            *u = *u * (a2 * a2);
        }
        let mut out = SpectralField::zeros(self.m);
        self.store(&mut out);
        out
    }

    /// `(1/2pi) int |u|^6`, exact on the padded grid for the band-limited
    /// field.
    pub fn sextic_mean(&mut self, field: &SpectralField<T>) -> T {
        self.load(field);
        let sum = self.buf.iter().fold(T::zero(), |s, u| {
            let a2 = u.norm_sqr();
            s + a2 * a2 * a2
        });
        sum / T::from_count(self.n)
    }

    /// `H = int |u_x|^2 + (nu/3) int |u|^6` over one period.
    pub fn hamiltonian(&mut self, field: &SpectralField<T>, nu: T) -> T {
        let mean6 = if nu == T::zero() { T::zero() } else { self.sextic_mean(field) };
        T::TAU() * (field.kinetic() + nu / T::lit(3.0) * mean6)
    }

    /// One Strang step: half linear, full nonlinear, half linear.
    pub fn strang_step(&mut self, field: &mut SpectralField<T>, p: &SimParams<T>) {
        let half = p.dt * T::half();
        self.linear_step(field, half);
        self.nonlinear_step(field, p.nu, p.dt);
        self.linear_step(field, half);
    }
}

/// Receives the synchronised field at every recorded sample.
pub trait Observer<T: Real> {
    fn observe(&mut self, step: u64, t: T, field: &SpectralField<T>);
}

impl<T: Real, F: FnMut(u64, T, &SpectralField<T>)> Observer<T> for F {
    fn observe(&mut self, step: u64, t: T, field: &SpectralField<T>) {
        self(step, t, field)
    }
}

/// Diagnostics sampled during [`evolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    pub times: Vec<T>,
    pub mass: Vec<T>,
    pub hamiltonian: Vec<T>,
    pub momentum: Vec<T>,
    /// Modes whose actions are recorded.
    pub modes: Vec<i64>,
    /// `actions[s][q]` is `I_{modes[q]}` at sample `s`.
    pub actions: Vec<Vec<T>>,
}

impl<T: Real> Diagnostics<T> {
    fn push(&mut self, solver: &mut SplitStep<T>, nu: T, t: T, field: &SpectralField<T>) {
        self.times.push(t);
        self.mass.push(field.mass());
        self.hamiltonian.push(solver.hamiltonian(field, nu));
        self.momentum.push(field.momentum());
        self.actions.push(self.modes.iter().map(|&j| field.action(j)).collect());
    }

    fn max_rel_drift(series: &[T]) -> T {
        let Some(&x0) = series.first() else { return T::zero() };
        let scale = if x0 == T::zero() { T::one() } else { x0.abs() };
        series.iter().fold(T::zero(), |m, &x| m.max((x - x0).abs() / scale))
    }

    pub fn mass_drift(&self) -> T {
        Self::max_rel_drift(&self.mass)
    }

    pub fn hamiltonian_drift(&self) -> T {
        Self::max_rel_drift(&self.hamiltonian)
    }

    /// Absolute momentum drift relative to `max(|P(0)|, mass(0))`, since the
    /// momentum itself may vanish.
    pub fn momentum_drift(&self) -> T {
        let (Some(&p0), Some(&m0)) = (self.momentum.first(), self.mass.first()) else {
            return T::zero();
        };
        let scale = p0.abs().max(m0);
        let scale = if scale == T::zero() { T::one() } else { scale };
        self.momentum.iter().fold(T::zero(), |m, &p| m.max((p - p0).abs() / scale))
    }
}

#[derive(Debug, Clone)]
pub struct Evolution<T> {
    pub field: SpectralField<T>,
    pub diagnostics: Diagnostics<T>,
    pub steps: u64,
}

/// Number of steps covering `t_end` with step `dt`.
pub fn step_count<T: Real>(t_end: T, dt: T) -> u64 {
    (t_end / dt).round().to_u64().unwrap_or(0).max(1)
}

/// Advances `field0` to `t_end` with Strang steps of size `dt` (rounded to a
/// whole number of steps), sampling every `sample_stride` steps and at the
/// end. Consecutive half linear steps are fused between samples.
pub fn evolve<T: Real>(
    field0: &SpectralField<T>,
    p: &SimParams<T>,
    t_end: T,
    modes: &[i64],
    observers: &mut [&mut dyn Observer<T>],
) -> Result<Evolution<T>> {
    p.validate()?;
    if field0.m() != p.m {
        return Err(SpectralError::Params(format!(
            "field has M = {} but parameters ask for M = {}",
            field0.m(),
            p.m
        )));
    }
    if !(t_end > T::zero()) {
        return Err(SpectralError::Params(format!("t_end must be positive, got {t_end}")));
    }
    let steps = step_count(t_end, p.dt);
    let mut solver = SplitStep::for_params(p);
    let mut diag = Diagnostics { modes: modes.to_vec(), ..Default::default() };
    diag.push(&mut solver, p.nu, T::zero(), field0);
    for o in observers.iter_mut() {
        o.observe(0, T::zero(), field0);
    }
    let half = p.dt * T::half();
    // `work` is the field advanced by an extra half linear step.
    let mut work = field0.clone();
    let mut last_good = field0.clone();
    solver.linear_step(&mut work, half);
    let mut out = field0.clone();
    for step in 1..=steps {
        solver.nonlinear_step(&mut work, p.nu, p.dt);
        let sample = step % p.sample_stride as u64 == 0 || step == steps;
        let t = T::from_u64(step).expect("step count representable") * p.dt;
        if sample {
            out.clone_from(&work);
            solver.linear_step(&mut out, half);
            if !out.is_finite() {
                return Err(blow_up(t, step, &last_good));
            }
            diag.push(&mut solver, p.nu, t, &out);
            for o in observers.iter_mut() {
                o.observe(step, t, &out);
            }
            last_good.clone_from(&out);
        }
        if step < steps {
            solver.linear_step(&mut work, p.dt);
        }
    }
    Ok(Evolution { field: out, diagnostics: diag, steps })
}

fn blow_up<T: Real>(t: T, step: u64, last: &SpectralField<T>) -> SpectralError {
    let coeffs: Vec<(i64, Complex<f64>)> = last
        .modes()
        .zip(last.coeffs())
        .map(|(j, c)| (j, Complex::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))))
        .collect();
    SpectralError::BlowUp {
        t: t.to_f64().unwrap_or(f64::NAN),
        step,
        last_good: Box::new(SpectralField::from_modes(last.m(), &coeffs).expect("same lattice")),
    }
}
