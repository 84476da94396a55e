use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Fourier coefficients `u_j`, `-M <= j <= M`, of `u(x) = sum u_j e^{ijx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField<T> {
    m: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(m: usize) -> Self {
        Self { m, coeffs: vec![Complex::new(T::zero(), T::zero()); 2 * m + 1] }
    }

    /// Field with the listed coefficients; modes beyond `M` are rejected.
    pub fn from_modes(m: usize, modes: &[(i64, Complex<T>)]) -> Option<Self> {
        let mut f = Self::zeros(m);
        for &(j, v) in modes {
            *f.get_mut(j)? += v;
        }
        Some(f)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let m = self.m as i64;
        -m..=m
    }

    fn index(&self, j: i64) -> Option<usize> {
        let m = self.m as i64;
        (j.abs() <= m).then(|| (j + m) as usize)
    }

    /// Coefficient of mode `j`; zero outside the lattice.
    pub fn get(&self, j: i64) -> Complex<T> {
        self.index(j).map(|i| self.coeffs[i]).unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn get_mut(&mut self, j: i64) -> Option<&mut Complex<T>> {
        self.index(j).map(move |i| &mut self.coeffs[i])
    }

    /// Coefficients ordered from `-M` to `M`.
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn action(&self, j: i64) -> T {
        self.get(j).norm_sqr()
    }

    /// `I_j = |u_j|^2` for every mode.
    pub fn actions(&self) -> BTreeMap<i64, T> {
        self.modes().zip(self.coeffs.iter().map(|c| c.norm_sqr())).collect()
    }

    /// `sum |u_j|^2`, equal to `(1/2pi) int |u|^2`.
    pub fn mass(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, c| s + c.norm_sqr())
    }

    /// `sum j |u_j|^2`.
    pub fn momentum(&self) -> T {
        self.modes().zip(&self.coeffs).fold(T::zero(), |s, (j, c)| s + T::lit(j as f64) * c.norm_sqr())
    }

    /// `sum j^2 |u_j|^2`.
    pub fn kinetic(&self) -> T {
        self.modes()
            .zip(&self.coeffs)
            .fold(T::zero(), |s, (j, c)| s + T::lit((j * j) as f64) * c.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient difference.
    pub fn max_diff(&self, other: &Self) -> T {
        let m = self.m.max(other.m) as i64;
        (-m..=m).fold(T::zero(), |d, j| d.max((self.get(j) - other.get(j)).norm()))
    }

    pub fn scale(&mut self, s: T) {
        for c in &mut self.coeffs {
            *c = *c * s;
        }
    }
}
