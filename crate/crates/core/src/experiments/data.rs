use num_complex::Complex;

use super::{ExperimentError, Result};
use crate::model::{self, ModelParams};
use crate::resonance::{ClusterFamily, ClusterSpec};
use crate::spectral::SpectralField;
use crate::Field;

/// `C_k = 15 sum_m w_m^2 / w_k^2 - 6` for cluster amplitudes `w`.
pub fn c_from_weights(weights: &[f64], k: usize) -> f64 {
    let wk2 = weights[k] * weights[k];
    15.0 * weights.iter().map(|w| w * w / wk2).sum::<f64>() - 6.0
}

/// Model parameters of cluster `k` (0-based) for amplitudes `w` in the `u`
/// variable at nonlinearity `nu`.
pub fn weighted_params(weights: &[f64], nu: f64, k: usize, center: i128) -> ModelParams<f64> {
    let eps_k = nu.powf(0.25) * weights[k];
    ModelParams::with_scale(c_from_weights(weights, k), eps_k, center)
}

fn check_k0(k0: f64, c: f64, cluster: usize) -> Result<()> {
    let g = model::gamma(&ModelParams::from_c(c))?;
    if k0 > g && k0 < 1.0 - g {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!(
            "K0 = {k0} for cluster {cluster} lies outside the oscillation band ({g:.6}, {:.6})",
            1.0 - g
        )))
    }
}

fn put(field: &mut Field, j: i128, v: Complex<f64>) -> Result<()> {
    let m = field.m();
    let slot = i64::try_from(j).ok().and_then(|j| field.get_mut(j));
    match slot {
        Some(c) => {
            *c += v;
            Ok(())
        }
        None => Err(ExperimentError::Config(format!("mode {j} lies beyond M = {m}"))),
    }
}

fn add_cluster(field: &mut Field, cl: &ClusterSpec, k0: f64, phases: [f64; 4], w: f64) -> Result<()> {
    let [ta1, tb1, ta2, tb2] = phases;
    put(field, cl.a1, Complex::from_polar(w * k0.sqrt(), ta1))?;
    put(field, cl.b1, Complex::from_polar(w * (1.0 - k0).sqrt(), tb1))?;
    put(field, cl.a2, Complex::from_polar(w * (k0 / 2.0).sqrt(), ta2))?;
    put(field, cl.b2, Complex::from_polar(w * ((1.0 - k0) / 2.0).sqrt(), tb2))?;
    Ok(())
}

/// Single-cluster data `u_{a1} = sqrt(K0)`, `u_{b1} = sqrt(1-K0)`,
/// `u_{a2} = sqrt(K0/2)`, `u_{b2} = sqrt((1-K0)/2)` with the given angles
/// `(a1, b1, a2, b2)`.
pub fn thm0_initial_data(k0: f64, cluster: &ClusterSpec, phases: [f64; 4], m: usize) -> Result<Field> {
    check_k0(k0, 9.0, 1)?;
    let mut f = SpectralField::zeros(m);
    add_cluster(&mut f, cluster, k0, phases, 1.0)?;
    Ok(f)
}

/// Superposition of single-cluster data with explicit amplitudes.
pub fn weighted_initial_data(
    family: &ClusterFamily,
    weights: &[f64],
    k0s: &[f64],
    phases: &[[f64; 4]],
    m: usize,
) -> Result<Field> {
    if weights.len() != family.len() || k0s.len() != family.len() {
        return Err(ExperimentError::Config("one weight and one K0 per cluster are required".into()));
    }
    let mut f = SpectralField::zeros(m);
    for (k, cl) in family.clusters.iter().enumerate() {
        check_k0(k0s[k], c_from_weights(weights, k), k + 1)?;
        add_cluster(&mut f, cl, k0s[k], phases.get(k).copied().unwrap_or([0.0; 4]), weights[k])?;
    }
    Ok(f)
}

/// Amplitudes `e^{-n_k}` of the multi-cluster construction. Clusters whose
/// amplitude relative to the first falls below machine precision cannot
/// be resolved in the superposition and are rejected.
pub fn exponential_weights(family: &ClusterFamily) -> Result<Vec<f64>> {
    let centers = family.centers();
    let n1 = centers[0];
    let mut w = Vec::with_capacity(centers.len());
    for (k, &n) in centers.iter().enumerate() {
        let relative = (-((n - n1) as f64)).exp();
        let weight = (-(n as f64)).exp();
        if relative < f64::EPSILON || !(weight >= f64::MIN_POSITIVE) {
            return Err(ExperimentError::UnrepresentableAmplitude { cluster: k + 1, center: n, relative });
        }
        w.push(weight);
    }
    Ok(w)
}

/// Multi-cluster data: cluster `k` at amplitude `e^{-n_k}`.
pub fn thm1_initial_data(family: &ClusterFamily, k0s: &[f64], phases: &[[f64; 4]], m: usize) -> Result<Field> {
    let w = exponential_weights(family)?;
    weighted_initial_data(family, &w, k0s, phases, m)
}

/// Adds the out-of-cluster tail `|u_p| = c nu^{1/2} e^{-|p|}` (real,
/// positive) on every mode outside the family.
pub fn add_tail(field: &mut Field, family: &ClusterFamily, nu: f64, c: f64) {
    if c == 0.0 || nu == 0.0 {
        return;
    }
    let amp = c * nu.sqrt();
    let modes: Vec<i64> = field.modes().collect();
    for p in modes {
        if !family.contains(p as i128) {
            *field.get_mut(p).expect("mode on lattice") += Complex::new(amp * (-(p.abs() as f64)).exp(), 0.0);
        }
    }
}

/// Upper bound of the tail at mode `p`.
pub fn tail_bound(nu: f64, c: f64, p: i64) -> f64 {
    c * nu.sqrt() * (-(p.abs() as f64)).exp()
}
