use serde::{Deserialize, Serialize};

use super::analysis::estimate_period;
use super::config::{ScenarioConfig, Variable, Weights};
use super::data::{add_tail, tail_bound, exponential_weights, weighted_initial_data, weighted_params};
use super::{ExperimentError, Result};
use crate::model::{self, PhasePlaneState};
use crate::resonance::ClusterFamily;
use crate::spectral::{evolve, SimParams, SpectralField};
use crate::Field;

pub const SCHEMA_VERSION: u32 = 1;

/// Per-cluster series and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSeries {
    pub center: i64,
    pub k0: f64,
    pub weight: f64,
    pub c: f64,
    /// Model time per unit of simulated time.
    pub time_scale: f64,
    /// Model half-period, when the initial phase is zero.
    pub model_half_period: Option<f64>,
    /// Beating period in simulated time, `2 T / time_scale`.
    pub model_period: Option<f64>,
    /// `I_a1 / (I_a1 + I_b1)` from the simulation.
    pub k_hat: Vec<f64>,
    /// Model prediction on the same grid.
    pub k_model: Vec<f64>,
    /// `I_a1 + I_b1` in the report variable.
    pub sum_1: Vec<f64>,
    /// `I_a2 + I_b2` in the report variable.
    pub sum_2: Vec<f64>,
    pub sup_error: f64,
    /// `max K_hat - min K_hat`.
    pub amplitude: f64,
    /// `max K_hat + min K_hat`.
    pub extremum_sum: f64,
    pub period_estimate: Option<f64>,
    /// Largest relative drift of `(sum_1, sum_2)`.
    pub sum_drift: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatingReport {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub nu: f64,
    pub variable: Variable,
    pub t_end: f64,
    pub steps: u64,
    pub pde_simulated: bool,
    /// Family outside the growth hypothesis, or several clusters without the
    /// `e^{-n_k}` weights.
    pub beyond_theorem: bool,
    /// Seeded modes exceed the admissible out-of-cluster tail.
    pub out_of_hypothesis: bool,
    /// `t_end` exceeds `nu^{-9/8}`.
    pub beyond_validity_window: bool,
    pub flags: Vec<String>,
    pub times: Vec<f64>,
    pub clusters: Vec<ClusterSeries>,
    /// Out-of-cluster action `sum_{p not in A} I_p` in the report variable.
    pub leakage: Vec<f64>,
    pub leakage_initial: f64,
    pub leakage_max: f64,
    pub mass: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub mass_drift: f64,
    pub hamiltonian_drift: f64,
    pub momentum_drift: f64,
    pub note: String,
}

const NOTE: &str = "Actions are raw Fourier actions; the normal-form change of variables is \
close to the identity at order nu^(1/2), so errors include a floor of that order.";

struct Sample {
    t: f64,
    actions: Vec<[f64; 4]>,
    leakage: f64,
}

fn max_rel_drift(series: &[f64]) -> f64 {
    let Some(&x0) = series.first() else { return 0.0 };
    let scale = if x0 == 0.0 { 1.0 } else { x0.abs() };
    series.iter().fold(0.0, |m, &x| m.max((x - x0).abs() / scale))
}

fn extremes(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Initial field of a scenario together with the cluster amplitudes.
pub fn scenario_field(cfg: &ScenarioConfig, family: &ClusterFamily) -> Result<(Field, Vec<f64>)> {
    let weights = match &cfg.weights {
        Weights::Unit => vec![1.0; family.len()],
        Weights::Exponential => exponential_weights(family)?,
        Weights::User(w) => w.clone(),
    };
    let phases: Vec<[f64; 4]> = (0..family.len()).map(|k| cfg.phases_for(k)).collect();
    let mut field = weighted_initial_data(family, &weights, &cfg.k0, &phases, cfg.m)?;
    add_tail(&mut field, family, cfg.nu, cfg.tail_constant);
    for &(p, re, im) in &cfg.extra_modes {
        *field.get_mut(p).expect("validated mode") += num_complex::Complex::new(re, im);
    }
    Ok((field, weights))
}

/// Simulates the scenario and compares each cluster with the model.
pub fn run_beating(cfg: &ScenarioConfig) -> Result<BeatingReport> {
    cfg.validate()?;
    let family = ClusterFamily::relaxed(&cfg.centers_i128())?;
    let (field0, weights) = scenario_field(cfg, &family)?;
    let mut flags = Vec::new();

    let multi_unweighted = family.len() > 1 && !matches!(cfg.weights, Weights::Exponential);
    let beyond_theorem = !family.hypothesis_ok() || multi_unweighted;
    if !family.hypothesis_ok() {
        flags.push("beyond-theorem: family violates the growth hypothesis".to_string());
    }
    if multi_unweighted {
        flags.push("beyond-theorem: several clusters without e^-n_k weights".to_string());
    }
    let bound_c = cfg.tail_constant.max(1.0);
    let out_of_hypothesis = cfg
        .extra_modes
        .iter()
        .any(|&(p, re, im)| !family.contains(p as i128) && (re * re + im * im).sqrt() > tail_bound(cfg.nu, bound_c, p));
    if out_of_hypothesis {
        flags.push("out-of-hypothesis: seeded modes exceed the admissible tail".to_string());
    }

    // Model side.
    let mut params = Vec::new();
    let mut starts = Vec::new();
    let mut halves = Vec::new();
    for (k, cl) in family.clusters.iter().enumerate() {
        let p = weighted_params(&weights, cfg.nu, k, cl.n);
        let [ta1, tb1, ta2, tb2] = cfg.phases_for(k);
        let phi0 = crate::scalar::wrap_angle(ta1 - tb1 + 0.5 * (ta2 - tb2));
        let start = PhasePlaneState::new(phi0, cfg.k0[k]);
        let half = if phi0 == 0.0 && cfg.k0[k] != 0.5 {
            Some(model::half_period(cfg.k0[k], &p, cfg.model_tol)?)
        } else {
            None
        };
        params.push(p);
        starts.push(start);
        halves.push(half);
    }
    let scales: Vec<f64> = weights.iter().map(|w| cfg.time_factor * cfg.nu * w.powi(4)).collect();
    let t_end = match cfg.t_end {
        Some(t) => t,
        None => {
            let t1 = halves[0].ok_or_else(|| {
                ExperimentError::Config("t_end is required when the first cluster has no half-period".into())
            })?;
            cfg.periods * 2.0 * t1 / scales[0]
        }
    };
    let beyond_validity_window = cfg.nu > 0.0 && t_end > cfg.nu.powf(-9.0 / 8.0);
    if beyond_validity_window {
        log::warn!("t_end = {t_end} exceeds nu^(-9/8) = {}", cfg.nu.powf(-9.0 / 8.0));
        flags.push("beyond validity window t <= nu^(-9/8)".to_string());
    }
    let sim = SimParams { nu: cfg.nu, dt: cfg.dt, m: cfg.m, pad: cfg.pad, sample_stride: cfg.sample_stride };
    if cfg.dt > sim.dt_guideline() {
        flags.push(format!("dt = {} above the guideline 0.5/M^2 = {:.3e}", cfg.dt, sim.dt_guideline()));
    }

    // Simulation side.
    let members: Vec<[i64; 4]> = family
        .clusters
        .iter()
        .map(|c| [c.a1 as i64, c.b1 as i64, c.a2 as i64, c.b2 as i64])
        .collect();
    let observe = |t: f64, f: &SpectralField<f64>| Sample {
        t,
        actions: members.iter().map(|m| m.map(|j| f.action(j))).collect(),
        leakage: f.modes().filter(|&p| !family.contains(p as i128)).map(|p| f.action(p)).sum(),
    };
    let mut samples = Vec::new();
    let (steps, mass, hamiltonian, mass_drift, hamiltonian_drift, momentum_drift) = if cfg.skip_pde {
        let steps = crate::spectral::step_count(t_end, cfg.dt);
        let mut s = 0;
        while s <= steps {
            samples.push(observe(s as f64 * cfg.dt, &field0));
            if s == steps {
                break;
            }
            s = (s + cfg.sample_stride as u64).min(steps);
        }
        (steps, Vec::new(), Vec::new(), 0.0, 0.0, 0.0)
    } else {
        let mut obs = |_step: u64, t: f64, f: &SpectralField<f64>| samples.push(observe(t, f));
        let ev = evolve(&field0, &sim, t_end, &[], &mut [&mut obs])?;
        let d = ev.diagnostics;
        let drifts = (d.mass_drift(), d.hamiltonian_drift(), d.momentum_drift());
        (ev.steps, d.mass, d.hamiltonian, drifts.0, drifts.1, drifts.2)
    };
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let var_scale = match cfg.variable {
        Variable::U => 1.0,
        Variable::V => cfg.nu.sqrt(),
    };

    let mut clusters = Vec::new();
    for (k, cl) in family.clusters.iter().enumerate() {
        let tau_end = scales[k] * times.last().copied().unwrap_or(0.0);
        let traj = if tau_end > 0.0 {
            Some(model::integrate(starts[k], &params[k], tau_end, cfg.model_tol)?)
        } else {
            None
        };
        let k_model: Vec<f64> = times
            .iter()
            .map(|&t| traj.as_ref().map(|tr| tr.sample(scales[k] * t).k).unwrap_or(starts[k].k))
            .collect();
        let (k_hat, sum_1, sum_2) = if cfg.skip_pde {
            let sums = |s: f64| vec![s * var_scale; times.len()];
            let w2 = weights[k] * weights[k];
            (k_model.clone(), sums(w2), sums(0.5 * w2))
        } else {
            let mut kh = Vec::with_capacity(samples.len());
            let mut s1 = Vec::with_capacity(samples.len());
            let mut s2 = Vec::with_capacity(samples.len());
            for s in &samples {
                let [a1, b1, a2, b2] = s.actions[k];
                kh.push(a1 / (a1 + b1));
                s1.push((a1 + b1) * var_scale);
                s2.push((a2 + b2) * var_scale);
            }
            (kh, s1, s2)
        };
        let sup_error = k_hat.iter().zip(&k_model).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let (lo, hi) = extremes(&k_hat);
        let period_estimate = estimate_period(&times, &k_hat).ok();
        clusters.push(ClusterSeries {
            center: cl.n as i64,
            k0: cfg.k0[k],
            weight: weights[k],
            c: params[k].c_k,
            time_scale: scales[k],
            model_half_period: halves[k],
            model_period: halves[k].map(|t| 2.0 * t / scales[k]),
            sup_error,
            amplitude: if k_hat.is_empty() { 0.0 } else { hi - lo },
            extremum_sum: if k_hat.is_empty() { 0.0 } else { hi + lo },
            period_estimate,
            sum_drift: [max_rel_drift(&sum_1), max_rel_drift(&sum_2)],
            k_hat,
            k_model,
            sum_1,
            sum_2,
        });
    }
    let leakage: Vec<f64> = samples.iter().map(|s| s.leakage * var_scale).collect();
    let leakage_max = leakage.iter().copied().fold(0.0, f64::max);
    Ok(BeatingReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.clone(),
        nu: cfg.nu,
        variable: cfg.variable,
        t_end,
        steps,
        pde_simulated: !cfg.skip_pde,
        beyond_theorem,
        out_of_hypothesis,
        beyond_validity_window,
        flags,
        leakage_initial: leakage.first().copied().unwrap_or(0.0),
        leakage_max,
        leakage,
        times,
        clusters,
        mass_drift,
        hamiltonian_drift,
        momentum_drift,
        mass,
        hamiltonian,
        note: NOTE.to_string(),
    })
}
