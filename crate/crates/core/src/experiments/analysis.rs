use serde::{Deserialize, Serialize};

use super::beating::BeatingReport;
use super::config::Variable;
use super::{ExperimentError, Result};
use crate::model::{self, cluster_params, PeriodInversion};
use crate::resonance::ClusterFamily;

/// Turning points of a noisy oscillation. A maximum is accepted only after
/// the series has fallen `threshold` below it, and symmetrically for minima,
/// so ripples smaller than `threshold` are ignored.
fn turning_points(series: &[f64], threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    if series.len() < 3 {
        return (maxima, minima);
    }
    // +1 while looking for a maximum, -1 for a minimum, 0 undecided.
    let mut dir = 0i8;
    let (mut hi, mut lo) = (0usize, 0usize);
    for (i, &x) in series.iter().enumerate() {
        if x > series[hi] {
            hi = i;
        }
        if x < series[lo] {
            lo = i;
        }
        match dir {
            0 => {
                if series[hi] - x >= threshold && hi > 0 {
                    maxima.push(hi);
                    dir = -1;
                    lo = i;
                } else if x - series[lo] >= threshold && lo > 0 {
                    minima.push(lo);
                    dir = 1;
                    hi = i;
                } else if series[hi] - x >= threshold {
                    dir = -1;
                    lo = i;
                } else if x - series[lo] >= threshold {
                    dir = 1;
                    hi = i;
                }
            }
            1 => {
                if series[hi] - x >= threshold {
                    maxima.push(hi);
                    dir = -1;
                    lo = i;
                }
            }
            _ => {
                if x - series[lo] >= threshold {
                    minima.push(lo);
                    dir = 1;
                    hi = i;
                }
            }
        }
    }
    (maxima, minima)
}

/// Vertex of the parabola through the three samples around `i`.
fn refine(times: &[f64], series: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= series.len() {
        return times[i];
    }
    let (t0, t1, t2) = (times[i - 1], times[i], times[i + 1]);
    let (y0, y1, y2) = (series[i - 1], series[i], series[i + 1]);
    let d1 = (y1 - y0) / (t1 - t0);
    let d2 = (y2 - y1) / (t2 - t1);
    let curv = (d2 - d1) / (t2 - t0);
    if curv == 0.0 {
        return t1;
    }
    let vertex = 0.5 * (t0 + t1) - d1 / (2.0 * curv);
    vertex.clamp(t0, t2)
}

fn mean_spacing(times: &[f64], series: &[f64], idx: &[usize]) -> f64 {
    let first = refine(times, series, idx[0]);
    let last = refine(times, series, *idx.last().expect("two extrema"));
    (last - first) / (idx.len() - 1) as f64
}

/// Period of an oscillating series from successive maxima with parabolic
/// refinement, falling back to minima, then to one maximum and one minimum.
/// Ripples below a quarter of the series range are ignored.
pub fn estimate_period(times: &[f64], series: &[f64]) -> Result<f64> {
    if times.len() != series.len() {
        return Err(ExperimentError::Config("time and value series differ in length".into()));
    }
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(ExperimentError::InsufficientSpan { extrema: 0 });
    }
    let (maxima, minima) = turning_points(series, 0.25 * range);
    if maxima.len() >= 2 {
        return Ok(mean_spacing(times, series, &maxima));
    }
    if minima.len() >= 2 {
        return Ok(mean_spacing(times, series, &minima));
    }
    if let (Some(&a), Some(&b)) = (maxima.first(), minima.first()) {
        return Ok(2.0 * (refine(times, series, a) - refine(times, series, b)).abs());
    }
    Err(ExperimentError::InsufficientSpan { extrema: maxima.len() + minima.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageCheck {
    pub nu_hi: f64,
    pub nu_lo: f64,
    pub leakage_hi: f64,
    pub leakage_lo: f64,
    /// Fitted exponent of leakage against `nu` in the `u` variable.
    pub exponent: Option<f64>,
    pub predicted: f64,
    pub window: (f64, f64),
    pub pass: bool,
    /// Leakage too small to fit; counted as a pass.
    pub inconclusive: bool,
    /// Either run seeded modes above the admissible tail.
    pub out_of_hypothesis: bool,
}

/// Leakage below this (relative to the mass) is indistinguishable from
/// rounding.
pub const LEAKAGE_FLOOR: f64 = 1e-26;

pub const LEAKAGE_WINDOW: (f64, f64) = (0.7, 1.3);

/// Fits the exponent of maximal out-of-cluster leakage between two runs at
/// different `nu`. In the `u` variable the prediction is 1.
pub fn leakage_check(a: &BeatingReport, b: &BeatingReport) -> Result<LeakageCheck> {
    let (hi, lo) = if a.nu >= b.nu { (a, b) } else { (b, a) };
    if hi.nu == lo.nu {
        return Err(ExperimentError::Config("leakage fit needs two different nu".into()));
    }
    let to_u = |r: &BeatingReport| match r.variable {
        Variable::U => r.leakage_max,
        Variable::V => r.leakage_max / r.nu.sqrt(),
    };
    let (lh, ll) = (to_u(hi), to_u(lo));
    let inconclusive = !(lh > LEAKAGE_FLOOR && ll > LEAKAGE_FLOOR) || lo.nu == 0.0;
    let exponent = (!inconclusive).then(|| (lh / ll).ln() / (hi.nu / lo.nu).ln());
    let window = LEAKAGE_WINDOW;
    let pass = match exponent {
        Some(e) => e >= window.0 && e <= window.1,
        None => true,
    };
    Ok(LeakageCheck {
        nu_hi: hi.nu,
        nu_lo: lo.nu,
        leakage_hi: lh,
        leakage_lo: ll,
        exponent,
        predicted: 1.0,
        window,
        pass,
        inconclusive,
        out_of_hypothesis: hi.out_of_hypothesis || lo.out_of_hypothesis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Smallest admissible multiplier `N`.
    pub n: u64,
    /// `pi e^{4 n_K} / (9 sqrt 3)`.
    pub threshold: f64,
    /// Target model half-period `N Lambda_k e^{-4 n_k}` per cluster.
    pub targets: Vec<f64>,
    pub inversions: Vec<PeriodInversion<f64>>,
    /// `N Lambda_k < nu^{-1/8}` per cluster.
    pub valid_per_cluster: Vec<bool>,
    pub valid: bool,
}

impl Schedule {
    pub fn k0(&self) -> Vec<f64> {
        self.inversions.iter().map(|i| i.k0).collect()
    }
}

/// Tolerance of the period inversion in [`corollary_schedule`].
pub const SCHEDULE_TOL: f64 = 1e-9;

/// Plans initial data so that every cluster beats with period
/// `2 N Lambda_k / nu`.
pub fn corollary_schedule(lambdas: &[f64], family: &ClusterFamily, nu: f64) -> Result<Schedule> {
    if lambdas.len() != family.len() || family.is_empty() {
        return Err(ExperimentError::Config("one Lambda per cluster is required".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(ExperimentError::Config("Lambda values must be positive".into()));
    }
    let centers = family.centers();
    let n_top = *centers.iter().max().expect("nonempty") as f64;
    let threshold = std::f64::consts::PI * (4.0 * n_top).exp() / (9.0 * 3f64.sqrt());
    if !threshold.is_finite() {
        return Err(ExperimentError::Config(format!("threshold e^(4 * {n_top}) overflows")));
    }
    let lmin = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut n = (threshold / lmin).floor();
    while n * lmin <= threshold {
        n += 1.0;
    }
    if n >= u64::MAX as f64 {
        return Err(ExperimentError::Config("multiplier N exceeds 64 bits".into()));
    }
    let mut targets = Vec::new();
    let mut inversions = Vec::new();
    for (k, (&l, &nk)) in lambdas.iter().zip(&centers).enumerate() {
        let target = n * l * (-4.0 * nk as f64).exp();
        let params = cluster_params::<f64>(family, 1.0, k + 1)
            .or_else(|_| {
                // The amplitude itself is irrelevant to C_k; retry at a scale
                // where e^{-n_k} is representable.
                cluster_params::<f64>(family, (nk as f64).exp(), k + 1)
            })?;
        inversions.push(model::invert_period(target, &params, SCHEDULE_TOL)?);
        targets.push(target);
    }
    let bound = nu.powf(-0.125);
    let valid_per_cluster: Vec<bool> = lambdas.iter().map(|&l| n * l < bound).collect();
    let valid = valid_per_cluster.iter().all(|&v| v);
    Ok(Schedule { n: n as u64, threshold, targets, inversions, valid_per_cluster, valid })
}

/// Evaluates `2 T_k e^{4 n_k} <= nu^{-1/8}` per cluster, in logarithms.
pub fn log_condition_check(family: &ClusterFamily, nu: f64, periods: &[f64]) -> Result<Vec<bool>> {
    if periods.len() != family.len() {
        return Err(ExperimentError::Config("one half-period per cluster is required".into()));
    }
    let rhs = -nu.ln() / 8.0;
    Ok(family
        .centers()
        .iter()
        .zip(periods)
        .map(|(&n, &t)| t <= 0.0 || (2.0 * t).ln() + 4.0 * n as f64 <= rhs)
        .collect())
}
