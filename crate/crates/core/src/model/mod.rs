//! The integrable one-cluster model.
//!
//! A cluster is reduced to the phase-plane pair `(phi, K)` with energy
//!
//! ```text
//! H(phi, K) = 9/4 K(1-K) [C + 4 sqrt(K(1-K)) cos 2phi]
//! ```
//!
//! and equations `phi' = -dH/dK`, `K' = dH/dphi`. Orbits started at
//! `phi = 0` with `K0` in the band `(gamma, 1 - gamma)` oscillate between
//! `K0` and `1 - K0` with half-period `T(K0)`; the band edge is a pair of
//! heteroclinic orbits along which the period diverges.
//!
//! [`full`] integrates the unreduced eight-dimensional action-angle flow
//! and serves as an independent check on the reduction.

pub mod full;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{self, DenseStep, Dop853, OdeError, Options};
use crate::resonance::ClusterFamily;
use crate::scalar::Real;

pub use full::{actions_from, full_model_integrate, reduce, ActionAngleState, FullTrajectory};

/// Guard keeping `K` away from the endpoints where square roots vanish.
pub const K_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("K = {k} lies outside (0, 1)")]
    Domain { k: f64 },
    #[error("C = {c} must exceed 2 for the oscillation band to exist")]
    ConstantTooSmall { c: f64 },
    #[error("K0 = {k0} is the centre of the phase plane; it has no period")]
    Equilibrium { k0: f64 },
    #[error("K0 = {k0} lies outside the oscillation band ({gamma}, {upper}) minus the centre")]
    OutsideBand { k0: f64, gamma: f64, upper: f64 },
    #[error("no return to phi = 0 (mod pi) before tau = {cap}; the orbit is at or beyond the heteroclinic level")]
    DivergingPeriod { cap: f64 },
    #[error("target half-period {target} is not above the limit period {limit}")]
    UnreachablePeriod { target: f64, limit: f64 },
    #[error("target half-period {target} exceeds every sampled period up to {sampled_max}")]
    PeriodNotBracketed { target: f64, sampled_max: f64 },
    #[error(
        "integration stalled at tau = {tau:e} on the level H = {level} (heteroclinic level {heteroclinic})"
    )]
    Stalled { tau: f64, level: f64, heteroclinic: f64 },
    #[error("cluster index {k} out of range 1..={len}")]
    ClusterIndex { k: usize, len: usize },
    #[error("amplitude of cluster {k} (eps e^-{n}) is not representable")]
    UnrepresentableAmplitude { k: usize, n: i128 },
    #[error("action {name} reached zero; the square-root coupling is singular there")]
    SingularAction { name: &'static str },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Constants of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub eps_k: T,
    /// Total action `J` of the whole family.
    pub j_total: T,
    pub c_k: T,
    /// Cluster centre, used for the linear frequencies of the full flow.
    pub center: i128,
}

impl<T: Real> ModelParams<T> {
    /// Parameters with `eps_k = 1` and the given `C`, on the cluster at 3.
    pub fn from_c(c: T) -> Self {
        Self::with_scale(c, T::one(), 3)
    }

    /// Parameters with the given `C`, amplitude and centre. `J` is set so
    /// that `C = 10 J / eps_k^2 - 6`.
    pub fn with_scale(c: T, eps_k: T, center: i128) -> Self {
        let j_total = (c + T::lit(6.0)) * eps_k * eps_k / T::lit(10.0);
        Self { eps_k, j_total, c_k: c, center }
    }

    /// Action outside this cluster: `J - 3/2 eps_k^2`.
    pub fn external_action(&self) -> T {
        self.j_total - T::lit(1.5) * self.eps_k * self.eps_k
    }
}

/// Parameters of cluster `k` (1-based) of a family with overall amplitude
/// `eps`: `eps_k = eps e^{-n_k}`, `J = 3/2 eps^2 sum e^{-2 n_m}`.
pub fn cluster_params<T: Real>(family: &ClusterFamily, eps: T, k: usize) -> Result<ModelParams<T>> {
    let len = family.len();
    if k == 0 || k > len {
        return Err(ModelError::ClusterIndex { k, len });
    }
    let centers = family.centers();
    let n_k = centers[k - 1];
    let eps_k = eps * T::lit(-(n_k as f64)).exp();
    if !(eps_k >= T::min_positive_value()) || !eps_k.is_finite() {
        return Err(ModelError::UnrepresentableAmplitude { k, n: n_k });
    }
    let weights = |m: i128| T::lit(-2.0 * m as f64).exp();
    let mut sum = T::zero();
    for &m in &centers {
        sum += weights(m);
    }
    let j_total = T::lit(1.5) * eps * eps * sum;
    // C_k = 15 sum_m e^{2(n_k - n_m)} - 6, summed in ratio form so that it
    // stays finite when the individual weights underflow.
    let mut ratio = T::zero();
    for &m in &centers {
        ratio += T::lit(2.0 * (n_k - m) as f64).exp();
    }
    let c_k = T::lit(15.0) * ratio - T::lit(6.0);
    Ok(ModelParams { eps_k, j_total, c_k, center: n_k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePlaneState<T> {
    pub phi: T,
    pub k: T,
}

impl<T: Real> PhasePlaneState<T> {
    pub fn new(phi: T, k: T) -> Self {
        Self { phi, k }
    }

    fn check(&self) -> Result<T> {
        let g = T::lit(K_GUARD);
        if self.k > g && self.k < T::one() - g {
            Ok(self.k * (T::one() - self.k))
        } else {
            Err(ModelError::Domain { k: f(self.k) })
        }
    }
}

pub fn hstar<T: Real>(state: PhasePlaneState<T>, params: &ModelParams<T>) -> Result<T> {
    let q = state.check()?;
    let c2 = (T::two() * state.phi).cos();
    Ok(T::lit(2.25) * q * (params.c_k + T::lit(4.0) * q.sqrt() * c2))
}

/// `K(1-K)(C + 4 sqrt(K(1-K)) cos 2phi)`, i.e. `H / (9/4)`.
pub fn level_function<T: Real>(state: PhasePlaneState<T>, params: &ModelParams<T>) -> Result<T> {
    Ok(hstar(state, params)? / T::lit(2.25))
}

/// `(dphi/dtau, dK/dtau)`.
pub fn vector_field<T: Real>(state: PhasePlaneState<T>, params: &ModelParams<T>) -> Result<(T, T)> {
    let q = state.check()?;
    let s = q.sqrt();
    let two_phi = T::two() * state.phi;
    let dphi = -T::lit(27.0 / 4.0)
        * (T::one() - T::two() * state.k)
        * (params.c_k / T::lit(3.0) + T::two() * s * two_phi.cos());
    let dk = -T::lit(18.0) * q * s * two_phi.sin();
    Ok((dphi, dk))
}

/// Second derivatives `(H_KK, H_phiphi, H_Kphi)`.
pub fn hessian<T: Real>(state: PhasePlaneState<T>, params: &ModelParams<T>) -> Result<[T; 3]> {
    let q = state.check()?;
    let s = q.sqrt();
    let dq = T::one() - T::two() * state.k;
    let (sn, cs) = (T::two() * state.phi).sin_cos();
    let h_kk = T::lit(2.25)
        * (-T::two() * (params.c_k + T::lit(6.0) * s * cs) + T::lit(3.0) * cs * dq * dq / s);
    let h_pp = -T::lit(36.0) * q * s * cs;
    let h_kp = -T::lit(27.0) * s * dq * sn;
    Ok([h_kk, h_pp, h_kp])
}

/// Half-width `D` of the band in `sqrt(K(1-K))`: the nontrivial root of
/// `8 s^2 + 2(C-2) s - (C-2) = 0`.
pub fn band_d<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let c = params.c_k;
    if !(c > T::two()) {
        return Err(ModelError::ConstantTooSmall { c: f(c) });
    }
    let m = c - T::two();
    Ok(m / ((m * m + T::lit(8.0) * m).sqrt() + m))
}

/// Lower edge of the oscillation band.
pub fn gamma<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let d = band_d(params)?;
    Ok((T::one() - (T::one() - T::lit(4.0) * d * d).sqrt()) / T::two())
}

/// Energy of the heteroclinic orbits, `9(C-2)/16`.
pub fn heteroclinic_level<T: Real>(params: &ModelParams<T>) -> T {
    T::lit(9.0 / 16.0) * (params.c_k - T::two())
}

/// Half-period in the small-amplitude limit, `2pi / (9 sqrt(C+3))`.
pub fn limit_period<T: Real>(params: &ModelParams<T>) -> T {
    T::TAU() / (T::lit(9.0) * (params.c_k + T::lit(3.0)).sqrt())
}

struct PhaseSystem<T> {
    params: ModelParams<T>,
}

impl<T: Real> ode::OdeSystem<T, 2> for PhaseSystem<T> {
    fn rhs(&self, _t: T, y: &[T; 2]) -> Option<[T; 2]> {
        vector_field(PhasePlaneState::new(y[0], y[1]), &self.params)
            .ok()
            .map(|(a, b)| [a, b])
    }
}

/// Trajectory of the phase-plane flow with continuous output.
#[derive(Debug, Clone)]
pub struct ModelTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<PhasePlaneState<T>>,
    /// `H` at each sample.
    pub energy: Vec<T>,
    segments: Vec<DenseStep<T, 2>>,
}

impl<T: Real> ModelTrajectory<T> {
    pub fn span(&self) -> (T, T) {
        (self.times[0], *self.times.last().expect("nonempty trajectory"))
    }

    /// State at `tau`, interpolated; clamps to the ends of the span.
    pub fn sample(&self, tau: T) -> PhasePlaneState<T> {
        if self.segments.is_empty() || tau <= self.times[0] {
            return self.states[0];
        }
        let idx = self.segments.partition_point(|s| s.t1() < tau);
        let Some(seg) = self.segments.get(idx) else {
            return *self.states.last().expect("nonempty trajectory");
        };
        let y = seg.eval(tau);
        PhasePlaneState::new(y[0], y[1])
    }

    /// Largest `|H(tau) - H(0)| / |H(0)|` over the samples.
    pub fn max_energy_drift(&self) -> T {
        let h0 = self.energy[0];
        let scale = if h0 == T::zero() { T::one() } else { h0.abs() };
        self.energy.iter().fold(T::zero(), |m, &h| m.max((h - h0).abs() / scale))
    }
}

fn stalled<T: Real>(e: OdeError, state: PhasePlaneState<T>, params: &ModelParams<T>) -> ModelError {
    match e {
        OdeError::StepUnderflow { t } => ModelError::Stalled {
            tau: t,
            level: hstar(state, params).map(f).unwrap_or(f64::NAN),
            heteroclinic: f(heteroclinic_level(params)),
        },
        other => ModelError::Ode(other),
    }
}

/// Integrates the phase-plane flow over `[0, tau_span]`.
pub fn integrate<T: Real>(
    state0: PhasePlaneState<T>,
    params: &ModelParams<T>,
    tau_span: T,
    tol: T,
) -> Result<ModelTrajectory<T>> {
    if !(tol > T::zero()) {
        return Err(ModelError::BadTolerance(f(tol)));
    }
    let h0 = hstar(state0, params)?;
    let mut traj = ModelTrajectory {
        times: vec![T::zero()],
        states: vec![state0],
        energy: vec![h0],
        segments: Vec::new(),
    };
    if !(tau_span > T::zero()) {
        return Ok(traj);
    }
    let sys = PhaseSystem { params: *params };
    let mut opts = Options::with_tol(tol);
    opts.h_max = Some(limit_period(params) / T::lit(8.0));
    let mut stepper = Dop853::new(&sys, T::zero(), [state0.phi, state0.k], opts)?;
    while stepper.t() < tau_span {
        let seg = stepper.step(tau_span).map_err(|e| {
            let y = stepper.y();
            stalled(e, PhasePlaneState::new(y[0], y[1]), params)
        })?;
        let y = seg.end();
        let s = PhasePlaneState::new(y[0], y[1]);
        traj.times.push(seg.t1());
        traj.states.push(s);
        traj.energy.push(hstar(s, params)?);
        traj.segments.push(seg);
    }
    Ok(traj)
}

/// Which side of the centre the initial action lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

/// Checks `K0` against the band and returns its branch.
pub fn band_branch<T: Real>(k0: T, params: &ModelParams<T>) -> Result<Branch> {
    let g = gamma(params)?;
    let upper = T::one() - g;
    if k0 == T::half() {
        return Err(ModelError::Equilibrium { k0: f(k0) });
    }
    if !(k0 > g && k0 < upper) {
        return Err(ModelError::OutsideBand { k0: f(k0), gamma: f(g), upper: f(upper) });
    }
    Ok(if k0 < T::half() { Branch::Lower } else { Branch::Upper })
}

/// Result of an event-located half period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPeriod<T> {
    pub tau: T,
    /// State at the located event.
    pub end: PhasePlaneState<T>,
}

/// Multiple of the limit period after which a missing return is reported
/// as a diverging period.
pub const PERIOD_CAP_FACTOR: f64 = 200.0;

/// Event resolution in model time.
pub const EVENT_TIME_TOL: f64 = 1e-12;

/// Time for the orbit from `(0, K0)` to return to `phi = 0 (mod pi)`, with
/// the state there.
pub fn half_period_detail<T: Real>(
    k0: T,
    params: &ModelParams<T>,
    tol: T,
) -> Result<HalfPeriod<T>> {
    if !(tol > T::zero()) {
        return Err(ModelError::BadTolerance(f(tol)));
    }
    band_branch(k0, params)?;
    let cap = T::lit(PERIOD_CAP_FACTOR) * limit_period(params);
    let sys = PhaseSystem { params: *params };
    let mut opts = Options::with_tol(tol);
    opts.h_max = Some(limit_period(params) / T::lit(8.0));
    let mut stepper = Dop853::new(&sys, T::zero(), [T::zero(), k0], opts)?;
    let mut prev: Option<T> = None;
    while stepper.t() < cap {
        let seg = stepper.step(cap).map_err(|e| {
            let y = stepper.y();
            stalled(e, PhasePlaneState::new(y[0], y[1]), params)
        })?;
        let g1 = seg.end()[0].sin();
        if let Some(g0) = prev {
            if g0 != T::zero() && (g1 == T::zero() || (g0 < T::zero()) != (g1 < T::zero())) {
                let g = |t: T| seg.eval(t)[0].sin();
                let time_tol = T::lit(EVENT_TIME_TOL).max(T::epsilon() * seg.t1() * T::lit(4.0));
                let tau = ode::bisect(seg.t0, seg.t1(), g0, time_tol, g);
                let y = seg.eval(tau);
                return Ok(HalfPeriod { tau, end: PhasePlaneState::new(y[0], y[1]) });
            }
        }
        prev = Some(g1);
    }
    Err(ModelError::DivergingPeriod { cap: f(cap) })
}

pub fn half_period<T: Real>(k0: T, params: &ModelParams<T>, tol: T) -> Result<T> {
    half_period_detail(k0, params, tol).map(|h| h.tau)
}

/// ODE tolerance used for every half-period evaluation inside
/// [`invert_period`].
pub const INVERSION_ODE_TOL: f64 = 1e-12;

/// Outcome of a period inversion on the lower branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodInversion<T> {
    /// Preimage nearest the centre.
    pub k0: T,
    pub achieved: T,
    /// Every preimage found by the scan, in decreasing `K0`.
    pub preimages: Vec<T>,
}

impl<T> PeriodInversion<T> {
    pub fn is_multivalued(&self) -> bool {
        self.preimages.len() > 1
    }
}

fn scan_grid<T: Real>(g: T) -> Vec<T> {
    let width = T::half() - g;
    let mut pts = Vec::new();
    // Near the centre the period excess shrinks like (1/2 - K)^2 and drops
    // below the integration noise, so the grid stops well short of it.
    for i in 1..=40 {
        let u = T::lit(0.5f64.powi(i));
        if i <= 10 {
            pts.push(T::half() - width * u);
        }
        pts.push(g + width * u);
    }
    for i in 1..32 {
        pts.push(g + width * T::from_count(i) / T::lit(32.0));
    }
    pts.retain(|&k| k > g && k < T::half());
    pts.sort_by(|a, b| b.partial_cmp(a).expect("finite grid"));
    pts.dedup();
    pts
}

/// Finds `K0` in `(gamma, 1/2)` whose half-period is `target`, to relative
/// accuracy `tol`. The branch is scanned on a grid first since monotonicity
/// of the period is not assumed; every bracketed preimage is refined.
pub fn invert_period<T: Real>(target: T, params: &ModelParams<T>, tol: T) -> Result<PeriodInversion<T>> {
    if !(tol > T::zero()) {
        return Err(ModelError::BadTolerance(f(tol)));
    }
    let limit = limit_period(params);
    if !(target > limit) {
        return Err(ModelError::UnreachablePeriod { target: f(target), limit: f(limit) });
    }
    let g = gamma(params)?;
    let ode_tol = T::lit(INVERSION_ODE_TOL).max(T::epsilon() * T::lit(100.0));
    let period = |k: T| -> Result<T> {
        match half_period(k, params, ode_tol) {
            Err(ModelError::DivergingPeriod { .. }) | Err(ModelError::Stalled { .. }) => Ok(T::infinity()),
            other => other,
        }
    };
    // The centre itself has the limit period.
    let mut samples = vec![(T::half(), limit)];
    for k in scan_grid(g) {
        samples.push((k, period(k)?));
    }
    let mut preimages = Vec::new();
    let mut best: Option<(T, T)> = None;
    for w in samples.windows(2) {
        let ((ka, ta), (kb, tb)) = (w[0], w[1]);
        let (da, db) = (ta - target, tb - target);
        if da == T::zero() {
            preimages.push(ka);
            best.get_or_insert((ka, ta));
            continue;
        }
        if (da < T::zero()) == (db < T::zero()) {
            continue;
        }
        let (mut lo, mut hi, mut dlo) = (ka, kb, da);
        let mut found = (ka, ta);
        for _ in 0..200 {
            let mid = lo + (hi - lo) * T::half();
            let tm = period(mid)?;
            found = (mid, tm);
            if (tm - target).abs() <= tol * target * T::lit(0.5) || (hi - lo).abs() <= T::epsilon() {
                break;
            }
            if (tm - target < T::zero()) == (dlo < T::zero()) {
                lo = mid;
                dlo = tm - target;
            } else {
                hi = mid;
            }
        }
        preimages.push(found.0);
        best.get_or_insert(found);
    }
    match best {
        Some((k0, achieved)) => Ok(PeriodInversion { k0, achieved, preimages }),
        None => {
            let sampled_max = samples.iter().map(|s| s.1).filter(|t| t.is_finite()).fold(limit, T::max);
            Err(ModelError::PeriodNotBracketed { target: f(target), sampled_max: f(sampled_max) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p9() -> ModelParams<f64> {
        ModelParams::from_c(9.0)
    }

    #[test]
    fn hstar_examples() {
        let p = p9();
        assert!((hstar(PhasePlaneState::new(0.0, 0.5), &p).unwrap() - 99.0 / 16.0).abs() < 1e-14);
        assert!((hstar(PhasePlaneState::new(PI / 2.0, 0.5), &p).unwrap() - 63.0 / 16.0).abs() < 1e-14);
        assert!(hstar(PhasePlaneState::new(1.0, 1e-12), &p).unwrap().abs() < 1e-10);
        assert!(hstar(PhasePlaneState::new(0.0, 0.0), &p).is_err());
        assert!(hstar(PhasePlaneState::new(0.0, 1.2), &p).is_err());
    }

    #[test]
    fn vector_field_examples() {
        let p = p9();
        let (a, b) = vector_field(PhasePlaneState::new(0.0, 0.5), &p).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        let (_, dk) = vector_field(PhasePlaneState::new(PI / 4.0, 0.5), &p).unwrap();
        assert!((dk + 2.25).abs() < 1e-14);
    }

    #[test]
    fn hessian_at_centre() {
        for c in [9.0_f64, 20.0, 57.5] {
            let p = ModelParams::from_c(c);
            let h = hessian(PhasePlaneState::new(0.0, 0.5), &p).unwrap();
            assert!((h[0] + 4.5 * (c + 3.0)).abs() < 1e-12);
            assert!((h[1] + 4.5).abs() < 1e-14);
            assert_eq!(h[2], 0.0);
            // Frequency of the linearisation gives the limit period.
            let omega = (h[0] * h[1]).sqrt();
            assert!((PI / omega - limit_period(&p)).abs() < 1e-14);
        }
    }

    #[test]
    fn band_edges() {
        let p = p9();
        let d = band_d(&p).unwrap();
        // D solves the cubic 16 s^3 + 4 C s^2 - (C - 2) = 0 on its positive branch.
        assert!((16.0 * d.powi(3) + 36.0 * d * d - 7.0).abs() < 1e-13);
        let g = gamma(&p).unwrap();
        assert!((g * (1.0 - g) - d * d).abs() < 1e-15);
        assert!((d - 0.405_868_8).abs() < 1e-6);
        assert!((g - 0.207_988_9).abs() < 1e-6);
        let big = ModelParams::<f64>::from_c(1e6);
        assert!((band_d(&big).unwrap() - 0.5).abs() < 1e-3);
        assert!((gamma(&big).unwrap() - 0.5).abs() < 1e-3);
        assert!(gamma(&ModelParams::from_c(2.0)).is_err());
    }

    #[test]
    fn heteroclinic_level_matches_saddle() {
        let p = p9();
        let saddle = PhasePlaneState::new(PI / 2.0, 0.5);
        let (a, b) = vector_field(saddle, &p).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
        let h = hessian(saddle, &p).unwrap();
        let lambda = (-h[0] * h[1]).sqrt();
        assert!((lambda - 4.5 * (9.0f64 - 3.0).sqrt()).abs() < 1e-12);
        assert!((hstar(saddle, &p).unwrap() - heteroclinic_level(&p)).abs() < 1e-12);
        let g = gamma(&p).unwrap();
        let edge = hstar(PhasePlaneState::new(0.0, g), &p).unwrap();
        assert!((edge - heteroclinic_level(&p)).abs() < 1e-12);
    }

    #[test]
    fn limit_period_value() {
        assert!((limit_period(&p9()) - 0.201_533_3).abs() < 1e-7);
    }

    #[test]
    fn half_period_errors() {
        let p = p9();
        assert!(matches!(half_period(0.5, &p, 1e-10), Err(ModelError::Equilibrium { .. })));
        assert!(matches!(half_period(0.1, &p, 1e-10), Err(ModelError::OutsideBand { .. })));
        assert!(matches!(half_period(0.95, &p, 1e-10), Err(ModelError::OutsideBand { .. })));
    }

    #[test]
    fn half_period_branches_agree() {
        let p = p9();
        let lo = half_period_detail(0.3, &p, 1e-12).unwrap();
        let hi = half_period_detail(0.7, &p, 1e-12).unwrap();
        assert!((lo.tau - hi.tau).abs() < 1e-9);
        assert!((lo.end.k - 0.7).abs() < 1e-9);
        assert!((hi.end.k - 0.3).abs() < 1e-9);
        assert!((lo.tau - 0.254_261_4).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = p9();
        let tr = integrate(PhasePlaneState::new(0.0, 0.5), &p, 3.0, 1e-12).unwrap();
        for s in &tr.states {
            assert_eq!((s.phi, s.k), (0.0, 0.5));
        }
    }

    #[test]
    fn trajectory_sampling_is_continuous() {
        let p = p9();
        let tr = integrate(PhasePlaneState::new(0.0, 0.3), &p, 1.0, 1e-12).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let q = tr.sample(*t);
            assert!((q.k - s.k).abs() < 1e-12 && (q.phi - s.phi).abs() < 1e-12);
        }
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cluster_params_single_and_pair() {
        let fam = ClusterFamily::new(&[3]).unwrap();
        let p = cluster_params(&fam, 0.1_f64, 1).unwrap();
        assert!((p.c_k - 9.0).abs() < 1e-12);
        assert!((p.j_total - 1.5 * 0.01 * (-6.0f64).exp()).abs() < 1e-18);
        let fam = ClusterFamily::relaxed(&[3, 9]).unwrap();
        let p1 = cluster_params(&fam, 1.0_f64, 1).unwrap();
        assert!((p1.c_k - (15.0 * (1.0 + (-12.0f64).exp()) - 6.0)).abs() < 1e-12);
        let p2 = cluster_params(&fam, 1.0_f64, 2).unwrap();
        assert!((p2.c_k - (15.0 * (12.0f64.exp() + 1.0) - 6.0)).abs() / p2.c_k < 1e-14);
        assert!(matches!(cluster_params::<f64>(&fam, 1.0, 3), Err(ModelError::ClusterIndex { .. })));
    }

    #[test]
    fn single_precision_smoke() {
        let p = ModelParams::from_c(9.0_f32);
        let t = half_period(0.3_f32, &p, 1e-6).unwrap();
        assert!((t - 0.254_261_4).abs() < 1e-4);
    }
}
