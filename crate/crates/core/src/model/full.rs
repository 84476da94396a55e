//! Unreduced action-angle flow of one cluster.
//!
//! The four modes `a1 = n+1`, `b1 = n-1`, `a2 = n-2`, `b2 = n+2` carry
//! actions `I` and angles `theta` with Hamiltonian
//!
//! ```text
//! h = 6 J^3 + sum j^2 I_j - 9 J sum I_j^2 + 4 sum I_j^3
//!     + 18 sqrt(I_a2 I_b2) I_a1 I_b1 cos 2phi0
//! phi0 = theta_a1 - theta_b1 + theta_a2/2 - theta_b2/2
//! ```
//!
//! where `J` is the total action (the cluster's own plus a fixed external
//! part). Equations of motion are `theta' = -dh/dI`, `I' = dh/dtheta`,
//! the same orientation as the phase-plane system.

use serde::{Deserialize, Serialize};

use super::{f, ModelError, ModelParams, PhasePlaneState, Result};
use crate::ode::{DenseStep, Dop853, OdeError, OdeSystem, Options};
use crate::scalar::{wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionAngleState<T> {
    pub i_a1: T,
    pub i_b1: T,
    pub i_a2: T,
    pub i_b2: T,
    pub theta_a1: T,
    pub theta_b1: T,
    pub theta_a2: T,
    pub theta_b2: T,
}

impl<T: Real> ActionAngleState<T> {
    /// Actions with all angles zero.
    pub fn from_actions(i: [T; 4]) -> Self {
        Self::from_array([i[0], i[1], i[2], i[3], T::zero(), T::zero(), T::zero(), T::zero()])
    }

    /// Layout `[I_a1, I_b1, I_a2, I_b2, theta_a1, theta_b1, theta_a2, theta_b2]`.
    pub fn to_array(&self) -> [T; 8] {
        [
            self.i_a1,
            self.i_b1,
            self.i_a2,
            self.i_b2,
            self.theta_a1,
            self.theta_b1,
            self.theta_a2,
            self.theta_b2,
        ]
    }

    pub fn from_array(y: [T; 8]) -> Self {
        Self {
            i_a1: y[0],
            i_b1: y[1],
            i_a2: y[2],
            i_b2: y[3],
            theta_a1: y[4],
            theta_b1: y[5],
            theta_a2: y[6],
            theta_b2: y[7],
        }
    }

    pub fn actions(&self) -> [T; 4] {
        [self.i_a1, self.i_b1, self.i_a2, self.i_b2]
    }

    /// The resonant phase combination, unwrapped.
    pub fn phi0(&self) -> T {
        self.theta_a1 - self.theta_b1 + T::half() * (self.theta_a2 - self.theta_b2)
    }

    /// `(I_a1 + I_b1, I_a2 + I_b2, I_b2 + I_a1/2)`.
    pub fn conserved(&self) -> [T; 3] {
        [self.i_a1 + self.i_b1, self.i_a2 + self.i_b2, self.i_b2 + T::half() * self.i_a1]
    }
}

/// Cluster actions for the phase-plane state, on the level
/// `I_a1 + I_b1 = eps_k^2`, `I_a2 + I_b2 = I_b2 + I_a1/2 = eps_k^2/2`.
/// Angles are zero.
pub fn actions_from<T: Real>(state: PhasePlaneState<T>, params: &ModelParams<T>) -> ActionAngleState<T> {
    let e2 = params.eps_k * params.eps_k;
    let k = state.k;
    ActionAngleState::from_actions([
        e2 * k,
        e2 * (T::one() - k),
        e2 * k * T::half(),
        e2 * (T::one() - k) * T::half(),
    ])
}

/// Phase-plane state of an action-angle state together with its conserved
/// triple.
pub fn reduce<T: Real>(aa: &ActionAngleState<T>, params: &ModelParams<T>) -> (PhasePlaneState<T>, [T; 3]) {
    let e2 = params.eps_k * params.eps_k;
    (PhasePlaneState::new(wrap_angle(aa.phi0()), aa.i_a1 / e2), aa.conserved())
}

fn mode_numbers<T: Real>(center: i128) -> [T; 4] {
    let n = center as f64;
    [T::lit(n + 1.0), T::lit(n - 1.0), T::lit(n - 2.0), T::lit(n + 2.0)]
}

struct FullSystem<T> {
    j_ext: T,
    modes: [T; 4],
}

impl<T: Real> FullSystem<T> {
    fn new(params: &ModelParams<T>) -> Self {
        Self { j_ext: params.external_action(), modes: mode_numbers(params.center) }
    }

    fn energy(&self, y: &[T; 8]) -> T {
        let i = [y[0], y[1], y[2], y[3]];
        let j = self.j_ext + i[0] + i[1] + i[2] + i[3];
        let mut quad = T::zero();
        let mut sq = T::zero();
        let mut cube = T::zero();
        for m in 0..4 {
            quad += self.modes[m] * self.modes[m] * i[m];
            sq += i[m] * i[m];
            cube += i[m] * i[m] * i[m];
        }
        let phi0 = y[4] - y[5] + T::half() * (y[6] - y[7]);
        let coupling =
            T::lit(18.0) * (i[2] * i[3]).sqrt() * i[0] * i[1] * (T::two() * phi0).cos();
        T::lit(6.0) * j * j * j + quad - T::lit(9.0) * j * sq + T::lit(4.0) * cube + coupling
    }
}

impl<T: Real> OdeSystem<T, 8> for FullSystem<T> {
    fn rhs(&self, _t: T, y: &[T; 8]) -> Option<[T; 8]> {
        let (a1, b1, a2, b2) = (y[0], y[1], y[2], y[3]);
        if !(a1 > T::zero() && b1 > T::zero() && a2 > T::zero() && b2 > T::zero()) {
            return None;
        }
        let i = [a1, b1, a2, b2];
        let j = self.j_ext + a1 + b1 + a2 + b2;
        let sq = a1 * a1 + b1 * b1 + a2 * a2 + b2 * b2;
        let phi0 = y[4] - y[5] + T::half() * (y[6] - y[7]);
        let (sn, cs) = (T::two() * phi0).sin_cos();
        let r = (a2 * b2).sqrt();
        let c18 = T::lit(18.0);
        let coupling_grad = [
            c18 * r * b1 * cs,
            c18 * r * a1 * cs,
            T::lit(9.0) * (b2 / a2).sqrt() * a1 * b1 * cs,
            T::lit(9.0) * (a2 / b2).sqrt() * a1 * b1 * cs,
        ];
        let mut out = [T::zero(); 8];
        for m in 0..4 {
            let dh_di = c18 * j * j + self.modes[m] * self.modes[m]
                - T::lit(9.0) * sq
                - c18 * j * i[m]
                + T::lit(12.0) * i[m] * i[m]
                + coupling_grad[m];
            out[4 + m] = -dh_di;
        }
        // dh/dtheta = -36 r a1 b1 sin(2 phi0) * dphi0/dtheta.
        let g = -T::lit(36.0) * r * a1 * b1 * sn;
        out[0] = g;
        out[1] = -g;
        out[2] = g * T::half();
        out[3] = -g * T::half();
        Some(out)
    }
}

/// Hamiltonian of the unreduced cluster.
pub fn full_energy<T: Real>(aa: &ActionAngleState<T>, params: &ModelParams<T>) -> T {
    FullSystem::new(params).energy(&aa.to_array())
}

/// Trajectory of the action-angle flow in the original time `t`.
#[derive(Debug, Clone)]
pub struct FullTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<ActionAngleState<T>>,
    /// `[K1, K2, K_half, h]` at each sample.
    pub conserved: Vec<[T; 4]>,
    segments: Vec<DenseStep<T, 8>>,
}

impl<T: Real> FullTrajectory<T> {
    pub fn sample(&self, t: T) -> ActionAngleState<T> {
        if self.segments.is_empty() || t <= self.times[0] {
            return self.states[0];
        }
        let idx = self.segments.partition_point(|s| s.t1() < t);
        match self.segments.get(idx) {
            Some(seg) => ActionAngleState::from_array(seg.eval(t)),
            None => *self.states.last().expect("nonempty trajectory"),
        }
    }

    /// Largest relative drift of each of `[K1, K2, K_half, h]`.
    pub fn max_drift(&self) -> [T; 4] {
        let c0 = self.conserved[0];
        let mut out = [T::zero(); 4];
        for c in &self.conserved {
            for q in 0..4 {
                let scale = if c0[q] == T::zero() { T::one() } else { c0[q].abs() };
                out[q] = out[q].max((c[q] - c0[q]).abs() / scale);
            }
        }
        out
    }
}

/// Integrates the action-angle flow over `[0, span]` in original time.
pub fn full_model_integrate<T: Real>(
    aa0: &ActionAngleState<T>,
    params: &ModelParams<T>,
    span: T,
    tol: T,
) -> Result<FullTrajectory<T>> {
    if !(tol > T::zero()) {
        return Err(ModelError::BadTolerance(f(tol)));
    }
    let names = ["I_a1", "I_b1", "I_a2", "I_b2"];
    for (name, v) in names.iter().zip(aa0.actions()) {
        if !(v > T::zero()) {
            return Err(ModelError::SingularAction { name });
        }
    }
    let sys = FullSystem::new(params);
    let record = |aa: &ActionAngleState<T>| {
        let c = aa.conserved();
        [c[0], c[1], c[2], sys.energy(&aa.to_array())]
    };
    let mut traj = FullTrajectory {
        times: vec![T::zero()],
        states: vec![*aa0],
        conserved: vec![record(aa0)],
        segments: Vec::new(),
    };
    if !(span > T::zero()) {
        return Ok(traj);
    }
    let mut opts = Options::with_tol(tol);
    // Keep several steps per beating period even when angles rotate slowly.
    let e4 = params.eps_k.powi(4);
    opts.h_max = Some(super::limit_period(params) / (T::lit(8.0) * e4));
    let mut stepper = Dop853::new(&sys, T::zero(), aa0.to_array(), opts)?;
    while stepper.t() < span {
        let seg = stepper.step(span).map_err(|e| match e {
            OdeError::StepUnderflow { .. } => {
                let y = stepper.y();
                let m = (0..4).min_by(|&a, &b| y[a].partial_cmp(&y[b]).expect("finite")).unwrap_or(0);
                ModelError::SingularAction { name: names[m] }
            }
            other => ModelError::Ode(other),
        })?;
        let aa = ActionAngleState::from_array(seg.end());
        traj.times.push(seg.t1());
        traj.conserved.push(record(&aa));
        traj.states.push(aa);
        traj.segments.push(seg);
    }
    Ok(traj)
}
