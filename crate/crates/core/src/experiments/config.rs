use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};

/// Amplitude of each cluster in the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    /// Every cluster at unit amplitude.
    Unit,
    /// Cluster `k` at `e^{-n_k}`.
    Exponential,
    /// Explicit per-cluster amplitudes.
    User(Vec<f64>),
}

/// Variable in which actions and leakage are reported. `v = nu^{1/4} u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    U,
    V,
}

/// Model time per unit of PDE time is `time_factor * nu * w_k^4`.
pub const DEFAULT_TIME_FACTOR: f64 = 1.0 / 3.0;

/// A single beating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Cluster centres `n_k`.
    pub centers: Vec<i64>,
    pub nu: f64,
    /// Initial normalised action per cluster.
    pub k0: Vec<f64>,
    /// Initial angles `(a1, b1, a2, b2)` per cluster; empty means zero.
    pub phases: Vec<[f64; 4]>,
    pub weights: Weights,
    /// Fourier truncation `M`.
    pub m: usize,
    pub dt: f64,
    pub pad: usize,
    /// Simulated time; when absent, `periods` model periods of the first
    /// cluster.
    pub t_end: Option<f64>,
    pub periods: f64,
    pub variable: Variable,
    /// `C` in the out-of-cluster tail `|u_p| = C nu^{1/2} e^{-|p|}`; zero
    /// disables the tail.
    pub tail_constant: f64,
    /// Additional seeded modes `(p, re, im)` in the `u` variable.
    pub extra_modes: Vec<(i64, f64, f64)>,
    pub sample_stride: usize,
    pub model_tol: f64,
    pub time_factor: f64,
    /// Integrate the model only.
    pub skip_pde: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            centers: vec![3],
            nu: 1e-2,
            k0: vec![0.3],
            phases: Vec::new(),
            weights: Weights::Unit,
            m: 64,
            dt: 1e-3,
            pad: 3,
            t_end: None,
            periods: 1.0,
            variable: Variable::U,
            tail_constant: 1.0,
            extra_modes: Vec::new(),
            sample_stride: 50,
            model_tol: 1e-12,
            time_factor: DEFAULT_TIME_FACTOR,
            skip_pde: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn centers_i128(&self) -> Vec<i128> {
        self.centers.iter().map(|&n| n as i128).collect()
    }

    pub fn phases_for(&self, k: usize) -> [f64; 4] {
        self.phases.get(k).copied().unwrap_or([0.0; 4])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.centers.is_empty() {
            return bad("at least one cluster centre is required".into());
        }
        if self.k0.len() != self.centers.len() {
            return bad(format!("{} centres but {} K0 values", self.centers.len(), self.k0.len()));
        }
        if !self.phases.is_empty() && self.phases.len() != self.centers.len() {
            return bad(format!("{} centres but {} phase quadruples", self.centers.len(), self.phases.len()));
        }
        if let Weights::User(w) = &self.weights {
            if w.len() != self.centers.len() || w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return bad("user weights must be positive, one per cluster".into());
            }
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return bad(format!("nu must be finite and nonnegative, got {}", self.nu));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.pad < 3 {
            return bad(format!("pad must be at least 3, got {}", self.pad));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive".into());
        }
        if !(self.model_tol > 0.0) {
            return bad("model_tol must be positive".into());
        }
        if !(self.time_factor > 0.0) || !self.time_factor.is_finite() {
            return bad("time_factor must be positive".into());
        }
        if !(self.tail_constant >= 0.0) {
            return bad("tail_constant must be nonnegative".into());
        }
        match self.t_end {
            Some(t) if !(t > 0.0) || !t.is_finite() => return bad(format!("t_end must be positive, got {t}")),
            None if !(self.periods > 0.0) => return bad("periods must be positive".into()),
            None if self.nu == 0.0 => return bad("t_end is required when nu = 0".into()),
            _ => {}
        }
        let top = self.centers.iter().map(|n| n + 2).max().unwrap_or(0);
        if (self.m as i64) < top {
            return bad(format!("M = {} does not contain mode {top}", self.m));
        }
        for &(p, ..) in &self.extra_modes {
            if p.unsigned_abs() as usize > self.m {
                return bad(format!("seeded mode {p} lies beyond M = {}", self.m));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.weights = Weights::User(vec![1.0]);
        cfg.extra_modes = vec![(7, 0.1, 0.0)];
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn toml_keys() {
        let cfg = ScenarioConfig::from_toml(
            "centers = [3, 9]\nk0 = [0.3, 0.4]\nnu = 0.001\nweights = { user = [1.0, 0.5] }\nvariable = \"v\"\n",
        )
        .unwrap();
        assert_eq!(cfg.centers, vec![3, 9]);
        assert_eq!(cfg.variable, Variable::V);
        assert!(ScenarioConfig::from_toml("bogus = 1").is_err());
        assert!(ScenarioConfig::from_toml("centers = [3, 9]").is_err());
        assert!(ScenarioConfig::from_toml("m = 4").is_err());
    }
}
