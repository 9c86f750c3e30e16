use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::gaussian::DEFAULT_MAX_JITTER;

/// Default number of Euler steps per horizon (`dt = t_target / 256`).
pub const DEFAULT_STEPS: usize = 256;
/// Number of equally spaced output times (in addition to t = 0).
pub const OUTPUT_TIMES: usize = 64;

/// `{k·√t : 0 ≤ k < ⌈t^{−1/2}⌉}`, the grid of spacing √t covering [0, 1).
///
/// # Panics
/// If `t` is not in (0, 1].
pub fn make_grid(t: f64) -> Vec<f64> {
    assert!(t > 0.0 && t <= 1.0, "grid time must lie in (0, 1], got {t}");
    let h = t.sqrt();
    let inv = 1.0 / h;
    // 1/√t is often an integer up to rounding (t = 0.01 → 10.000000000000002).
    let count = (inv - 1e-9 * inv).ceil().max(1.0) as usize;
    (0..count).map(|k| k as f64 * h).collect()
}

/// Initial points of the simulated particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    /// `make_grid(t_target)`.
    Sqrt,
    Explicit(Vec<f64>),
}

/// Full description of a simulation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub phi: CovarianceModel,
    pub t_target: f64,
    pub dt: f64,
    pub grid: GridRule,
    pub replicas: usize,
    pub seed: u64,
    pub couple_tangent: bool,
    /// Clusters closer than this merge; 0 merges only on crossing or contact.
    pub merge_eps: f64,
    pub max_jitter: f64,
    /// Extra recording times in (0, t_target].
    pub checkpoints: Vec<f64>,
}

impl SimConfig {
    pub fn new(phi: CovarianceModel, t_target: f64) -> Self {
        SimConfig {
            phi,
            t_target,
            dt: t_target / DEFAULT_STEPS as f64,
            grid: GridRule::Sqrt,
            replicas: 1,
            seed: 0,
            couple_tangent: false,
            merge_eps: 0.0,
            max_jitter: DEFAULT_MAX_JITTER,
            checkpoints: Vec::new(),
        }
    }

    pub fn with_grid(mut self, points: Vec<f64>) -> Self {
        self.grid = GridRule::Explicit(points);
        self
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn coupled(mut self) -> Self {
        self.couple_tangent = true;
        self
    }

    /// Same experiment at another horizon, keeping `t_target / dt` fixed.
    pub fn rescaled_to(&self, t_target: f64) -> Self {
        let steps = self.t_target / self.dt;
        let mut cfg = self.clone();
        cfg.t_target = t_target;
        cfg.dt = t_target / steps;
        cfg.checkpoints.clear();
        cfg
    }

    pub fn grid_points(&self) -> Vec<f64> {
        match &self.grid {
            GridRule::Sqrt => make_grid(self.t_target.min(1.0)),
            GridRule::Explicit(points) => points.clone(),
        }
    }

    /// Number of Euler steps; the effective step is `t_target / steps ≤ dt`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_target / self.dt;
        (ratio - 1e-9 * ratio).ceil().max(1.0) as usize
    }

    pub fn step_length(&self) -> f64 {
        self.t_target / self.steps() as f64
    }

    /// Step indices at which positions are recorded, always including 0 and
    /// the final step.
    pub fn record_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut steps: Vec<usize> = (0..=OUTPUT_TIMES)
            .map(|k| ((k * n) as f64 / OUTPUT_TIMES as f64).round() as usize)
            .collect();
        for &c in &self.checkpoints {
            steps.push(((c / self.t_target) * n as f64).round() as usize);
        }
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if !(self.t_target > 0.0 && self.t_target.is_finite()) {
            return bad(format!("t_target must be positive, got {}", self.t_target));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_target) {
            return bad(format!(
                "dt must lie in (0, t_target = {}], got {}",
                self.t_target, self.dt
            ));
        }
        if self.steps() >= 1 << 32 {
            return bad(format!("t_target / dt = {} steps is too many", self.steps()));
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.merge_eps >= 0.0) {
            return bad(format!("merge_eps must be non-negative, got {}", self.merge_eps));
        }
        if !(self.max_jitter >= 0.0) {
            return bad(format!("max_jitter must be non-negative, got {}", self.max_jitter));
        }
        match &self.grid {
            GridRule::Sqrt => {
                if self.t_target > 1.0 {
                    return bad(format!("the sqrt grid needs t_target <= 1, got {}", self.t_target));
                }
            }
            GridRule::Explicit(points) => {
                if points.is_empty() {
                    return bad("explicit grid is empty".into());
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return bad("explicit grid contains a non-finite point".into());
                }
                if points.windows(2).any(|w| w[1] < w[0]) {
                    return bad("explicit grid points must be non-decreasing".into());
                }
            }
        }
        for &c in &self.checkpoints {
            if !(c > 0.0 && c <= self.t_target) {
                return bad(format!("checkpoint {c} lies outside (0, t_target]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        assert_eq!(make_grid(0.25), vec![0.0, 0.5]);
        let g = make_grid(0.01);
        assert_eq!(g.len(), 10);
        for (k, x) in g.iter().enumerate() {
            assert!((x - 0.1 * k as f64).abs() < 1e-15);
        }
        assert_eq!(make_grid(1.0), vec![0.0]);
        assert_eq!(make_grid(1e-4).len(), 100);
        assert_eq!(make_grid(1e-3).len(), 32);
        assert!(make_grid(1e-5).iter().all(|&x| x < 1.0));
    }

    #[test]
    fn defaults() {
        let c = SimConfig::new(CovarianceModel::Gaussian, 0.01);
        assert_eq!(c.dt, 0.01 / 256.0);
        assert_eq!(c.steps(), 256);
        assert_eq!(c.grid_points().len(), 10);
        let rec = c.record_steps();
        assert_eq!(rec.len(), 65);
        assert_eq!(rec[0], 0);
        assert_eq!(*rec.last().unwrap(), 256);
        c.validate().unwrap();
    }

    #[test]
    fn checkpoints_are_recorded() {
        let mut c = SimConfig::new(CovarianceModel::Arratia, 1.0).with_dt(1e-3);
        c.checkpoints = vec![0.0005, 0.5];
        let rec = c.record_steps();
        assert!(rec.contains(&1) && rec.contains(&500));
    }

    #[test]
    fn invalid_configs() {
        let base = SimConfig::new(CovarianceModel::Gaussian, 0.01);
        assert!(base.clone().with_dt(0.02).validate().is_err());
        assert!(base.clone().with_replicas(0).validate().is_err());
        assert!(base.clone().with_grid(vec![0.5, 0.1]).validate().is_err());
        assert!(base.clone().with_grid(vec![]).validate().is_err());
        assert!(SimConfig::new(CovarianceModel::ExpAlpha { alpha: 3.0 }, 0.01)
            .validate()
            .is_err());
        assert!(SimConfig::new(CovarianceModel::Gaussian, 2.0).validate().is_err());
    }

    #[test]
    fn rescale_keeps_step_count() {
        let c = SimConfig::new(CovarianceModel::Gaussian, 0.01).with_dt(0.01 / 512.0);
        let r = c.rescaled_to(1e-4);
        assert_eq!(r.steps(), 512);
    }
}
