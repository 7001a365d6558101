use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming a JSON file with a [`ToleranceConfig`].
pub const CONFIG_ENV: &str = "OPDIAG_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    pub restarts: usize,
    /// Relative slack between reported norm brackets; also the convergence
    /// target for the interior-point gap.
    pub bisection_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            restarts: 8,
            bisection_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Relative singular-value threshold for rank decisions.
    pub rank_tol: f64,
    /// Residual threshold for invariant checks.
    pub verify_tol: f64,
    pub opt: OptimizerConfig,
    pub seed: u64,
    /// Perturb certificate functionals inside the epsilon slack.
    pub fuzz: bool,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            verify_tol: 1e-8,
            opt: OptimizerConfig::default(),
            seed: 0,
            fuzz: false,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank_tol", self.rank_tol),
            ("verify_tol", self.verify_tol),
            ("opt.bisection_tol", self.opt.bisection_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.opt.max_iter == 0 {
            return Err(Error::Invalid("opt.max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Deterministic generator for one consumer; `stream` separates consumers
    /// that share a seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    /// Loads the config named by [`CONFIG_ENV`], or the defaults when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let cfg: Self = serde_json::from_str(&text)?;
                cfg.validate()?;
                Ok(cfg)
            }
            None => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ToleranceConfig::default();
        assert_eq!(cfg.rank_tol, 1e-10);
        assert_eq!(cfg.verify_tol, 1e-8);
        assert_eq!(cfg.opt.restarts, 8);
        assert_eq!(cfg.opt.max_iter, 500);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive() {
        let mut cfg = ToleranceConfig::default();
        cfg.verify_tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.verify_tol = 1e-8;
        cfg.rank_tol = f64::NAN;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ToleranceConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.verify_tol, 1e-8);
    }
}
