//! Experiment configuration: one JSON document with every knob, dumpable
//! with its full default set so effective settings are always inspectable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demo::ArrivalOrder;
use crate::error::{Error, Result};
use crate::lifelong::LifelongConfig;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Demonstration-set generation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoGenConfig {
    pub pure_styles: usize,
    pub mixtures: usize,
    pub order: ArrivalOrder,
    /// Demo file path (written by gen-demos, read by run-lifelong).
    pub path: String,
}

/// Evaluation settings for the reward-correlation test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub noise_levels: Vec<f64>,
    pub seeds_per_level: usize,
    /// Mixture demos examined by the efficiency comparison (0 = all).
    pub efficiency_demo_cap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            noise_levels: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            seeds_per_level: 10,
            efficiency_demo_cap: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub env: String,
    pub seed: u64,
    /// Worker threads (0 = all available cores).
    pub threads: usize,
    pub out_dir: String,
    pub demos: DemoGenConfig,
    pub lifelong: LifelongConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    /// Defaults tuned per environment.
    pub fn default_for(env: &str) -> Result<Self> {
        let mut lifelong = LifelongConfig::default();
        // Policy-gradient step sizes, exploration scales, and iteration
        // budgets are tuned per environment; the batch of 20 episodes per
        // update keeps the gradient noise low enough for the vanilla
        // learner to break out of its early plateau reliably.
        lifelong.airl.disc_batch = 32;
        lifelong.airl.pg.learning_rate = 1.0;
        lifelong.airl.pg.episodes_per_iteration = 20;
        lifelong.msrd.disc_batch = 32;
        lifelong.msrd.pg.learning_rate = 0.1;
        // Acceptance thresholds come from the ROC calibration procedure on
        // labelled desk runs: the estimator's raw output sits well above
        // the scale reported for the original domains, so thresholds are
        // recalibrated per environment rather than copied.
        match env {
            "rail-pendulum" => {
                lifelong.search.epsilon = 6.0;
                lifelong.airl.iterations = 500;
                lifelong.airl.policy_init_log_std = 0.5;
            }
            "point-lander" => {
                lifelong.search.epsilon = 6.0;
                lifelong.airl.iterations = 300;
                lifelong.airl.policy_init_log_std = -0.3;
            }
            other => {
                return Err(Error::Config(format!("unknown environment '{other}'")));
            }
        }
        Ok(ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: env.to_string(),
            seed: 1,
            threads: 0,
            out_dir: "runs/latest".to_string(),
            demos: DemoGenConfig {
                pure_styles: 3,
                mixtures: 7,
                order: ArrivalOrder::PureFirst,
                path: "demos.bin".to_string(),
            },
            lifelong,
            eval: EvalConfig::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_slice(&std::fs::read(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::FormatVersion {
                found: self.schema_version,
                expected: CONFIG_SCHEMA_VERSION,
            });
        }
        crate::env::EnvSpec::by_name(&self.env)?;
        self.lifelong.search.validate()?;
        if self.demos.pure_styles == 0 {
            return Err(Error::Config("need at least one pure style".into()));
        }
        Ok(())
    }

    /// Resolve a possibly relative path against the output root, which the
    /// `FLAIR_FORGE_OUT` environment variable overrides.
    pub fn resolve_out(&self, path: &str) -> PathBuf {
        let p = PathBuf::from(path);
        if p.is_absolute() {
            return p;
        }
        match std::env::var_os("FLAIR_FORGE_OUT") {
            Some(root) => PathBuf::from(root).join(p),
            None => p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for env in ["rail-pendulum", "point-lander"] {
            let config = ExperimentConfig::default_for(env).unwrap();
            config.validate().unwrap();
            let json = serde_json::to_string(&config).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
            back.validate().unwrap();
            assert_eq!(back.env, env);
        }
    }

    #[test]
    fn unknown_env_rejected() {
        assert!(ExperimentConfig::default_for("walker").is_err());
    }

    #[test]
    fn out_root_override() {
        let config = ExperimentConfig::default_for("rail-pendulum").unwrap();
        // Absolute paths pass through untouched.
        assert_eq!(
            config.resolve_out("/tmp/abs"),
            PathBuf::from("/tmp/abs")
        );
    }
}
