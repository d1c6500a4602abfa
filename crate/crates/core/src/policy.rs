//! Stochastic Gaussian policy and a batch policy-gradient learner.
//!
//! The policy is a diagonal Gaussian whose mean comes from the dense network
//! and whose log standard deviation is a state-independent learned vector
//! clamped to `[-5, 1]`. Actions are sampled unclipped; clipping to bounds
//! happens inside the environment at execution time, so log-densities stay
//! exact.
//!
//! The learner is a vanilla batch policy gradient: one ascent step on
//! `sum_t log pi(a_t|s_t) * A_t`, where advantages are discounted
//! returns-to-go of the pseudo-rewards minus a per-timestep cross-episode
//! mean baseline, normalized to unit variance across the batch. Fixed
//! horizons make every episode the same length, so the per-timestep baseline
//! is exact; it also makes the update invariant to a constant shift of all
//! pseudo-rewards, and zero when every pseudo-reward is equal.
//!
//! The raw score function scales as `1/sigma^2` on the mean path, so steps
//! would explode as exploration noise anneals; gradients are therefore
//! preconditioned by the diagonal Fisher (multiply the mean path by
//! `sigma^2`, halve the log-std path), which keeps one learning rate usable
//! across the whole training run.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::ActionSource;
use crate::error::{Error, Result};
use crate::nn::{GradBundle, MlpParams};
use crate::trajectory::Trajectory;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;

/// Diagonal Gaussian policy over a dense mean network.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    pub mean_net: MlpParams,
    log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(state_dim: usize, action_dim: usize, hidden: usize, seed: u64) -> Self {
        GaussianPolicy {
            mean_net: MlpParams::init(state_dim, hidden, action_dim, seed),
            log_std: vec![-0.5; action_dim],
        }
    }

    pub fn from_parts(mean_net: MlpParams, log_std: Vec<f64>) -> Result<Self> {
        if log_std.len() != mean_net.output_dim() {
            return Err(Error::Shape {
                context: "policy log_std",
                expected: mean_net.output_dim(),
                actual: log_std.len(),
            });
        }
        let mut policy = GaussianPolicy { mean_net, log_std };
        policy.clamp_log_std();
        Ok(policy)
    }

    pub fn state_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.mean_net.output_dim()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn set_log_std(&mut self, log_std: Vec<f64>) -> Result<()> {
        if log_std.len() != self.action_dim() {
            return Err(Error::Shape {
                context: "policy log_std",
                expected: self.action_dim(),
                actual: log_std.len(),
            });
        }
        self.log_std = log_std;
        self.clamp_log_std();
        Ok(())
    }

    fn clamp_log_std(&mut self) {
        for v in self.log_std.iter_mut() {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Mean action at a state.
    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>> {
        let mean = self.mean_net.forward(state)?;
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("policy mean"));
        }
        Ok(mean)
    }

    /// Sample `mean(state) + std (.) standard normal`. Unclipped.
    pub fn sample_action(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mean = self.mean_action(state)?;
        Ok(mean
            .iter()
            .zip(self.log_std.iter())
            .map(|(&m, &ls)| {
                let z: f64 = StandardNormal.sample(rng);
                m + ls.exp() * z
            })
            .collect())
    }

    /// Exact diagonal-Gaussian log-density of an (unclipped) action.
    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::Shape {
                context: "log_prob action",
                expected: self.action_dim(),
                actual: action.len(),
            });
        }
        let mean = self.mean_action(state)?;
        Ok(gaussian_log_density(action, &mean, &self.log_std))
    }
}

/// Diagonal Gaussian log-density with per-dimension log standard deviations.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    let half_ln_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    x.iter()
        .zip(mean.iter())
        .zip(log_std.iter())
        .map(|((&xv, &m), &ls)| {
            let z = (xv - m) / ls.exp();
            -half_ln_two_pi - ls - 0.5 * z * z
        })
        .sum()
}

impl ActionSource for GaussianPolicy {
    fn action_dim(&self) -> usize {
        self.action_dim()
    }

    fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.sample_action(state, rng)
    }
}

/// Settings for the policy-gradient learner.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PGConfig {
    pub gamma: f64,
    pub episodes_per_iteration: usize,
    /// Upper bound on transitions consumed per update.
    pub batch_cap: usize,
    pub entropy_weight: f64,
    pub learning_rate: f64,
    /// Exploration floor during training: updates never drive log-std below
    /// this. Once the noise fully anneals the gradient dies with it, and a
    /// single bad update can strand the policy; the floor keeps recovery
    /// possible. Evaluation-time behavior is unaffected.
    pub min_log_std: f64,
}

impl Default for PGConfig {
    fn default() -> Self {
        PGConfig {
            gamma: 0.99,
            episodes_per_iteration: 10,
            batch_cap: 10_000,
            entropy_weight: 0.0,
            learning_rate: 0.02,
            min_log_std: -1.5,
        }
    }
}

impl PGConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma must be in (0, 1)"));
        }
        if self.episodes_per_iteration < 1 {
            return Err(Error::invalid("episodes per iteration must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        Ok(())
    }
}

/// Discounted returns-to-go of one episode's pseudo-rewards.
fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Advantages: per-timestep cross-episode mean baseline, then global
/// unit-variance normalization. Requires equal-length episodes.
fn normalized_advantages(returns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let horizon = returns[0].len();
    if returns.iter().any(|r| r.len() != horizon) {
        return Err(Error::invalid(
            "policy-gradient batch requires equal-length episodes (fixed horizon)",
        ));
    }
    let n_eps = returns.len() as f64;
    let mut baseline = vec![0.0; horizon];
    for r in returns {
        for (b, &v) in baseline.iter_mut().zip(r.iter()) {
            *b += v;
        }
    }
    for b in baseline.iter_mut() {
        *b /= n_eps;
    }
    let mut advantages: Vec<Vec<f64>> = returns
        .iter()
        .map(|r| r.iter().zip(baseline.iter()).map(|(&v, &b)| v - b).collect())
        .collect();
    let count = (returns.len() * horizon) as f64;
    let var: f64 = advantages
        .iter()
        .flat_map(|a| a.iter())
        .map(|&a| a * a)
        .sum::<f64>()
        / count;
    let std = var.sqrt();
    if !std.is_finite() {
        return Err(Error::NonFinite("advantage normalization"));
    }
    if std > 1e-12 {
        for a in advantages.iter_mut().flat_map(|a| a.iter_mut()) {
            *a /= std;
        }
    } else {
        // Constant pseudo-rewards across episodes carry no gradient signal.
        for a in advantages.iter_mut().flat_map(|a| a.iter_mut()) {
            *a = 0.0;
        }
    }
    Ok(advantages)
}

/// One ascent step of the batch policy gradient. `pseudo_rewards[e][t]`
/// aligns with `trajectories[e]` transition `t`. Returns the updated policy.
pub fn pg_update(
    policy: &GaussianPolicy,
    trajectories: &[Trajectory],
    pseudo_rewards: &[Vec<f64>],
    config: &PGConfig,
) -> Result<GaussianPolicy> {
    config.validate()?;
    if trajectories.is_empty() {
        return Err(Error::Empty("policy-gradient batch"));
    }
    if trajectories.len() != pseudo_rewards.len() {
        return Err(Error::Shape {
            context: "pseudo-rewards vs trajectories",
            expected: trajectories.len(),
            actual: pseudo_rewards.len(),
        });
    }
    for (traj, rew) in trajectories.iter().zip(pseudo_rewards.iter()) {
        if traj.len() != rew.len() {
            return Err(Error::Shape {
                context: "pseudo-rewards vs transitions",
                expected: traj.len(),
                actual: rew.len(),
            });
        }
        if rew.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("pseudo-reward"));
        }
    }

    let returns: Vec<Vec<f64>> = pseudo_rewards
        .iter()
        .map(|r| returns_to_go(r, config.gamma))
        .collect();
    let advantages = normalized_advantages(&returns)?;
    if advantages
        .iter()
        .flat_map(|a| a.iter())
        .any(|a| !a.is_finite())
    {
        return Err(Error::NonFinite("normalized advantage"));
    }

    let d_a = policy.action_dim();
    let mut mean_grad = GradBundle::zeros_like(&policy.mean_net);
    let mut log_std_grad = vec![0.0; d_a];
    let mut transitions = 0usize;
    'outer: for (traj, adv) in trajectories.iter().zip(advantages.iter()) {
        for t in 0..traj.len() {
            if transitions >= config.batch_cap {
                break 'outer;
            }
            transitions += 1;
            let state = &traj.states[t];
            let action = &traj.actions[t];
            let a_t = adv[t];
            let mean = policy.mean_net.forward(state)?;
            // d log pi / d mean_k = (a_k - mu_k) / sigma_k^2; the Fisher
            // preconditioner multiplies by sigma_k^2, leaving (a_k - mu_k).
            let upstream: Vec<f64> = action
                .iter()
                .zip(mean.iter())
                .map(|(&a, &m)| a_t * (a - m))
                .collect();
            policy.mean_net.backward_into(state, &upstream, &mut mean_grad)?;
            // d log pi / d log sigma_k = (a_k - mu_k)^2 / sigma_k^2 - 1; the
            // Fisher diagonal for log sigma is 2. The entropy bonus
            // contributes +1 per dimension.
            for k in 0..d_a {
                let var = (2.0 * policy.log_std[k]).exp();
                let z2 = (action[k] - mean[k]).powi(2) / var;
                log_std_grad[k] += (a_t * (z2 - 1.0) + config.entropy_weight) / 2.0;
            }
        }
    }
    if transitions == 0 {
        return Err(Error::Empty("policy-gradient transitions"));
    }
    let scale = config.learning_rate / transitions as f64;
    mean_grad.scale(scale);
    if !mean_grad.is_finite() {
        return Err(Error::NonFinite("policy gradient"));
    }

    let mut updated = policy.clone();
    let mut flat = updated.mean_net.flatten();
    for (p, g) in flat.iter_mut().zip(mean_grad.flatten().iter()) {
        *p += g;
    }
    updated.mean_net.unflatten(&flat)?;
    let floor = config.min_log_std.max(LOG_STD_MIN);
    for (ls, g) in updated.log_std.iter_mut().zip(log_std_grad.iter()) {
        *ls = (*ls + scale * g).max(floor);
    }
    updated.clamp_log_std();
    Ok(updated)
}

/// L2 distance between two policies' full parameter vectors.
pub fn policy_param_distance(a: &GaussianPolicy, b: &GaussianPolicy) -> f64 {
    let fa = a.mean_net.flatten();
    let fb = b.mean_net.flatten();
    let mut acc: f64 = fa
        .iter()
        .zip(fb.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    acc += a
        .log_std
        .iter()
        .zip(b.log_std.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>();
    acc.sqrt()
}
