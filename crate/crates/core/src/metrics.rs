//! Evaluation quantities: demonstration log-likelihood, environment return,
//! task-reward correlation, predicted strategy labels, cosine distance, and
//! the episodes-to-match efficiency comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demo::{available_styles, scripted_controller};
use crate::env::{ActionSource, EnvSpec};
use crate::error::{Error, Result};
use crate::mixture::MixtureWeights;
use crate::policy::{gaussian_log_density, GaussianPolicy};
use crate::reward::{
    strategy_return_eta, AirlConfig, AirlTrainer, FusionBuffer, RewardModel,
};
use crate::rng::{self, Stream};
use crate::trajectory::Trajectory;

/// Log-likelihood of the demo's actions under a mixture of Gaussian
/// policies.
///
/// The mixture action is a weighted sum of independent Gaussian draws, so it
/// is itself Gaussian with mean `sum_j w_j mu_j(s)` and variance
/// `sum_j w_j^2 sigma_j^2`; the density is evaluated exactly rather than as
/// a mixture of densities.
pub fn demo_log_likelihood(
    policies: &[GaussianPolicy],
    weights: &MixtureWeights,
    demo: &Trajectory,
) -> Result<f64> {
    if policies.is_empty() {
        return Err(Error::Empty("policies for log-likelihood"));
    }
    if policies.len() != weights.len() {
        return Err(Error::Shape {
            context: "log-likelihood policies vs weights",
            expected: policies.len(),
            actual: weights.len(),
        });
    }
    let d_a = policies[0].action_dim();
    let mut total = 0.0;
    for t in 0..demo.len() {
        let state = &demo.states[t];
        let action = &demo.actions[t];
        let mut mean = vec![0.0; d_a];
        let mut variance = vec![0.0; d_a];
        for (policy, &w) in policies.iter().zip(weights.as_slice()) {
            let mu = policy.mean_action(state)?;
            for k in 0..d_a {
                mean[k] += w * mu[k];
                let sigma = policy.log_std()[k].exp();
                variance[k] += w * w * sigma * sigma;
            }
        }
        let log_std: Vec<f64> = variance.iter().map(|v| 0.5 * v.ln()).collect();
        total += gaussian_log_density(action, &mean, &log_std);
    }
    Ok(total)
}

/// Single-policy convenience wrapper.
pub fn demo_log_likelihood_single(policy: &GaussianPolicy, demo: &Trajectory) -> Result<f64> {
    demo_log_likelihood(
        std::slice::from_ref(policy),
        &MixtureWeights::one_hot(1, 0),
        demo,
    )
}

/// Pearson correlation between the task head's per-trajectory return and the
/// ground-truth environment return.
pub fn task_reward_correlation(model: &RewardModel, test_set: &[Trajectory]) -> Result<f64> {
    if test_set.len() < 2 {
        return Err(Error::invalid("correlation needs at least two trajectories"));
    }
    let estimated: Vec<f64> = test_set
        .par_iter()
        .map(|t| model.task_return(t))
        .collect::<Result<_>>()?;
    let actual: Vec<f64> = test_set.iter().map(Trajectory::total_return).collect();
    pearson(&estimated, &actual)
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return Err(Error::Degenerate(
            "correlation undefined for zero-variance signal".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Max-normalized strategy-reward labels: entry `(i, j)` is
/// `exp(eta_i(tau_j)) / max_k exp(eta_i(tau_k))`, computed in log space.
/// Rows index strategies, columns demonstrations; every row peaks at 1.
pub fn predicted_strategy_labels(
    model: &RewardModel,
    demos: &[Trajectory],
) -> Result<Vec<Vec<f64>>> {
    let m = model.strategy_count();
    if m == 0 {
        return Err(Error::Empty("strategies for labels"));
    }
    if demos.is_empty() {
        return Err(Error::Empty("demos for labels"));
    }
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let etas: Vec<f64> = demos
            .iter()
            .map(|d| strategy_return_eta(model, i, d))
            .collect::<Result<_>>()?;
        let max = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rows.push(etas.iter().map(|&e| (e - max).exp()).collect());
    }
    Ok(rows)
}

/// Cosine distance `1 - a.b / (|a| |b|)`; for nonnegative inputs the range
/// is effectively [0, 1].
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            context: "cosine distance",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a <= 0.0 || norm_b <= 0.0 {
        return Err(Error::Degenerate("cosine distance of zero vector".into()));
    }
    Ok(1.0 - dot / (norm_a * norm_b))
}

/// Test set for reward correlation: scripted controllers corrupted by
/// increasing action noise, giving trajectories across quality levels.
pub fn build_correlation_test_set(
    spec: &EnvSpec,
    noise_levels: &[f64],
    seeds_per_level: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    struct NoisyController<C: ActionSource> {
        inner: C,
        noise: f64,
        scale: Vec<f64>,
    }
    impl<C: ActionSource> ActionSource for NoisyController<C> {
        fn action_dim(&self) -> usize {
            self.inner.action_dim()
        }
        fn act(
            &self,
            state: &[f64],
            rng: &mut rand_chacha::ChaCha8Rng,
        ) -> Result<Vec<f64>> {
            use rand_distr::{Distribution, StandardNormal};
            let mut a = self.inner.act(state, rng)?;
            for (v, s) in a.iter_mut().zip(self.scale.iter()) {
                let z: f64 = StandardNormal.sample(rng);
                *v += self.noise * s * z;
            }
            Ok(a)
        }
    }

    let styles = available_styles(spec);
    let (lo, hi) = spec.action_bounds();
    let scale: Vec<f64> = lo.iter().zip(hi.iter()).map(|(l, h)| (h - l) / 2.0).collect();
    let mut out = Vec::new();
    for (style_ix, &style) in styles.iter().enumerate() {
        let controller = scripted_controller(spec, style)?;
        for (level_ix, &noise) in noise_levels.iter().enumerate() {
            for rep in 0..seeds_per_level {
                let noisy = NoisyController {
                    inner: controller.clone(),
                    noise,
                    scale: scale.clone(),
                };
                let roll_seed = rng::derive_seed(
                    seed,
                    Stream::Eval,
                    &[style_ix as u64, level_ix as u64, rep as u64],
                );
                out.push(spec.rollout(&noisy, roll_seed)?);
            }
        }
    }
    Ok(out)
}

/// Outcome of the mixture-vs-scratch efficiency comparison for one demo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub episodes_mixture: usize,
    pub episodes_scratch: usize,
    /// True when from-scratch training never reached the target within the
    /// 10x budget cap; such runs are reported separately, never averaged in.
    pub censored: bool,
    pub target_log_likelihood: f64,
}

/// Train a from-scratch policy on `demo` until its demonstration
/// log-likelihood first reaches `target_ll`, capped at `10 x
/// episodes_mixture` episodes.
pub fn episodes_to_match(
    demo: &Trajectory,
    env: &EnvSpec,
    target_ll: f64,
    episodes_mixture: usize,
    airl: &AirlConfig,
    fusion_capacity: usize,
    seed: u64,
) -> Result<EfficiencyRecord> {
    let cap = episodes_mixture.saturating_mul(10).max(1);
    let mut model = RewardModel::new(
        env.state_dim(),
        crate::nn::DEFAULT_HIDDEN,
        airl.pg.gamma,
        rng::derive_seed(seed, Stream::AirlTraining, &[0xe0]),
    );
    model.push_strategy(rng::derive_seed(seed, Stream::AirlTraining, &[0xe1]));
    let mut fusion = FusionBuffer::new(fusion_capacity);
    let mut trainer = AirlTrainer::new(&mut model, 0, demo, env, airl.clone(), seed)?;
    let mut episodes_scratch = 0;
    let mut censored = true;
    while episodes_scratch < cap {
        trainer.step(&mut fusion)?;
        episodes_scratch = trainer.episodes_used();
        let ll = demo_log_likelihood_single(&trainer.policy, demo)?;
        if ll >= target_ll {
            censored = false;
            break;
        }
    }
    Ok(EfficiencyRecord {
        episodes_mixture,
        episodes_scratch,
        censored,
        target_log_likelihood: target_ll,
    })
}
