//! Policy mixtures and black-box simplex search.
//!
//! A mixture policy samples an action from every prototype policy at the
//! current state and returns the convex combination `sum_j w_j a_j`. The
//! search minimizes the k-NN KL divergence between the demonstration's state
//! marginal and the marginal of the mixture's rollouts, over the probability
//! simplex.
//!
//! Random search is the primary optimizer; particle-swarm, CMA-ES, and a
//! Gaussian-process expected-improvement variant share the same budget
//! accounting for comparisons: candidates are evaluated in batches, each
//! candidate costs `repeats` rollout episodes, the search stops early the
//! first time a batch contains a candidate below the acceptance threshold,
//! and the total number of candidates never exceeds the cap. The reported
//! result is always the best candidate seen, not the last.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::trajectory_kl;
use crate::env::{ActionSource, EnvSpec};
use crate::error::{Error, Result};
use crate::policy::GaussianPolicy;
use crate::rng::{self, Stream};
use crate::trajectory::Trajectory;

/// Point on the probability simplex over the current strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("mixture weights"));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::invalid("mixture weights must be finite and >= 0"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mixture weights must sum to 1 (got {sum})"
            )));
        }
        Ok(MixtureWeights(weights))
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        MixtureWeights(w)
    }

    pub fn uniform(len: usize) -> Self {
        MixtureWeights(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Clip negatives to zero and renormalize; all-zero vectors map to uniform.
pub fn project_to_simplex(raw: &[f64]) -> MixtureWeights {
    let mut w: Vec<f64> = raw
        .iter()
        .map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 })
        .collect();
    let sum: f64 = w.iter().sum();
    if sum <= 1e-300 {
        return MixtureWeights::uniform(raw.len());
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    // Guard against rounding pushing the sum off by more than the invariant.
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        let last = w.len() - 1;
        w[last] += 1.0 - sum;
    }
    MixtureWeights(w)
}

/// Flat-Dirichlet draw via exponential normalization.
pub fn sample_simplex(m: usize, rng: &mut ChaCha8Rng) -> Result<MixtureWeights> {
    if m == 0 {
        return Err(Error::Empty("simplex dimension"));
    }
    let draws: Vec<f64> = (0..m)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = draws.iter().sum();
    Ok(project_to_simplex(
        &draws.iter().map(|&e| e / sum).collect::<Vec<_>>(),
    ))
}

/// Convex combination of prototype policies: samples from every policy at
/// the state and mixes the actions.
pub struct MixturePolicy<'a> {
    policies: &'a [GaussianPolicy],
    weights: &'a MixtureWeights,
}

impl<'a> MixturePolicy<'a> {
    pub fn new(policies: &'a [GaussianPolicy], weights: &'a MixtureWeights) -> Result<Self> {
        if policies.is_empty() {
            return Err(Error::Empty("mixture policies"));
        }
        if policies.len() != weights.len() {
            return Err(Error::Shape {
                context: "mixture policies vs weights",
                expected: policies.len(),
                actual: weights.len(),
            });
        }
        Ok(MixturePolicy { policies, weights })
    }
}

impl ActionSource for MixturePolicy<'_> {
    fn action_dim(&self) -> usize {
        self.policies[0].action_dim()
    }

    fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut action = vec![0.0; self.action_dim()];
        for (policy, &w) in self.policies.iter().zip(self.weights.as_slice()) {
            // Every component policy is sampled, including zero-weight ones,
            // so the mixture's distribution matches its definition exactly.
            let a = policy.sample_action(state, rng)?;
            for (acc, v) in action.iter_mut().zip(a.iter()) {
                *acc += w * v;
            }
        }
        Ok(action)
    }
}

/// Which black-box optimizer drives the simplex search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    Random,
    Pso,
    Cmaes,
    Bayes,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Random,
        OptimizerKind::Pso,
        OptimizerKind::Cmaes,
        OptimizerKind::Bayes,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            OptimizerKind::Random => "random",
            OptimizerKind::Pso => "pso",
            OptimizerKind::Cmaes => "cmaes",
            OptimizerKind::Bayes => "bayes",
        }
    }
}

/// Search settings shared by every optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSearchConfig {
    /// Maximum number of candidate weight vectors evaluated.
    pub sample_cap: usize,
    /// Candidates evaluated between early-stop checks.
    pub batch_size: usize,
    /// Rollout episodes per candidate; all pooled into the KL estimate.
    pub repeats: usize,
    /// Acceptance threshold: stop as soon as a batch contains a candidate
    /// with estimated KL below this.
    pub epsilon: f64,
    pub optimizer: OptimizerKind,
    /// Neighbor count for the KL estimator.
    pub knn_k: usize,
}

impl Default for MixtureSearchConfig {
    fn default() -> Self {
        MixtureSearchConfig {
            sample_cap: 2000,
            batch_size: 30,
            repeats: 3,
            epsilon: 1.0,
            optimizer: OptimizerKind::Random,
            knn_k: 3,
        }
    }
}

impl MixtureSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 || self.sample_cap < self.batch_size {
            return Err(Error::invalid("need cap >= batch >= 1"));
        }
        if self.repeats < 1 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be > 0"));
        }
        if self.knn_k < 1 {
            return Err(Error::invalid("knn k must be >= 1"));
        }
        Ok(())
    }
}

/// Result of one simplex search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub weights: MixtureWeights,
    pub kl: f64,
    pub candidates_evaluated: usize,
    pub episodes_used: usize,
    pub stopped_early: bool,
}

/// Evaluates candidate weight vectors by rolling out the mixture policy.
struct CandidateEvaluator<'a> {
    demo: &'a Trajectory,
    policies: &'a [GaussianPolicy],
    env: &'a EnvSpec,
    repeats: usize,
    knn_k: usize,
    seed: u64,
}

impl CandidateEvaluator<'_> {
    /// KL of one candidate; `index` must be unique per candidate so each
    /// rollout gets a fresh deterministic seed stream.
    fn evaluate(&self, weights: &MixtureWeights, index: usize) -> Result<f64> {
        let policy = MixturePolicy::new(self.policies, weights)?;
        let rollouts: Vec<Trajectory> = (0..self.repeats)
            .map(|r| {
                let seed = rng::derive_seed(
                    self.seed,
                    Stream::MixtureSearch,
                    &[index as u64, r as u64],
                );
                self.env.rollout(&policy, seed)
            })
            .collect::<Result<_>>()?;
        trajectory_kl(self.demo, &rollouts, self.knn_k)
    }

    /// Evaluate a batch in parallel; results are ordered by input index.
    fn evaluate_batch(
        &self,
        batch: &[MixtureWeights],
        first_index: usize,
    ) -> Result<Vec<f64>> {
        batch
            .par_iter()
            .enumerate()
            .map(|(i, w)| self.evaluate(w, first_index + i))
            .collect()
    }
}

/// Track best-seen candidate plus exact budget accounting.
struct SearchState {
    best_weights: Option<MixtureWeights>,
    best_kl: f64,
    candidates: usize,
    repeats: usize,
    stopped_early: bool,
}

impl SearchState {
    fn new(repeats: usize) -> Self {
        SearchState {
            best_weights: None,
            best_kl: f64::INFINITY,
            candidates: 0,
            repeats,
            stopped_early: false,
        }
    }

    /// Record a batch; returns true when the search should stop.
    fn absorb(&mut self, batch: &[MixtureWeights], kls: &[f64], epsilon: f64) -> bool {
        for (w, &kl) in batch.iter().zip(kls.iter()) {
            self.candidates += 1;
            if kl < self.best_kl {
                self.best_kl = kl;
                self.best_weights = Some(w.clone());
            }
        }
        if kls.iter().any(|&kl| kl < epsilon) {
            self.stopped_early = true;
            true
        } else {
            false
        }
    }

    fn finish(self) -> Result<SearchOutcome> {
        let weights = self
            .best_weights
            .ok_or(Error::Empty("no candidates evaluated"))?;
        Ok(SearchOutcome {
            weights,
            kl: self.best_kl,
            candidates_evaluated: self.candidates,
            episodes_used: self.candidates * self.repeats,
            stopped_early: self.stopped_early,
        })
    }
}

fn check_library(policies: &[GaussianPolicy]) -> Result<()> {
    if policies.is_empty() {
        return Err(Error::Empty("strategy library"));
    }
    Ok(())
}

/// Random search (the primary optimizer): flat simplex candidates in
/// batches with early stop below epsilon.
pub fn optimize_mixture(
    demo: &Trajectory,
    policies: &[GaussianPolicy],
    env: &EnvSpec,
    config: &MixtureSearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    check_library(policies)?;
    let evaluator = CandidateEvaluator {
        demo,
        policies,
        env,
        repeats: config.repeats,
        knn_k: config.knn_k,
        seed,
    };
    let mut sampler = rng::derive_rng(seed, Stream::MixtureSearch, &[0x5eed]);
    let mut state = SearchState::new(config.repeats);
    while state.candidates < config.sample_cap {
        let batch_len = config.batch_size.min(config.sample_cap - state.candidates);
        let batch: Vec<MixtureWeights> = (0..batch_len)
            .map(|_| sample_simplex(policies.len(), &mut sampler))
            .collect::<Result<_>>()?;
        let kls = evaluator.evaluate_batch(&batch, state.candidates)?;
        if state.absorb(&batch, &kls, config.epsilon) {
            break;
        }
    }
    state.finish()
}

/// Particle-swarm search: 10 particles, inertia 0.7, cognitive and social
/// coefficients 1.4, positions projected to the simplex for evaluation.
pub fn pso_optimize(
    demo: &Trajectory,
    policies: &[GaussianPolicy],
    env: &EnvSpec,
    config: &MixtureSearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    check_library(policies)?;
    let dim = policies.len();
    let n_particles = 10usize;
    let (inertia, cognitive, social) = (0.7, 1.4, 1.4);
    let evaluator = CandidateEvaluator {
        demo,
        policies,
        env,
        repeats: config.repeats,
        knn_k: config.knn_k,
        seed,
    };
    let mut rng = rng::derive_rng(seed, Stream::MixtureSearch, &[0x9501]);

    let mut positions: Vec<Vec<f64>> = (0..n_particles)
        .map(|_| Ok(sample_simplex(dim, &mut rng)?.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    let mut velocities: Vec<Vec<f64>> = (0..n_particles)
        .map(|_| (0..dim).map(|_| rng.random_range(-0.1..0.1)).collect())
        .collect();
    let mut personal_best = positions.clone();
    let mut personal_best_kl = vec![f64::INFINITY; n_particles];
    let mut global_best = positions[0].clone();
    let mut global_best_kl = f64::INFINITY;

    let mut state = SearchState::new(config.repeats);
    while state.candidates < config.sample_cap {
        let batch_len = n_particles.min(config.sample_cap - state.candidates);
        let batch: Vec<MixtureWeights> = positions[..batch_len]
            .iter()
            .map(|p| project_to_simplex(p))
            .collect();
        let kls = evaluator.evaluate_batch(&batch, state.candidates)?;
        for i in 0..batch_len {
            if kls[i] < personal_best_kl[i] {
                personal_best_kl[i] = kls[i];
                personal_best[i] = positions[i].clone();
            }
            if kls[i] < global_best_kl {
                global_best_kl = kls[i];
                global_best = positions[i].clone();
            }
        }
        if state.absorb(&batch, &kls, config.epsilon) {
            break;
        }
        for i in 0..n_particles {
            for d in 0..dim {
                let r1: f64 = rng.random::<f64>();
                let r2: f64 = rng.random::<f64>();
                velocities[i][d] = inertia * velocities[i][d]
                    + cognitive * r1 * (personal_best[i][d] - positions[i][d])
                    + social * r2 * (global_best[d] - positions[i][d]);
                positions[i][d] += velocities[i][d];
            }
        }
    }
    state.finish()
}

/// CMA-ES in the ambient space with simplex projection at evaluation time:
/// population 10, initial mean uniform, initial step size 0.3.
pub fn cmaes_optimize(
    demo: &Trajectory,
    policies: &[GaussianPolicy],
    env: &EnvSpec,
    config: &MixtureSearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    check_library(policies)?;
    let dim = policies.len();
    let evaluator = CandidateEvaluator {
        demo,
        policies,
        env,
        repeats: config.repeats,
        knn_k: config.knn_k,
        seed,
    };
    let mut rng = rng::derive_rng(seed, Stream::MixtureSearch, &[0xc3a5]);

    // Standard weighted-recombination constants for population 10.
    let lambda = 10usize;
    let mu = lambda / 2;
    let raw_weights: Vec<f64> = (0..mu)
        .map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let w_sum: f64 = raw_weights.iter().sum();
    let weights: Vec<f64> = raw_weights.iter().map(|w| w / w_sum).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let n = dim as f64;
    let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (0.0f64).max(((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0) + c_sigma;
    let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    let c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
    let c_mu = (1.0 - c_1).min(
        2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff),
    );
    let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    let mut mean = vec![1.0 / n; dim];
    let mut sigma = 0.3;
    let mut cov = identity(dim);
    let mut path_sigma = vec![0.0; dim];
    let mut path_c = vec![0.0; dim];
    let mut generation = 0u64;

    let mut state = SearchState::new(config.repeats);
    while state.candidates < config.sample_cap {
        generation += 1;
        let (eigenvectors, eigenvalues) = symmetric_eigen(&cov, dim);
        let sqrt_vals: Vec<f64> = eigenvalues.iter().map(|&v| v.max(1e-20).sqrt()).collect();

        let batch_len = lambda.min(config.sample_cap - state.candidates);
        let mut raw_samples: Vec<Vec<f64>> = Vec::with_capacity(batch_len);
        let mut steps: Vec<Vec<f64>> = Vec::with_capacity(batch_len);
        for _ in 0..batch_len {
            let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            // y = B * diag(sqrt(eigenvalues)) * z
            let mut y = vec![0.0; dim];
            for (col, (&sv, zv)) in sqrt_vals.iter().zip(z.iter()).enumerate() {
                for (row, y_v) in y.iter_mut().enumerate() {
                    *y_v += eigenvectors[row * dim + col] * sv * zv;
                }
            }
            let x: Vec<f64> = mean.iter().zip(y.iter()).map(|(m, yv)| m + sigma * yv).collect();
            raw_samples.push(x);
            steps.push(y);
        }
        let batch: Vec<MixtureWeights> =
            raw_samples.iter().map(|x| project_to_simplex(x)).collect();
        let kls = evaluator.evaluate_batch(&batch, state.candidates)?;
        let early = state.absorb(&batch, &kls, config.epsilon);
        if early || batch_len < lambda {
            break;
        }

        // Rank by fitness and recombine.
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| kls[a].total_cmp(&kls[b]));
        let mut y_weighted = vec![0.0; dim];
        for (rank, &w) in weights.iter().enumerate() {
            for (d, yv) in y_weighted.iter_mut().enumerate() {
                *yv += w * steps[order[rank]][d];
            }
        }
        for (m, yv) in mean.iter_mut().zip(y_weighted.iter()) {
            *m += sigma * yv;
        }

        // Step-size path uses C^(-1/2) y = B diag(1/sqrt(vals)) B^T y.
        let mut c_inv_sqrt_y = vec![0.0; dim];
        for col in 0..dim {
            let mut proj = 0.0;
            for row in 0..dim {
                proj += eigenvectors[row * dim + col] * y_weighted[row];
            }
            let scaled = proj / sqrt_vals[col];
            for (row, v) in c_inv_sqrt_y.iter_mut().enumerate() {
                *v += eigenvectors[row * dim + col] * scaled;
            }
        }
        let decay = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for (p, v) in path_sigma.iter_mut().zip(c_inv_sqrt_y.iter()) {
            *p = (1.0 - c_sigma) * *p + decay * v;
        }
        let path_norm: f64 = path_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        sigma *= ((c_sigma / d_sigma) * (path_norm / chi_n - 1.0)).exp();
        sigma = sigma.clamp(1e-12, 10.0);

        let h_sigma = if path_norm
            / (1.0 - (1.0 - c_sigma).powi(2 * generation as i32)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * chi_n
        {
            1.0
        } else {
            0.0
        };
        let decay_c = (c_c * (2.0 - c_c) * mu_eff).sqrt();
        for (p, v) in path_c.iter_mut().zip(y_weighted.iter()) {
            *p = (1.0 - c_c) * *p + h_sigma * decay_c * v;
        }

        // Rank-one plus rank-mu covariance update.
        let delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        for row in 0..dim {
            for col in 0..dim {
                let mut rank_mu = 0.0;
                for (rank, &w) in weights.iter().enumerate() {
                    let y = &steps[order[rank]];
                    rank_mu += w * y[row] * y[col];
                }
                let ix = row * dim + col;
                cov[ix] = (1.0 - c_1 - c_mu + c_1 * delta_h) * cov[ix]
                    + c_1 * path_c[row] * path_c[col]
                    + c_mu * rank_mu;
            }
        }
    }
    state.finish()
}

/// Expected-improvement search over a Gaussian process with a squared
/// exponential kernel, proposing one batch per refit from a random pool.
pub fn bayes_optimize(
    demo: &Trajectory,
    policies: &[GaussianPolicy],
    env: &EnvSpec,
    config: &MixtureSearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    config.validate()?;
    check_library(policies)?;
    let dim = policies.len();
    let evaluator = CandidateEvaluator {
        demo,
        policies,
        env,
        repeats: config.repeats,
        knn_k: config.knn_k,
        seed,
    };
    let mut rng = rng::derive_rng(seed, Stream::MixtureSearch, &[0xbae5]);
    let lengthscale = 0.3;
    let max_history = 200;

    let mut observed_x: Vec<Vec<f64>> = Vec::new();
    let mut observed_y: Vec<f64> = Vec::new();
    let mut state = SearchState::new(config.repeats);
    while state.candidates < config.sample_cap {
        let batch_len = config.batch_size.min(config.sample_cap - state.candidates);
        let batch: Vec<MixtureWeights> = if observed_x.is_empty() {
            (0..batch_len)
                .map(|_| sample_simplex(dim, &mut rng))
                .collect::<Result<_>>()?
        } else {
            propose_by_expected_improvement(
                &observed_x[observed_x.len().saturating_sub(max_history)..],
                &observed_y[observed_y.len().saturating_sub(max_history)..],
                dim,
                batch_len,
                lengthscale,
                &mut rng,
            )?
        };
        let kls = evaluator.evaluate_batch(&batch, state.candidates)?;
        for (w, &kl) in batch.iter().zip(kls.iter()) {
            observed_x.push(w.as_slice().to_vec());
            observed_y.push(kl);
        }
        if state.absorb(&batch, &kls, config.epsilon) {
            break;
        }
    }
    state.finish()
}

/// Score a random candidate pool by expected improvement and keep the best.
fn propose_by_expected_improvement(
    xs: &[Vec<f64>],
    ys: &[f64],
    dim: usize,
    batch_len: usize,
    lengthscale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MixtureWeights>> {
    let n = xs.len();
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let y_var = (ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>() / n as f64)
        .max(1e-12);
    let noise = 1e-6 * y_var + 1e-12;

    let kernel = |a: &[f64], b: &[f64]| -> f64 {
        let d2: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        y_var * (-0.5 * d2 / (lengthscale * lengthscale)).exp()
    };

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = kernel(&xs[i], &xs[j]);
        }
        gram[i * n + i] += noise;
    }
    let chol = cholesky(&gram, n)
        .ok_or_else(|| Error::Degenerate("gram matrix not positive definite".into()))?;
    let centered: Vec<f64> = ys.iter().map(|y| y - y_mean).collect();
    let alpha = cholesky_solve(&chol, n, &centered);

    let best_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let pool = 50 * batch_len;
    let mut scored: Vec<(f64, MixtureWeights)> = Vec::with_capacity(pool);
    for _ in 0..pool {
        let candidate = sample_simplex(dim, rng)?;
        let kx: Vec<f64> = xs.iter().map(|x| kernel(x, candidate.as_slice())).collect();
        let mean = y_mean + kx.iter().zip(alpha.iter()).map(|(a, b)| a * b).sum::<f64>();
        let v = forward_substitute(&chol, n, &kx);
        let variance = (kernel(candidate.as_slice(), candidate.as_slice())
            - v.iter().map(|x| x * x).sum::<f64>())
        .max(1e-12);
        let std = variance.sqrt();
        // Expected improvement for minimization.
        let z = (best_y - mean) / std;
        let ei = (best_y - mean) * normal_cdf(z) + std * normal_pdf(z);
        scored.push((ei, candidate));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(scored.into_iter().take(batch_len).map(|(_, w)| w).collect())
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc_approx(-z / std::f64::consts::SQRT_2)
}

/// Abramowitz-Stegun 7.1.26 style rational approximation, |error| < 1.5e-7.
fn erfc_approx(x: f64) -> f64 {
    let sign_negative = x < 0.0;
    let ax = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * ax);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let erf = 1.0 - poly * (-ax * ax).exp();
    if sign_negative {
        1.0 + erf
    } else {
        1.0 - erf
    }
}

fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Jacobi eigendecomposition of a symmetric matrix (row-major), returning
/// (eigenvectors as columns, eigenvalues). Dimensions here are tiny.
fn symmetric_eigen(matrix: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    let mut v = identity(dim);
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                off += a[i * dim + j] * a[i * dim + j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq.abs() < 1e-30 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    (v, values)
}

/// Lower-triangular Cholesky factor (row-major), or None if not PD.
fn cholesky(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Solve (L L^T) x = b.
fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let y = forward_substitute(l, n, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Dispatch by optimizer kind with identical budget semantics.
pub fn optimize_with(
    kind: OptimizerKind,
    demo: &Trajectory,
    policies: &[GaussianPolicy],
    env: &EnvSpec,
    config: &MixtureSearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    match kind {
        OptimizerKind::Random => optimize_mixture(demo, policies, env, config, seed),
        OptimizerKind::Pso => pso_optimize(demo, policies, env, config, seed),
        OptimizerKind::Cmaes => cmaes_optimize(demo, policies, env, config, seed),
        OptimizerKind::Bayes => bayes_optimize(demo, policies, env, config, seed),
    }
}
