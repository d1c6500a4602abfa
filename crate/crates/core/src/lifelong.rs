//! Sequential controller: one demonstration at a time, explain it as a
//! policy mixture when possible, otherwise grow the strategy library.
//!
//! For each arriving demonstration the controller
//!
//! 1. searches the simplex for the best mixture of current prototypes;
//! 2. accepts the mixture outright when its estimated KL falls below the
//!    quality threshold epsilon;
//! 3. otherwise trains a fresh strategy adversarially, compares the new
//!    policy's KL against the mixture's, and keeps whichever is better
//!    (a rejected new strategy is discarded, leaving the library unchanged);
//! 4. runs the refinement rounds (discriminator distillation, between-class
//!    discrimination, policy-gradient steps) over everything seen so far.
//!
//! Every demonstration's processing derives its own seed streams, so a run
//! resumed from a checkpoint reproduces the original bit for bit. Failures
//! roll the state back to the pre-demonstration snapshot and the run
//! continues.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demo::DemoSet;
use crate::divergence::trajectory_kl;
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::metrics::demo_log_likelihood;
use crate::mixture::{optimize_with, MixturePolicy, MixtureSearchConfig, MixtureWeights};
use crate::nn;
use crate::policy::GaussianPolicy;
use crate::reward::{
    airl_train_new_strategy, msrd_bcd_update, AirlConfig, FusionBuffer, MsrdConfig, RewardModel,
    Transition,
};
use crate::rng::{self, Stream};
use crate::trajectory::Trajectory;

/// Everything the sequential controller needs to process demonstrations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifelongConfig {
    pub search: MixtureSearchConfig,
    pub airl: AirlConfig,
    pub msrd: MsrdConfig,
    pub fusion_capacity: usize,
    pub hidden: usize,
    /// Rollouts pooled into the new policy's KL estimate (matches the
    /// mixture search repeats for a fair comparison).
    pub new_strategy_kl_repeats: usize,
    /// Rollouts averaged for the per-demo environment-return metric.
    pub eval_rollouts: usize,
    /// Between-class discrimination on/off (the ablation switch).
    pub bcd_enabled: bool,
}

impl Default for LifelongConfig {
    fn default() -> Self {
        LifelongConfig {
            search: MixtureSearchConfig::default(),
            airl: AirlConfig::default(),
            msrd: MsrdConfig::default(),
            fusion_capacity: 10_000,
            hidden: nn::DEFAULT_HIDDEN,
            new_strategy_kl_repeats: 3,
            eval_rollouts: 10,
            bcd_enabled: true,
        }
    }
}

/// Which branch handled a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Mixture KL fell below epsilon; no training happened.
    MixtureBelowEpsilon,
    /// A new strategy was trained but the mixture still won.
    MixtureBeatsNew,
    /// The new strategy won and joined the library.
    NewStrategy,
    /// Processing failed; the state was rolled back.
    Failed,
}

/// Per-demonstration decision log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub demo_id: usize,
    pub branch: Branch,
    pub kl_mixture: Option<f64>,
    pub kl_new_strategy: Option<f64>,
    /// Weights over the library at the time of processing.
    pub weights: Vec<f64>,
    pub episodes_search: usize,
    pub episodes_training: usize,
    pub episodes_refinement: usize,
    pub strategy_count_after: usize,
    pub error: Option<String>,
}

/// Per-demonstration evaluation metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoMetrics {
    pub demo_id: usize,
    pub environment_return: f64,
    pub log_likelihood: f64,
    /// KL of the accepted model of this demonstration (mixture or new
    /// prototype, whichever branch won).
    pub kl_accepted: f64,
}

/// The lifelong knowledge base plus bookkeeping.
pub struct LifelongState {
    pub env: EnvSpec,
    pub config: LifelongConfig,
    pub master_seed: u64,
    pub policies: Vec<GaussianPolicy>,
    pub reward: RewardModel,
    /// Demo index that founded each strategy.
    pub pure_indices: Vec<usize>,
    /// Seen demonstrations in arrival order.
    pub seen_demos: Vec<Trajectory>,
    /// Per-demo weights, padded with zeros as the library grows.
    pub mixture_weights: Vec<Vec<f64>>,
    pub fusion: FusionBuffer,
    pub decisions: Vec<DecisionRecord>,
    pub metrics: Vec<DemoMetrics>,
    pub next_demo_index: usize,
}

impl LifelongState {
    pub fn new(env: EnvSpec, config: LifelongConfig, master_seed: u64) -> Self {
        let reward = RewardModel::new(
            env.state_dim(),
            config.hidden,
            config.msrd.pg.gamma,
            rng::derive_seed(master_seed, Stream::PolicyInit, &[0xbeef]),
        );
        LifelongState {
            env,
            fusion: FusionBuffer::new(config.fusion_capacity),
            config,
            master_seed,
            policies: Vec::new(),
            reward,
            pure_indices: Vec::new(),
            seen_demos: Vec::new(),
            mixture_weights: Vec::new(),
            decisions: Vec::new(),
            metrics: Vec::new(),
            next_demo_index: 0,
        }
    }

    pub fn strategy_count(&self) -> usize {
        self.policies.len()
    }

    fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            policies: self.policies.clone(),
            reward: self.reward.clone(),
            pure_indices: self.pure_indices.clone(),
            seen_demos_len: self.seen_demos.len(),
            mixture_weights: self.mixture_weights.clone(),
            fusion: self.fusion.clone(),
        }
    }

    fn restore(&mut self, snapshot: StateSnapshot) {
        self.policies = snapshot.policies;
        self.reward = snapshot.reward;
        self.pure_indices = snapshot.pure_indices;
        self.seen_demos.truncate(snapshot.seen_demos_len);
        self.mixture_weights = snapshot.mixture_weights;
        self.fusion = snapshot.fusion;
    }

    /// Run one demonstration through the decision procedure.
    pub fn process_demonstration(&mut self, demo: &Trajectory) -> DecisionRecord {
        let demo_id = self.next_demo_index;
        self.next_demo_index += 1;
        let snapshot = self.snapshot();
        match self.process_inner(demo, demo_id) {
            Ok(record) => {
                self.decisions.push(record.clone());
                record
            }
            Err(e) => {
                self.restore(snapshot);
                let record = DecisionRecord {
                    demo_id,
                    branch: Branch::Failed,
                    kl_mixture: None,
                    kl_new_strategy: None,
                    weights: Vec::new(),
                    episodes_search: 0,
                    episodes_training: 0,
                    episodes_refinement: 0,
                    strategy_count_after: self.strategy_count(),
                    error: Some(e.to_string()),
                };
                self.decisions.push(record.clone());
                record
            }
        }
    }

    fn process_inner(&mut self, demo: &Trajectory, demo_id: usize) -> Result<DecisionRecord> {
        let search_seed = rng::derive_seed(self.master_seed, Stream::MixtureSearch, &[demo_id as u64]);
        let mixture_outcome = if self.policies.is_empty() {
            None
        } else {
            Some(optimize_with(
                self.config.search.optimizer,
                demo,
                &self.policies,
                &self.env,
                &self.config.search,
                search_seed,
            )?)
        };
        let episodes_search = mixture_outcome
            .as_ref()
            .map_or(0, |o| o.episodes_used);

        let mut episodes_training = 0;
        let mut kl_new = None;
        let branch;
        let weights;
        let kl_accepted;

        let accept_mixture_below_eps = mixture_outcome
            .as_ref()
            .is_some_and(|o| o.kl < self.config.search.epsilon);
        if accept_mixture_below_eps {
            let outcome = mixture_outcome.as_ref().expect("checked above");
            branch = Branch::MixtureBelowEpsilon;
            weights = outcome.weights.clone();
            kl_accepted = outcome.kl;
        } else {
            // Train a candidate strategy; the caller-facing state is only
            // committed if it beats the mixture.
            let reward_snapshot = self.reward.clone();
            let train_seed =
                rng::derive_seed(self.master_seed, Stream::AirlTraining, &[demo_id as u64]);
            let (new_policy, new_index, stats) = airl_train_new_strategy(
                &mut self.reward,
                demo,
                &self.env,
                &self.config.airl,
                &mut self.fusion,
                train_seed,
            )?;
            episodes_training = stats.episodes_used;
            let rollouts: Vec<Trajectory> = (0..self.config.new_strategy_kl_repeats)
                .map(|r| {
                    let seed = rng::derive_seed(
                        self.master_seed,
                        Stream::Rollout,
                        &[demo_id as u64, 0xa11, r as u64],
                    );
                    self.env.rollout(&new_policy, seed)
                })
                .collect::<Result<_>>()?;
            let new_kl = trajectory_kl(demo, &rollouts, self.config.search.knn_k)?;
            kl_new = Some(new_kl);

            let mixture_wins = mixture_outcome
                .as_ref()
                .is_some_and(|o| o.kl < new_kl);
            if mixture_wins {
                // Discard the freshly trained head; the library stays as it
                // was (the sunk training episodes remain in the record).
                self.reward = reward_snapshot;
                let outcome = mixture_outcome.as_ref().expect("checked above");
                branch = Branch::MixtureBeatsNew;
                weights = outcome.weights.clone();
                kl_accepted = outcome.kl;
            } else {
                branch = Branch::NewStrategy;
                self.policies.push(new_policy);
                self.pure_indices.push(demo_id);
                // Pad every earlier weight vector for the new strategy.
                for w in self.mixture_weights.iter_mut() {
                    w.push(0.0);
                }
                weights = MixtureWeights::one_hot(self.strategy_count(), new_index);
                kl_accepted = new_kl;
            }
        }

        self.seen_demos.push(demo.clone());
        self.mixture_weights.push(weights.as_slice().to_vec());
        debug_assert_eq!(self.mixture_weights.len(), demo_id + 1);

        let refine_seed =
            rng::derive_seed(self.master_seed, Stream::MsrdUpdate, &[demo_id as u64]);
        let refine_stats = msrd_bcd_update(
            &mut self.reward,
            &mut self.policies,
            &self.seen_demos,
            &self.mixture_weights,
            &self.pure_indices,
            &self.env,
            &self.config.msrd,
            &mut self.fusion,
            refine_seed,
            self.config.bcd_enabled,
        )?;

        let record = DecisionRecord {
            demo_id,
            branch,
            kl_mixture: mixture_outcome.as_ref().map(|o| o.kl),
            kl_new_strategy: kl_new,
            weights: weights.as_slice().to_vec(),
            episodes_search,
            episodes_training,
            episodes_refinement: refine_stats.episodes_used,
            strategy_count_after: self.strategy_count(),
            error: None,
        };
        self.evaluate_demo(demo, demo_id, kl_accepted)?;
        Ok(record)
    }

    /// Environment return and log-likelihood of the accepted model.
    fn evaluate_demo(&mut self, demo: &Trajectory, demo_id: usize, kl_accepted: f64) -> Result<()> {
        let weights = MixtureWeights::new(self.mixture_weights[demo_id].clone())?;
        let mixture = MixturePolicy::new(&self.policies, &weights)?;
        let returns: Vec<f64> = {
            use rayon::prelude::*;
            (0..self.config.eval_rollouts)
                .into_par_iter()
                .map(|r| {
                    let seed = rng::derive_seed(
                        self.master_seed,
                        Stream::Eval,
                        &[demo_id as u64, r as u64],
                    );
                    Ok(self.env.rollout(&mixture, seed)?.total_return())
                })
                .collect::<Result<_>>()?
        };
        let environment_return = returns.iter().sum::<f64>() / self.config.eval_rollouts as f64;
        let log_likelihood = demo_log_likelihood(&self.policies, &weights, demo)?;
        self.metrics.push(DemoMetrics {
            demo_id,
            environment_return,
            log_likelihood,
            kl_accepted,
        });
        Ok(())
    }
}

struct StateSnapshot {
    policies: Vec<GaussianPolicy>,
    reward: RewardModel,
    pure_indices: Vec<usize>,
    seen_demos_len: usize,
    mixture_weights: Vec<Vec<f64>>,
    fusion: FusionBuffer,
}

/// Full-run report: decision log plus per-demo metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifelongReport {
    pub schema_version: u32,
    pub env_name: String,
    pub master_seed: u64,
    pub bcd_enabled: bool,
    pub final_strategy_count: usize,
    pub decisions: Vec<DecisionRecord>,
    pub metrics: Vec<DemoMetrics>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl LifelongReport {
    pub fn from_state(state: &LifelongState) -> Self {
        LifelongReport {
            schema_version: REPORT_SCHEMA_VERSION,
            env_name: state.env.name.clone(),
            master_seed: state.master_seed,
            bcd_enabled: state.config.bcd_enabled,
            final_strategy_count: state.strategy_count(),
            decisions: state.decisions.clone(),
            metrics: state.metrics.clone(),
        }
    }

    pub fn failed_demo_count(&self) -> usize {
        self.decisions
            .iter()
            .filter(|d| d.branch == Branch::Failed)
            .count()
    }
}

/// Process an entire demonstration set in arrival order, optionally writing
/// one checkpoint subdirectory per demonstration under `checkpoint_root`.
pub fn run_lifelong(
    demo_set: &DemoSet,
    config: &LifelongConfig,
    seed: u64,
    checkpoint_root: Option<&Path>,
) -> Result<LifelongReport> {
    if demo_set.records.is_empty() {
        return Err(Error::Empty("demonstration set"));
    }
    let mut state = LifelongState::new(demo_set.env.clone(), config.clone(), seed);
    run_from_state(&mut state, demo_set, checkpoint_root)
}

/// Continue a run (fresh or resumed) over the remaining demonstrations.
pub fn run_from_state(
    state: &mut LifelongState,
    demo_set: &DemoSet,
    checkpoint_root: Option<&Path>,
) -> Result<LifelongReport> {
    if demo_set.env != state.env {
        return Err(Error::Config(
            "demonstration set environment does not match the checkpoint".into(),
        ));
    }
    for record in &demo_set.records[state.next_demo_index..] {
        let demo_index = state.next_demo_index;
        state.process_demonstration(&record.trajectory);
        if let Some(root) = checkpoint_root {
            save_checkpoint(state, &root.join(format!("demo_{demo_index:03}")))?;
        }
    }
    Ok(LifelongReport::from_state(state))
}

/// Most recent complete checkpoint subdirectory under a root, if any.
pub fn find_latest_checkpoint(root: &Path) -> Option<std::path::PathBuf> {
    let mut latest: Option<(usize, std::path::PathBuf)> = None;
    let entries = std::fs::read_dir(root).ok()?;
    for entry in entries.flatten() {
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(index) = name
            .strip_prefix("demo_")
            .and_then(|s| s.parse::<usize>().ok())
        {
            if path.join("state.json").exists()
                && latest.as_ref().is_none_or(|(best, _)| index > *best)
            {
                latest = Some((index, path));
            }
        }
    }
    latest.map(|(_, p)| p)
}

// ---------------------------------------------------------------------------
// Checkpointing. A checkpoint directory holds a JSON state file, one
// checkpoint per network, and the fusion buffer; the demonstration file
// itself is an input and is not duplicated.
// ---------------------------------------------------------------------------

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointManifest {
    schema_version: u32,
    env: EnvSpec,
    config: LifelongConfig,
    master_seed: u64,
    next_demo_index: usize,
    strategy_count: usize,
    pure_indices: Vec<usize>,
    mixture_weights: Vec<Vec<f64>>,
    decisions: Vec<DecisionRecord>,
    metrics: Vec<DemoMetrics>,
    fusion_len: usize,
}

pub fn save_checkpoint(state: &LifelongState, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = CheckpointManifest {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        env: state.env.clone(),
        config: state.config.clone(),
        master_seed: state.master_seed,
        next_demo_index: state.next_demo_index,
        strategy_count: state.strategy_count(),
        pure_indices: state.pure_indices.clone(),
        mixture_weights: state.mixture_weights.clone(),
        decisions: state.decisions.clone(),
        metrics: state.metrics.clone(),
        fusion_len: state.fusion.len(),
    };
    let tmp = dir.join("state.json.tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(&manifest)?)?;
    std::fs::rename(&tmp, dir.join("state.json"))?;

    nn::write_checkpoint(&dir.join("task.ckpt"), "reward_task", &state.reward.task, &[])?;
    nn::write_checkpoint(
        &dir.join("shaping.ckpt"),
        "reward_shaping",
        &state.reward.shaping,
        &[],
    )?;
    for (j, net) in state.reward.strategies.iter().enumerate() {
        nn::write_checkpoint(&dir.join(format!("strategy_{j}.ckpt")), "reward_strategy", net, &[])?;
    }
    for (j, policy) in state.policies.iter().enumerate() {
        nn::write_checkpoint(
            &dir.join(format!("policy_{j}.ckpt")),
            "gaussian_policy",
            &policy.mean_net,
            policy.log_std(),
        )?;
    }

    // Fusion buffer: flat little-endian (state, action, next_state) blocks.
    let mut bytes = Vec::new();
    for t in state.fusion.iter() {
        for v in t.state.iter().chain(t.action.iter()).chain(t.next_state.iter()) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(dir.join("fusion.bin"), bytes)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<LifelongState> {
    let manifest: CheckpointManifest =
        serde_json::from_slice(&std::fs::read(dir.join("state.json"))?)?;
    if manifest.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(Error::FormatVersion {
            found: manifest.schema_version,
            expected: CHECKPOINT_SCHEMA_VERSION,
        });
    }
    let (task, _, _) = nn::read_checkpoint(&dir.join("task.ckpt"))?;
    let (shaping, _, _) = nn::read_checkpoint(&dir.join("shaping.ckpt"))?;
    let mut reward = RewardModel::new(
        manifest.env.state_dim(),
        manifest.config.hidden,
        manifest.config.msrd.pg.gamma,
        0,
    );
    reward.task = task;
    reward.shaping = shaping;
    reward.strategies.clear();
    let mut policies = Vec::with_capacity(manifest.strategy_count);
    for j in 0..manifest.strategy_count {
        let (net, _, _) = nn::read_checkpoint(&dir.join(format!("strategy_{j}.ckpt")))?;
        reward.strategies.push(net);
        let (mean_net, log_std, _) = nn::read_checkpoint(&dir.join(format!("policy_{j}.ckpt")))?;
        policies.push(GaussianPolicy::from_parts(mean_net, log_std)?);
    }

    let d_s = manifest.env.state_dim();
    let d_a = manifest.env.action_dim();
    let stride = (2 * d_s + d_a) * 8;
    let bytes = std::fs::read(dir.join("fusion.bin"))?;
    if bytes.len() != manifest.fusion_len * stride {
        return Err(Error::CorruptFile("fusion buffer size mismatch".into()));
    }
    let mut fusion = FusionBuffer::new(manifest.config.fusion_capacity);
    for chunk in bytes.chunks(stride) {
        let values: Vec<f64> = chunk
            .chunks(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        fusion.push(Transition {
            state: values[..d_s].to_vec(),
            action: values[d_s..d_s + d_a].to_vec(),
            next_state: values[d_s + d_a..].to_vec(),
        });
    }

    Ok(LifelongState {
        env: manifest.env,
        config: manifest.config,
        master_seed: manifest.master_seed,
        policies,
        reward,
        pure_indices: manifest.pure_indices,
        seen_demos: Vec::new(), // refilled by the caller from the demo file
        mixture_weights: manifest.mixture_weights,
        fusion,
        decisions: manifest.decisions,
        metrics: manifest.metrics,
        next_demo_index: manifest.next_demo_index,
    })
}

/// Refill the seen-demonstration list from the input demo set after
/// loading a checkpoint.
pub fn refill_seen_demos(state: &mut LifelongState, demo_set: &DemoSet) -> Result<()> {
    if demo_set.records.len() < state.next_demo_index {
        return Err(Error::Config(
            "demo file has fewer records than the checkpoint expects".into(),
        ));
    }
    state.seen_demos = demo_set.records[..state.next_demo_index]
        .iter()
        .map(|r| r.trajectory.clone())
        .collect();
    Ok(())
}

// ---------------------------------------------------------------------------
// Threshold calibration.
// ---------------------------------------------------------------------------

/// One labelled observation for threshold calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub demo_id: usize,
    pub kl_mixture: f64,
    /// Ground truth: this demonstration should have been a mixture.
    pub is_mixture: bool,
}

/// ROC sweep outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    /// Threshold maximizing Youden's J.
    pub epsilon: f64,
    pub auc: f64,
    /// (false-positive rate, true-positive rate, threshold) sweep points in
    /// increasing threshold order.
    pub roc: Vec<(f64, f64, f64)>,
}

/// Sweep the acceptance threshold over the observed mixture KLs and report
/// the ROC curve, its area, and the threshold maximizing Youden's J.
pub fn calibrate_threshold(records: &[CalibrationRecord]) -> Result<CalibrationOutcome> {
    let positives = records.iter().filter(|r| r.is_mixture).count();
    let negatives = records.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate(
            "threshold calibration needs both mixture and new-strategy labels".into(),
        ));
    }
    let mut kls: Vec<f64> = records.iter().map(|r| r.kl_mixture).collect();
    kls.sort_by(f64::total_cmp);
    // Candidate thresholds: below the minimum, between every adjacent pair,
    // above the maximum.
    let mut thresholds = vec![kls[0] - 1.0];
    for pair in kls.windows(2) {
        thresholds.push(0.5 * (pair[0] + pair[1]));
    }
    thresholds.push(kls[kls.len() - 1] + 1.0);

    let mut roc = Vec::with_capacity(thresholds.len());
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &threshold in &thresholds {
        let mut tp = 0;
        let mut fp = 0;
        for r in records {
            if r.kl_mixture < threshold {
                if r.is_mixture {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let tpr = tp as f64 / positives as f64;
        let fpr = fp as f64 / negatives as f64;
        roc.push((fpr, tpr, threshold));
        let youden = tpr - fpr;
        if youden > best.0 {
            best = (youden, threshold);
        }
    }
    // Thresholds increase monotonically, so (fpr, tpr) is already sorted.
    let mut auc = 0.0;
    for pair in roc.windows(2) {
        let (f0, t0, _) = pair[0];
        let (f1, t1, _) = pair[1];
        auc += (f1 - f0) * 0.5 * (t0 + t1);
    }
    Ok(CalibrationOutcome {
        epsilon: best.1,
        auc,
        roc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_calibration_has_auc_one() {
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(CalibrationRecord {
                demo_id: i,
                kl_mixture: 0.1 + 0.01 * i as f64,
                is_mixture: true,
            });
            records.push(CalibrationRecord {
                demo_id: 10 + i,
                kl_mixture: 5.0 + 0.1 * i as f64,
                is_mixture: false,
            });
        }
        let outcome = calibrate_threshold(&records).unwrap();
        assert!((outcome.auc - 1.0).abs() < 1e-12, "auc {}", outcome.auc);
        assert!(outcome.epsilon > 0.2 && outcome.epsilon < 5.0);
    }

    #[test]
    fn random_labels_near_chance() {
        use rand::Rng;
        let mut aucs = Vec::new();
        for trial in 0..10u64 {
            let mut rng = rng::derive_rng(trial, Stream::Calibration, &[]);
            let records: Vec<CalibrationRecord> = (0..60)
                .map(|i| CalibrationRecord {
                    demo_id: i,
                    kl_mixture: rng.random_range(0.0..10.0),
                    is_mixture: rng.random::<bool>(),
                })
                .collect();
            aucs.push(calibrate_threshold(&records).unwrap().auc);
        }
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean auc {mean}");
    }

    #[test]
    fn single_class_calibration_is_degenerate() {
        let records: Vec<CalibrationRecord> = (0..5)
            .map(|i| CalibrationRecord {
                demo_id: i,
                kl_mixture: i as f64,
                is_mixture: true,
            })
            .collect();
        assert!(matches!(
            calibrate_threshold(&records),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn roc_endpoints_are_corners() {
        let records = vec![
            CalibrationRecord {
                demo_id: 0,
                kl_mixture: 1.0,
                is_mixture: true,
            },
            CalibrationRecord {
                demo_id: 1,
                kl_mixture: 2.0,
                is_mixture: false,
            },
        ];
        let outcome = calibrate_threshold(&records).unwrap();
        let first = outcome.roc.first().unwrap();
        let last = outcome.roc.last().unwrap();
        assert_eq!((first.0, first.1), (0.0, 0.0));
        assert_eq!((last.0, last.1), (1.0, 1.0));
    }
}
