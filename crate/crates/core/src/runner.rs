//! Command orchestration shared by the CLI and the Python bindings: demo
//! generation, lifelong runs with resume, evaluation, reporting, optimizer
//! comparison, and threshold calibration.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::demo::{generate_demo_set, read_demo_set, write_demo_set, DemoSet};
use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::lifelong::{
    calibrate_threshold, find_latest_checkpoint, load_checkpoint, refill_seen_demos,
    run_from_state, Branch, CalibrationRecord, LifelongReport, LifelongState,
};
use crate::metrics::{
    build_correlation_test_set, cosine_distance, demo_log_likelihood, episodes_to_match,
    pearson, predicted_strategy_labels, EfficiencyRecord,
};
use crate::mixture::{optimize_with, MixtureWeights, OptimizerKind};
use crate::plot;
use crate::report::{
    read_report_json, write_cosine_csv, write_efficiency_csv, write_metrics_csv,
    write_optimizer_comparison_csv, write_report_json, write_roc_csv, write_scatter_csv,
};
use crate::rng::{self, Stream};

/// gen-demos: write the demonstration file described by the config.
pub fn cmd_gen_demos(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let spec = EnvSpec::by_name(&config.env)?;
    let set = generate_demo_set(
        &spec,
        config.demos.pure_styles,
        config.demos.mixtures,
        config.seed,
        config.demos.order,
    )?;
    let path = config.resolve_out(&config.demos.path);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_demo_set(&path, &set)?;
    Ok(path)
}

/// Artifact paths inside a run directory.
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: PathBuf) -> Self {
        RunPaths { root }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn metrics_csv(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn plots_dir(&self) -> PathBuf {
        self.root.join("plots")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.txt")
    }
}

/// run-lifelong: process a demonstration file, writing the report, metrics
/// table, and per-demo checkpoints. `resume` continues from the last
/// complete checkpoint in an existing run directory.
pub fn cmd_run_lifelong(
    config: &ExperimentConfig,
    demo_path: &Path,
    out_dir: &Path,
    resume: bool,
) -> Result<LifelongReport> {
    config.validate()?;
    let demo_set = read_demo_set(demo_path)?;
    std::fs::create_dir_all(out_dir)?;
    let paths = RunPaths::new(out_dir.to_path_buf());
    config.save(&paths.config())?;

    let mut state = if resume {
        let latest = find_latest_checkpoint(&paths.checkpoints()).ok_or_else(|| {
            Error::Config(format!(
                "no checkpoint to resume under {}",
                paths.checkpoints().display()
            ))
        })?;
        let mut state = load_checkpoint(&latest)?;
        refill_seen_demos(&mut state, &demo_set)?;
        state
    } else {
        LifelongState::new(demo_set.env.clone(), config.lifelong.clone(), config.seed)
    };

    let report = run_from_state(&mut state, &demo_set, Some(&paths.checkpoints()))?;
    write_report_json(&report, &paths.report())?;
    write_metrics_csv(&report, &paths.metrics_csv())?;
    Ok(report)
}

/// Calibration records for a completed run: the recorded mixture KL per
/// demo plus the generator's hidden is-mixture label from the demo file.
pub fn calibration_records(
    report: &LifelongReport,
    demo_set: &DemoSet,
) -> Vec<CalibrationRecord> {
    report
        .decisions
        .iter()
        .filter_map(|d| {
            let kl = d.kl_mixture?;
            let record = demo_set.records.iter().find(|r| r.id == d.demo_id)?;
            Some(CalibrationRecord {
                demo_id: d.demo_id,
                kl_mixture: kl,
                is_mixture: !record.is_pure(),
            })
        })
        .collect()
}

/// Evaluation artifacts computed by `cmd_eval`.
pub struct EvalOutcome {
    pub task_reward_correlation: f64,
    pub mean_cosine_distance: f64,
    pub roc_auc: Option<f64>,
    pub efficiency: Vec<(usize, EfficiencyRecord)>,
}

/// eval: model-dependent metrics for a completed run. Loads the final
/// checkpoint, computes the reward correlation on the corruption-spread test
/// set, per-demo cosine distances, the ROC sweep, and (optionally) the
/// mixture-vs-scratch efficiency comparison.
pub fn cmd_eval(
    config: &ExperimentConfig,
    run_dir: &Path,
    demo_path: &Path,
    with_efficiency: bool,
) -> Result<EvalOutcome> {
    let paths = RunPaths::new(run_dir.to_path_buf());
    let report = read_report_json(&paths.report())?;
    let demo_set = read_demo_set(demo_path)?;
    let latest = find_latest_checkpoint(&paths.checkpoints())
        .ok_or_else(|| Error::Config("run directory has no checkpoints".into()))?;
    let mut state = load_checkpoint(&latest)?;
    refill_seen_demos(&mut state, &demo_set)?;
    std::fs::create_dir_all(paths.eval_dir())?;

    // Task-reward correlation over the corruption-spread test set.
    let spec = EnvSpec::by_name(&config.env)?;
    let test_set = build_correlation_test_set(
        &spec,
        &config.eval.noise_levels,
        config.eval.seeds_per_level,
        rng::derive_seed(config.seed, Stream::Eval, &[0xc0]),
    )?;
    let pairs: Vec<(f64, f64)> = test_set
        .iter()
        .map(|t| Ok((state.reward.task_return(t)?, t.total_return())))
        .collect::<Result<_>>()?;
    let correlation = pearson(
        &pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
        &pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
    )?;
    write_scatter_csv(&pairs, &paths.eval_dir().join("correlation_scatter.csv"))?;

    // Cosine distance between recorded weights and predicted labels.
    let labels = predicted_strategy_labels(&state.reward, &state.seen_demos)?;
    let mut cosine_rows = Vec::new();
    for (demo_id, weights) in state.mixture_weights.iter().enumerate() {
        let predicted: Vec<f64> = labels.iter().map(|row| row[demo_id]).collect();
        cosine_rows.push((demo_id, cosine_distance(weights, &predicted)?));
    }
    let mean_cosine =
        cosine_rows.iter().map(|r| r.1).sum::<f64>() / cosine_rows.len().max(1) as f64;
    write_cosine_csv(&cosine_rows, &paths.eval_dir().join("cosine_distance.csv"))?;

    // ROC sweep when both label classes are present.
    let records = calibration_records(&report, &demo_set);
    let roc_auc = match calibrate_threshold(&records) {
        Ok(outcome) => {
            write_roc_csv(&outcome, &paths.eval_dir().join("roc.csv"))?;
            Some(outcome.auc)
        }
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };

    // Efficiency: mixture search cost vs from-scratch training to the same
    // demonstration log-likelihood.
    let mut efficiency = Vec::new();
    if with_efficiency {
        let cap = if config.eval.efficiency_demo_cap == 0 {
            usize::MAX
        } else {
            config.eval.efficiency_demo_cap
        };
        for decision in report.decisions.iter() {
            if efficiency.len() >= cap {
                break;
            }
            let accepted_mixture = matches!(
                decision.branch,
                Branch::MixtureBelowEpsilon | Branch::MixtureBeatsNew
            );
            if !accepted_mixture {
                continue;
            }
            let record = demo_set
                .records
                .iter()
                .find(|r| r.id == decision.demo_id)
                .ok_or_else(|| Error::Config("report references unknown demo id".into()))?;
            let weights = MixtureWeights::new(state.mixture_weights[decision.demo_id].clone())?;
            let target_ll =
                demo_log_likelihood(&state.policies, &weights, &record.trajectory)?;
            let outcome = episodes_to_match(
                &record.trajectory,
                &spec,
                target_ll,
                decision.episodes_search.max(1),
                &config.lifelong.airl,
                config.lifelong.fusion_capacity,
                rng::derive_seed(config.seed, Stream::Eval, &[0xeff, decision.demo_id as u64]),
            )?;
            efficiency.push((decision.demo_id, outcome));
        }
        write_efficiency_csv(&efficiency, &paths.eval_dir().join("efficiency.csv"))?;
    }

    Ok(EvalOutcome {
        task_reward_correlation: correlation,
        mean_cosine_distance: mean_cosine,
        roc_auc,
        efficiency,
    })
}

/// report: render plots and a text summary from a completed (and evaluated)
/// run directory. Fails without partial output when artifacts are missing.
pub fn cmd_report(run_dir: &Path) -> Result<PathBuf> {
    let paths = RunPaths::new(run_dir.to_path_buf());
    if !paths.report().exists() {
        return Err(Error::Config(format!(
            "{} is not a run directory (missing report.json)",
            run_dir.display()
        )));
    }
    let report = read_report_json(&paths.report())?;
    std::fs::create_dir_all(paths.plots_dir())?;

    // Strategy count versus demonstrations processed.
    let counts: Vec<(f64, f64)> = report
        .decisions
        .iter()
        .map(|d| ((d.demo_id + 1) as f64, d.strategy_count_after as f64))
        .collect();
    plot::step_curve(
        &counts,
        "strategy library growth",
        "demonstrations processed",
        "strategies",
        &paths.plots_dir().join("strategies.svg"),
    )?;

    // Episodes per demonstration.
    let episodes: Vec<f64> = report
        .decisions
        .iter()
        .map(|d| (d.episodes_search + d.episodes_training) as f64)
        .collect();
    plot::histogram(
        &episodes,
        10,
        "episodes per demonstration",
        "episodes (search + training)",
        &paths.plots_dir().join("episodes.svg"),
    )?;

    let mut summary = String::new();
    summary.push_str(&format!(
        "environment: {}\nseed: {}\nbcd: {}\ndemonstrations: {}\nstrategies: {}\nfailed demos: {}\n",
        report.env_name,
        report.master_seed,
        report.bcd_enabled,
        report.decisions.len(),
        report.final_strategy_count,
        report.failed_demo_count(),
    ));
    let mean_return =
        report.metrics.iter().map(|m| m.environment_return).sum::<f64>()
            / report.metrics.len().max(1) as f64;
    let mean_ll = report.metrics.iter().map(|m| m.log_likelihood).sum::<f64>()
        / report.metrics.len().max(1) as f64;
    let mean_kl = report.metrics.iter().map(|m| m.kl_accepted).sum::<f64>()
        / report.metrics.len().max(1) as f64;
    summary.push_str(&format!(
        "mean environment return: {mean_return:.4}\nmean log-likelihood: {mean_ll:.4}\nmean accepted KL: {mean_kl:.4}\n"
    ));

    // Optional plots from evaluation artifacts.
    let scatter_path = paths.eval_dir().join("correlation_scatter.csv");
    if scatter_path.exists() {
        let rows = crate::report::read_csv_rows(&scatter_path)?;
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .skip(1)
            .filter_map(|r| Some((r.first()?.parse().ok()?, r.get(1)?.parse().ok()?)))
            .collect();
        let estimated: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let actual: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Ok(r) = pearson(&estimated, &actual) {
            summary.push_str(&format!("task reward correlation: {r:.4}\n"));
        }
        plot::scatter_with_diagonal(
            &pairs,
            "estimated vs ground-truth return",
            &paths.plots_dir().join("correlation.svg"),
        )?;
    }
    let roc_path = paths.eval_dir().join("roc.csv");
    if roc_path.exists() {
        let text = std::fs::read_to_string(&roc_path)?;
        let mut auc = f64::NAN;
        let mut points = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("#epsilon=") {
                if let Some(auc_str) = rest.split("auc=").nth(1) {
                    auc = auc_str.parse().unwrap_or(f64::NAN);
                }
            } else if !line.starts_with('#') && !line.starts_with("false_positive") {
                let mut parts = line.split(',');
                if let (Some(f), Some(t)) = (parts.next(), parts.next()) {
                    if let (Ok(f), Ok(t)) = (f.parse(), t.parse()) {
                        points.push((f, t));
                    }
                }
            }
        }
        if !points.is_empty() {
            plot::roc_curve(
                &points,
                auc,
                "mixture-vs-new classification",
                &paths.plots_dir().join("roc.svg"),
            )?;
            summary.push_str(&format!("threshold ROC AUC: {auc:.4}\n"));
        }
    }

    std::fs::write(paths.summary(), &summary)?;
    Ok(paths.summary())
}

/// compare-optimizers: every optimizer on every demonstration of the file,
/// identical budgets, one CSV row per demo plus the average row.
pub fn cmd_compare_optimizers(
    config: &ExperimentConfig,
    demo_path: &Path,
    library_checkpoint: &Path,
    out_csv: &Path,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let demo_set = read_demo_set(demo_path)?;
    let mut state = load_checkpoint(library_checkpoint)?;
    refill_seen_demos(&mut state, &demo_set)?;
    if state.policies.is_empty() {
        return Err(Error::Empty("strategy library for optimizer comparison"));
    }
    let spec = EnvSpec::by_name(&config.env)?;
    let mut rows = Vec::new();
    for record in &demo_set.records {
        let mut kls = Vec::new();
        for kind in OptimizerKind::ALL {
            let outcome = optimize_with(
                kind,
                &record.trajectory,
                &state.policies,
                &spec,
                &config.lifelong.search,
                rng::derive_seed(config.seed, Stream::MixtureSearch, &[record.id as u64]),
            )?;
            kls.push(outcome.kl);
        }
        rows.push((record.id, kls));
    }
    if let Some(parent) = out_csv.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let labels: Vec<&str> = OptimizerKind::ALL.iter().map(|k| k.label()).collect();
    write_optimizer_comparison_csv(&labels, &rows, out_csv)?;
    Ok(rows)
}

/// calibrate-threshold: ROC sweep over a completed labelled run.
pub fn cmd_calibrate_threshold(
    run_dir: &Path,
    demo_path: &Path,
    out_csv: &Path,
) -> Result<crate::lifelong::CalibrationOutcome> {
    let paths = RunPaths::new(run_dir.to_path_buf());
    let report = read_report_json(&paths.report())?;
    let demo_set = read_demo_set(demo_path)?;
    let records = calibration_records(&report, &demo_set);
    let outcome = calibrate_threshold(&records)?;
    if let Some(parent) = out_csv.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_roc_csv(&outcome, out_csv)?;
    Ok(outcome)
}
