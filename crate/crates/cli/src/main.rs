//! Command-line front door for the lifelong learning-from-demonstration
//! toolkit.
//!
//! Subcommands: `gen-demos`, `run-lifelong`, `eval`, `report`,
//! `compare-optimizers`, `calibrate-threshold`, `print-config`. Every
//! command is deterministic given its config and seeds; the
//! `FLAIR_FORGE_OUT` environment variable overrides the output root for
//! relative paths.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flair_core::config::ExperimentConfig;
use flair_core::demo::ArrivalOrder;
use flair_core::error::Result;
use flair_core::lifelong::find_latest_checkpoint;
use flair_core::mixture::OptimizerKind;
use flair_core::runner;

#[derive(Parser)]
#[command(
    name = "flair-forge",
    about = "Lifelong learning from heterogeneous demonstrations: policy mixtures, adversarial reward decomposition, between-class discrimination",
    version
)]
struct Cli {
    /// Worker threads (0 = all available cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config JSON (defaults are used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Environment name (rail-pendulum | point-lander); overrides the config.
    #[arg(long)]
    env: Option<String>,

    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.env) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(env)) => ExperimentConfig::default_for(env)?,
            (None, None) => ExperimentConfig::default_for("rail-pendulum")?,
        };
        if let Some(env) = &self.env {
            if config.env != *env {
                // Re-derive per-environment defaults, then re-apply the seed.
                let seed = config.seed;
                config = ExperimentConfig::default_for(env)?;
                config.seed = seed;
            }
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a demonstration file from scripted heterogeneous controllers.
    GenDemos {
        #[command(flatten)]
        config: ConfigArgs,

        /// Number of pure prototype styles.
        #[arg(long)]
        pure: Option<usize>,

        /// Number of mixture demonstrations.
        #[arg(long)]
        mix: Option<usize>,

        /// Arrival order: pure-first or shuffled.
        #[arg(long)]
        order: Option<String>,

        /// Output demo file path.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Process a demonstration file sequentially, growing the library.
    RunLifelong {
        #[command(flatten)]
        config: ConfigArgs,

        /// Demonstration file (defaults to the config's demos.path).
        #[arg(long)]
        demos: Option<PathBuf>,

        /// Run directory (defaults to the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,

        /// Resume from the last checkpoint in the run directory.
        #[arg(long)]
        resume: bool,

        /// Disable between-class discrimination (ablation).
        #[arg(long)]
        ablate_bcd: bool,
    },

    /// Compute model-dependent metrics for a completed run.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,

        /// Run directory produced by run-lifelong.
        #[arg(long)]
        run: PathBuf,

        /// Demonstration file used for the run.
        #[arg(long)]
        demos: Option<PathBuf>,

        /// Also run the mixture-vs-scratch efficiency comparison (slow).
        #[arg(long)]
        efficiency: bool,
    },

    /// Render plots and a text summary from run artifacts.
    Report {
        /// Run directory produced by run-lifelong (and optionally eval).
        #[arg(long)]
        run: PathBuf,
    },

    /// Run every simplex optimizer on every demonstration at equal budgets.
    CompareOptimizers {
        #[command(flatten)]
        config: ConfigArgs,

        /// Demonstration file to model.
        #[arg(long)]
        demos: Option<PathBuf>,

        /// Checkpoint directory holding the strategy library to mix.
        #[arg(long)]
        library: PathBuf,

        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Sweep the acceptance threshold over a labelled completed run.
    CalibrateThreshold {
        /// Run directory produced by run-lifelong.
        #[arg(long)]
        run: PathBuf,

        /// Demonstration file with generator labels.
        #[arg(long)]
        demos: Option<PathBuf>,

        /// Output ROC CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Dump the effective configuration (full default set) as JSON.
    PrintConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenDemos {
            config,
            pure,
            mix,
            order,
            out,
        } => {
            let mut config = config.load()?;
            if let Some(pure) = pure {
                config.demos.pure_styles = pure;
            }
            if let Some(mix) = mix {
                config.demos.mixtures = mix;
            }
            if let Some(order) = order {
                config.demos.order = match order.as_str() {
                    "pure-first" => ArrivalOrder::PureFirst,
                    "shuffled" => ArrivalOrder::Shuffled,
                    other => {
                        return Err(flair_core::Error::Config(format!(
                            "unknown order '{other}' (expected pure-first or shuffled)"
                        )))
                    }
                };
            }
            if let Some(out) = out {
                config.demos.path = out.to_string_lossy().into_owned();
            }
            let path = runner::cmd_gen_demos(&config)?;
            let set = flair_core::demo::read_demo_set(&path)?;
            println!(
                "wrote {} demonstrations ({} pure styles, {} mixtures) for {} to {}",
                set.records.len(),
                config.demos.pure_styles,
                config.demos.mixtures,
                config.env,
                path.display()
            );
            for record in set.records.iter().filter(|r| r.is_pure()) {
                println!("  pure style: {}", record.style_label);
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::RunLifelong {
            config,
            demos,
            out,
            resume,
            ablate_bcd,
        } => {
            let mut config = config.load()?;
            if ablate_bcd {
                config.lifelong.bcd_enabled = false;
            }
            let demo_path =
                demos.unwrap_or_else(|| config.resolve_out(&config.demos.path));
            let out_dir = out.unwrap_or_else(|| config.resolve_out(&config.out_dir));
            let report = runner::cmd_run_lifelong(&config, &demo_path, &out_dir, resume)?;
            println!(
                "processed {} demonstrations -> {} strategies ({} failed); report in {}",
                report.decisions.len(),
                report.final_strategy_count,
                report.failed_demo_count(),
                out_dir.display()
            );
            for d in &report.decisions {
                println!(
                    "  demo {:>3}: {:?} (mixture KL {}, new KL {})",
                    d.demo_id,
                    d.branch,
                    d.kl_mixture.map_or("-".into(), |v| format!("{v:.3}")),
                    d.kl_new_strategy.map_or("-".into(), |v| format!("{v:.3}")),
                );
            }
            if report.failed_demo_count() > 0 {
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Eval {
            config,
            run,
            demos,
            efficiency,
        } => {
            let config = config.load()?;
            let demo_path =
                demos.unwrap_or_else(|| config.resolve_out(&config.demos.path));
            let outcome = runner::cmd_eval(&config, &run, &demo_path, efficiency)?;
            println!(
                "task reward correlation: {:.4}",
                outcome.task_reward_correlation
            );
            println!(
                "mean cosine distance:    {:.4}",
                outcome.mean_cosine_distance
            );
            if let Some(auc) = outcome.roc_auc {
                println!("threshold ROC AUC:       {auc:.4}");
            }
            for (id, record) in &outcome.efficiency {
                println!(
                    "  demo {id}: mixture {} episodes vs scratch {}{}",
                    record.episodes_mixture,
                    record.episodes_scratch,
                    if record.censored { " (censored)" } else { "" }
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Report { run } => {
            let summary = runner::cmd_report(&run)?;
            print!("{}", std::fs::read_to_string(&summary)?);
            println!("plots in {}", run.join("plots").display());
            Ok(ExitCode::SUCCESS)
        }

        Command::CompareOptimizers {
            config,
            demos,
            library,
            out,
        } => {
            let config = config.load()?;
            let demo_path =
                demos.unwrap_or_else(|| config.resolve_out(&config.demos.path));
            let out_csv = out.unwrap_or_else(|| {
                config.resolve_out(&config.out_dir).join("optimizers.csv")
            });
            // Accept either a specific checkpoint or a run directory.
            let checkpoint = if library.join("state.json").exists() {
                library.clone()
            } else {
                find_latest_checkpoint(&library.join("checkpoints"))
                    .or_else(|| find_latest_checkpoint(&library))
                    .ok_or_else(|| {
                        flair_core::Error::Config(format!(
                            "no checkpoint found under {}",
                            library.display()
                        ))
                    })?
            };
            let rows =
                runner::cmd_compare_optimizers(&config, &demo_path, &checkpoint, &out_csv)?;
            println!("wrote optimizer comparison for {} demos to {}", rows.len(), out_csv.display());
            let labels: Vec<&str> = OptimizerKind::ALL.iter().map(|k| k.label()).collect();
            let mut means = vec![0.0; labels.len()];
            for (_, kls) in &rows {
                for (m, kl) in means.iter_mut().zip(kls) {
                    *m += kl / rows.len() as f64;
                }
            }
            for (label, mean) in labels.iter().zip(means) {
                println!("  {label:>7} average KL: {mean:.4}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::CalibrateThreshold { run, demos, out } => {
            let demo_path = match demos {
                Some(p) => p,
                None => {
                    let config = ExperimentConfig::load(&run.join("config.json"))?;
                    config.resolve_out(&config.demos.path)
                }
            };
            let out_csv = out.unwrap_or_else(|| run.join("eval").join("roc.csv"));
            let outcome = runner::cmd_calibrate_threshold(&run, &demo_path, &out_csv)?;
            println!(
                "calibrated epsilon = {:.4} (AUC {:.4}); ROC written to {}",
                outcome.epsilon,
                outcome.auc,
                out_csv.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::PrintConfig { config } => {
            let config = config.load()?;
            println!("{}", serde_json::to_string_pretty(&config)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
