//! Run artifacts: the JSON report and the CSV tables.
//!
//! Every CSV starts with a `#schema_version=N` comment line; readers reject
//! unknown versions. Floats are written in shortest round-trip form, so a
//! deterministic rerun produces byte-identical files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lifelong::{Branch, CalibrationOutcome, LifelongReport};
use crate::metrics::EfficiencyRecord;

pub const CSV_SCHEMA_VERSION: u32 = 1;

fn schema_line() -> String {
    format!("#schema_version={CSV_SCHEMA_VERSION}\n")
}

fn branch_label(branch: Branch) -> &'static str {
    match branch {
        Branch::MixtureBelowEpsilon => "mixture-below-epsilon",
        Branch::MixtureBeatsNew => "mixture-beats-new",
        Branch::NewStrategy => "new-strategy",
        Branch::Failed => "failed",
    }
}

fn opt(value: Option<f64>) -> String {
    value.map_or(String::new(), |v| format!("{v}"))
}

/// Per-demo metrics table for one lifelong run.
pub fn write_metrics_csv(report: &LifelongReport, path: &Path) -> Result<()> {
    let mut out = schema_line();
    out.push_str(
        "demo_id,branch,kl_mixture,kl_new_strategy,kl_accepted,log_likelihood,environment_return,episodes_search,episodes_training,episodes_refinement,strategy_count_after\n",
    );
    for decision in &report.decisions {
        let metric = report
            .metrics
            .iter()
            .find(|m| m.demo_id == decision.demo_id);
        let (kl_accepted, ll, env_ret) = match metric {
            Some(m) => (
                format!("{}", m.kl_accepted),
                format!("{}", m.log_likelihood),
                format!("{}", m.environment_return),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            decision.demo_id,
            branch_label(decision.branch),
            opt(decision.kl_mixture),
            opt(decision.kl_new_strategy),
            kl_accepted,
            ll,
            env_ret,
            decision.episodes_search,
            decision.episodes_training,
            decision.episodes_refinement,
            decision.strategy_count_after,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read back the rows written by [`write_metrics_csv`] as raw strings.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first.starts_with("#schema_version=") => {
            let version: u32 = first
                .trim_start_matches("#schema_version=")
                .parse()
                .map_err(|_| Error::CorruptFile("bad schema version line".into()))?;
            if version != CSV_SCHEMA_VERSION {
                return Err(Error::FormatVersion {
                    found: version,
                    expected: CSV_SCHEMA_VERSION,
                });
            }
        }
        _ => return Err(Error::CorruptFile("missing schema version line".into())),
    }
    Ok(lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

/// Correlation scatter data: one (estimated, ground-truth) pair per row.
pub fn write_scatter_csv(pairs: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut out = schema_line();
    out.push_str("estimated_task_return,ground_truth_return\n");
    for (est, actual) in pairs {
        out.push_str(&format!("{est},{actual}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-demo cosine distances between recorded weights and predicted labels.
pub fn write_cosine_csv(rows: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut out = schema_line();
    out.push_str("demo_id,cosine_distance\n");
    for (id, d) in rows {
        out.push_str(&format!("{id},{d}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// ROC sweep points plus the chosen threshold and area under the curve.
pub fn write_roc_csv(outcome: &CalibrationOutcome, path: &Path) -> Result<()> {
    let mut out = schema_line();
    out.push_str(&format!(
        "#epsilon={},auc={}\n",
        outcome.epsilon, outcome.auc
    ));
    out.push_str("false_positive_rate,true_positive_rate,threshold\n");
    for (fpr, tpr, threshold) in &outcome.roc {
        out.push_str(&format!("{fpr},{tpr},{threshold}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Efficiency comparison rows; censored runs are flagged, never averaged.
pub fn write_efficiency_csv(rows: &[(usize, EfficiencyRecord)], path: &Path) -> Result<()> {
    let mut out = schema_line();
    out.push_str(
        "demo_id,episodes_mixture,episodes_scratch,censored,target_log_likelihood\n",
    );
    for (id, r) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            id, r.episodes_mixture, r.episodes_scratch, r.censored, r.target_log_likelihood
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Optimizer comparison matrix: one row per demo, one column per optimizer,
/// plus a trailing average row.
pub fn write_optimizer_comparison_csv(
    optimizer_labels: &[&str],
    rows: &[(usize, Vec<f64>)],
    path: &Path,
) -> Result<()> {
    let mut out = schema_line();
    out.push_str("demonstration");
    for label in optimizer_labels {
        out.push_str(&format!(",{label}"));
    }
    out.push('\n');
    let mut sums = vec![0.0; optimizer_labels.len()];
    for (id, kls) in rows {
        out.push_str(&format!("{}", id + 1));
        for (kl, sum) in kls.iter().zip(sums.iter_mut()) {
            out.push_str(&format!(",{kl}"));
            *sum += kl;
        }
        out.push('\n');
    }
    out.push_str("Average");
    for sum in &sums {
        out.push_str(&format!(",{}", sum / rows.len() as f64));
    }
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_report_json(report: &LifelongReport, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(report)?)?;
    Ok(())
}

pub fn read_report_json(path: &Path) -> Result<LifelongReport> {
    let report: LifelongReport = serde_json::from_slice(&std::fs::read(path)?)?;
    if report.schema_version != crate::lifelong::REPORT_SCHEMA_VERSION {
        return Err(Error::FormatVersion {
            found: report.schema_version,
            expected: crate::lifelong::REPORT_SCHEMA_VERSION,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifelong::{DecisionRecord, DemoMetrics};

    fn fake_report() -> LifelongReport {
        LifelongReport {
            schema_version: crate::lifelong::REPORT_SCHEMA_VERSION,
            env_name: "rail-pendulum".into(),
            master_seed: 7,
            bcd_enabled: true,
            final_strategy_count: 2,
            decisions: vec![DecisionRecord {
                demo_id: 0,
                branch: Branch::NewStrategy,
                kl_mixture: None,
                kl_new_strategy: Some(3.25),
                weights: vec![1.0],
                episodes_search: 0,
                episodes_training: 100,
                episodes_refinement: 20,
                strategy_count_after: 1,
                error: None,
            }],
            metrics: vec![DemoMetrics {
                demo_id: 0,
                environment_return: -1.5,
                log_likelihood: -250.0,
                kl_accepted: 3.25,
            }],
        }
    }

    #[test]
    fn metrics_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("flair_report_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("metrics.csv");
        write_metrics_csv(&fake_report(), &path).unwrap();
        let rows = read_csv_rows(&path).unwrap();
        assert_eq!(rows[0][0], "demo_id");
        assert_eq!(rows[1][1], "new-strategy");
        assert_eq!(rows[1][4], "3.25");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_rejects_unknown_schema() {
        let dir = std::env::temp_dir().join(format!("flair_schema_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "#schema_version=99\na,b\n").unwrap();
        assert!(matches!(
            read_csv_rows(&path),
            Err(Error::FormatVersion { found: 99, .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn report_json_round_trip() {
        let dir = std::env::temp_dir().join(format!("flair_json_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        let report = fake_report();
        write_report_json(&report, &path).unwrap();
        let back = read_report_json(&path).unwrap();
        assert_eq!(back.final_strategy_count, 2);
        assert_eq!(back.decisions.len(), 1);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn optimizer_csv_has_average_row() {
        let dir = std::env::temp_dir().join(format!("flair_opt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("optimizers.csv");
        write_optimizer_comparison_csv(
            &["random", "pso"],
            &[(0, vec![1.0, 2.0]), (1, vec![3.0, 4.0])],
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("Average,2,3"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
