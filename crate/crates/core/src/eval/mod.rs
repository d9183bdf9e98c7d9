//! Joins prediction records with a dataset manifest and tabulates task
//! metrics over the (S, V) space.
//!
//! Digit and order accuracy, speed MAE and rounded-speed accuracy are folded
//! per cell in manifest order, so shuffling the prediction file never changes
//! a single bit of the report.

mod grid;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{DatasetManifest, SampleEntry};
use crate::predictions::{PredictionRecord, PredictionValue, Task};

pub use grid::{diff_grid, grids_to_csv, GridKind, Metric, MetricGrid, CSV_FIXED_COLUMNS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction from model {model:?} references unknown sample {sample_id}")]
    UnknownSample { sample_id: u64, model: String },
    #[error("duplicate {task} prediction for sample {sample_id} from model {model:?}")]
    DuplicatePrediction { sample_id: u64, task: Task, model: String },
    #[error("invalid {task} prediction for sample {sample_id}: {reason}")]
    InvalidPrediction { sample_id: u64, task: Task, reason: String },
    #[error("grid domains differ: {0}")]
    DomainMismatch(String),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    StructuredText,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model_name: String,
    /// Ordered: digit accuracy, order accuracy, speed MAE, speed rounded accuracy
    /// (whichever tasks were predicted).
    pub grids: Vec<MetricGrid>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: BTreeMap<Task, Vec<Vec<u64>>>,
    /// Error rate by true digit, per task. Speed counts a rounded miss as an error.
    pub per_digit_error: BTreeMap<Task, Vec<Option<f64>>>,
    /// Samples with no prediction for a task the model did predict elsewhere.
    pub missing: BTreeMap<Task, Vec<u64>>,
    /// Tasks with no predictions at all.
    pub absent_tasks: Vec<Task>,
}

impl EvalReport {
    pub fn grid(&self, task: Task, metric: Metric) -> Option<&MetricGrid> {
        self.grids.iter().find(|g| g.task == task && g.metric == metric)
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w: Vec<String> = self
            .absent_tasks
            .iter()
            .map(|t| format!("model {}: no {t} predictions; task skipped", self.model_name))
            .collect();
        for (task, ids) in &self.missing {
            let list: Vec<String> = ids.iter().map(u64::to_string).collect();
            w.push(format!(
                "model {}: {} samples missing {task} predictions: {}",
                self.model_name,
                ids.len(),
                list.join(",")
            ));
        }
        w
    }

    pub fn to_structured_text(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            model_name: &'a str,
            absent_tasks: Vec<&'static str>,
            missing: BTreeMap<&'static str, &'a Vec<u64>>,
            confusion: BTreeMap<&'static str, &'a Vec<Vec<u64>>>,
            per_digit_error: BTreeMap<&'static str, Vec<f64>>,
            grids: Vec<grid::GridDoc>,
        }
        let doc = Doc {
            model_name: &self.model_name,
            absent_tasks: self.absent_tasks.iter().map(|t| t.as_str()).collect(),
            missing: self.missing.iter().map(|(t, v)| (t.as_str(), v)).collect(),
            confusion: self.confusion.iter().map(|(t, m)| (t.as_str(), m)).collect(),
            // TOML has no null; digits without samples are written as -1.
            per_digit_error: self
                .per_digit_error
                .iter()
                .map(|(t, v)| (t.as_str(), v.iter().map(|x| x.unwrap_or(-1.0)).collect()))
                .collect(),
            grids: self.grids.iter().map(grid::GridDoc::from).collect(),
        };
        let mut out = String::from("# stmnist evaluation report; per_digit_error -1 = no samples\n");
        out.push_str(&toml::to_string(&doc).expect("report is TOML-representable"));
        out
    }

    pub fn to_csv(&self) -> String {
        grids_to_csv(&self.grids.iter().collect::<Vec<_>>())
    }
}

fn task_truth(e: &SampleEntry, task: Task) -> u8 {
    match task {
        Task::Digit => e.digit_label,
        Task::Order => e.order_label,
        Task::Speed => e.speed_label,
    }
}

fn evaluate_model(manifest: &DatasetManifest, model: &str, preds: &HashMap<(u64, Task), f64>) -> EvalReport {
    let mut report = EvalReport {
        model_name: model.to_string(),
        grids: Vec::new(),
        confusion: BTreeMap::new(),
        per_digit_error: BTreeMap::new(),
        missing: BTreeMap::new(),
        absent_tasks: Vec::new(),
    };
    for task in Task::ALL {
        if !preds.keys().any(|k| k.1 == task) {
            report.absent_tasks.push(task);
            continue;
        }
        let mut missing = Vec::new();
        let mut digit_err = [(0u64, 0u64); 10];
        let mut metrics: Vec<grid::GridBuilder> = match task {
            Task::Speed => vec![
                grid::GridBuilder::new(task, Metric::Mae),
                grid::GridBuilder::new(task, Metric::RoundedAccuracy),
            ],
            _ => vec![grid::GridBuilder::new(task, Metric::Accuracy)],
        };
        let mut confusion = task.class_count().map(|n| vec![vec![0u64; n]; n]);
        for e in &manifest.samples {
            let Some(&pred) = preds.get(&(e.sample_id, task)) else {
                missing.push(e.sample_id);
                continue;
            };
            let truth = task_truth(e, task);
            let (s, v) = (e.speed_label, e.blink_v);
            let wrong = match task {
                Task::Speed => {
                    let err = (pred - truth as f64).abs();
                    // f64::round is half-away-from-zero.
                    let hit = pred.round() == truth as f64;
                    metrics[0].add(s, v, err);
                    metrics[1].add(s, v, if hit { 1.0 } else { 0.0 });
                    !hit
                }
                _ => {
                    let class = pred as usize;
                    if let Some(m) = confusion.as_mut() {
                        m[truth as usize][class] += 1;
                    }
                    let hit = class == truth as usize;
                    metrics[0].add(s, v, if hit { 1.0 } else { 0.0 });
                    !hit
                }
            };
            let d = &mut digit_err[e.digit_label as usize];
            d.0 += wrong as u64;
            d.1 += 1;
        }
        report.grids.extend(metrics.into_iter().map(grid::GridBuilder::finish));
        if let Some(m) = confusion {
            report.confusion.insert(task, m);
        }
        report.per_digit_error.insert(
            task,
            digit_err.iter().map(|&(w, n)| (n > 0).then(|| w as f64 / n as f64)).collect(),
        );
        if !missing.is_empty() {
            report.missing.insert(task, missing);
        }
    }
    report
}

/// Evaluates every model present in `predictions`, one report per model in
/// name order. Unknown sample ids and duplicate (sample, task, model) records
/// are fatal; missing predictions are listed in the report.
pub fn evaluate(manifest: &DatasetManifest, predictions: &[PredictionRecord]) -> Result<Vec<EvalReport>, EvalError> {
    let known: std::collections::HashSet<u64> = manifest.samples.iter().map(|e| e.sample_id).collect();
    let mut by_model: BTreeMap<&str, HashMap<(u64, Task), f64>> = BTreeMap::new();
    for p in predictions {
        if !known.contains(&p.sample_id) {
            return Err(EvalError::UnknownSample {
                sample_id: p.sample_id,
                model: p.model_name.clone(),
            });
        }
        let valid = match (p.task.class_count(), p.value) {
            (Some(n), PredictionValue::Class(c)) => (c as usize) < n,
            (None, PredictionValue::Real(x)) => x.is_finite(),
            _ => false,
        };
        if !valid {
            return Err(EvalError::InvalidPrediction {
                sample_id: p.sample_id,
                task: p.task,
                reason: format!("value {}", p.value),
            });
        }
        let slot = by_model.entry(&p.model_name).or_default();
        if slot.insert((p.sample_id, p.task), p.value.as_f64()).is_some() {
            return Err(EvalError::DuplicatePrediction {
                sample_id: p.sample_id,
                task: p.task,
                model: p.model_name.clone(),
            });
        }
    }
    Ok(by_model
        .into_iter()
        .map(|(model, preds)| evaluate_model(manifest, model, &preds))
        .collect())
}

fn write_file(path: &Path, text: &str) -> Result<(), EvalError> {
    std::fs::write(path, text).map_err(|source| EvalError::IoFailure {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    match format {
        ReportFormat::StructuredText => write_file(path, &report.to_structured_text()),
        ReportFormat::Csv => write_file(path, &report.to_csv()),
    }
}

/// Writes standalone grids, typically differences from [`diff_grid`].
pub fn export_grids(grids: &[MetricGrid], path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    let text = match format {
        ReportFormat::Csv => grids_to_csv(&grids.iter().collect::<Vec<_>>()),
        ReportFormat::StructuredText => {
            #[derive(Serialize)]
            struct Doc {
                grids: Vec<grid::GridDoc>,
            }
            let doc = Doc {
                grids: grids.iter().map(grid::GridDoc::from).collect(),
            };
            let mut s = String::from("# difference grids: positive = second model better\n");
            s.push_str(&toml::to_string(&doc).expect("grids are TOML-representable"));
            s
        }
    };
    write_file(path, &text)
}

/// Differences for every (task, metric) both reports contain, oriented so
/// positive favours `b`.
pub fn diff_reports(a: &EvalReport, b: &EvalReport) -> Result<Vec<MetricGrid>, EvalError> {
    a.grids
        .iter()
        .filter_map(|ga| b.grid(ga.task, ga.metric).map(|gb| diff_grid(ga, gb)))
        .collect()
}
