//! Evaluation in price units and the feature-set x lookback experiment grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{build_model, train, ModelConfig, ModelKind, TrainedModel};
use crate::error::{Error, Result};
use crate::panel::{split_point, Panel};
use crate::report::write_table;
use crate::window::{make_windows, WindowedDataset};

/// Per-step errors of a direct multi-step forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEvaluation {
    pub per_step_mse: Vec<f64>,
    pub per_step_mae: Vec<f64>,
    pub n_test_samples: usize,
}

/// Metrics for predictions already in price units.
pub fn evaluate_predictions<F: FnMut(usize) -> Vec<f64>>(
    test: &WindowedDataset,
    mut predict: F,
) -> Result<ForecastEvaluation> {
    let n = test.samples();
    if n == 0 {
        return Err(Error::EmptyTestSet);
    }
    let h = test.horizon;
    let mut mse = vec![0.0; h];
    let mut mae = vec![0.0; h];
    for s in 0..n {
        let pred = predict(s);
        for (k, (p, y)) in pred.iter().zip(test.raw_target(s)).enumerate() {
            let e = p - y;
            mse[k] += e * e;
            mae[k] += e.abs();
        }
    }
    mse.iter_mut().chain(mae.iter_mut()).for_each(|v| *v /= n as f64);
    Ok(ForecastEvaluation {
        per_step_mse: mse,
        per_step_mae: mae,
        n_test_samples: n,
    })
}

/// Inverse-scales the model's predictions, then scores them per step.
pub fn evaluate(model: &TrainedModel, test: &WindowedDataset) -> Result<ForecastEvaluation> {
    if test.lookback != model.config.lookback
        || test.features() != model.config.feature_count
        || test.horizon != model.config.horizon
    {
        return Err(Error::DimensionMismatch("test windows do not match the model".into()));
    }
    evaluate_predictions(test, |s| {
        model
            .predict_scaled(&test.scaled_input(s))
            .into_iter()
            .map(|v| test.unscale_target(v))
            .collect()
    })
}

/// Last observed target value repeated over the horizon.
pub fn naive_baseline(test: &WindowedDataset) -> Result<ForecastEvaluation> {
    evaluate_predictions(test, |s| vec![test.last_observed(s); test.horizon])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Every series except the target.
    WithoutTarget,
    /// Every series, target included.
    WithTarget,
}

impl FeatureSet {
    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::WithoutTarget => "without_target",
            FeatureSet::WithTarget => "with_target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub feature_set: FeatureSet,
    pub lookback: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub target: String,
    pub horizon: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub kinds: Vec<ModelKind>,
}

impl GridOptions {
    pub fn new(target: &str) -> Self {
        Self {
            target: target.to_string(),
            horizon: 5,
            train_fraction: 0.8,
            seed: 0,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            kinds: ModelKind::defaults(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub feature_set: String,
    pub lookback: usize,
    pub model: String,
    pub step: usize,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// One row per (cell, model, step).
    pub rows: Vec<ReportRow>,
    /// Naive last-value rows, one per (cell, step).
    pub baseline_rows: Vec<ReportRow>,
    /// Effective configuration of every trained model.
    pub configs: Vec<ModelConfig>,
    pub notes: Vec<String>,
}

pub const REPORT_HEADER: [&str; 6] = ["feature_set", "lookback", "model", "step", "mse", "mae"];

fn table_rows(rows: &[ReportRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.feature_set.clone(),
                r.lookback.to_string(),
                r.model.clone(),
                r.step.to_string(),
                r.mse.to_string(),
                r.mae.to_string(),
            ]
        })
        .collect()
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_table(writer, &REPORT_HEADER, &table_rows(&self.rows))
    }

    pub fn write_baseline_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_table(writer, &REPORT_HEADER, &table_rows(&self.baseline_rows))
    }
}

fn rows_for(cell: &GridCell, model: &str, eval: &ForecastEvaluation) -> Vec<ReportRow> {
    eval.per_step_mse
        .iter()
        .zip(&eval.per_step_mae)
        .enumerate()
        .map(|(k, (&mse, &mae))| ReportRow {
            feature_set: cell.feature_set.label().to_string(),
            lookback: cell.lookback,
            model: model.to_string(),
            step: k + 1,
            mse,
            mae,
        })
        .collect()
}

/// Trains every model kind on every cell with a shared seed and scores the
/// held-out windows in price units.
pub fn run_experiment_grid(panel: &Panel, grid: &[GridCell], options: &GridOptions) -> Result<ExperimentReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("experiment grid is empty".into()));
    }
    if options.kinds.is_empty() {
        return Err(Error::InvalidConfig("no model kinds requested".into()));
    }
    let train_rows = split_point(panel.rows(), options.train_fraction)?;
    let mut report = ExperimentReport {
        rows: Vec::new(),
        baseline_rows: Vec::new(),
        configs: Vec::new(),
        notes: vec![
            "metrics are in the target's price units on the chronological test portion".into(),
            "architectures and training settings are defaults of this toolkit; published grids are not reproducible from them"
                .into(),
        ],
    };
    for cell in grid {
        let data = make_windows(
            panel,
            &options.target,
            cell.lookback,
            options.horizon,
            cell.feature_set == FeatureSet::WithTarget,
            train_rows,
        )?;
        let (train_set, test_set) = data.split();
        report
            .baseline_rows
            .extend(rows_for(cell, "naive", &naive_baseline(&test_set)?));
        for kind in &options.kinds {
            let config = ModelConfig {
                learning_rate: options.learning_rate,
                epochs: options.epochs,
                batch_size: options.batch_size,
                ..ModelConfig::new(kind.clone(), cell.lookback, data.features(), options.horizon, options.seed)
            };
            let model = train(build_model(config)?, &train_set)?;
            let eval = evaluate(&model, &test_set)?;
            report.rows.extend(rows_for(cell, kind.label(), &eval));
            report.configs.push(model.config);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::business_days;
    use crate::PanelKind;

    fn dataset(targets: Vec<Vec<f64>>) -> WindowedDataset {
        let inputs = vec![vec![0.0, 1.0]; targets.len()];
        WindowedDataset::from_samples(2, vec!["x".into()], "x", &inputs, &targets).unwrap()
    }

    #[test]
    fn perfect_predictions_score_zero() {
        let d = dataset(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let e = evaluate_predictions(&d, |s| d.raw_target(s).to_vec()).unwrap();
        assert_eq!(e.per_step_mse, vec![0.0, 0.0]);
        assert_eq!(e.per_step_mae, vec![0.0, 0.0]);
    }

    #[test]
    fn constant_prediction_hand_arithmetic() {
        let d = dataset(vec![vec![4.0], vec![6.0]]);
        let e = evaluate_predictions(&d, |_| vec![5.0]).unwrap();
        assert_eq!(e.per_step_mse, vec![1.0]);
        assert_eq!(e.per_step_mae, vec![1.0]);
        assert_eq!(e.n_test_samples, 2);
    }

    #[test]
    fn empty_test_set_is_an_error() {
        let d = dataset(vec![vec![1.0]]);
        let empty = d.subset(&[]);
        assert_eq!(naive_baseline(&empty).unwrap_err(), Error::EmptyTestSet);
    }

    #[test]
    fn baseline_uses_last_observation() {
        let d = dataset(vec![vec![2.0, 3.0]]);
        let e = naive_baseline(&d).unwrap();
        assert_eq!(e.per_step_mse, vec![1.0, 4.0]);
    }

    fn wave_panel(rows: usize) -> Panel {
        let a: Vec<f64> = (0..rows).map(|t| 100.0 + 10.0 * (t as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..rows).map(|t| 50.0 + 5.0 * (t as f64 * 0.3 + 1.0).cos()).collect();
        Panel::new(business_days(rows), vec!["a".into(), "b".into()], vec![a, b], PanelKind::Price).unwrap()
    }

    #[test]
    fn one_cell_grid_shape_and_determinism() {
        let panel = wave_panel(80);
        let opts = GridOptions {
            epochs: 3,
            horizon: 3,
            kinds: vec![
                ModelKind::Mlp { widths: vec![8] },
                ModelKind::Cnn1d {
                    filters: 4,
                    kernel: 3,
                    dense: 8,
                },
                ModelKind::Lstm { cells: 4 },
            ],
            ..GridOptions::new("a")
        };
        let grid = [GridCell {
            feature_set: FeatureSet::WithTarget,
            lookback: 5,
        }];
        let r = run_experiment_grid(&panel, &grid, &opts).unwrap();
        assert_eq!(r.rows.len(), 3 * 3);
        assert_eq!(r.baseline_rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.mae <= row.mse.sqrt() + 1e-12));
        assert_eq!(r, run_experiment_grid(&panel, &grid, &opts).unwrap());
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("feature_set,lookback,model,step,mse,mae\nwith_target,5,MLP,1,"));
        assert!(run_experiment_grid(&panel, &[], &opts).is_err());
    }
}
