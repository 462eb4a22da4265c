//! Sliding-window supervised datasets for direct multi-step forecasting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;

/// Per-column min/max scaling to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits on the given columns; a constant column gets unit range.
    pub fn fit(columns: &[&[f64]]) -> Self {
        let mut mins = Vec::with_capacity(columns.len());
        let mut maxs = Vec::with_capacity(columns.len());
        for col in columns {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            mins.push(lo);
            maxs.push(hi);
        }
        Self { mins, maxs }
    }

    fn range(&self, j: usize) -> f64 {
        let r = self.maxs[j] - self.mins[j];
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn transform(&self, j: usize, v: f64) -> f64 {
        (v - self.mins[j]) / self.range(j)
    }

    pub fn inverse(&self, j: usize, v: f64) -> f64 {
        v * self.range(j) + self.mins[j]
    }
}

/// Supervised windows cut from a panel.
///
/// Inputs and targets are stored in raw units; scaling happens on access so
/// the stored values always reproduce the source series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    /// samples × lookback × features, row-major.
    inputs: Vec<f64>,
    /// samples × horizon, row-major.
    targets: Vec<f64>,
    /// Target value at the last input step of each sample (naive forecast anchor).
    last_observed: Vec<f64>,
    /// Panel row of the first input step of each sample.
    origins: Vec<usize>,
    pub lookback: usize,
    pub horizon: usize,
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Scaler over the features.
    pub feature_scaler: MinMaxScaler,
    /// Scaler over the target column.
    pub target_scaler: MinMaxScaler,
    /// Rows of the source panel used to fit the scalers.
    pub train_rows: usize,
}

/// Builds every window of `lookback` inputs followed by `horizon` targets.
///
/// With `include_target_as_feature = false` the target column appears only
/// in the targets. Scalers see the first `train_rows` rows only.
pub fn make_windows(
    panel: &Panel,
    target: &str,
    lookback: usize,
    horizon: usize,
    include_target_as_feature: bool,
    train_rows: usize,
) -> Result<WindowedDataset> {
    let rows = panel.rows();
    if lookback == 0 || horizon == 0 || lookback + horizon > rows {
        return Err(Error::WindowTooLarge {
            lookback,
            horizon,
            rows,
        });
    }
    if train_rows == 0 || train_rows > rows {
        return Err(Error::DegenerateSplit {
            rows,
            fraction: train_rows as f64 / rows as f64,
        });
    }
    let target_idx = panel
        .index_of(target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    let feature_idx: Vec<usize> = (0..panel.cols())
        .filter(|&j| include_target_as_feature || j != target_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::InvalidConfig("no feature columns left".into()));
    }
    let feature_names = feature_idx.iter().map(|&j| panel.names()[j].clone()).collect();
    let feature_cols: Vec<&[f64]> = feature_idx.iter().map(|&j| &panel.column(j)[..train_rows]).collect();
    let feature_scaler = MinMaxScaler::fit(&feature_cols);
    let target_col = panel.column(target_idx);
    let target_scaler = MinMaxScaler::fit(&[&target_col[..train_rows]]);

    let samples = rows - lookback - horizon + 1;
    let nf = feature_idx.len();
    let mut inputs = Vec::with_capacity(samples * lookback * nf);
    let mut targets = Vec::with_capacity(samples * horizon);
    let mut last_observed = Vec::with_capacity(samples);
    for s in 0..samples {
        for t in s..s + lookback {
            for &j in &feature_idx {
                inputs.push(panel.value(t, j));
            }
        }
        targets.extend_from_slice(&target_col[s + lookback..s + lookback + horizon]);
        last_observed.push(target_col[s + lookback - 1]);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        last_observed,
        origins: (0..samples).collect(),
        lookback,
        horizon,
        feature_names,
        target_name: target.to_string(),
        feature_scaler,
        target_scaler,
        train_rows,
    })
}

impl WindowedDataset {
    /// Dataset from explicit windows, each input `lookback x features`
    /// row-major. Scalers are fitted on every sample; the naive anchor is
    /// the last input step of the first feature.
    pub fn from_samples(
        lookback: usize,
        feature_names: Vec<String>,
        target_name: &str,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> Result<Self> {
        let nf = feature_names.len();
        let horizon = targets.first().map_or(0, Vec::len);
        if inputs.is_empty() || inputs.len() != targets.len() || nf == 0 || lookback == 0 || horizon == 0 {
            return Err(Error::InvalidConfig("empty or mismatched windows".into()));
        }
        if inputs.iter().any(|x| x.len() != lookback * nf) || targets.iter().any(|y| y.len() != horizon) {
            return Err(Error::DimensionMismatch("window lengths disagree".into()));
        }
        let feature_cols: Vec<Vec<f64>> = (0..nf)
            .map(|j| inputs.iter().flat_map(|x| x.iter().skip(j).step_by(nf).copied()).collect())
            .collect();
        let refs: Vec<&[f64]> = feature_cols.iter().map(Vec::as_slice).collect();
        let all_targets: Vec<f64> = targets.concat();
        Ok(WindowedDataset {
            inputs: inputs.concat(),
            targets: all_targets.clone(),
            last_observed: inputs.iter().map(|x| x[(lookback - 1) * nf]).collect(),
            origins: (0..inputs.len()).collect(),
            lookback,
            horizon,
            feature_names,
            target_name: target_name.to_string(),
            feature_scaler: MinMaxScaler::fit(&refs),
            target_scaler: MinMaxScaler::fit(&[&all_targets]),
            train_rows: inputs.len(),
        })
    }

    pub fn samples(&self) -> usize {
        self.origins.len()
    }

    pub fn features(&self) -> usize {
        self.feature_names.len()
    }

    /// Raw input window of sample `s` (lookback × features).
    pub fn raw_input(&self, s: usize) -> &[f64] {
        let w = self.lookback * self.features();
        &self.inputs[s * w..(s + 1) * w]
    }

    /// Raw target window of sample `s`.
    pub fn raw_target(&self, s: usize) -> &[f64] {
        &self.targets[s * self.horizon..(s + 1) * self.horizon]
    }

    pub fn last_observed(&self, s: usize) -> f64 {
        self.last_observed[s]
    }

    /// Panel row of the first input step of sample `s`.
    pub fn origin(&self, s: usize) -> usize {
        self.origins[s]
    }

    pub fn scaled_input(&self, s: usize) -> Vec<f64> {
        let nf = self.features();
        self.raw_input(s)
            .iter()
            .enumerate()
            .map(|(k, &v)| self.feature_scaler.transform(k % nf, v))
            .collect()
    }

    pub fn scaled_target(&self, s: usize) -> Vec<f64> {
        self.raw_target(s)
            .iter()
            .map(|&v| self.target_scaler.transform(0, v))
            .collect()
    }

    pub fn unscale_target(&self, v: f64) -> f64 {
        self.target_scaler.inverse(0, v)
    }

    /// Copy restricted to the given samples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> WindowedDataset {
        let w = self.lookback * self.features();
        let mut out = WindowedDataset {
            inputs: Vec::with_capacity(indices.len() * w),
            targets: Vec::with_capacity(indices.len() * self.horizon),
            last_observed: Vec::with_capacity(indices.len()),
            origins: Vec::with_capacity(indices.len()),
            ..self.clone_meta()
        };
        for &s in indices {
            out.inputs.extend_from_slice(self.raw_input(s));
            out.targets.extend_from_slice(self.raw_target(s));
            out.last_observed.push(self.last_observed[s]);
            out.origins.push(self.origins[s]);
        }
        out
    }

    fn clone_meta(&self) -> WindowedDataset {
        WindowedDataset {
            inputs: Vec::new(),
            targets: Vec::new(),
            last_observed: Vec::new(),
            origins: Vec::new(),
            lookback: self.lookback,
            horizon: self.horizon,
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            feature_scaler: self.feature_scaler.clone(),
            target_scaler: self.target_scaler.clone(),
            train_rows: self.train_rows,
        }
    }

    /// Samples whose whole target window lies inside the training rows.
    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.samples())
            .filter(|&s| self.origins[s] + self.lookback + self.horizon <= self.train_rows)
            .collect()
    }

    /// Samples whose target window starts at or after the first test row.
    pub fn test_indices(&self) -> Vec<usize> {
        (0..self.samples())
            .filter(|&s| self.origins[s] + self.lookback >= self.train_rows)
            .collect()
    }

    /// `(train, test)` portions; windows straddling the boundary are dropped.
    pub fn split(&self) -> (WindowedDataset, WindowedDataset) {
        (self.subset(&self.train_indices()), self.subset(&self.test_indices()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelKind;
    use chrono::NaiveDate;

    fn ramp_panel(rows: usize) -> Panel {
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let dates = (0..rows).map(|i| start + chrono::Days::new(i as u64)).collect();
        let a: Vec<f64> = (0..rows).map(|i| 100.0 + i as f64).collect();
        let b: Vec<f64> = (0..rows).map(|i| 50.0 + ((i * 7) % 5) as f64).collect();
        let c: Vec<f64> = (0..rows).map(|i| 10.0 + (i as f64).sqrt()).collect();
        Panel::new(
            dates,
            vec!["A".into(), "B".into(), "C".into()],
            vec![a, b, c],
            PanelKind::Price,
        )
        .unwrap()
    }

    #[test]
    fn sample_counts() {
        let p = ramp_panel(20);
        let ds = make_windows(&p, "A", 10, 5, true, 16).unwrap();
        assert_eq!(ds.samples(), 6);

        let p3 = ramp_panel(3);
        let ds = make_windows(&p3, "A", 1, 1, true, 2).unwrap();
        assert_eq!(ds.samples(), 2);
        assert_eq!(ds.raw_input(1).len(), 3);

        let p10 = ramp_panel(10);
        assert!(matches!(
            make_windows(&p10, "A", 10, 5, true, 8),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn target_excluded_from_features() {
        let p = ramp_panel(30);
        let ds = make_windows(&p, "B", 4, 2, false, 24).unwrap();
        assert_eq!(ds.feature_names, vec!["A".to_string(), "C".to_string()]);
        // first sample, step 0: A then C
        assert_eq!(ds.raw_input(0)[..2], [100.0, 10.0]);
    }

    #[test]
    fn inputs_precede_targets() {
        let p = ramp_panel(40);
        let ds = make_windows(&p, "A", 5, 3, true, 32).unwrap();
        for s in 0..ds.samples() {
            let last_input = ds.raw_input(s)[(ds.lookback - 1) * ds.features()];
            assert!(ds.raw_target(s).iter().all(|&t| t > last_input));
            assert_eq!(ds.last_observed(s), last_input);
        }
    }

    #[test]
    fn windows_reconstruct_series() {
        let p = ramp_panel(25);
        let ds = make_windows(&p, "C", 3, 4, true, 20).unwrap();
        let mut rebuilt: Vec<f64> = ds.raw_input(0).chunks(ds.features()).map(|r| r[2]).collect();
        for s in 0..ds.samples() {
            rebuilt.push(ds.raw_target(s)[0]);
        }
        rebuilt.extend_from_slice(&ds.raw_target(ds.samples() - 1)[1..]);
        assert_eq!(rebuilt, p.column(2));
    }

    #[test]
    fn scaler_uses_training_rows_only() {
        let p = ramp_panel(30);
        let ds = make_windows(&p, "A", 3, 2, true, 10).unwrap();
        assert_eq!(ds.feature_scaler.maxs[0], 109.0);
        assert_eq!(ds.target_scaler.mins[0], 100.0);
        for row in 0..10 {
            for j in 0..3 {
                let v = p.value(row, j);
                let back = ds.feature_scaler.inverse(j, ds.feature_scaler.transform(j, v));
                assert!((back - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn split_has_no_leakage() {
        let p = ramp_panel(50);
        let ds = make_windows(&p, "A", 5, 3, true, 40).unwrap();
        let (train, test) = ds.split();
        for s in 0..train.samples() {
            assert!(train.origin(s) + 5 + 3 <= 40);
        }
        for s in 0..test.samples() {
            assert!(test.origin(s) + 5 >= 40);
        }
        assert_eq!(train.samples() + test.samples(), ds.samples() - 2);
    }
}
