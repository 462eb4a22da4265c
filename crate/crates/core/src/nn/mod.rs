//! From-scratch MLP, 1-D CNN and LSTM direct multi-step forecasters.
//!
//! Every network maps a scaled `lookback x features` window (time-major) to
//! `horizon` scaled target values, trains in f64 with Adam on mean squared
//! error, and is fully determined by its seed.

mod adam;
mod cnn;
mod dense;
pub mod forecast;
mod lstm;
mod mlp;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{fd_gradient, FD_EPS};
use crate::window::{MinMaxScaler, WindowedDataset};

pub use forecast::{
    evaluate, evaluate_predictions, naive_baseline, run_experiment_grid, ExperimentReport, FeatureSet,
    ForecastEvaluation, GridCell, GridOptions, ReportRow,
};

use adam::Adam;
use cnn::Cnn1d;
use lstm::Lstm;
use mlp::Mlp;

/// Architecture and its size hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    /// Flattened window through ReLU layers of the given widths.
    Mlp { widths: Vec<usize> },
    /// Valid convolution over time, ReLU, then one ReLU dense layer.
    Cnn1d { filters: usize, kernel: usize, dense: usize },
    /// One LSTM layer; the last hidden state feeds the output layer.
    Lstm { cells: usize },
}

impl ModelKind {
    pub fn mlp() -> Self {
        ModelKind::Mlp { widths: vec![64, 64] }
    }

    pub fn cnn1d() -> Self {
        ModelKind::Cnn1d {
            filters: 32,
            kernel: 3,
            dense: 64,
        }
    }

    pub fn lstm() -> Self {
        ModelKind::Lstm { cells: 64 }
    }

    /// The three default architectures.
    pub fn defaults() -> Vec<Self> {
        vec![Self::mlp(), Self::cnn1d(), Self::lstm()]
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Mlp { .. } => "MLP",
            ModelKind::Cnn1d { .. } => "CNN",
            ModelKind::Lstm { .. } => "LSTM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub lookback: usize,
    pub feature_count: usize,
    pub horizon: usize,
    /// Fixes weight initialization and mini-batch order.
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl ModelConfig {
    /// Adam at `1e-3`, 100 epochs, batches of 32.
    pub fn new(kind: ModelKind, lookback: usize, feature_count: usize, horizon: usize, seed: u64) -> Self {
        Self {
            kind,
            lookback,
            feature_count,
            horizon,
            seed,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
        }
    }

    /// Checks sizes; a CNN kernel longer than the lookback becomes 1.
    fn validated(mut self) -> Result<Self> {
        if self.lookback == 0 || self.feature_count == 0 || self.horizon == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "lookback, feature_count, horizon and batch_size must be >= 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be finite and >= 0".into()));
        }
        let sizes_ok = match &mut self.kind {
            ModelKind::Mlp { widths } => widths.iter().all(|&w| w > 0),
            ModelKind::Cnn1d { filters, kernel, dense } => {
                if *kernel > self.lookback {
                    *kernel = 1;
                }
                *filters > 0 && *kernel > 0 && *dense > 0
            }
            ModelKind::Lstm { cells } => *cells > 0,
        };
        if !sizes_ok {
            return Err(Error::InvalidConfig(format!("zero-sized layer in {:?}", self.kind)));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone)]
enum Network {
    Mlp(Mlp),
    Cnn(Cnn1d),
    Lstm(Lstm),
}

impl Network {
    fn new(c: &ModelConfig) -> Self {
        match &c.kind {
            ModelKind::Mlp { widths } => Network::Mlp(Mlp::new(c.lookback * c.feature_count, widths, c.horizon, 0)),
            ModelKind::Cnn1d { filters, kernel, dense } => Network::Cnn(Cnn1d::new(
                c.lookback,
                c.feature_count,
                *filters,
                *kernel,
                *dense,
                c.horizon,
            )),
            ModelKind::Lstm { cells } => Network::Lstm(Lstm::new(c.lookback, c.feature_count, *cells, c.horizon)),
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Network::Mlp(m) => m.end(),
            Network::Cnn(m) => m.param_count(),
            Network::Lstm(m) => m.param_count(),
        }
    }

    fn init(&self, params: &mut [f64], rng: &mut ChaCha8Rng) {
        match self {
            Network::Mlp(m) => m.init(params, rng),
            Network::Cnn(m) => m.init(params, rng),
            Network::Lstm(m) => m.init(params, rng),
        }
    }

    fn predict(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            Network::Mlp(m) => m.predict(params, x),
            Network::Cnn(m) => m.predict(params, x),
            Network::Lstm(m) => m.predict(params, x),
        }
    }

    /// Squared-error loss `mean_h (yhat_h - y_h)^2` of one sample;
    /// accumulates its gradient into `grad`.
    fn loss_and_grad(&self, params: &[f64], x: &[f64], target: &[f64], grad: &mut [f64]) -> f64 {
        let mut loss = 0.0;
        let output_grad = |y: &[f64]| {
            let h = y.len() as f64;
            loss = y.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / h;
            y.iter().zip(target).map(|(a, b)| 2.0 * (a - b) / h).collect()
        };
        match self {
            Network::Mlp(m) => m.backprop(params, x, output_grad, grad, None),
            Network::Cnn(m) => m.backprop(params, x, output_grad, grad),
            Network::Lstm(m) => m.backprop(params, x, output_grad, grad),
        };
        loss
    }

    fn loss(&self, params: &[f64], x: &[f64], target: &[f64]) -> f64 {
        let y = self.predict(params, x);
        y.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
    }
}

/// A network with its weights, training trace and the dataset scalers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// Effective configuration (after any kernel fallback).
    pub config: ModelConfig,
    pub weights: Vec<f64>,
    /// Mean scaled training loss per epoch.
    pub training_loss_history: Vec<f64>,
    pub feature_scaler: Option<MinMaxScaler>,
    pub target_scaler: Option<MinMaxScaler>,
}

impl TrainedModel {
    fn network(&self) -> Network {
        Network::new(&self.config)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    /// Scaled prediction for one scaled input window.
    pub fn predict_scaled(&self, input: &[f64]) -> Vec<f64> {
        self.network().predict(&self.weights, input)
    }

    /// Per-sample loss on scaled data.
    pub fn loss(&self, input: &[f64], target: &[f64]) -> f64 {
        self.network().loss(&self.weights, input, target)
    }
}

/// Deterministic initialization from `config.seed`: weights
/// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero biases.
pub fn build_model(config: ModelConfig) -> Result<TrainedModel> {
    let config = config.validated()?;
    let net = Network::new(&config);
    let mut weights = vec![0.0; net.param_count()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    net.init(&mut weights, &mut rng);
    Ok(TrainedModel {
        config,
        weights,
        training_loss_history: Vec::new(),
        feature_scaler: None,
        target_scaler: None,
    })
}

fn check_shapes(config: &ModelConfig, data: &WindowedDataset) -> Result<()> {
    if data.lookback != config.lookback || data.features() != config.feature_count || data.horizon != config.horizon {
        return Err(Error::DimensionMismatch(format!(
            "model expects {}x{} -> {}, dataset has {}x{} -> {}",
            config.lookback,
            config.feature_count,
            config.horizon,
            data.lookback,
            data.features(),
            data.horizon
        )));
    }
    Ok(())
}

/// Adam on the mean squared error of scaled targets, with mini-batches in a
/// seeded shuffled order. `data` should be the training portion only.
pub fn train(model: TrainedModel, data: &WindowedDataset) -> Result<TrainedModel> {
    let config = model.config.clone();
    check_shapes(&config, data)?;
    let n = data.samples();
    if n == 0 {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let net = Network::new(&config);
    let inputs: Vec<Vec<f64>> = (0..n).map(|s| data.scaled_input(s)).collect();
    let targets: Vec<Vec<f64>> = (0..n).map(|s| data.scaled_target(s)).collect();
    let mut weights = model.weights;
    let mut grad = vec![0.0; weights.len()];
    let mut adam = Adam::new(weights.len(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sample_loss = vec![0.0; n];
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.fill(0.0);
            for &s in batch {
                sample_loss[s] = net.loss_and_grad(&weights, &inputs[s], &targets[s], &mut grad);
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut weights, &grad);
        }
        // summed in sample order so the trace does not depend on the shuffle
        let loss = sample_loss.iter().sum::<f64>() / n as f64;
        if !loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::DivergedLoss(epoch));
        }
        history.push(loss);
    }
    Ok(TrainedModel {
        config,
        weights,
        training_loss_history: history,
        feature_scaler: Some(data.feature_scaler.clone()),
        target_scaler: Some(data.target_scaler.clone()),
    })
}

/// Maximum over parameters of `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`
/// for the loss of one scaled sample, numeric by central differences.
pub fn gradient_check(model: &TrainedModel, input: &[f64], target: &[f64]) -> Result<f64> {
    let c = &model.config;
    if input.len() != c.lookback * c.feature_count || target.len() != c.horizon {
        return Err(Error::DimensionMismatch("sample does not match the model".into()));
    }
    let net = model.network();
    let mut analytic = vec![0.0; model.weights.len()];
    net.loss_and_grad(&model.weights, input, target, &mut analytic);
    let numeric = fd_gradient(|p| net.loss(p, input, target), &model.weights, FD_EPS)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small(kind: ModelKind, seed: u64) -> TrainedModel {
        build_model(ModelConfig::new(kind, 6, 3, 2, seed)).unwrap()
    }

    fn random_sample(seed: u64, len: usize, horizon: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = (0..horizon).map(|_| rng.random_range(0.0..1.0)).collect();
        (x, y)
    }

    #[test]
    fn parameter_counts() {
        let mlp = build_model(ModelConfig::new(ModelKind::mlp(), 10, 5, 5, 0)).unwrap();
        assert_eq!(mlp.param_count(), 7749);
        let lstm = build_model(ModelConfig::new(ModelKind::lstm(), 10, 5, 5, 0)).unwrap();
        assert_eq!(lstm.param_count(), 4 * (64 * (5 + 64) + 64) + 64 * 5 + 5);
        let cnn = build_model(ModelConfig::new(ModelKind::cnn1d(), 10, 5, 5, 0)).unwrap();
        assert_eq!(cnn.param_count(), 32 * 3 * 5 + 32 + 64 * 8 * 32 + 64 + 5 * 64 + 5);
    }

    #[test]
    fn same_seed_same_weights() {
        for kind in ModelKind::defaults() {
            let a = build_model(ModelConfig::new(kind.clone(), 10, 5, 5, 42)).unwrap();
            let b = build_model(ModelConfig::new(kind.clone(), 10, 5, 5, 42)).unwrap();
            let c = build_model(ModelConfig::new(kind, 10, 5, 5, 43)).unwrap();
            assert_eq!(a.weights, b.weights);
            assert_ne!(a.weights, c.weights);
        }
    }

    #[test]
    fn short_lookback_falls_back_to_unit_kernel() {
        let m = build_model(ModelConfig::new(ModelKind::cnn1d(), 1, 5, 5, 0)).unwrap();
        assert!(matches!(m.config.kind, ModelKind::Cnn1d { kernel: 1, .. }));
        assert!(matches!(
            build_model(ModelConfig::new(ModelKind::Lstm { cells: 0 }, 3, 1, 1, 0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let kinds = [
            ModelKind::Mlp { widths: vec![8, 8] },
            ModelKind::Cnn1d {
                filters: 4,
                kernel: 3,
                dense: 8,
            },
            ModelKind::Lstm { cells: 5 },
        ];
        for kind in kinds {
            for seed in 0..3 {
                let m = small(kind.clone(), seed);
                let (x, y) = random_sample(seed + 100, 18, 2);
                let err = gradient_check(&m, &x, &y).unwrap();
                assert!(err < 1e-4, "{kind:?} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn default_sized_gradients_match() {
        for kind in [ModelKind::mlp(), ModelKind::cnn1d()] {
            let m = build_model(ModelConfig::new(kind.clone(), 10, 5, 5, 7)).unwrap();
            let (x, y) = random_sample(8, 50, 5);
            let err = gradient_check(&m, &x, &y).unwrap();
            assert!(err < 1e-4, "{kind:?}: {err}");
        }
        // 18k LSTM parameters include gradients near 1e-9, where central
        // differences carry ~1e-12 roundoff; compare absolutely there
        let m = build_model(ModelConfig::new(ModelKind::lstm(), 10, 5, 5, 7)).unwrap();
        let (x, y) = random_sample(8, 50, 5);
        let net = m.network();
        let mut analytic = vec![0.0; m.weights.len()];
        net.loss_and_grad(&m.weights, &x, &y, &mut analytic);
        let numeric = fd_gradient(|p| net.loss(p, &x, &y), &m.weights, FD_EPS).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!((a - n).abs() < 1e-10, "{a} vs {n}");
            if a.abs() > 1e-6 {
                assert!((a - n).abs() / a.abs() < 1e-4);
            }
        }
    }

    fn linear_dataset(seed: u64) -> WindowedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let targets: Vec<Vec<f64>> = inputs.iter().map(|x| vec![x[3]]).collect();
        WindowedDataset::from_samples(4, vec!["x".into()], "x", &inputs, &targets).unwrap()
    }

    fn scaled_target_variance(d: &WindowedDataset) -> f64 {
        let ys: Vec<f64> = (0..d.samples()).map(|s| d.scaled_target(s)[0]).collect();
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let d = linear_dataset(1);
        let config = ModelConfig {
            learning_rate: 0.0,
            epochs: 5,
            batch_size: 3,
            ..ModelConfig::new(ModelKind::Lstm { cells: 4 }, 4, 1, 1, 2)
        };
        let m = train(build_model(config).unwrap(), &d).unwrap();
        assert_eq!(m.training_loss_history.len(), 5);
        assert!(m.training_loss_history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn equal_seeds_train_identically() {
        let d = linear_dataset(2);
        let config = ModelConfig {
            epochs: 10,
            batch_size: 3,
            ..ModelConfig::new(ModelKind::mlp(), 4, 1, 1, 5)
        };
        let a = train(build_model(config.clone()).unwrap(), &d).unwrap();
        let b = train(build_model(config).unwrap(), &d).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overfits_linear_target() {
        let d = linear_dataset(3);
        let var = scaled_target_variance(&d);
        for kind in ModelKind::defaults() {
            let config = ModelConfig {
                epochs: 200,
                learning_rate: 1e-2,
                batch_size: 8,
                ..ModelConfig::new(kind.clone(), 4, 1, 1, 9)
            };
            let m = train(build_model(config).unwrap(), &d).unwrap();
            let last = *m.training_loss_history.last().unwrap();
            assert!(last < 1e-3 * var, "{kind:?}: {last} vs {var}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let d = linear_dataset(4);
        let m = build_model(ModelConfig::new(ModelKind::mlp(), 5, 1, 1, 0)).unwrap();
        assert!(matches!(train(m, &d), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let d = linear_dataset(5);
        let config = ModelConfig {
            learning_rate: 1e300,
            epochs: 20,
            ..ModelConfig::new(ModelKind::Mlp { widths: vec![4] }, 4, 1, 1, 0)
        };
        assert!(matches!(train(build_model(config).unwrap(), &d), Err(Error::DivergedLoss(_))));
    }
}
