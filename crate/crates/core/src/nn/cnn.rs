use rand_chacha::ChaCha8Rng;

use super::dense::{init_uniform, relu_backward, relu_in_place};
use super::mlp::Mlp;

/// Valid 1-D convolution over time with ReLU, flattened into an MLP head.
///
/// Conv weights are `filters x kernel x features` row-major followed by
/// `filters` biases; the feature map is stored time-major (`t * filters + c`).
#[derive(Debug, Clone)]
pub(super) struct Cnn1d {
    lookback: usize,
    features: usize,
    filters: usize,
    kernel: usize,
    head: Mlp,
}

impl Cnn1d {
    pub fn new(lookback: usize, features: usize, filters: usize, kernel: usize, dense: usize, output: usize) -> Self {
        let conv_len = filters * kernel * features + filters;
        let steps = lookback - kernel + 1;
        Self {
            lookback,
            features,
            filters,
            kernel,
            head: Mlp::new(steps * filters, &[dense], output, conv_len),
        }
    }

    fn steps(&self) -> usize {
        self.lookback - self.kernel + 1
    }

    fn weights_len(&self) -> usize {
        self.filters * self.kernel * self.features
    }

    pub fn param_count(&self) -> usize {
        self.head.end()
    }

    pub fn init(&self, params: &mut [f64], rng: &mut ChaCha8Rng) {
        let nw = self.weights_len();
        init_uniform(&mut params[..nw], self.kernel * self.features, rng);
        params[nw..nw + self.filters].fill(0.0);
        self.head.init(params, rng);
    }

    fn feature_map(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let (f, k, c) = (self.features, self.kernel, self.filters);
        let nw = self.weights_len();
        let mut map = vec![0.0; self.steps() * c];
        for t in 0..self.steps() {
            let window = &x[t * f..(t + k) * f];
            for j in 0..c {
                let w = &params[j * k * f..(j + 1) * k * f];
                map[t * c + j] = params[nw + j] + w.iter().zip(window).map(|(a, v)| a * v).sum::<f64>();
            }
        }
        relu_in_place(&mut map);
        map
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.head.predict(params, &self.feature_map(params, x))
    }

    pub fn backprop<F: FnOnce(&[f64]) -> Vec<f64>>(
        &self,
        params: &[f64],
        x: &[f64],
        output_grad: F,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let (f, k, c) = (self.features, self.kernel, self.filters);
        let nw = self.weights_len();
        let map = self.feature_map(params, x);
        let mut dmap = vec![0.0; map.len()];
        let y = self.head.backprop(params, &map, output_grad, grad, Some(&mut dmap));
        relu_backward(&map, &mut dmap);
        for t in 0..self.steps() {
            let window = &x[t * f..(t + k) * f];
            for j in 0..c {
                let d = dmap[t * c + j];
                if d == 0.0 {
                    continue;
                }
                grad[nw + j] += d;
                for (g, v) in grad[j * k * f..(j + 1) * k * f].iter_mut().zip(window) {
                    *g += d * v;
                }
            }
        }
        y
    }
}
