use rand_chacha::ChaCha8Rng;

use super::dense::{relu_backward, relu_in_place, Dense};

/// Flattened window through ReLU hidden layers to a linear output.
#[derive(Debug, Clone)]
pub(super) struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// Parameters start at `offset` in the flat vector.
    pub fn new(input: usize, widths: &[usize], output: usize, offset: usize) -> Self {
        let mut layers = Vec::with_capacity(widths.len() + 1);
        let mut offset = offset;
        let mut fan_in = input;
        for &w in widths.iter().chain(std::iter::once(&output)) {
            let d = Dense::new(fan_in, w, offset);
            offset = d.end();
            fan_in = w;
            layers.push(d);
        }
        Self { layers }
    }

    pub fn end(&self) -> usize {
        self.layers.last().map_or(0, Dense::end)
    }

    pub fn init(&self, params: &mut [f64], rng: &mut ChaCha8Rng) {
        for d in &self.layers {
            d.init(params, d.input, rng);
        }
    }

    /// Activations of every layer, input first.
    fn activations(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (k, d) in self.layers.iter().enumerate() {
            let mut y = vec![0.0; d.output];
            d.forward(params, &acts[k], &mut y);
            if k < last {
                relu_in_place(&mut y);
            }
            acts.push(y);
        }
        acts
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.activations(params, x).pop().expect("output layer")
    }

    /// Returns the prediction and accumulates `dLoss/dparams`, with
    /// `output_grad` mapping the prediction to `dLoss/dy`. `input_grad`
    /// receives `dLoss/dx` when given.
    pub fn backprop<F: FnOnce(&[f64]) -> Vec<f64>>(
        &self,
        params: &[f64],
        x: &[f64],
        output_grad: F,
        grad: &mut [f64],
        input_grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let acts = self.activations(params, x);
        let y = acts.last().expect("output layer").clone();
        let mut delta = output_grad(&y);
        for k in (1..self.layers.len()).rev() {
            let d = &self.layers[k];
            let mut dx = vec![0.0; d.input];
            d.backward(params, &acts[k], &delta, grad, Some(&mut dx));
            relu_backward(&acts[k], &mut dx);
            delta = dx;
        }
        self.layers[0].backward(params, &acts[0], &delta, grad, input_grad);
        y
    }
}
