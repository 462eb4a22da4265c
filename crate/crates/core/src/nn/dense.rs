use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fully connected layer stored at `offset` in a flat parameter vector:
/// `output x input` weights row-major, then `output` biases.
#[derive(Debug, Clone, Copy)]
pub(super) struct Dense {
    pub input: usize,
    pub output: usize,
    pub offset: usize,
}

impl Dense {
    pub fn new(input: usize, output: usize, offset: usize) -> Self {
        Self { input, output, offset }
    }

    pub fn len(&self) -> usize {
        self.output * self.input + self.output
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }

    /// Weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero biases.
    pub fn init(&self, params: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng) {
        init_uniform(&mut params[self.offset..self.offset + self.output * self.input], fan_in, rng);
        params[self.offset + self.output * self.input..self.end()].fill(0.0);
    }

    /// `y = W x + b`.
    pub fn forward(&self, params: &[f64], x: &[f64], y: &mut [f64]) {
        let w = &params[self.offset..self.offset + self.output * self.input];
        let b = &params[self.offset + self.output * self.input..self.end()];
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * self.input..(o + 1) * self.input];
            *yo = b[o] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        }
    }

    /// Accumulates `dW += dy x'`, `db += dy` and, when given, sets `dx = W' dy`.
    pub fn backward(&self, params: &[f64], x: &[f64], dy: &[f64], grad: &mut [f64], dx: Option<&mut [f64]>) {
        let nw = self.output * self.input;
        {
            let (gw, gb) = grad[self.offset..self.end()].split_at_mut(nw);
            for (o, &d) in dy.iter().enumerate() {
                gb[o] += d;
                if d != 0.0 {
                    for (g, v) in gw[o * self.input..(o + 1) * self.input].iter_mut().zip(x) {
                        *g += d * v;
                    }
                }
            }
        }
        if let Some(dx) = dx {
            let w = &params[self.offset..self.offset + nw];
            dx.fill(0.0);
            for (o, &d) in dy.iter().enumerate() {
                if d != 0.0 {
                    for (g, a) in dx.iter_mut().zip(&w[o * self.input..(o + 1) * self.input]) {
                        *g += d * a;
                    }
                }
            }
        }
    }
}

pub(super) fn init_uniform(weights: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for w in weights {
        *w = rng.random_range(-bound..bound);
    }
}

pub(super) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes `grad` where the post-ReLU activation is not positive.
pub(super) fn relu_backward(activation: &[f64], grad: &mut [f64]) {
    for (g, a) in grad.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}
