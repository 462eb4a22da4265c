use rand_chacha::ChaCha8Rng;

use super::dense::{init_uniform, Dense};

/// Single-layer LSTM; the last hidden state feeds a linear output layer.
///
/// Gate weights are `4 cells x (features + cells)` row-major in the order
/// input, forget, cell, output, acting on `[x_t, h_{t-1}]`, followed by
/// `4 cells` biases.
#[derive(Debug, Clone)]
pub(super) struct Lstm {
    lookback: usize,
    features: usize,
    cells: usize,
    head: Dense,
}

/// Per-step state kept for the backward pass.
struct Step {
    /// `[x_t, h_{t-1}]`.
    concat: Vec<f64>,
    /// Gate activations `[i, f, g, o]`.
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn new(lookback: usize, features: usize, cells: usize, output: usize) -> Self {
        let gate_len = 4 * cells * (features + cells) + 4 * cells;
        Self {
            lookback,
            features,
            cells,
            head: Dense::new(cells, output, gate_len),
        }
    }

    fn width(&self) -> usize {
        self.features + self.cells
    }

    fn gate_weights_len(&self) -> usize {
        4 * self.cells * self.width()
    }

    pub fn param_count(&self) -> usize {
        self.head.end()
    }

    pub fn init(&self, params: &mut [f64], rng: &mut ChaCha8Rng) {
        let nw = self.gate_weights_len();
        init_uniform(&mut params[..nw], self.width(), rng);
        params[nw..nw + 4 * self.cells].fill(0.0);
        self.head.init(params, self.cells, rng);
    }

    fn run(&self, params: &[f64], x: &[f64], mut record: Option<&mut Vec<Step>>) -> Vec<f64> {
        let (f, h, width) = (self.features, self.cells, self.width());
        let nw = self.gate_weights_len();
        let mut hidden = vec![0.0; h];
        let mut cell = vec![0.0; h];
        let mut concat = vec![0.0; width];
        let mut gates = vec![0.0; 4 * h];
        for t in 0..self.lookback {
            concat[..f].copy_from_slice(&x[t * f..(t + 1) * f]);
            concat[f..].copy_from_slice(&hidden);
            for (r, a) in gates.iter_mut().enumerate() {
                let row = &params[r * width..(r + 1) * width];
                let pre = params[nw + r] + row.iter().zip(&concat).map(|(w, v)| w * v).sum::<f64>();
                *a = if (2 * h..3 * h).contains(&r) { pre.tanh() } else { sigmoid(pre) };
            }
            let c_prev = cell.clone();
            let mut tanh_c = vec![0.0; h];
            for j in 0..h {
                cell[j] = gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j];
                tanh_c[j] = cell[j].tanh();
                hidden[j] = gates[3 * h + j] * tanh_c[j];
            }
            if let Some(steps) = record.as_deref_mut() {
                steps.push(Step {
                    concat: concat.clone(),
                    gates: gates.clone(),
                    c_prev,
                    tanh_c,
                });
            }
        }
        hidden
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let hidden = self.run(params, x, None);
        let mut y = vec![0.0; self.head.output];
        self.head.forward(params, &hidden, &mut y);
        y
    }

    pub fn backprop<F: FnOnce(&[f64]) -> Vec<f64>>(
        &self,
        params: &[f64],
        x: &[f64],
        output_grad: F,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let (f, h, width) = (self.features, self.cells, self.width());
        let nw = self.gate_weights_len();
        let mut steps = Vec::with_capacity(self.lookback);
        let hidden = self.run(params, x, Some(&mut steps));
        let mut y = vec![0.0; self.head.output];
        self.head.forward(params, &hidden, &mut y);
        let dy = output_grad(&y);

        let mut dh = vec![0.0; h];
        self.head.backward(params, &hidden, &dy, grad, Some(&mut dh));
        let mut dc = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        let mut dconcat = vec![0.0; width];
        for step in steps.iter().rev() {
            let g = &step.gates;
            for j in 0..h {
                let (i_g, f_g, c_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = step.tanh_c[j];
                dc[j] += dh[j] * o_g * (1.0 - tc * tc);
                da[j] = dc[j] * c_g * i_g * (1.0 - i_g);
                da[h + j] = dc[j] * step.c_prev[j] * f_g * (1.0 - f_g);
                da[2 * h + j] = dc[j] * i_g * (1.0 - c_g * c_g);
                da[3 * h + j] = dh[j] * tc * o_g * (1.0 - o_g);
                dc[j] *= f_g;
            }
            dconcat.fill(0.0);
            for (r, &d) in da.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad[nw + r] += d;
                let row = &params[r * width..(r + 1) * width];
                for ((gw, dz), (w, v)) in grad[r * width..(r + 1) * width]
                    .iter_mut()
                    .zip(dconcat.iter_mut())
                    .zip(row.iter().zip(&step.concat))
                {
                    *gw += d * v;
                    *dz += d * w;
                }
            }
            dh.copy_from_slice(&dconcat[f..]);
        }
        y
    }
}
