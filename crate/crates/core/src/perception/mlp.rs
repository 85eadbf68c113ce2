//! Dense ReLU network with a sigmoid output unit.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn uniform_init(inputs: usize, outputs: usize, gain: f64, rng: &mut impl Rng) -> Self {
        let bound = gain * (3.0 / inputs as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Parameter gradients laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Mlp {
    pub fn new(inputs: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut n = inputs;
        for &h in hidden {
            layers.push(Dense::uniform_init(n, h, std::f64::consts::SQRT_2, rng));
            n = h;
        }
        // small output weights keep the initial prediction near 0.5 everywhere
        layers.push(Dense::uniform_init(n, 1, 0.1, rng));
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.outputs)
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut z);
            if i < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut a, &mut z);
        }
        a[0]
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean squared error over `(x, y)` pairs and its gradient.
    pub fn loss_and_grad<'a>(
        &self,
        batch: impl IntoIterator<Item = (&'a [f64], f64)>,
    ) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let mut count = 0usize;
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        for (x, y) in batch {
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for (i, layer) in self.layers.iter().enumerate() {
                let (head, tail) = acts.split_at_mut(i + 1);
                layer.apply(&head[i], &mut tail[0]);
                if i < last {
                    tail[0].iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            let out = sigmoid(acts[last + 1][0]);
            let err = out - y;
            loss += err * err;
            count += 1;
            let mut delta = vec![2.0 * err * out * (1.0 - out)];
            for i in (0..=last).rev() {
                let layer = &self.layers[i];
                let input = &acts[i];
                for (o, d) in delta.iter().enumerate() {
                    grads.bias[i][o] += d;
                    let row = &mut grads.weights[i][o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(g, v)| *g += d * v);
                }
                if i > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (o, d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                    }
                    // ReLU derivative from the stored post-activation
                    prev.iter_mut().zip(input).for_each(|(p, a)| {
                        if *a <= 0.0 {
                            *p = 0.0
                        }
                    });
                    delta = prev;
                }
            }
        }
        if count > 0 {
            let inv = 1.0 / count as f64;
            loss *= inv;
            for g in grads.weights.iter_mut().chain(grads.bias.iter_mut()) {
                g.iter_mut().for_each(|v| *v *= inv);
            }
        }
        (loss, grads)
    }
}

/// RMSProp state.
#[derive(Debug, Clone)]
pub struct RmsProp {
    decay: f64,
    eps: f64,
    sq: Gradients,
}

impl RmsProp {
    pub fn new(net: &Mlp) -> Self {
        Self {
            decay: 0.9,
            eps: 1e-8,
            sq: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) {
        for (i, layer) in net.layers.iter_mut().enumerate() {
            for (params, g, s) in [
                (
                    &mut layer.weights,
                    &grads.weights[i],
                    &mut self.sq.weights[i],
                ),
                (&mut layer.bias, &grads.bias[i], &mut self.sq.bias[i]),
            ] {
                for ((p, g), s) in params.iter_mut().zip(g).zip(s.iter_mut()) {
                    *s = self.decay * *s + (1.0 - self.decay) * g * g;
                    *p -= lr * g / (s.sqrt() + self.eps);
                }
            }
        }
    }
}
