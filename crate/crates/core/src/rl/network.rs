//! The Q network: an optional two-layer state embedding followed by a
//! three-layer prediction head, with hand-written backpropagation.
//!
//! ```text
//! φ(s)  = relu(W2 · relu(W1 · s + b1) + b2)          (embedding, 2 → 16 → 16)
//! x     = [φ(s); a]                                  (18)
//! Q     = W5 · relu(W4 · relu(W3 · x + b3) + b4) + b5 (18 → 16 → 32 → 1)
//! ```
//!
//! Without the embedding the head reads `[s; a]` directly (4 inputs).

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const STATE_DIM: usize = 2;
pub const ACTION_DIM: usize = 2;
pub const EMBED_WIDTHS: [usize; 2] = [16, 16];
pub const HEAD_WIDTHS: [usize; 3] = [16, 32, 1];

/// Dense affine layer; `weights` is row-major `rows x cols` (out x in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Linear {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    /// Uniform in `±sqrt(1 / fan_in)` for weights and biases.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let bound = (1.0 / cols as f64).sqrt();
        let mut draw =
            |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-bound..=bound)).collect() };
        let weights = draw(rows * cols);
        let bias = draw(rows);
        Linear {
            rows,
            cols,
            weights,
            bias,
        }
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            out.push(dot + self.bias[r]);
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    /// Embedding layers first (zero or two), then the three head layers.
    layers: Vec<Linear>,
    embed: bool,
}

/// Activations kept from a forward pass for backpropagation. `inputs[l]` is
/// the input of layer `l`; `pre[l]` its pre-activation output.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl QNetwork {
    pub fn new<R: Rng>(embed: bool, rng: &mut R) -> Self {
        let layers = Self::shapes(embed)
            .into_iter()
            .map(|(r, c)| Linear::uniform(r, c, rng))
            .collect();
        QNetwork { layers, embed }
    }

    pub fn zeros(embed: bool) -> Self {
        let layers = Self::shapes(embed)
            .into_iter()
            .map(|(r, c)| Linear::zeros(r, c))
            .collect();
        QNetwork { layers, embed }
    }

    /// `(rows, cols)` of every layer for the given variant.
    pub fn shapes(embed: bool) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(5);
        let head_in = if embed {
            shapes.push((EMBED_WIDTHS[0], STATE_DIM));
            shapes.push((EMBED_WIDTHS[1], EMBED_WIDTHS[0]));
            EMBED_WIDTHS[1] + ACTION_DIM
        } else {
            STATE_DIM + ACTION_DIM
        };
        shapes.push((HEAD_WIDTHS[0], head_in));
        shapes.push((HEAD_WIDTHS[1], HEAD_WIDTHS[0]));
        shapes.push((HEAD_WIDTHS[2], HEAD_WIDTHS[1]));
        shapes
    }

    pub fn from_layers(embed: bool, layers: Vec<Linear>) -> Option<Self> {
        let shapes = Self::shapes(embed);
        let ok = layers.len() == shapes.len()
            && layers.iter().zip(&shapes).all(|(l, &(r, c))| {
                l.rows == r && l.cols == c && l.weights.len() == r * c && l.bias.len() == r
            });
        ok.then_some(QNetwork { layers, embed })
    }

    pub fn has_embedding(&self) -> bool {
        self.embed
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    pub fn head_input_dim(&self) -> usize {
        self.layers[self.embed_len()].cols
    }

    fn embed_len(&self) -> usize {
        if self.embed {
            2
        } else {
            0
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Linear::num_params).sum()
    }

    /// Embedded state (or the raw state without an embedding).
    pub fn embed_state(&self, state: &[f64; STATE_DIM]) -> Vec<f64> {
        let mut x = state.to_vec();
        let mut buf = Vec::new();
        for layer in &self.layers[..self.embed_len()] {
            layer.forward_into(&x, &mut buf);
            relu(&mut buf);
            std::mem::swap(&mut x, &mut buf);
        }
        x
    }

    /// Head output for an already embedded state.
    pub fn head(&self, embedded: &[f64], action: &[f64; ACTION_DIM]) -> f64 {
        let mut x = Vec::with_capacity(embedded.len() + ACTION_DIM);
        x.extend_from_slice(embedded);
        x.extend_from_slice(action);
        let mut buf = Vec::new();
        let head = &self.layers[self.embed_len()..];
        for (i, layer) in head.iter().enumerate() {
            layer.forward_into(&x, &mut buf);
            if i + 1 < head.len() {
                relu(&mut buf);
            }
            std::mem::swap(&mut x, &mut buf);
        }
        x[0]
    }

    pub fn forward(&self, state: &[f64; STATE_DIM], action: &[f64; ACTION_DIM]) -> f64 {
        self.head(&self.embed_state(state), action)
    }

    fn forward_cached(
        &self,
        state: &[f64; STATE_DIM],
        action: &[f64; ACTION_DIM],
        cache: &mut ForwardCache,
    ) -> f64 {
        cache.inputs.clear();
        cache.pre.clear();
        let last = self.layers.len() - 1;
        let mut x = state.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            if l == self.embed_len() {
                x.extend_from_slice(action);
            }
            let mut z = Vec::with_capacity(layer.rows);
            layer.forward_into(&x, &mut z);
            cache.inputs.push(std::mem::take(&mut x));
            x = z.clone();
            if l != last {
                relu(&mut x);
            }
            cache.pre.push(z);
        }
        x[0]
    }

    /// Accumulates `d_out * ∂Q/∂θ` into `grads`.
    fn backward(&self, cache: &ForwardCache, d_out: f64, grads: &mut [Linear]) {
        let last = self.layers.len() - 1;
        let mut delta = vec![d_out];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l != last {
                for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &cache.inputs[l];
            let g = &mut grads[l];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[r] += d;
                let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                for (gw, &x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let mut next = vec![0.0; layer.cols];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            // the head's first layer also consumed the action; only the
            // embedding part propagates further
            if l == self.embed_len() {
                next.truncate(layer.cols - ACTION_DIM);
            }
            delta = next;
        }
    }

    /// Mean squared error over `batch` of `(state, action, target)` and its
    /// gradient with respect to every parameter. Targets are constants.
    pub fn loss_and_gradient(&self, batch: &[Sample]) -> (f64, Vec<Linear>) {
        let mut grads: Vec<Linear> = self
            .layers
            .iter()
            .map(|l| Linear::zeros(l.rows, l.cols))
            .collect();
        let mut cache = ForwardCache::default();
        let b = batch.len() as f64;
        let mut loss = 0.0;
        for s in batch {
            let q = self.forward_cached(&s.state, &s.action, &mut cache);
            let err = s.target - q;
            loss += err * err;
            self.backward(&cache, -2.0 * err / b, &mut grads);
        }
        (loss / b, grads)
    }

    pub fn loss(&self, batch: &[Sample]) -> f64 {
        let b = batch.len() as f64;
        batch
            .iter()
            .map(|s| {
                let e = s.target - self.forward(&s.state, &s.action);
                e * e
            })
            .sum::<f64>()
            / b
    }

    /// All parameters in layer order, weights before biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: [f64; STATE_DIM],
    pub action: [f64; ACTION_DIM],
    pub target: f64,
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Flattens gradients in the same order as [`QNetwork::params`].
pub fn flatten(grads: &[Linear]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_final_bias() {
        let mut net = QNetwork::zeros(true);
        assert_eq!(net.forward(&[0.3, 0.7], &[0.1, 0.9]), 0.0);
        net.layers_mut().last_mut().unwrap().bias[0] = 0.3;
        assert_eq!(net.forward(&[0.3, 0.7], &[0.1, 0.9]), 0.3);
    }

    #[test]
    fn shapes_follow_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let full = QNetwork::new(true, &mut rng);
        assert_eq!(full.head_input_dim(), 18);
        assert_eq!(full.layers().len(), 5);
        let simple = QNetwork::new(false, &mut rng);
        assert_eq!(simple.head_input_dim(), 4);
        assert_eq!(simple.layers().len(), 3);
    }

    #[test]
    fn same_seed_same_weights() {
        let a = QNetwork::new(true, &mut ChaCha8Rng::seed_from_u64(9));
        let b = QNetwork::new(true, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let bound = (1.0f64 / 2.0).sqrt();
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= bound));
    }

    /// A tiny no-embedding network (4 → 16 → 32 → 1) where only a handful of
    /// weights are non-zero, propagated by hand.
    #[test]
    fn hand_propagated_forward() {
        let mut net = QNetwork::zeros(false);
        {
            let l = net.layers_mut();
            // hidden unit 0 = relu(0.5 s0 - 1.0 a1 + 0.1)
            l[0].weights[0] = 0.5;
            l[0].weights[3] = -1.0;
            l[0].bias[0] = 0.1;
            // hidden unit 1 = relu(2.0 s1 + 0.25 a0 - 0.3)
            l[0].weights[4 + 1] = 2.0;
            l[0].weights[4 + 2] = 0.25;
            l[0].bias[1] = -0.3;
            // second layer unit 0 = relu(1.5 h0 - 0.5 h1), unit 1 = relu(h1 + 0.2)
            l[1].weights[0] = 1.5;
            l[1].weights[1] = -0.5;
            l[1].weights[16 + 1] = 1.0;
            l[1].bias[1] = 0.2;
            // out = 0.7 u0 - 1.1 u1 + 0.05
            l[2].weights[0] = 0.7;
            l[2].weights[1] = -1.1;
            l[2].bias[0] = 0.05;
        }
        let (s, a) = ([0.4, 0.6], [0.8, 0.1]);
        let h0 = f64::max(0.0, 0.5 * 0.4 - 1.0 * 0.1 + 0.1);
        let h1 = f64::max(0.0, 2.0 * 0.6 + 0.25 * 0.8 - 0.3);
        let u0 = f64::max(0.0, 1.5 * h0 - 0.5 * h1);
        let u1 = f64::max(0.0, h1 + 0.2);
        let expected = 0.7 * u0 - 1.1 * u1 + 0.05;
        assert!((net.forward(&s, &a) - expected).abs() < 1e-12);
        assert!((expected - (-1.38)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for embed in [true, false] {
            let net = QNetwork::new(embed, &mut rng);
            let batch: Vec<Sample> = (0..4)
                .map(|_| Sample {
                    state: [rng.gen(), rng.gen()],
                    action: [rng.gen(), rng.gen()],
                    target: rng.gen_range(-1.0..1.0),
                })
                .collect();
            let (_, g) = net.loss_and_gradient(&batch);
            let analytic = flatten(&g);
            let eps = 1e-5;
            for (i, &a) in analytic.iter().enumerate() {
                let mut plus = net.clone();
                *plus.params_mut().nth(i).unwrap() += eps;
                let mut minus = net.clone();
                *minus.params_mut().nth(i).unwrap() -= eps;
                let numeric = (plus.loss(&batch) - minus.loss(&batch)) / (2.0 * eps);
                let scale = a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (a - numeric).abs() / scale < 1e-4,
                    "param {i}: {a} vs {numeric}"
                );
            }
        }
    }
}
