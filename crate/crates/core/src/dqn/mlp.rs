//! Fully connected Q-network with a hand-written backward pass.
//!
//! Hidden layers use ReLU, the output layer is linear, and weights start
//! from the He normal distribution (`N(0, 2 / fan_in)`) with zero biases.
//! Parameters live in flat row-major buffers, one per layer, which keeps
//! the forward and backward loops cache-friendly and makes checkpoints a
//! plain list of numbers.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("a network needs an input and an output layer, got sizes {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("layer sizes must be positive, got sizes {0:?}")]
    EmptyLayer(Vec<usize>),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("input has {got} features but the network expects {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// Multilayer perceptron mapping observations to one Q-value per action.
#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    /// Layer widths, input first.
    sizes: Vec<usize>,
    /// Per layer: `sizes[l + 1] x sizes[l]` weights, row-major.
    weights: Vec<Vec<f64>>,
    /// Per layer: one bias per output row.
    biases: Vec<Vec<f64>>,
}

/// Post-activation values of every layer from one forward pass;
/// `activations[0]` is the input and the last entry is the output.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has layers")
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &QNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// All entries in checkpoint order: per layer, weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), MlpError> {
    if sizes.len() < 2 {
        return Err(MlpError::TooFewLayers(sizes.to_vec()));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(MlpError::EmptyLayer(sizes.to_vec()));
    }
    Ok(())
}

impl QNet {
    /// He-initialized network. Weights are drawn layer by layer in row-major
    /// order, so a given `rng` always produces the same network.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Result<Self, MlpError> {
        check_sizes(sizes)?;
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let fan_in = sizes[l];
            let std = (2.0 / fan_in as f64).sqrt();
            let w: Vec<f64> = (0..sizes[l + 1] * fan_in)
                .map(|_| {
                    let n: f64 = rng.sample(StandardNormal);
                    n * std
                })
                .collect();
            weights.push(w);
            biases.push(vec![0.0; sizes[l + 1]]);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Zeroes the output layer's weights and biases, leaving hidden layers
    /// untouched. A fresh policy then scores every action identically, so
    /// its early estimates sit at the reward scale instead of the
    /// initialization scale.
    pub fn zero_output_layer(&mut self) {
        let last = self.weights.len() - 1;
        self.weights[last].fill(0.0);
        self.biases[last].fill(0.0);
    }

    /// All-zero network; useful as a fixed point for tests and baselines.
    pub fn zeroed(sizes: &[usize]) -> Result<Self, MlpError> {
        check_sizes(sizes)?;
        let weights = (0..sizes.len() - 1)
            .map(|l| vec![0.0; sizes[l + 1] * sizes[l]])
            .collect();
        let biases = (0..sizes.len() - 1).map(|l| vec![0.0; sizes[l + 1]]).collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated sizes")
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Every parameter in checkpoint order: per layer, row-major weights
    /// then biases.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    /// Overwrites every parameter from checkpoint order.
    pub fn set_flat_parameters(&mut self, params: &[f64]) -> Result<(), MlpError> {
        if params.len() != self.parameter_count() {
            return Err(MlpError::ParameterCount {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for v in w.iter_mut() {
                *v = *it.next().expect("length checked");
            }
            for v in b.iter_mut() {
                *v = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.sizes[0] {
            return Err(MlpError::InputWidth {
                expected: self.sizes[0],
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Q-values for one observation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            a = affine(w, b, &a, self.sizes[l], l < last);
        }
        Ok(a)
    }

    /// Forward pass that keeps every layer's activations for
    /// [`QNet::backward`].
    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardTrace, MlpError> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(x.to_vec());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let a = affine(w, b, &activations[l], self.sizes[l], l < last);
            activations.push(a);
        }
        Ok(ForwardTrace { activations })
    }

    /// Accumulates parameter gradients into `grads` given the loss gradient
    /// with respect to the network output. ReLU derivatives come from the
    /// cached post-activations (`a > 0`), so the trace must belong to this
    /// network's current parameters.
    pub fn backward(&self, trace: &ForwardTrace, dout: &[f64], grads: &mut Gradients) {
        debug_assert_eq!(dout.len(), self.output_dim());
        debug_assert_eq!(trace.activations.len(), self.sizes.len());
        let mut delta = dout.to_vec();
        for l in (0..self.weights.len()).rev() {
            let input = &trace.activations[l];
            let (rows, cols) = (self.sizes[l + 1], self.sizes[l]);
            let gw = &mut grads.weights[l];
            for r in 0..rows {
                let d = delta[r];
                if d != 0.0 {
                    let row = &mut gw[r * cols..(r + 1) * cols];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                grads.biases[l][r] += d;
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut prev = vec![0.0; cols];
                for r in 0..rows {
                    let d = delta[r];
                    if d != 0.0 {
                        let row = &w[r * cols..(r + 1) * cols];
                        for (p, wv) in prev.iter_mut().zip(row) {
                            *p += d * wv;
                        }
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Serializes the network as text: a `qnet` header with the layer
    /// sizes, then one parameter per line in checkpoint order.
    pub fn save_text(&self) -> String {
        let mut out = String::from("qnet");
        for s in &self.sizes {
            out.push(' ');
            out.push_str(&s.to_string());
        }
        out.push('\n');
        for p in self.flat_parameters() {
            out.push_str(&format!("{p:.17e}\n"));
        }
        out
    }

    /// Parses the [`QNet::save_text`] format.
    pub fn load_text(text: &str) -> Result<Self, MlpError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| MlpError::Checkpoint("empty input".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("qnet") {
            return Err(MlpError::Checkpoint(format!(
                "expected a qnet header, got {header:?}"
            )));
        }
        let sizes: Vec<usize> = parts
            .map(|p| {
                p.parse()
                    .map_err(|e| MlpError::Checkpoint(format!("bad layer size {p:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        let mut net = Self::zeroed(&sizes)?;
        let params: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse()
                    .map_err(|e| MlpError::Checkpoint(format!("bad parameter {l:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        net.set_flat_parameters(&params)?;
        Ok(net)
    }
}

/// `W a + b`, optionally through ReLU. `cols` is the input width.
fn affine(w: &[f64], b: &[f64], a: &[f64], cols: usize, relu: bool) -> Vec<f64> {
    let rows = b.len();
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wv, av) in row.iter().zip(a) {
            acc += wv * av;
        }
        out.push(if relu { acc.max(0.0) } else { acc });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Domain, Streams};

    fn rng(seed: u64) -> rand_chacha::ChaCha12Rng {
        Streams::new(seed).rng(Domain::NetInit, 0)
    }

    #[test]
    fn zeroed_network_outputs_zeros() {
        let net = QNet::zeroed(&[4, 3, 2]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(net.parameter_count(), 4 * 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn zero_output_layer_silences_only_the_head() {
        let mut r = rng(9);
        let mut net = QNet::new(&[4, 6, 3], &mut r).unwrap();
        let hidden_before = net.flat_parameters()[..4 * 6 + 6].to_vec();
        net.zero_output_layer();
        let flat = net.flat_parameters();
        assert_eq!(&flat[..4 * 6 + 6], &hidden_before[..]);
        assert!(flat[4 * 6 + 6..].iter().all(|&p| p == 0.0));
        let x = [0.3, -1.2, 0.8, 2.0];
        assert_eq!(net.forward(&x).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_computed_two_layer_case() {
        let mut net = QNet::zeroed(&[2, 2, 2]).unwrap();
        // Layer 0: W = [[1, -1], [2, 0]], b = [0, -1].
        // Layer 1: W = [[1, 1], [0, 3]], b = [0.5, 0].
        net.set_flat_parameters(&[
            1.0, -1.0, 2.0, 0.0, 0.0, -1.0, //
            1.0, 1.0, 0.0, 3.0, 0.5, 0.0,
        ])
        .unwrap();
        // x = [1, 2]: pre0 = [-1, 1], ReLU -> [0, 1],
        // out = [0 + 1 + 0.5, 0 + 3] = [1.5, 3].
        let y = net.forward(&[1.0, 2.0]).unwrap();
        assert_eq!(y, vec![1.5, 3.0]);
        let trace = net.forward_cached(&[1.0, 2.0]).unwrap();
        assert_eq!(trace.activations[1], vec![0.0, 1.0]);
        assert_eq!(trace.output(), &[1.5, 3.0]);
    }

    /// Naive dense forward used as the dual-route oracle.
    fn oracle_forward(net: &QNet, x: &[f64]) -> Vec<f64> {
        let sizes = net.sizes().to_vec();
        let flat = net.flat_parameters();
        let mut offset = 0;
        let mut a: Vec<f64> = x.to_vec();
        for l in 0..sizes.len() - 1 {
            let (rows, cols) = (sizes[l + 1], sizes[l]);
            let w = &flat[offset..offset + rows * cols];
            let b = &flat[offset + rows * cols..offset + rows * cols + rows];
            offset += rows * cols + rows;
            let mut next = vec![0.0; rows];
            for r in 0..rows {
                let mut acc = 0.0;
                for c in 0..cols {
                    acc += w[r * cols + c] * a[c];
                }
                acc += b[r];
                next[r] = if l + 1 < sizes.len() - 1 { acc.max(0.0) } else { acc };
            }
            a = next;
        }
        a
    }

    #[test]
    fn forward_matches_the_naive_oracle() {
        let mut r = rng(3);
        let net = QNet::new(&[5, 7, 4, 3], &mut r).unwrap();
        use rand::Rng;
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let fast = net.forward(&x).unwrap();
            let slow = oracle_forward(&net, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn he_init_matches_its_fan_in_scale() {
        let mut r = rng(1);
        let net = QNet::new(&[64, 128, 8], &mut r).unwrap();
        let w0 = &net.flat_parameters()[..64 * 128];
        let var = w0.iter().map(|w| w * w).sum::<f64>() / w0.len() as f64;
        let expected = 2.0 / 64.0;
        assert!(
            (var / expected - 1.0).abs() < 0.1,
            "weight variance {var} vs {expected}"
        );
        for b in &net.biases {
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn init_is_reproducible_and_seed_sensitive() {
        let a = QNet::new(&[4, 8, 3], &mut rng(7)).unwrap();
        let b = QNet::new(&[4, 8, 3], &mut rng(7)).unwrap();
        let c = QNet::new(&[4, 8, 3], &mut rng(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        let mut r = rng(5);
        let mut net = QNet::new(&[3, 6, 4], &mut r).unwrap();
        use rand::Rng;
        let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let dout: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let scalar = |net: &QNet| -> f64 {
            net.forward(&x)
                .unwrap()
                .iter()
                .zip(&dout)
                .map(|(y, d)| y * d)
                .sum()
        };
        let trace = net.forward_cached(&x).unwrap();
        let mut grads = Gradients::zeros_like(&net);
        net.backward(&trace, &dout, &mut grads);
        let analytic = grads.flatten();
        let params = net.flat_parameters();
        let h = 1e-6;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += h;
            net.set_flat_parameters(&plus).unwrap();
            let up = scalar(&net);
            let mut minus = params.clone();
            minus[i] -= h;
            net.set_flat_parameters(&minus).unwrap();
            let down = scalar(&net);
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-8);
            assert!(
                (numeric - analytic[i]).abs() / denom < 1e-4,
                "param {i}: numeric {numeric} vs analytic {}",
                analytic[i]
            );
        }
    }

    #[test]
    fn backward_accumulates_across_calls() {
        let mut r = rng(6);
        let net = QNet::new(&[2, 3, 2], &mut r).unwrap();
        let trace = net.forward_cached(&[0.3, -0.2]).unwrap();
        let mut once = Gradients::zeros_like(&net);
        net.backward(&trace, &[1.0, 0.0], &mut once);
        let mut twice = Gradients::zeros_like(&net);
        net.backward(&trace, &[1.0, 0.0], &mut twice);
        net.backward(&trace, &[1.0, 0.0], &mut twice);
        for (a, b) in once.flatten().iter().zip(twice.flatten()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        let mut r = rng(9);
        let net = QNet::new(&[6, 5, 4], &mut r).unwrap();
        let text = net.save_text();
        let back = QNet::load_text(&text).unwrap();
        assert_eq!(net, back);
        assert!(text.starts_with("qnet 6 5 4\n"));
    }

    #[test]
    fn malformed_checkpoints_are_rejected() {
        assert!(QNet::load_text("").is_err());
        assert!(QNet::load_text("qnet 3\n").is_err());
        assert!(QNet::load_text("mlp 2 2\n").is_err());
        assert!(QNet::load_text("qnet 2 2\n1.0\n").is_err());
        assert!(QNet::load_text("qnet 2 2\nx\n").is_err());
    }

    #[test]
    fn bad_shapes_are_rejected() {
        assert!(QNet::zeroed(&[3]).is_err());
        assert!(QNet::zeroed(&[3, 0, 2]).is_err());
        let net = QNet::zeroed(&[3, 2]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }
}
