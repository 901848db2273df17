//! 1-D convolutional autoencoder with hand-written backpropagation.
//!
//! Encoder: `conv(1→8) → ReLU → conv(8→16) → ReLU`; decoder:
//! `convT(16→8) → ReLU → convT(8→1) → sigmoid`. Every layer uses kernel 5,
//! stride 2, padding 2; the transposed layers add output padding 1, so an
//! input whose length is a multiple of 4 comes back at the same length.
//!
//! Weight layouts follow the usual convention: `[out][in][k]` for
//! convolutions and `[in][out][k]` for transposed convolutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const KERNEL: usize = 5;
pub const STRIDE: usize = 2;
pub const PADDING: usize = 2;
pub const OUTPUT_PADDING: usize = 1;
/// Channel widths from input to bottleneck.
pub const CHANNELS: [usize; 3] = [1, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Transposed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(kind: LayerKind, in_channels: usize, out_channels: usize) -> Self {
        Self {
            kind,
            in_channels,
            out_channels,
            weight: vec![0.0; in_channels * out_channels * KERNEL],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn out_len(&self, len: usize) -> usize {
        match self.kind {
            LayerKind::Conv => (len + 2 * PADDING - KERNEL) / STRIDE + 1,
            LayerKind::Transposed => (len - 1) * STRIDE + KERNEL + OUTPUT_PADDING - 2 * PADDING,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn forward(&self, x: &[f64], len: usize) -> Vec<f64> {
        let out_len = self.out_len(len);
        let (cin, cout) = (self.in_channels, self.out_channels);
        let mut y = vec![0.0; cout * out_len];
        for o in 0..cout {
            y[o * out_len..(o + 1) * out_len].fill(self.bias[o]);
        }
        match self.kind {
            LayerKind::Conv => {
                for o in 0..cout {
                    let yo = &mut y[o * out_len..(o + 1) * out_len];
                    for i in 0..cin {
                        let xi = &x[i * len..(i + 1) * len];
                        for q in 0..KERNEL {
                            let w = self.weight[(o * cin + i) * KERNEL + q];
                            let (t0, t1) = conv_range(q, len, out_len);
                            for t in t0..t1 {
                                yo[t] += w * xi[t * STRIDE + q - PADDING];
                            }
                        }
                    }
                }
            }
            LayerKind::Transposed => {
                for i in 0..cin {
                    let xi = &x[i * len..(i + 1) * len];
                    for o in 0..cout {
                        let yo = &mut y[o * out_len..(o + 1) * out_len];
                        for q in 0..KERNEL {
                            let w = self.weight[(i * cout + o) * KERNEL + q];
                            let (t0, t1) = conv_range(q, out_len, len);
                            for t in t0..t1 {
                                yo[t * STRIDE + q - PADDING] += w * xi[t];
                            }
                        }
                    }
                }
            }
        }
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&self, x: &[f64], len: usize, dy: &[f64], grad: &mut Layer) -> Vec<f64> {
        let out_len = self.out_len(len);
        let (cin, cout) = (self.in_channels, self.out_channels);
        let mut dx = vec![0.0; cin * len];
        for o in 0..cout {
            grad.bias[o] += dy[o * out_len..(o + 1) * out_len].iter().sum::<f64>();
        }
        match self.kind {
            LayerKind::Conv => {
                for o in 0..cout {
                    let dyo = &dy[o * out_len..(o + 1) * out_len];
                    for i in 0..cin {
                        let xi = &x[i * len..(i + 1) * len];
                        let dxi = &mut dx[i * len..(i + 1) * len];
                        for q in 0..KERNEL {
                            let widx = (o * cin + i) * KERNEL + q;
                            let w = self.weight[widx];
                            let (t0, t1) = conv_range(q, len, out_len);
                            let mut gw = 0.0;
                            for t in t0..t1 {
                                let s = t * STRIDE + q - PADDING;
                                gw += dyo[t] * xi[s];
                                dxi[s] += dyo[t] * w;
                            }
                            grad.weight[widx] += gw;
                        }
                    }
                }
            }
            LayerKind::Transposed => {
                for i in 0..cin {
                    let xi = &x[i * len..(i + 1) * len];
                    let dxi = &mut dx[i * len..(i + 1) * len];
                    for o in 0..cout {
                        let dyo = &dy[o * out_len..(o + 1) * out_len];
                        for q in 0..KERNEL {
                            let widx = (i * cout + o) * KERNEL + q;
                            let w = self.weight[widx];
                            let (t0, t1) = conv_range(q, out_len, len);
                            let mut gw = 0.0;
                            for t in t0..t1 {
                                let s = t * STRIDE + q - PADDING;
                                gw += xi[t] * dyo[s];
                                dxi[t] += w * dyo[s];
                            }
                            grad.weight[widx] += gw;
                        }
                    }
                }
            }
        }
        dx
    }
}

/// Range of `t` in `0..t_len` with `t·stride + q - padding` inside `0..s_len`.
#[inline]
fn conv_range(q: usize, s_len: usize, t_len: usize) -> (usize, usize) {
    let t0 = if q >= PADDING { 0 } else { (PADDING - q).div_ceil(STRIDE) };
    let limit = s_len + PADDING;
    let t1 = if limit > q { (limit - q - 1) / STRIDE + 1 } else { 0 };
    (t0, t1.min(t_len))
}

/// Length after edge-replication padding: the next multiple of 4, at least 4.
pub fn padded_len(len: usize) -> usize {
    len.div_ceil(4).max(1) * 4
}

fn pad(input: &[f64]) -> Vec<f64> {
    let mut v = input.to_vec();
    let last = *input.last().expect("non-empty");
    v.resize(padded_len(input.len()), last);
    v
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub layers: Vec<Layer>,
}

struct Trace {
    /// Input of each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    lens: Vec<usize>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Autoencoder {
    /// The fixed architecture with all parameters zero.
    pub fn zeros() -> Self {
        let [c0, c1, c2] = CHANNELS;
        Self {
            layers: vec![
                Layer::zeros(LayerKind::Conv, c0, c1),
                Layer::zeros(LayerKind::Conv, c1, c2),
                Layer::zeros(LayerKind::Transposed, c2, c1),
                Layer::zeros(LayerKind::Transposed, c1, c0),
            ],
        }
    }

    /// He-uniform weights, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeros();
        for layer in &mut model.layers {
            let fan_in = match layer.kind {
                LayerKind::Conv => layer.in_channels * KERNEL,
                LayerKind::Transposed => layer.in_channels * KERNEL / STRIDE,
            };
            let bound = (6.0 / fan_in as f64).sqrt();
            for w in &mut layer.weight {
                *w = rng.random_range(-bound..bound);
            }
        }
        model
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Rounds every parameter to the nearest `f32`, the precision of the key file.
    pub fn round_to_f32(&mut self) {
        for layer in &mut self.layers {
            for p in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *p = *p as f32 as f64;
            }
        }
    }

    /// Checks that the layer shapes match the fixed architecture.
    pub fn check_architecture(&self) -> Result<()> {
        let reference = Self::zeros();
        let ok = self.layers.len() == reference.layers.len()
            && self.layers.iter().zip(&reference.layers).all(|(a, b)| {
                a.kind == b.kind
                    && a.in_channels == b.in_channels
                    && a.out_channels == b.out_channels
                    && a.weight.len() == b.weight.len()
                    && a.bias.len() == b.bias.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("autoencoder layers do not match the fixed architecture".into()))
        }
    }

    fn trace(&self, padded: &[f64]) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut lens = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = padded.to_vec();
        let mut len = padded.len();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&x, len);
            let next_len = layer.out_len(len);
            let act: Vec<f64> = if k == last {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            inputs.push(std::mem::replace(&mut x, act));
            lens.push(len);
            pre.push(z);
            len = next_len;
        }
        Trace {
            inputs,
            lens,
            pre,
            output: x,
        }
    }

    /// Forward pass. The input is edge-padded to a multiple of 4 and the
    /// output truncated back to the input length.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        if input.is_empty() {
            return Vec::new();
        }
        let mut out = self.trace(&pad(input)).output;
        out.truncate(input.len());
        out
    }

    /// MSE over the unpadded positions.
    pub fn loss(&self, input: &[f64], target: &[f64]) -> f64 {
        let out = self.forward(input);
        mse(&out, target)
    }

    /// Loss and parameter gradients (same shape as the model).
    pub fn loss_and_grad(&self, input: &[f64], target: &[f64]) -> (f64, Autoencoder) {
        let n = input.len();
        let tr = self.trace(&pad(input));
        let mut grad = Self::zeros();
        let loss = mse(&tr.output[..n], target);

        // d loss / d output, zero on padded positions
        let mut d = vec![0.0; tr.output.len()];
        for t in 0..n {
            d[t] = 2.0 * (tr.output[t] - target[t]) / n as f64;
        }
        let last = self.layers.len() - 1;
        for k in (0..=last).rev() {
            let z = &tr.pre[k];
            if k == last {
                for (dv, &zv) in d.iter_mut().zip(z) {
                    let s = sigmoid(zv);
                    *dv *= s * (1.0 - s);
                }
            } else {
                for (dv, &zv) in d.iter_mut().zip(z) {
                    if zv <= 0.0 {
                        *dv = 0.0;
                    }
                }
            }
            d = self.layers[k].backward(&tr.inputs[k], tr.lens[k], &d, &mut grad.layers[k]);
        }
        (loss, grad)
    }

    /// Sign pattern of every ReLU pre-activation; used to detect when a
    /// finite-difference step crosses a kink.
    pub fn relu_pattern(&self, input: &[f64]) -> Vec<bool> {
        let tr = self.trace(&pad(input));
        let last = self.layers.len() - 1;
        tr.pre[..last].iter().flatten().map(|&v| v > 0.0).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for layer in &mut self.layers {
            for p in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *p = *it.next().expect("parameter count");
            }
        }
    }
}

fn mse(out: &[f64], target: &[f64]) -> f64 {
    if out.is_empty() {
        return 0.0;
    }
    out.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / out.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 2000,
            target_mse: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    /// MSE of the returned (f32-rounded) weights.
    pub final_mse: f64,
    pub converged: bool,
}

/// Full-batch Adam on `MSE(D(E(input)), target)`. Stops once the loss reaches
/// `target_mse`; otherwise returns the best weights seen.
pub fn train(input: &[f64], target: &[f64], cfg: &TrainConfig) -> Result<(Autoencoder, TrainReport)> {
    if input.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: input.len(),
            actual: target.len(),
        });
    }
    if input.len() < 16 {
        return Err(Error::InvalidParams(format!(
            "training needs at least 16 samples, got {}",
            input.len()
        )));
    }
    if !(cfg.learning_rate > 0.0) || cfg.max_epochs == 0 {
        return Err(Error::InvalidParams("learning rate must be positive and epochs at least 1".into()));
    }
    let mut model = Autoencoder::init(cfg.seed);
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut best = (f64::INFINITY, params.clone());
    let mut epochs = 0;
    let mut converged = false;

    for epoch in 1..=cfg.max_epochs {
        epochs = epoch;
        let (loss, grad) = model.loss_and_grad(input, target);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        if loss < best.0 {
            best = (loss, params.clone());
        }
        if loss <= cfg.target_mse {
            converged = true;
            break;
        }
        let g = grad.params();
        let bc1 = 1.0 - cfg.beta1.powi(epoch as i32);
        let bc2 = 1.0 - cfg.beta2.powi(epoch as i32);
        for k in 0..params.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            params[k] -= cfg.learning_rate * (m[k] / bc1) / ((v[k] / bc2).sqrt() + cfg.epsilon);
        }
        model.set_params(&params);
    }
    if !converged {
        let last = model.loss(input, target);
        if !last.is_finite() {
            return Err(Error::Divergence { epoch: epochs, loss: last });
        }
        if last < best.0 {
            best = (last, params);
        }
    }
    model.set_params(&best.1);
    model.round_to_f32();
    let final_mse = model.loss(input, target);
    Ok((model, TrainReport { epochs, final_mse, converged }))
}
