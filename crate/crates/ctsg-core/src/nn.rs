//! Minimal dense neural-network kernels: forward pass, reverse-mode
//! gradients, and Adam. Just enough machinery to train the encoder/decoder
//! pair; no general autodiff.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, Mat};
use crate::rng::SeedRng;

/// Per-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => math::tanh(x),
        }
    }

    /// Derivative given the pre-activation and the activated output.
    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
        }
    }
}

/// One dense layer: `act(W x + b)` with `W` of shape out x in.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Mat, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::DimensionMismatch {
                what: "layer bias",
                expected: weights.rows(),
                got: bias.len(),
            });
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite {
                what: "layer weights",
            });
        }
        math::ensure_finite(&bias, "layer bias")?;
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// A stack of dense layers with chained dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Activations recorded by [`DenseNet::forward`], consumed by
/// [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    // (in, out) per layer, to detect use with a different network.
    shape: Vec<(usize, usize)>,
}

/// Parameter gradients, shaped exactly like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Mat,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Mat::zeros(l.output_dim(), l.input_dim()),
                    bias: vec![0.0; l.output_dim()],
                })
                .collect(),
        }
    }

    /// Accumulate `other`, scaled.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            for (x, y) in a.weights.data_mut().iter_mut().zip(b.weights.data().iter()) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(b.bias.iter()) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.weights.data_mut().iter_mut().for_each(|v| *v *= factor);
            layer.bias.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|v| v.is_finite()))
    }
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for window in layers.windows(2) {
            if window[0].output_dim() != window[1].input_dim() {
                return Err(Error::DimensionMismatch {
                    what: "layer chaining",
                    expected: window[0].output_dim(),
                    got: window[1].input_dim(),
                });
            }
        }
        Ok(DenseNet { layers })
    }

    /// Glorot-uniform initialized network over the given dimension chain,
    /// e.g. `[in, h1, h2, out]`. Hidden layers get `hidden`, the last layer
    /// `output`. Biases start at zero.
    pub fn glorot(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut SeedRng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Empty("network dimension chain"));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for i in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let bound = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            let mut weights = Mat::zeros(fan_out, fan_in);
            for w in weights.data_mut() {
                *w = rng.uniform_in(-bound, bound);
            }
            let activation = if i + 2 == dims.len() { output } else { hidden };
            layers.push(Layer::new(weights, vec![0.0; fan_out], activation)?);
        }
        DenseNet::new(layers)
    }

    #[inline]
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    fn shape(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.input_dim(), l.output_dim()))
            .collect()
    }

    /// Forward pass; the cache holds everything `backward` needs.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        math::ensure_finite(input, "network input")?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.output_dim()];
            layer.weights.matvec(&current, &mut z);
            for (zi, b) in z.iter_mut().zip(layer.bias.iter()) {
                *zi += b;
            }
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            current = a.clone();
            post.push(a);
        }
        math::ensure_finite(&current, "network output")?;
        let cache = ForwardCache {
            input: input.to_vec(),
            pre,
            post,
            shape: self.shape(),
        };
        Ok((current, cache))
    }

    /// Output without keeping a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward(input).map(|(out, _)| out)
    }

    /// Reverse-mode gradients of a scalar loss, given `dL/d output`.
    /// Returns the parameter gradients and `dL/d input`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if cache.shape != self.shape() {
            return Err(Error::StaleCache);
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                what: "output gradient",
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut upstream = output_grad.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let pre = &cache.pre[idx];
            let post = &cache.post[idx];
            // delta = dL/d pre-activation
            let delta: Vec<f64> = upstream
                .iter()
                .zip(pre.iter().zip(post.iter()))
                .map(|(g, (&z, &a))| g * layer.activation.derivative(z, a))
                .collect();
            let layer_input: &[f64] = if idx == 0 {
                &cache.input
            } else {
                &cache.post[idx - 1]
            };
            let grad = &mut grads.layers[idx];
            for (r, &d) in delta.iter().enumerate() {
                grad.bias[r] = d;
                let row = grad.weights.row_mut(r);
                for (w, &x) in row.iter_mut().zip(layer_input.iter()) {
                    *w = d * x;
                }
            }
            let mut next = vec![0.0; layer.input_dim()];
            layer.weights.tr_matvec(&delta, &mut next);
            upstream = next;
        }
        Ok((grads, upstream))
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Inverse of [`DenseNet::params_flat`].
    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                what: "flat parameters",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        math::ensure_finite(params, "flat parameters")?;
        let mut offset = 0;
        for layer in &mut self.layers {
            let w = layer.weights.data_mut();
            w.copy_from_slice(&params[offset..offset + w.len()]);
            offset += w.len();
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&params[offset..offset + b]);
            offset += b;
        }
        Ok(())
    }
}

/// Optimizer hyperparameters and the training loop's bookkeeping knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Added to the square-rooted second moment before dividing.
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 500,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0
            && self.epsilon.is_finite()
            && self.epochs > 0
            && self.batch_size > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!(
                "train config out of domain: {self:?}"
            )))
        }
    }
}

/// Adam first/second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    moments1: Vec<LayerGrad>,
    moments2: Vec<LayerGrad>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet) -> Self {
        let zeros = Gradients::zeros_like(net);
        AdamState {
            moments1: zeros.layers.clone(),
            moments2: zeros.layers,
            step: 0,
        }
    }

    #[inline]
    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. Non-finite gradients reject the whole
/// step: parameters, moments, and the step counter are left untouched.
pub fn adam_step(
    net: &mut DenseNet,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    cfg.validate()?;
    if grads.layers.len() != net.layers.len() || state.moments1.len() != net.layers.len() {
        return Err(Error::DimensionMismatch {
            what: "adam layer count",
            expected: net.layers.len(),
            got: grads.layers.len(),
        });
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite {
            what: "parameter gradients",
        });
    }
    let t = state.step + 1;
    let bias1 = 1.0 - math::powf(cfg.beta1, t as f64);
    let bias2 = 1.0 - math::powf(cfg.beta2, t as f64);
    for (idx, layer) in net.layers.iter_mut().enumerate() {
        let g = &grads.layers[idx];
        if g.weights.rows() != layer.weights.rows()
            || g.weights.cols() != layer.weights.cols()
            || g.bias.len() != layer.bias.len()
        {
            return Err(Error::DimensionMismatch {
                what: "adam gradient shape",
                expected: layer.weights.data().len(),
                got: g.weights.data().len(),
            });
        }
        let m = &mut state.moments1[idx];
        let v = &mut state.moments2[idx];
        update_slice(
            layer.weights.data_mut(),
            g.weights.data(),
            m.weights.data_mut(),
            v.weights.data_mut(),
            cfg,
            bias1,
            bias2,
        );
        update_slice(
            &mut layer.bias,
            &g.bias,
            &mut m.bias,
            &mut v.bias,
            cfg,
            bias1,
            bias2,
        );
    }
    state.step = t;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= cfg.learning_rate * m_hat / (math::sqrt(v_hat) + cfg.epsilon);
    }
}
