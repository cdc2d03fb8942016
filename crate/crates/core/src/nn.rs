//! Small dense-network toolkit: fully connected layers, ReLU, softmax,
//! cosine similarity, MSE, hand-written backward passes and Adam.
//!
//! Everything is `f64`. Weight matrices are row-major `[out × in]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm below which a vector is treated as zero by [`cosine`].
pub const COSINE_EPS: f64 = 1e-12;

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context,
            expected,
            found,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs, activation);
        for w in &mut layer.weights {
            *w = rng.gen_range(-limit..=limit);
        }
        layer
    }

    fn check(&self) -> Result<()> {
        check_len("layer weights", self.inputs * self.outputs, self.weights.len())?;
        check_len("layer bias", self.outputs, self.bias.len())?;
        if self.weights.iter().chain(&self.bias).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite layer parameter".into()));
        }
        Ok(())
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi))
            .collect()
    }
}

fn activate(activation: Activation, z: &[f64]) -> Vec<f64> {
    match activation {
        Activation::Linear => z.to_vec(),
        Activation::Relu => z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Inputs and pre-activations of every layer from one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// ReLU hidden layers of the given widths, then an optional linear
    /// output layer.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], linear_output: Option<usize>, rng: &mut R) -> Self {
        let mut layers = Vec::new();
        let mut width = input;
        for &h in hidden {
            layers.push(DenseLayer::glorot(width, h, Activation::Relu, rng));
            width = h;
        }
        if let Some(out) = linear_output {
            layers.push(DenseLayer::glorot(width, out, Activation::Linear, rng));
        }
        Mlp { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("an MLP needs at least one layer".into()));
        }
        for layer in &layers {
            layer.check()?;
        }
        for pair in layers.windows(2) {
            check_len("layer chain", pair[0].outputs, pair[1].inputs)?;
        }
        Ok(Mlp { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        check_len("mlp input", self.input_dim(), x.len())?;
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut a = x.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&a);
            let next = activate(layer.activation, &z);
            cache.inputs.push(a);
            cache.pre.push(z);
            a = next;
        }
        Ok((a, cache))
    }

    /// Forward pass without keeping the activation record.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("mlp input", self.input_dim(), x.len())?;
        Ok(self
            .layers
            .iter()
            .fold(x.to_vec(), |a, layer| activate(layer.activation, &layer.affine(&a))))
    }

    /// Accumulates parameter gradients into `tape` and returns dL/dx.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], tape: &mut GradientTape) -> Result<Vec<f64>> {
        check_len("mlp cache", self.layers.len(), cache.pre.len())?;
        check_len("gradient tape", self.layers.len(), tape.layers.len())?;
        check_len("mlp output gradient", self.output_dim(), grad_out.len())?;
        let mut upstream = grad_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            let x = &cache.inputs[i];
            let dz: Vec<f64> = match layer.activation {
                Activation::Linear => upstream,
                Activation::Relu => upstream
                    .iter()
                    .zip(z)
                    .map(|(g, &zi)| if zi > 0.0 { *g } else { 0.0 })
                    .collect(),
            };
            let grads = &mut tape.layers[i];
            let mut dx = vec![0.0; layer.inputs];
            for (o, &g) in dz.iter().enumerate() {
                grads.bias[o] += g;
                if g == 0.0 {
                    continue;
                }
                let row = o * layer.inputs;
                for j in 0..layer.inputs {
                    grads.weights[row + j] += g * x[j];
                    dx[j] += layer.weights[row + j] * g;
                }
            }
            upstream = dx;
        }
        Ok(upstream)
    }

    /// Parameter slices in a fixed order: weights then bias, layer by layer.
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient accumulators mirroring an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub layers: Vec<LayerGrad>,
}

impl GradientTape {
    pub fn for_mlp(mlp: &Mlp) -> Self {
        GradientTape {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Vector-Jacobian product of softmax: given outputs `a` and dL/da,
/// returns dL/dz.
pub fn softmax_backward(a: &[f64], grad_a: &[f64]) -> Vec<f64> {
    let dot: f64 = a.iter().zip(grad_a).map(|(x, g)| x * g).sum();
    a.iter().zip(grad_a).map(|(x, g)| x * (g - dot)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector has norm below [`COSINE_EPS`].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len("cosine operands", u.len(), v.len())?;
    let (nu, nv) = (norm(u), norm(v));
    if nu < COSINE_EPS || nv < COSINE_EPS {
        return Ok(0.0);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot / (nu * nv))
}

/// Cosine similarity with its gradients with respect to `u` and `v`.
/// Both gradients are zero in the degenerate-norm case.
pub fn cosine_with_grad(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_len("cosine operands", u.len(), v.len())?;
    let (nu, nv) = (norm(u), norm(v));
    if nu < COSINE_EPS || nv < COSINE_EPS {
        return Ok((0.0, vec![0.0; u.len()], vec![0.0; v.len()]));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let c = dot / (nu * nv);
    // d cos / du = v / (|u||v|) - cos * u / |u|^2
    let du = u
        .iter()
        .zip(v)
        .map(|(ui, vi)| vi / (nu * nv) - c * ui / (nu * nu))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(ui, vi)| ui / (nu * nv) - c * vi / (nv * nv))
        .collect();
    Ok((c, du, dv))
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("mse operands", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("mse of empty vectors".into()));
    }
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self::with_betas(lr, 0.9, 0.999, 1e-8).expect("default Adam hyperparameters are valid")
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
            return Err(Error::InvalidInput(format!("Adam betas must lie in (0, 1): {beta1}, {beta2}")));
        }
        if !(lr > 0.0 && eps > 0.0) {
            return Err(Error::InvalidInput("Adam lr and eps must be positive".into()));
        }
        Ok(AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step_count: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    /// One bias-corrected Adam update. Moment buffers are sized on the
    /// first call and must match on every later call.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        check_len("adam parameter groups", params.len(), grads.len())?;
        for (p, g) in params.iter().zip(&grads) {
            check_len("adam gradient", p.len(), g.len())?;
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        check_len("adam state groups", self.m.len(), params.len())?;
        for (p, m) in params.iter().zip(&self.m) {
            check_len("adam state", m.len(), p.len())?;
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params.into_iter().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Central-difference gradient check with step `1e-5`.
///
/// Returns the maximum over parameters of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn grad_check(mut loss: impl FnMut(&[f64]) -> f64, params: &[f64], analytic: &[f64]) -> f64 {
    const H: f64 = 1e-5;
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        probe[i] = params[i] + H;
        let up = loss(&probe);
        probe[i] = params[i] - H;
        let down = loss(&probe);
        probe[i] = params[i];
        let numeric = (up - down) / (2.0 * H);
        let err = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}
