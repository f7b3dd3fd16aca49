//! A small tanh MLP with a logistic head, trained with Adam on binary
//! cross-entropy. Backpropagation is written out by hand.

use crate::error::{Error, Result};
use rand::Rng;

pub const INPUT_DIM: usize = 5;
pub const HIDDEN: usize = 16;
/// Layer widths, input to output.
pub const DIMS: [usize; 4] = [INPUT_DIM, HIDDEN, HIDDEN, 1];

pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const CHECKPOINT_MAGIC: &[u8; 4] = b"HZCK";

// Offsets into the flat parameter vector (row-major weights, then bias, per layer).
const W1: usize = 0;
const B1: usize = W1 + HIDDEN * INPUT_DIM;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + HIDDEN * HIDDEN;
const W3: usize = B2 + HIDDEN;
const B3: usize = W3 + HIDDEN;
pub const PARAM_COUNT: usize = B3 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct HazardModel {
    params: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

struct Activations {
    h1: [f64; HIDDEN],
    h2: [f64; HIDDEN],
    logit: f64,
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Mean-free BCE on a logit: `softplus(a) - y a`.
fn bce_with_logit(a: f64, y: f64) -> f64 {
    a.max(0.0) - a * y + (-a.abs()).exp().ln_1p()
}

impl HazardModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut params = vec![0.0; PARAM_COUNT];
        let mut fill = |start: usize, fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[start..start + fan_in * fan_out] {
                *p = rng.gen_range(-a..a);
            }
        };
        fill(W1, INPUT_DIM, HIDDEN);
        fill(W2, HIDDEN, HIDDEN);
        fill(W3, HIDDEN, 1);
        Self::from_params(params).expect("sized correctly")
    }

    pub fn zeros() -> Self {
        Self::from_params(vec![0.0; PARAM_COUNT]).expect("sized correctly")
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::Checkpoint(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self {
            params,
            m: vec![0.0; PARAM_COUNT],
            v: vec![0.0; PARAM_COUNT],
            step: 0,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access; resets nothing, so callers own consistency.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn activations(&self, z: &[f64; INPUT_DIM]) -> Activations {
        let p = &self.params;
        let mut h1 = [0.0; HIDDEN];
        for (i, h) in h1.iter_mut().enumerate() {
            let mut a = p[B1 + i];
            for (j, zj) in z.iter().enumerate() {
                a += p[W1 + i * INPUT_DIM + j] * zj;
            }
            *h = a.tanh();
        }
        let mut h2 = [0.0; HIDDEN];
        for (i, h) in h2.iter_mut().enumerate() {
            let mut a = p[B2 + i];
            for (j, hj) in h1.iter().enumerate() {
                a += p[W2 + i * HIDDEN + j] * hj;
            }
            *h = a.tanh();
        }
        let mut logit = p[B3];
        for (j, hj) in h2.iter().enumerate() {
            logit += p[W3 + j] * hj;
        }
        Activations { h1, h2, logit }
    }

    /// Hazard score in `(0, 1)`.
    pub fn forward(&self, z: &[f64; INPUT_DIM]) -> f64 {
        sigmoid(self.activations(z).logit)
    }

    /// Backpropagates `d_logit` through the network, accumulating parameter
    /// gradients into `grad` (if given) and returning the input gradient.
    fn backward(
        &self,
        z: &[f64; INPUT_DIM],
        act: &Activations,
        d_logit: f64,
        grad: Option<&mut [f64]>,
    ) -> [f64; INPUT_DIM] {
        let p = &self.params;
        let mut d_a2 = [0.0; HIDDEN];
        for j in 0..HIDDEN {
            d_a2[j] = d_logit * p[W3 + j] * (1.0 - act.h2[j] * act.h2[j]);
        }
        let mut d_a1 = [0.0; HIDDEN];
        for j in 0..HIDDEN {
            let mut s = 0.0;
            for i in 0..HIDDEN {
                s += d_a2[i] * p[W2 + i * HIDDEN + j];
            }
            d_a1[j] = s * (1.0 - act.h1[j] * act.h1[j]);
        }
        if let Some(g) = grad {
            g[B3] += d_logit;
            for j in 0..HIDDEN {
                g[W3 + j] += d_logit * act.h2[j];
            }
            for i in 0..HIDDEN {
                g[B2 + i] += d_a2[i];
                for j in 0..HIDDEN {
                    g[W2 + i * HIDDEN + j] += d_a2[i] * act.h1[j];
                }
            }
            for i in 0..HIDDEN {
                g[B1 + i] += d_a1[i];
                for j in 0..INPUT_DIM {
                    g[W1 + i * INPUT_DIM + j] += d_a1[i] * z[j];
                }
            }
        }
        let mut d_z = [0.0; INPUT_DIM];
        for (j, dz) in d_z.iter_mut().enumerate() {
            for i in 0..HIDDEN {
                *dz += d_a1[i] * p[W1 + i * INPUT_DIM + j];
            }
        }
        d_z
    }

    /// `∂h/∂z` at `z`.
    pub fn input_grad(&self, z: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        let act = self.activations(z);
        let h = sigmoid(act.logit);
        self.backward(z, &act, h * (1.0 - h), None)
    }

    /// `∂h/∂θ` at `z`.
    pub fn output_param_grad(&self, z: &[f64; INPUT_DIM]) -> Vec<f64> {
        let act = self.activations(z);
        let h = sigmoid(act.logit);
        let mut g = vec![0.0; PARAM_COUNT];
        self.backward(z, &act, h * (1.0 - h), Some(&mut g));
        g
    }

    /// Mean BCE over the batch and its parameter gradient.
    pub fn loss_and_grad(&self, batch: &[([f64; INPUT_DIM], f64)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; PARAM_COUNT];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for (z, y) in batch {
            let act = self.activations(z);
            loss += bce_with_logit(act.logit, *y);
            self.backward(z, &act, (sigmoid(act.logit) - y) * scale, Some(&mut grad));
        }
        (loss * scale, grad)
    }

    pub fn loss(&self, batch: &[([f64; INPUT_DIM], f64)]) -> f64 {
        let scale = 1.0 / batch.len() as f64;
        batch
            .iter()
            .map(|(z, y)| bce_with_logit(self.activations(z).logit, *y))
            .sum::<f64>()
            * scale
    }

    /// One Adam step on the mean BCE of `batch`. Returns the loss before the update.
    pub fn train_step(&mut self, batch: &[([f64; INPUT_DIM], f64)], learning_rate: f64) -> Result<f64> {
        assert!(!batch.is_empty(), "train_step needs a non-empty batch");
        let (loss, grad) = self.loss_and_grad(batch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss);
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for (k, g) in grad.iter().enumerate() {
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g;
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            self.params[k] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
        Ok(loss)
    }

    /// Flat binary checkpoint: magic, layer count, layer widths (u32 LE), then
    /// the parameters as f64 LE in layer order, each weight matrix row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * DIMS.len() + 8 * PARAM_COUNT);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(DIMS.len() as u32).to_le_bytes());
        for d in DIMS {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing checkpoint header"));
        }
        let read_u32 = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or_else(|| bad("truncated header"))
        };
        let n = read_u32(4)? as usize;
        let dims: Vec<usize> = (0..n)
            .map(|i| read_u32(8 + 4 * i).map(|d| d as usize))
            .collect::<Result<_>>()?;
        if dims != DIMS {
            return Err(Error::Checkpoint(format!("unsupported layer widths {dims:?}")));
        }
        let body = &bytes[8 + 4 * n..];
        if body.len() != 8 * PARAM_COUNT {
            return Err(bad("parameter block has the wrong size"));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_params(params)
    }
}
