//! Ensemble of fully-connected regression networks.
//!
//! Each member has `layers` hidden ReLU layers of `width` units and a linear
//! output, He-uniform initialization and zero biases. Members differ in their
//! initialization and in the permutation of the training rows. Training is
//! full-batch Adam on the mean absolute error.
//!
//! Networks are trained on targets centered at the training mean and
//! expressed in percentage points, the unit the reference implementation
//! trains on; predictions are mapped back to accuracy units.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};

use super::{check_row, Surrogate, TrainingSet};
use crate::encodings::ColumnKind;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub members: usize,
    pub layers: usize,
    pub width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            members: 5,
            layers: 10,
            width: 20,
            learning_rate: 0.01,
            epochs: 200,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.members < 2 {
            return Err(Error::Config("ensemble needs at least 2 members".into()));
        }
        if self.layers == 0 || self.width == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "ensemble layers, width and epochs must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

const BETA1: f32 = 0.9;
const BETA2: f32 = 0.999;
const EPS: f32 = 1e-8;

#[derive(Debug, Clone)]
struct Dense {
    n_in: usize,
    n_out: usize,
    /// input-major `[n_in][n_out]`
    w: Vec<f32>,
    b: Vec<f32>,
}

impl Dense {
    fn new(n_in: usize, n_out: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / n_in as f64).sqrt();
        let w = (0..n_in * n_out)
            .map(|_| rng.random_range(-bound..bound) as f32)
            .collect();
        Self {
            n_in,
            n_out,
            w,
            b: vec![0.0; n_out],
        }
    }

    /// `out = b + W^T input`, skipping zero inputs.
    fn forward(&self, input: &[f32], out: &mut [f32]) {
        out.copy_from_slice(&self.b);
        for (i, &xi) in input.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, &self.w[i * self.n_out..(i + 1) * self.n_out], out);
            }
        }
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone)]
struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    fn new(n_in: usize, cfg: &EnsembleConfig, rng: &mut Rng) -> Self {
        let mut layers = Vec::with_capacity(cfg.layers + 1);
        let mut width_in = n_in;
        for _ in 0..cfg.layers {
            layers.push(Dense::new(width_in, cfg.width, rng));
            width_in = cfg.width;
        }
        layers.push(Dense::new(width_in, 1, rng));
        Self { layers }
    }

    fn predict(&self, x: &[f32]) -> f32 {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.n_out];
            layer.forward(&cur, &mut next);
            if l < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            cur = next;
        }
        cur[0]
    }

    /// Full-batch training; `x` is row-major `[n][n_in]`.
    fn train(&mut self, x: &[f32], y: &[f32], epochs: usize, lr: f32) {
        let n = y.len();
        let n_layers = self.layers.len();
        let last = n_layers - 1;
        let param_buf = |layers: &[Dense]| -> Vec<Vec<f32>> {
            layers.iter().map(|l| vec![0.0; l.w.len() + l.b.len()]).collect()
        };
        // weights then biases, per layer
        let mut adam_m = param_buf(&self.layers);
        let mut adam_v = param_buf(&self.layers);
        let mut grads = param_buf(&self.layers);
        let mut acts: Vec<Vec<f32>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            acts.push(vec![0.0; n * layer.n_out]);
        }
        let max_width = self.layers.iter().map(|l| l.n_in.max(l.n_out)).max().unwrap_or(1);
        let mut delta = vec![0.0f32; n * max_width];
        let mut delta_prev = vec![0.0f32; n * max_width];

        for step in 1..=epochs as i32 {
            for (l, layer) in self.layers.iter().enumerate() {
                let (before, after) = acts.split_at_mut(l + 1);
                let input = &before[l];
                let output = &mut after[0];
                for s in 0..n {
                    let out = &mut output[s * layer.n_out..(s + 1) * layer.n_out];
                    layer.forward(&input[s * layer.n_in..(s + 1) * layer.n_in], out);
                    if l < last {
                        out.iter_mut().for_each(|v| *v = v.max(0.0));
                    }
                }
            }

            // d(MAE)/d(output)
            let inv_n = 1.0 / n as f32;
            for s in 0..n {
                let r = acts[n_layers][s] - y[s];
                delta[s] = if r > 0.0 {
                    inv_n
                } else if r < 0.0 {
                    -inv_n
                } else {
                    0.0
                };
            }

            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let (n_in, n_out) = (layer.n_in, layer.n_out);
                let input = &acts[l];
                let g = &mut grads[l];
                g.iter_mut().for_each(|v| *v = 0.0);
                let (gw, gb) = g.split_at_mut(n_in * n_out);
                for s in 0..n {
                    let d = &delta[s * n_out..(s + 1) * n_out];
                    axpy(1.0, d, gb);
                    for (i, &a) in input[s * n_in..(s + 1) * n_in].iter().enumerate() {
                        if a != 0.0 {
                            axpy(a, d, &mut gw[i * n_out..(i + 1) * n_out]);
                        }
                    }
                }
                if l > 0 {
                    for s in 0..n {
                        let d = &delta[s * n_out..(s + 1) * n_out];
                        let a = &input[s * n_in..(s + 1) * n_in];
                        let dp = &mut delta_prev[s * n_in..(s + 1) * n_in];
                        // ReLU derivative of the layer below
                        for i in 0..n_in {
                            dp[i] = if a[i] > 0.0 {
                                dot(&layer.w[i * n_out..(i + 1) * n_out], d)
                            } else {
                                0.0
                            };
                        }
                    }
                    std::mem::swap(&mut delta, &mut delta_prev);
                }
            }

            let bc1 = 1.0 - BETA1.powi(step);
            let bc2 = 1.0 - BETA2.powi(step);
            for (l, layer) in self.layers.iter_mut().enumerate() {
                let (g, m, v) = (&grads[l], &mut adam_m[l], &mut adam_v[l]);
                for (k, p) in layer.w.iter_mut().chain(layer.b.iter_mut()).enumerate() {
                    m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                    v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                    let mhat = m[k] / bc1;
                    let vhat = v[k] / bc2;
                    *p -= lr * mhat / (vhat.sqrt() + EPS);
                }
            }
        }
    }
}

/// Accuracy units per network output unit.
const TARGET_SCALE: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    members: Vec<Mlp>,
    width: usize,
    target_offset: f64,
}

impl EnsembleModel {
    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl Surrogate for EnsembleModel {
    fn member_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: x.len(),
            });
        }
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        Ok(self
            .members
            .iter()
            .map(|m| self.target_offset + TARGET_SCALE * m.predict(&xf) as f64)
            .collect())
    }
}

/// Trains `cfg.members` networks, each on its own permutation of `data`.
pub fn fit_ensemble(data: &TrainingSet, cfg: &EnsembleConfig, rng: &mut Rng) -> Result<EnsembleModel> {
    cfg.validate()?;
    if data.kinds().iter().any(|k| !matches!(k, ColumnKind::Numeric)) {
        return Err(Error::PathEncodingRequired);
    }
    if data.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    for row in data.rows() {
        check_row(data.kinds(), row)?;
    }
    let width = data.width();
    let target_offset = data.targets().iter().sum::<f64>() / data.len() as f64;
    let mut members = Vec::with_capacity(cfg.members);
    for _ in 0..cfg.members {
        let mut member_rng = rng_from_seed(rng.next_u64());
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut member_rng);
        let mut x = Vec::with_capacity(order.len() * width);
        let mut y = Vec::with_capacity(order.len());
        for &i in &order {
            x.extend(data.rows()[i].iter().map(|&v| v as f32));
            y.push(((data.targets()[i] - target_offset) / TARGET_SCALE) as f32);
        }
        let mut net = Mlp::new(width, cfg, &mut member_rng);
        net.train(&x, &y, cfg.epochs, cfg.learning_rate as f32);
        members.push(net);
    }
    Ok(EnsembleModel {
        members,
        width,
        target_offset,
    })
}
