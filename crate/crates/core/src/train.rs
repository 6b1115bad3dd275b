//! Mean-squared-error training of [`ShallowNet`] with mini-batch SGD or Adam.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{NetForm, ShallowNet, Unit, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    #[serde(default)]
    pub project_constraints: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-2,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            init_scale: 1.0,
            project_constraints: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidArgument("init_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Inputs (truncated coefficient vectors) with scalar labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = inputs.first() {
            let n = first.len();
            if let Some(bad) = inputs.iter().find(|x| x.len() != n) {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn label_mean(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().sum::<f64>() / self.len() as f64
    }

    /// Population standard deviation of the labels: the RMSE of the best
    /// constant predictor.
    pub fn label_std(&self) -> f64 {
        let mu = self.label_mean();
        (self.labels.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / self.len().max(1) as f64).sqrt()
    }

    pub fn label_rms(&self) -> f64 {
        (self.labels.iter().map(|y| y * y).sum::<f64>() / self.len().max(1) as f64).sqrt()
    }

    /// First `n_first` rows and the rest.
    pub fn split(&self, n_first: usize) -> (Dataset, Dataset) {
        let n = n_first.min(self.len());
        (
            Dataset {
                inputs: self.inputs[..n].to_vec(),
                labels: self.labels[..n].to_vec(),
            },
            Dataset {
                inputs: self.inputs[n..].to_vec(),
                labels: self.labels[n..].to_vec(),
            },
        )
    }
}

/// Mean squared error of `net` on `data`.
pub fn mse(net: &ShallowNet, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.labels) {
        s += (net.forward(x)? - y).powi(2);
    }
    Ok(s / data.len() as f64)
}

pub fn rmse(net: &ShallowNet, data: &Dataset) -> Result<f64> {
    Ok(mse(net, data)?.sqrt())
}

/// Initial network: unit weights uniform in `(-1/√N, 1/√N)` rescaled to
/// `|w_j|₁ = init_scale`, thresholds uniform in `(-1, 1)`, `γ = 0` and the
/// bias at `c`. Per-coordinate units read inputs round-robin.
pub fn init_net(
    form: NetForm,
    n_inputs: usize,
    width: usize,
    c: f64,
    init_scale: f64,
    seed: u64,
) -> Result<ShallowNet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 1.0 / (n_inputs.max(1) as f64).sqrt();
    let units = (0..width)
        .map(|j| {
            let weights = match form {
                NetForm::Dense => {
                    let mut w: Vec<f64> = (0..n_inputs).map(|_| rng.gen_range(-r..r)).collect();
                    let s: f64 = w.iter().map(|x| x.abs()).sum();
                    if s > 0.0 {
                        w.iter_mut().for_each(|x| *x *= init_scale / s);
                    }
                    Weights::Dense { w }
                }
                NetForm::PerCoordinate => {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    Weights::Coordinate {
                        index: j % n_inputs.max(1),
                        weight: sign * init_scale,
                    }
                }
            };
            Unit {
                gamma: 0.0,
                weights,
                t: rng.gen_range(-1.0..1.0),
            }
        })
        .collect();
    ShallowNet::new(form, n_inputs, c, units)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters with the lowest training MSE seen at an epoch boundary
    /// (the initial network included).
    pub net: ShallowNet,
    /// Training MSE after each epoch.
    pub loss_trace: Vec<f64>,
    /// Epoch whose parameters were kept; `None` when the initial network was
    /// never improved on.
    pub best_epoch: Option<usize>,
}

/// Minimizes the empirical MSE of `net` over `data`. Deterministic in
/// `cfg.seed`, which drives the per-epoch shuffles.
///
/// Adam rescales gradients to unit size, so near an exact fit round-off
/// gradients still move the parameters by about the learning rate; keeping
/// the best epoch-boundary snapshot guards against that drift.
pub fn train(mut net: ShallowNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if data.n_inputs() != net.n_inputs() {
        return Err(Error::LengthMismatch {
            expected: net.n_inputs(),
            got: data.n_inputs(),
        });
    }
    let batch = cfg.batch_size.min(data.len());
    let steps_per_epoch = data.len().div_ceil(batch);
    let total_steps = (steps_per_epoch * cfg.epochs) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let np = net.n_params();
    let mut params = net.params();
    let mut grad = vec![0.0; np];
    let mut m1 = vec![0.0; np];
    let mut m2 = vec![0.0; np];
    let mut z = vec![0.0; net.width()];
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut step = 0usize;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best = (mse(&net, data)?, net.clone(), None);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / chunk.len() as f64;
            for &i in chunk {
                let x = &data.inputs[i];
                let f = net.forward_record(x, &mut z);
                net.accumulate_gradient(x, &z, scale * (f - data.labels[i]), &mut grad);
            }
            let lr = 0.5 * cfg.learning_rate * (1.0 + (PI * step as f64 / total_steps).cos());
            step += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= lr * g;
                    }
                }
                Optimizer::Adam => {
                    let bc1 = 1.0 - beta1.powi(step as i32);
                    let bc2 = 1.0 - beta2.powi(step as i32);
                    for k in 0..np {
                        m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                        m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                        params[k] -= lr * (m1[k] / bc1) / ((m2[k] / bc2).sqrt() + eps);
                    }
                }
            }
            net.set_params(&params)?;
            if cfg.project_constraints {
                net.project();
                params = net.params();
            }
        }
        let loss = mse(&net, data)?;
        if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        trace.push(loss);
        if loss < best.0 {
            best = (loss, net.clone(), Some(epoch));
        }
    }
    Ok(TrainOutcome {
        net: best.1,
        loss_trace: trace,
        best_epoch: best.2,
    })
}

/// Initializes a network at the label mean and trains it.
pub fn fit(form: NetForm, width: usize, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let net = init_net(form, data.n_inputs(), width, data.label_mean(), cfg.init_scale, cfg.seed)?;
    train(net, data, cfg)
}
