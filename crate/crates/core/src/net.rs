//! Two-layer ReLU approximant
//! `f_m(b) = c + Σ_j γ_j ReLU(Σ_i w_ij b_i − t_j)`.
//!
//! Parameters are addressed through a flat layout
//! `[c, γ_1..γ_m, t_1..t_m, w_1, .., w_m]` where `w_j` is the full weight row
//! in the dense form and a single scalar in the per-coordinate form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetForm {
    Dense,
    PerCoordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Weights {
    Dense { w: Vec<f64> },
    /// Reads only input `index` (0-based).
    Coordinate { index: usize, weight: f64 },
}

impl Weights {
    fn l1(&self) -> f64 {
        match self {
            Weights::Dense { w } => w.iter().map(|x| x.abs()).sum(),
            Weights::Coordinate { weight, .. } => weight.abs(),
        }
    }

    fn dot(&self, b: &[f64]) -> f64 {
        match self {
            Weights::Dense { w } => w.iter().zip(b).map(|(w, b)| w * b).sum(),
            Weights::Coordinate { index, weight } => weight * b[*index],
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            Weights::Dense { w } => w.iter_mut().for_each(|x| *x *= s),
            Weights::Coordinate { weight, .. } => *weight *= s,
        }
    }

    fn n_params(&self) -> usize {
        match self {
            Weights::Dense { w } => w.len(),
            Weights::Coordinate { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub gamma: f64,
    pub weights: Weights,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetJson")]
pub struct ShallowNet {
    form: NetForm,
    n_inputs: usize,
    c: f64,
    units: Vec<Unit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetJson {
    form: NetForm,
    n_inputs: usize,
    c: f64,
    units: Vec<Unit>,
}

impl TryFrom<NetJson> for ShallowNet {
    type Error = Error;

    fn try_from(j: NetJson) -> Result<Self> {
        Self::new(j.form, j.n_inputs, j.c, j.units)
    }
}

impl ShallowNet {
    pub fn new(form: NetForm, n_inputs: usize, c: f64, units: Vec<Unit>) -> Result<Self> {
        if n_inputs == 0 {
            return Err(Error::InvalidArgument("network needs at least one input".into()));
        }
        if units.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one unit".into()));
        }
        if !c.is_finite() {
            return Err(Error::InvalidArgument("bias is not finite".into()));
        }
        for (j, u) in units.iter().enumerate() {
            let ok = match (&u.weights, form) {
                (Weights::Dense { w }, NetForm::Dense) => {
                    if w.len() != n_inputs {
                        return Err(Error::DimensionMismatch {
                            expected: n_inputs,
                            got: w.len(),
                        });
                    }
                    w.iter().all(|x| x.is_finite())
                }
                (Weights::Coordinate { index, weight }, NetForm::PerCoordinate) => {
                    if *index >= n_inputs {
                        return Err(Error::InvalidArgument(format!(
                            "unit {j} reads input {index} of {n_inputs}"
                        )));
                    }
                    weight.is_finite()
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "unit {j} does not match the network form"
                    )))
                }
            };
            if !ok || !u.gamma.is_finite() || !u.t.is_finite() {
                return Err(Error::InvalidArgument(format!("unit {j} has non-finite parameters")));
            }
        }
        Ok(Self {
            form,
            n_inputs,
            c,
            units,
        })
    }

    /// The zero network of the given shape: every weight, γ, t and c is 0.
    /// Per-coordinate units cycle through the inputs.
    pub fn zeros(form: NetForm, n_inputs: usize, m: usize) -> Result<Self> {
        let units = (0..m)
            .map(|j| Unit {
                gamma: 0.0,
                weights: match form {
                    NetForm::Dense => Weights::Dense {
                        w: vec![0.0; n_inputs],
                    },
                    NetForm::PerCoordinate => Weights::Coordinate {
                        index: j % n_inputs.max(1),
                        weight: 0.0,
                    },
                },
                t: 0.0,
            })
            .collect();
        Self::new(form, n_inputs, 0.0, units)
    }

    pub fn form(&self) -> NetForm {
        self.form
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn width(&self) -> usize {
        self.units.len()
    }

    pub fn bias(&self) -> f64 {
        self.c
    }

    pub fn set_bias(&mut self, c: f64) {
        self.c = c;
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn units_mut(&mut self) -> &mut [Unit] {
        &mut self.units
    }

    fn check_len(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n_inputs {
            return Err(Error::LengthMismatch {
                expected: self.n_inputs,
                got: b.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, b: &[f64]) -> Result<f64> {
        self.check_len(b)?;
        Ok(self.forward_unchecked(b))
    }

    pub(crate) fn forward_unchecked(&self, b: &[f64]) -> f64 {
        self.c
            + self
                .units
                .iter()
                .map(|u| u.gamma * (u.weights.dot(b) - u.t).max(0.0))
                .sum::<f64>()
    }

    /// Forward pass that also records each unit's pre-activation in `z`.
    pub(crate) fn forward_record(&self, b: &[f64], z: &mut [f64]) -> f64 {
        let mut out = self.c;
        for (u, zj) in self.units.iter().zip(z.iter_mut()) {
            *zj = u.weights.dot(b) - u.t;
            out += u.gamma * zj.max(0.0);
        }
        out
    }

    pub fn n_params(&self) -> usize {
        1 + 2 * self.units.len() + self.units.iter().map(|u| u.weights.n_params()).sum::<usize>()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.push(self.c);
        p.extend(self.units.iter().map(|u| u.gamma));
        p.extend(self.units.iter().map(|u| u.t));
        for u in &self.units {
            match &u.weights {
                Weights::Dense { w } => p.extend_from_slice(w),
                Weights::Coordinate { weight, .. } => p.push(*weight),
            }
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: p.len(),
            });
        }
        let m = self.units.len();
        self.c = p[0];
        let mut off = 1 + 2 * m;
        for (j, u) in self.units.iter_mut().enumerate() {
            u.gamma = p[1 + j];
            u.t = p[1 + m + j];
            match &mut u.weights {
                Weights::Dense { w } => {
                    let n = w.len();
                    w.copy_from_slice(&p[off..off + n]);
                    off += n;
                }
                Weights::Coordinate { weight, .. } => {
                    *weight = p[off];
                    off += 1;
                }
            }
        }
        Ok(())
    }

    /// `residual_weight · ∂f_m(b)/∂θ` in the flat layout; the ReLU
    /// subgradient at 0 is taken as 0.
    pub fn gradient(&self, b: &[f64], residual_weight: f64) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let mut z = vec![0.0; self.units.len()];
        self.forward_record(b, &mut z);
        let mut g = vec![0.0; self.n_params()];
        self.accumulate_gradient(b, &z, residual_weight, &mut g);
        Ok(g)
    }

    /// Adds `residual_weight · ∂f_m/∂θ` to `grad`, given pre-activations `z`
    /// from [`Self::forward_record`].
    pub(crate) fn accumulate_gradient(&self, b: &[f64], z: &[f64], rw: f64, grad: &mut [f64]) {
        let m = self.units.len();
        grad[0] += rw;
        let mut off = 1 + 2 * m;
        for (j, (u, &zj)) in self.units.iter().zip(z).enumerate() {
            let width = u.weights.n_params();
            if zj > 0.0 {
                grad[1 + j] += rw * zj;
                let s = rw * u.gamma;
                grad[1 + m + j] -= s;
                match &u.weights {
                    Weights::Dense { .. } => {
                        for (g, bi) in grad[off..off + width].iter_mut().zip(b) {
                            *g += s * bi;
                        }
                    }
                    Weights::Coordinate { index, .. } => grad[off] += s * b[*index],
                }
            }
            off += width;
        }
    }

    /// `Σ_j |γ_j| |w_j|₁ + 2|c|`.
    pub fn path_norm(&self) -> f64 {
        self.units.iter().map(|u| u.gamma.abs() * u.weights.l1()).sum::<f64>() + 2.0 * self.c.abs()
    }

    /// `Σ_j |γ_j|`.
    pub fn gamma_l1(&self) -> f64 {
        self.units.iter().map(|u| u.gamma.abs()).sum()
    }

    /// Rescales every unit with nonzero weights to `|w_j|₁ = 1`, moving the
    /// scale into `γ_j` and `t_j`. The represented function is unchanged.
    pub fn normalize(&mut self) {
        for u in &mut self.units {
            let s = u.weights.l1();
            if s > 0.0 {
                u.gamma *= s;
                u.weights.scale(1.0 / s);
                u.t /= s;
            }
        }
    }

    /// [`Self::normalize`] followed by clipping `|t_j| ≤ 1`.
    pub fn project(&mut self) {
        self.normalize();
        for u in &mut self.units {
            u.t = u.t.clamp(-1.0, 1.0);
        }
    }

    /// The same function written in dense form.
    pub fn to_dense(&self) -> ShallowNet {
        let units = self
            .units
            .iter()
            .map(|u| {
                let w = match &u.weights {
                    Weights::Dense { w } => w.clone(),
                    Weights::Coordinate { index, weight } => {
                        let mut w = vec![0.0; self.n_inputs];
                        w[*index] = *weight;
                        w
                    }
                };
                Unit {
                    gamma: u.gamma,
                    weights: Weights::Dense { w },
                    t: u.t,
                }
            })
            .collect();
        ShallowNet {
            form: NetForm::Dense,
            n_inputs: self.n_inputs,
            c: self.c,
            units,
        }
    }

    /// `f*_m`: the dense net restricted to its first `n_keep` inputs, with
    /// all weights on later inputs discarded.
    pub fn truncate_inputs(&self, n_keep: usize) -> ShallowNet {
        let mut out = self.to_dense();
        for u in &mut out.units {
            if let Weights::Dense { w } = &mut u.weights {
                for x in w.iter_mut().skip(n_keep) {
                    *x = 0.0;
                }
            }
        }
        out
    }

    /// Largest position (1-based) a unit reads with a nonzero weight.
    pub fn unit_support(&self, j: usize) -> usize {
        match &self.units[j].weights {
            Weights::Dense { w } => w.iter().rposition(|x| *x != 0.0).map_or(0, |p| p + 1),
            Weights::Coordinate { index, weight } => {
                if *weight != 0.0 {
                    index + 1
                } else {
                    0
                }
            }
        }
    }
}
