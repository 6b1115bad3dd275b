//! Learning point values of the solution map of `−α u″ = g` on `(0, 1)`.
//!
//! The right-hand side `g` is a coefficient vector. Labels come from an exact
//! modal solver: mode `n` of `g` is divided by `α(2πn)²` (periodic, zero-mean
//! data on the real-trigonometric basis) or by `α(πn)²` (homogeneous
//! Dirichlet data on the sine basis). The map `g ↦ u(x₀)` is then learned
//! from coefficient samples, and one network per grid point assembles a
//! piecewise-linear operator.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{BasisKind, BasisSpec, CoeffVector, DomainSpec};
use crate::net::{NetForm, ShallowNet};
use crate::quadrature::CompositeRule;
use crate::train::{fit, rmse, Dataset, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoissonVariant {
    PeriodicZeroMean,
    DirichletSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonProblem {
    pub variant: PoissonVariant,
    pub alpha: f64,
    #[serde(default = "one")]
    pub spatial_dim: usize,
    /// Number of coefficients of `g` (and inputs of the learned networks).
    pub n_modes: usize,
}

fn one() -> usize {
    1
}

impl PoissonProblem {
    pub fn new(variant: PoissonVariant, alpha: f64, n_modes: usize) -> Result<Self> {
        let p = Self {
            variant,
            alpha,
            spatial_dim: 1,
            n_modes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if self.spatial_dim != 1 {
            return Err(Error::InvalidArgument("only spatial_dim = 1 is supported".into()));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be positive".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> BasisSpec {
        match self.variant {
            PoissonVariant::PeriodicZeroMean => BasisSpec::real_trig(1),
            PoissonVariant::DirichletSine => BasisSpec::sine(1),
        }
    }

    /// `α|ξ|²` for each of the first `n_modes` basis functions.
    fn symbols(&self) -> Vec<f64> {
        let scale = match self.variant {
            PoissonVariant::PeriodicZeroMean => 2.0 * PI,
            PoissonVariant::DirichletSine => PI,
        };
        self.basis()
            .modes(self.n_modes)
            .iter()
            .map(|m| {
                let k2: f64 = m.frequency.iter().map(|&p| (scale * p as f64).powi(2)).sum();
                self.alpha * k2
            })
            .collect()
    }

    fn check_input(&self, g: &CoeffVector) -> Result<()> {
        let kind = g.basis().kind;
        match (self.variant, kind) {
            (PoissonVariant::PeriodicZeroMean, BasisKind::RealTrigonometric)
            | (PoissonVariant::DirichletSine, BasisKind::Sine) => {}
            (PoissonVariant::PeriodicZeroMean, BasisKind::Sine) => {
                // sin(πnx) has mean 2/(πn) for odd n.
                let mean: f64 = g
                    .coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 2 == 0)
                    .map(|(i, b)| b * 2f64.sqrt() * 2.0 / (PI * (i + 1) as f64))
                    .sum();
                if mean.abs() > 1e-14 {
                    return Err(Error::ZeroModePresent);
                }
                return Err(Error::InvalidArgument(
                    "periodic problem expects a real-trigonometric right-hand side".into(),
                ));
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{kind:?} right-hand side does not match the {:?} problem",
                    self.variant
                )))
            }
        }
        if g.len() > self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: g.len(),
            });
        }
        Ok(())
    }

    /// Coefficients of `u` in the same basis as `g`.
    pub fn solve(&self, g: &CoeffVector) -> Result<CoeffVector> {
        self.check_input(g)?;
        let sym = self.symbols();
        let u = g.coeffs().iter().zip(&sym).map(|(b, s)| b / s).collect();
        CoeffVector::new(g.basis(), u)
    }

    /// `u(x₀)`.
    pub fn solve_at(&self, g: &CoeffVector, x0: f64) -> Result<f64> {
        self.solve(g)?.evaluate(&[x0])
    }

    /// `w` with `u(x₀) = Σ_i w_i b_i(g)`: the pointwise solution functional
    /// is linear in the coefficients of `g`.
    pub fn pointwise_weights(&self, x0: f64) -> Vec<f64> {
        let basis = self.basis();
        basis
            .modes(self.n_modes)
            .iter()
            .zip(self.symbols())
            .map(|(m, s)| basis.eval_mode(m, &[x0]) / s)
            .collect()
    }

    /// `(∫₀¹ |−α u″ − g|² dx)^{1/2}` with `u″` differentiated mode by mode and
    /// a 512-point Gauss–Legendre rule.
    pub fn residual(&self, g: &CoeffVector) -> Result<f64> {
        let u = self.solve(g)?;
        let basis = g.basis();
        let modes = basis.modes(g.len());
        let scale = match self.variant {
            PoissonVariant::PeriodicZeroMean => 2.0 * PI,
            PoissonVariant::DirichletSine => PI,
        };
        let rule = CompositeRule::new(0.0, 1.0, 32, 16);
        let r = rule.integrate(|x| {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for ((m, ub), gb) in modes.iter().zip(u.coeffs()).zip(g.coeffs()) {
                let phi = basis.eval_mode(m, &[x]);
                let k2: f64 = m.frequency.iter().map(|&p| (scale * p as f64).powi(2)).sum();
                // Every basis function satisfies Φ″ = −k²Φ.
                lhs += self.alpha * k2 * ub * phi;
                rhs += gb * phi;
            }
            (lhs - rhs).powi(2)
        });
        Ok(r.sqrt())
    }
}

/// Samples of `g` with solution values at one or more points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDataset {
    pub points: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    /// `labels[s][q] = u_s(points[q])`.
    pub labels: Vec<Vec<f64>>,
}

impl PointDataset {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Training data for point `q`.
    pub fn column(&self, q: usize) -> Result<Dataset> {
        Dataset::new(self.g.clone(), self.labels.iter().map(|row| row[q]).collect())
    }

    /// `b_1, …, b_N, u(y_1), …, u(y_Q)` with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.g.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
        header.extend(self.points.iter().map(|y| format!("u({y})")));
        out.write_record(&header)?;
        for (g, l) in self.g.iter().zip(&self.labels) {
            out.write_record(g.iter().chain(l).map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    if points.iter().any(|y| !(*y > 0.0 && *y < 1.0)) {
        return Err(Error::InvalidArgument("evaluation points must lie in (0, 1)".into()));
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("evaluation points must be strictly increasing".into()));
    }
    Ok(())
}

/// Draws `m` right-hand sides from `domain` (in the problem's basis) and
/// labels each with the exact solution at every point. All points share the
/// same `g` samples.
pub fn generate_dataset(
    problem: &PoissonProblem,
    domain: &DomainSpec,
    points: &[f64],
    m: usize,
    seed: u64,
) -> Result<PointDataset> {
    problem.validate()?;
    check_points(points)?;
    if m == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let gs = domain.sample_many(problem.basis(), problem.n_modes, m, seed)?;
    let weights: Vec<Vec<f64>> = points.iter().map(|&y| problem.pointwise_weights(y)).collect();
    let mut labels = Vec::with_capacity(m);
    for g in &gs {
        // Labels come from the full solver; the weights only cross-check it.
        let row: Vec<f64> = points
            .iter()
            .map(|&y| problem.solve_at(g, y))
            .collect::<Result<_>>()?;
        debug_assert!(row
            .iter()
            .zip(&weights)
            .all(|(u, w)| (u - w.iter().zip(g.coeffs()).map(|(a, b)| a * b).sum::<f64>()).abs() < 1e-12));
        labels.push(row);
    }
    Ok(PointDataset {
        points: points.to_vec(),
        g: gs.into_iter().map(|g| g.coeffs().to_vec()).collect(),
        labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseFit {
    pub net: ShallowNet,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub test_label_rms: f64,
}

/// Trains a dense network on the first 80% of `data` and scores it on the
/// remaining 20%.
pub fn learn_pointwise(data: &Dataset, width: usize, cfg: &TrainConfig) -> Result<PointwiseFit> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let n_train = ((data.len() * 4) / 5).max(1);
    let (train, test) = data.split(n_train);
    let test = if test.is_empty() { train.clone() } else { test };
    let cfg = TrainConfig {
        batch_size: cfg.batch_size.min(train.len()),
        ..cfg.clone()
    };
    let out = fit(NetForm::Dense, width, &train, &cfg)?;
    Ok(PointwiseFit {
        train_rmse: rmse(&out.net, &train)?,
        test_rmse: rmse(&out.net, &test)?,
        test_label_rms: test.label_rms(),
        net: out.net,
    })
}

/// One network per grid point; values between grid points are linearly
/// interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOperator {
    pub grid: Vec<f64>,
    pub nets: Vec<ShallowNet>,
    pub test_rmse: Vec<f64>,
}

/// Generates one shared dataset for all grid points and trains the point
/// networks concurrently.
#[allow(clippy::too_many_arguments)]
pub fn build_grid_operator(
    problem: &PoissonProblem,
    domain: &DomainSpec,
    grid: &[f64],
    m: usize,
    width: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(GridOperator, PointDataset)> {
    let data = generate_dataset(problem, domain, grid, m, seed)?;
    let fits: Vec<PointwiseFit> = (0..grid.len())
        .into_par_iter()
        .map(|q| {
            let column = data.column(q)?;
            learn_pointwise(&column, width, &cfg.with_seed(cfg.seed.wrapping_add(q as u64))).map_err(|e| {
                Error::GridPoint {
                    point: format!("y={}", grid[q]),
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;
    let op = GridOperator {
        grid: grid.to_vec(),
        test_rmse: fits.iter().map(|f| f.test_rmse).collect(),
        nets: fits.into_iter().map(|f| f.net).collect(),
    };
    Ok((op, data))
}

/// `G[g](y)` by linear interpolation between the bracketing grid networks.
pub fn apply_grid_operator(op: &GridOperator, g: &CoeffVector, y: f64) -> Result<f64> {
    let (lo, hi) = (op.grid[0], *op.grid.last().expect("nonempty grid"));
    if !(y >= lo && y <= hi) {
        return Err(Error::OutOfGridRange { y, lo, hi });
    }
    let b = g.coeffs();
    let k = op.grid.partition_point(|&x| x <= y);
    if k == 0 || op.grid[k - 1] == y {
        let q = k.saturating_sub(1);
        return op.nets[q].forward(b);
    }
    let (y0, y1) = (op.grid[k - 1], op.grid[k]);
    let s = (y - y0) / (y1 - y0);
    let (f0, f1) = (op.nets[k - 1].forward(b)?, op.nets[k].forward(b)?);
    Ok((1.0 - s) * f0 + s * f1)
}

/// Worst-case comparison of a grid operator with the exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    /// Evaluation points, evenly spaced over the grid range.
    pub points: Vec<f64>,
    /// `sup_y |G[g](y) − u(y)| / sup_y |u(y)|` for each `g`.
    pub relative_sup: Vec<f64>,
    /// Largest spectral-solver residual over the `g`.
    pub max_residual: f64,
    /// `(g index, y, prediction, exact)` for every evaluation.
    pub samples: Vec<(usize, f64, f64, f64)>,
}

impl GridEvaluation {
    pub fn worst_relative_sup(&self) -> f64 {
        self.relative_sup.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// Columns `g, y, prediction, exact, error`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["g", "y", "prediction", "exact", "error"])?;
        for &(s, y, p, u) in &self.samples {
            out.write_record([s.to_string(), y.to_string(), p.to_string(), u.to_string(), (p - u).to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates `op` on each `g` at `n_points` evenly spaced points between the
/// first and last grid points (inclusive) against the spectral solution.
pub fn evaluate_grid_operator(
    problem: &PoissonProblem,
    op: &GridOperator,
    gs: &[CoeffVector],
    n_points: usize,
) -> Result<GridEvaluation> {
    if op.grid.is_empty() || op.nets.len() != op.grid.len() {
        return Err(Error::InvalidArgument("grid operator has no networks".into()));
    }
    if n_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 evaluation points".into()));
    }
    let (lo, hi) = (op.grid[0], op.grid[op.grid.len() - 1]);
    let points: Vec<f64> = (0..n_points)
        .map(|i| {
            let s = i as f64 / (n_points - 1) as f64;
            // Interpolating keeps both endpoints exact.
            (1.0 - s) * lo + s * hi
        })
        .collect();
    let mut relative_sup = Vec::with_capacity(gs.len());
    let mut max_residual: f64 = 0.0;
    let mut samples = Vec::with_capacity(gs.len() * n_points);
    for (i, g) in gs.iter().enumerate() {
        max_residual = max_residual.max(problem.residual(g)?);
        let (mut err, mut norm): (f64, f64) = (0.0, 0.0);
        for &y in &points {
            let u = problem.solve_at(g, y)?;
            let p = apply_grid_operator(op, g, y)?;
            err = err.max((p - u).abs());
            norm = norm.max(u.abs());
            samples.push((i, y, p, u));
        }
        relative_sup.push(if norm > 0.0 { err / norm } else { err });
    }
    Ok(GridEvaluation {
        points,
        relative_sup,
        max_residual,
        samples,
    })
}

/// `q / (Q + 1)` for `q = 1..=Q`.
pub fn uniform_grid(q: usize) -> Vec<f64> {
    (1..=q).map(|i| i as f64 / (q + 1) as f64).collect()
}
