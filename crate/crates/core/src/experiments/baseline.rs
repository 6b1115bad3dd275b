use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::per_coordinate::constant_rmse;
use super::{derive_seed, ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::function_space::{BasisSpec, CoeffVector};
use crate::net::NetForm;
use crate::train::{fit, rmse, Dataset, TrainConfig};
use crate::zoo::FunctionalSpec;

/// Grid-sampling baseline: a width-`hidden_width` network fed the point
/// values `v(x_1), …, v(x_grid_size)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub grid_size: usize,
    pub hidden_width: usize,
    pub sample_points: Vec<f64>,
}

impl BaselineSpec {
    /// Points `j / grid_size`, `j = 0..grid_size`, on the periodic lattice.
    pub fn uniform(grid_size: usize, hidden_width: usize) -> Self {
        Self {
            grid_size,
            hidden_width,
            sample_points: (0..grid_size).map(|j| j as f64 / grid_size as f64).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidArgument("grid_size and hidden_width must be positive".into()));
        }
        if self.sample_points.len() != self.grid_size {
            return Err(Error::LengthMismatch {
                expected: self.grid_size,
                got: self.sample_points.len(),
            });
        }
        if self.sample_points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("sample points must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        1 + self.hidden_width * (self.grid_size + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// Coefficients per sampled function (and inputs of the spectral network).
    pub n_inputs: usize,
    pub specs: Vec<BaselineSpec>,
    pub train: TrainConfig,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default)]
    pub data_seed: u64,
}

/// For each baseline spec, trains the point-value network and a spectral
/// (coefficient-input) network with the nearest parameter count, and reports
/// both test RMSEs in one row.
pub fn deeponet_baseline(f: &FunctionalSpec, cfg: &BaselineConfig) -> Result<ExperimentReport> {
    cfg.train.validate()?;
    if cfg.specs.is_empty() {
        return Err(Error::InvalidArgument("no baseline specs".into()));
    }
    for s in &cfg.specs {
        s.validate()?;
    }
    if cfg.n_inputs < f.max_coord().max(1) || cfg.n_train == 0 || cfg.n_test == 0 {
        return Err(Error::InvalidArgument("invalid dataset sizes".into()));
    }
    let basis = BasisSpec::default();
    let vs = f
        .domain
        .sample_many(basis, cfg.n_inputs, cfg.n_train + cfg.n_test, cfg.data_seed)?;
    let labels: Vec<f64> = vs.iter().map(|v| f.evaluate(v)).collect();
    let spectral = Dataset::new(vs.iter().map(|v| v.coeffs().to_vec()).collect(), labels.clone())?;
    let (sp_train, sp_test) = spectral.split(cfg.n_train);

    let rows: Vec<Result<MetricRow>> = cfg
        .specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let point = |e: Error| Error::GridPoint {
                point: format!("grid_size={}, hidden_width={}", spec.grid_size, spec.hidden_width),
                source: Box::new(e),
            };
            let inputs = vs
                .iter()
                .map(|v| point_values(v, &spec.sample_points))
                .collect::<Result<Vec<_>>>()?;
            let grid = Dataset::new(inputs, labels.clone())?;
            let (g_train, g_test) = grid.split(cfg.n_train);
            let base = fit(NetForm::Dense, spec.hidden_width, &g_train, &cfg.train.with_seed(derive_seed(cfg.train.seed, 2 * i as u64)))
                .map_err(point)?;
            let m_spec = (((spec.n_params() - 1) as f64 / (cfg.n_inputs + 2) as f64).round() as usize).max(1);
            let spec_out = fit(NetForm::Dense, m_spec, &sp_train, &cfg.train.with_seed(derive_seed(cfg.train.seed, 2 * i as u64 + 1)))
                .map_err(point)?;

            let mut row = MetricRow::labeled(format!("grid={},width={}", spec.grid_size, spec.hidden_width))
                .with("grid_size", spec.grid_size as f64)
                .with("params_baseline", base.net.n_params() as f64)
                .with("params_spectral", spec_out.net.n_params() as f64)
                .with("spectral_width", m_spec as f64)
                .with("spectral_test_rmse", rmse(&spec_out.net, &sp_test)?)
                .with("label_std", g_test.label_std())
                .with("constant_rmse", constant_rmse(&g_train, &g_test));
            row.m = Some(spec.hidden_width);
            row.n_inputs = Some(cfg.n_inputs);
            row.train_rmse = Some(rmse(&base.net, &g_train)?);
            row.test_rmse = Some(rmse(&base.net, &g_test)?);
            row.path_norm = Some(base.net.path_norm());
            Ok(row)
        })
        .collect();

    let mut report = ExperimentReport::new("baseline", &f.name);
    for r in rows {
        report.rows.push(r?);
    }
    report
        .checks
        .insert("row_per_grid_point".into(), report.rows.len() == cfg.specs.len());
    report.notes.push(
        "baseline rows: test_rmse is the point-value network; spectral_test_rmse the coefficient network at matched parameter count"
            .into(),
    );
    Ok(report)
}

fn point_values(v: &CoeffVector, points: &[f64]) -> Result<Vec<f64>> {
    points.iter().map(|&x| v.evaluate(&[x])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::make_linear;

    #[test]
    fn uniform_points() {
        let s = BaselineSpec::uniform(4, 3);
        assert_eq!(s.sample_points, vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(s.n_params(), 1 + 3 * 6);
        s.validate().unwrap();
        let mut bad = s.clone();
        bad.sample_points[0] = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn one_row_per_spec() {
        let f = make_linear(&[1.0]).unwrap();
        let cfg = BaselineConfig {
            n_inputs: 4,
            specs: vec![BaselineSpec::uniform(4, 2), BaselineSpec::uniform(8, 3)],
            train: TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
            n_train: 128,
            n_test: 64,
            data_seed: 0,
        };
        let r = deeponet_baseline(&f, &cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.all_checks_pass());
        for row in &r.rows {
            assert!(row.extra.contains_key("spectral_test_rmse"));
            let pb = row.extra["params_baseline"];
            let ps = row.extra["params_spectral"];
            assert!((pb - ps).abs() <= 6.0 / 2.0 + 1.0);
        }
    }
}
