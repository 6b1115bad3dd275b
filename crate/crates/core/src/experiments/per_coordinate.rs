use serde::{Deserialize, Serialize};

use super::{derive_seed, sample_dataset, ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::net::NetForm;
use crate::train::{fit, rmse, Dataset, TrainConfig, TrainOutcome};
use crate::zoo::FunctionalSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerCoordinateConfig {
    pub n_inputs: usize,
    /// Parameter budget `P` shared by both network forms.
    pub budget: usize,
    pub train: TrainConfig,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "one")]
    pub restarts: usize,
    #[serde(default)]
    pub data_seed: u64,
}

fn one() -> usize {
    1
}

/// Widths of the dense form (`1 + m(N + 2)` parameters) and units per
/// coordinate of the per-coordinate form (`1 + 3mN` parameters) within `budget`.
pub fn budget_widths(budget: usize, n_inputs: usize) -> (usize, usize) {
    let p = budget.saturating_sub(1);
    ((p / (n_inputs + 2)).max(1), (p / (3 * n_inputs)).max(1))
}

/// Trains the dense and per-coordinate forms at (at most) equal parameter
/// count and reports both test errors next to the best constant predictor.
pub fn per_coordinate_study(f: &FunctionalSpec, cfg: &PerCoordinateConfig) -> Result<ExperimentReport> {
    if !f.is_singleton_structure() {
        return Err(Error::Structure(format!(
            "`{}` does not split into single-coordinate pieces",
            f.name
        )));
    }
    cfg.train.validate()?;
    if cfg.n_inputs < f.max_coord() || cfg.n_inputs == 0 {
        return Err(Error::InvalidArgument("n_inputs does not cover the functional".into()));
    }
    if cfg.n_train == 0 || cfg.n_test == 0 || cfg.restarts == 0 || cfg.budget == 0 {
        return Err(Error::InvalidArgument("sizes must be positive".into()));
    }
    let data = sample_dataset(f, &f.domain, cfg.n_inputs, cfg.n_train + cfg.n_test, cfg.data_seed)?;
    let (train_set, test_set) = data.split(cfg.n_train);
    let (m_dense, m_per) = budget_widths(cfg.budget, cfg.n_inputs);

    let best = |form: NetForm, width: usize, stream: u64| -> Result<TrainOutcome> {
        let mut best: Option<(f64, TrainOutcome)> = None;
        for r in 0..cfg.restarts {
            let seed = derive_seed(cfg.train.seed, stream * 1000 + r as u64);
            let out = fit(form, width, &train_set, &cfg.train.with_seed(seed)).map_err(|e| Error::GridPoint {
                point: format!("{form:?}, restart={r}"),
                source: Box::new(e),
            })?;
            let tr = rmse(&out.net, &train_set)?;
            if best.as_ref().is_none_or(|(b, _)| tr < *b) {
                best = Some((tr, out));
            }
        }
        Ok(best.expect("restarts >= 1").1)
    };
    let (dense, per) = rayon::join(
        || best(NetForm::Dense, m_dense, 0),
        || best(NetForm::PerCoordinate, m_per * cfg.n_inputs, 1),
    );
    let (dense, per) = (dense?, per?);

    let mut report = ExperimentReport::new("per-coordinate", &f.name);
    let constant = constant_rmse(&train_set, &test_set);
    let mut rows = Vec::new();
    for (label, out) in [("dense", &dense), ("per-coordinate", &per)] {
        let mut row = MetricRow::labeled(label).with("params", out.net.n_params() as f64);
        row.m = Some(out.net.width());
        row.n_inputs = Some(cfg.n_inputs);
        row.train_rmse = Some(rmse(&out.net, &train_set)?);
        row.test_rmse = Some(rmse(&out.net, &test_set)?);
        row.path_norm = Some(out.net.path_norm());
        rows.push(row);
    }
    let mut c = MetricRow::labeled("constant").with("params", 1.0);
    c.test_rmse = Some(constant);
    rows.push(c);
    report.checks.insert(
        "both_beat_constant".into(),
        rows[..2].iter().all(|r| r.test_rmse.unwrap() < constant) || constant == 0.0,
    );
    report.rows = rows;
    report
        .notes
        .push(format!("budget {}: dense width {m_dense}, per-coordinate {m_per} units per input", cfg.budget));
    Ok(report)
}

/// Test RMSE of the training-label mean.
pub(crate) fn constant_rmse(train: &Dataset, test: &Dataset) -> f64 {
    let mu = train.label_mean();
    (test.labels.iter().map(|y| (y - mu).powi(2)).sum::<f64>() / test.len().max(1) as f64).sqrt()
}
