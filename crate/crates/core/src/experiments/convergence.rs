use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, fit_log_log, sample_dataset, ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::function_space::DomainSpec;
use crate::net::NetForm;
use crate::train::{fit, rmse, TrainConfig};
use crate::zoo::FunctionalSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Network input length `N` (coefficients read from each sample).
    pub n_inputs: usize,
    /// Sampling domain; the functional's own domain when absent.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    pub m_grid: Vec<usize>,
    pub train: TrainConfig,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub data_seed: u64,
}

/// Train RMSE, test RMSE, path norm, seed and wall time of one fit.
type Trial = (f64, f64, f64, u64, f64);

fn default_restarts() -> usize {
    3
}

impl ConvergenceConfig {
    pub fn validate(&self, f: &FunctionalSpec) -> Result<()> {
        self.train.validate()?;
        if self.m_grid.len() < 4 {
            return Err(Error::InvalidArgument("m_grid needs at least 4 widths".into()));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) || self.m_grid[0] == 0 {
            return Err(Error::InvalidArgument("m_grid must be positive and strictly increasing".into()));
        }
        if self.n_train == 0 || self.n_test == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument("n_train, n_test and restarts must be positive".into()));
        }
        if self.train.batch_size > self.n_train {
            return Err(Error::InvalidArgument("batch_size exceeds n_train".into()));
        }
        if self.n_inputs < f.max_coord() {
            return Err(Error::InvalidArgument(format!(
                "n_inputs = {} does not cover coordinate {} read by `{}`",
                self.n_inputs,
                f.max_coord(),
                f.name
            )));
        }
        self.domain.unwrap_or(f.domain).validate()
    }
}

/// Trains dense networks of every width in the grid (best of `restarts`
/// seeds, selected by training RMSE) and fits the log-log slope of test RMSE
/// against width.
pub fn convergence_study(f: &FunctionalSpec, cfg: &ConvergenceConfig) -> Result<ExperimentReport> {
    let (report, err) = convergence_study_partial(f, cfg)?;
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Like [`convergence_study`], but on a training failure also returns the
/// rows that completed before the failing grid point.
pub fn convergence_study_partial(
    f: &FunctionalSpec,
    cfg: &ConvergenceConfig,
) -> Result<(ExperimentReport, Option<Error>)> {
    cfg.validate(f)?;
    let domain = cfg.domain.unwrap_or(f.domain);
    let data = sample_dataset(f, &domain, cfg.n_inputs, cfg.n_train + cfg.n_test, cfg.data_seed)?;
    let (train_set, test_set) = data.split(cfg.n_train);

    let jobs: Vec<(usize, usize)> = (0..cfg.m_grid.len())
        .flat_map(|i| (0..cfg.restarts).map(move |r| (i, r)))
        .collect();
    let results: Vec<Result<Trial>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let m = cfg.m_grid[i];
            let seed = derive_seed(cfg.train.seed, (i * cfg.restarts + r) as u64);
            let start = Instant::now();
            let out = fit(NetForm::Dense, m, &train_set, &cfg.train.with_seed(seed)).map_err(|e| {
                Error::GridPoint {
                    point: format!("m={m}, restart={r}"),
                    source: Box::new(e),
                }
            })?;
            let tr = rmse(&out.net, &train_set)?;
            let te = rmse(&out.net, &test_set)?;
            Ok((tr, te, out.net.path_norm(), seed, start.elapsed().as_secs_f64()))
        })
        .collect();

    let mut report = ExperimentReport::new("convergence", &f.name);
    report.notes.push(
        "test_rmse is measured under the sampling measure of the domain; it is not an H1 estimate"
            .into(),
    );
    let mut failure = None;
    let mut results = results.into_iter();
    for &m in &cfg.m_grid {
        let mut done = Vec::with_capacity(cfg.restarts);
        for r in results.by_ref().take(cfg.restarts) {
            match r {
                Ok(v) => done.push(v),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        if failure.is_some() {
            break;
        }
        let best = *done
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("restarts >= 1");
        let mut row = MetricRow::labeled(format!("m={m}"))
            .with("params", (1 + m * (cfg.n_inputs + 2)) as f64)
            .with("label_std", test_set.label_std());
        row.m = Some(m);
        row.n_inputs = Some(cfg.n_inputs);
        row.seed = Some(best.3);
        row.train_rmse = Some(best.0);
        row.test_rmse = Some(best.1);
        row.path_norm = Some(best.2);
        report.rows.push(row);
        report.wall_times.extend(done.iter().map(|r| r.4));
    }

    if failure.is_none() {
        let ms: Vec<f64> = report.rows.iter().map(|r| r.m.unwrap() as f64).collect();
        let es: Vec<f64> = report.rows.iter().map(|r| r.test_rmse.unwrap()).collect();
        report.fitted_slope = fit_log_log(&ms, &es).ok();
        // Nested classes: the best error can only improve as the grid widens.
        let half = cfg.m_grid.len().div_ceil(2);
        let min_head = es[..half].iter().cloned().fold(f64::INFINITY, f64::min);
        let min_all = es.iter().cloned().fold(f64::INFINITY, f64::min);
        report.checks.insert("envelope_monotone".into(), min_head >= min_all);
    }
    Ok((report, failure))
}
