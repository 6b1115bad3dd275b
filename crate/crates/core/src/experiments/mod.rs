//! Empirical studies around the shallow-network approximation rate: width
//! sweeps, input cutoff certification, the per-coordinate network form and a
//! grid-sampling baseline.
//!
//! Errors are measured as RMSE under the sampling measure of the functional's
//! domain. This is an `L²`-type surrogate; the `ℋ₁` error that the rate
//! bound is stated in is not estimated here.

mod baseline;
mod convergence;
mod cutoff;
mod per_coordinate;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::function_space::{BasisSpec, DomainSpec};
use crate::train::Dataset;
use crate::zoo::FunctionalSpec;

pub use baseline::{deeponet_baseline, BaselineConfig, BaselineSpec};
pub use convergence::{convergence_study, convergence_study_partial, ConvergenceConfig};
pub use cutoff::{cutoff_study, h1_box_norm_estimate, CutoffConfig};
pub use per_coordinate::{budget_widths, per_coordinate_study, PerCoordinateConfig};

/// One grid point of a study.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_inputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl MetricRow {
    pub fn labeled(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub half_width: f64,
    pub n_points: usize,
}

/// Fits `ln y = intercept + slope · ln x` by least squares. Needs at least
/// four points with positive coordinates.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 4 {
        return Err(Error::InvalidArgument("slope fit needs at least 4 points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        half_width: t * se,
        n_points: x.len(),
    })
}

/// Output of a study. Wall-clock times are kept out of the serialized form so
/// that reports are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub functional: String,
    pub rows: Vec<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_slope: Option<SlopeFit>,
    /// Named pass/fail outcomes of checks the study performs.
    #[serde(default)]
    pub checks: BTreeMap<String, bool>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub code_version: String,
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}

impl ExperimentReport {
    pub fn new(experiment_id: &str, functional: &str) -> Self {
        Self {
            experiment_id: experiment_id.to_string(),
            functional: functional.to_string(),
            rows: Vec::new(),
            fitted_slope: None,
            checks: BTreeMap::new(),
            notes: Vec::new(),
            config_hash: String::new(),
            code_version: String::new(),
            wall_times: Vec::new(),
        }
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.values().all(|v| *v)
    }

    /// Per-row metrics. Fixed columns first, then the union of `extra` keys
    /// in sorted order; absent values are empty cells.
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        let extras: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.extra.keys()).collect();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "label", "m", "n_inputs", "delta", "seed", "train_rmse", "test_rmse", "path_norm",
        ];
        header.extend(extras.iter().map(|s| s.as_str()));
        out.write_record(&header)?;
        fn cell<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        for r in &self.rows {
            let mut rec = vec![
                r.label.clone(),
                cell(r.m),
                cell(r.n_inputs),
                cell(r.delta),
                cell(r.seed),
                cell(r.train_rmse),
                cell(r.test_rmse),
                cell(r.path_norm),
            ];
            rec.extend(extras.iter().map(|k| cell(r.extra.get(*k))));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `(log m, log test_rmse)` for rows carrying both.
    pub fn write_plot_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["log_m", "log_rmse"])?;
        for r in &self.rows {
            if let (Some(m), Some(e)) = (r.m, r.test_rmse) {
                if e > 0.0 {
                    out.write_record([(m as f64).ln().to_string(), e.ln().to_string()])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Draws `count` coefficient vectors of length `n_inputs` from `domain` and
/// labels them with `f`.
pub fn sample_dataset(
    f: &FunctionalSpec,
    domain: &DomainSpec,
    n_inputs: usize,
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    let vs = domain.sample_many(BasisSpec::default(), n_inputs, count, seed)?;
    let labels = vs.iter().map(|v| f.evaluate(v)).collect();
    Dataset::new(vs.into_iter().map(|v| v.coeffs().to_vec()).collect(), labels)
}

/// Seed for stream `stream` derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slope_of_exact_power_law() {
        let x = [4.0, 8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|m: &f64| 3.0 * m.powf(-0.5)).collect();
        let fit = fit_log_log(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit.half_width < 1e-10);
    }

    #[test]
    fn slope_confidence_width() {
        // Residuals ±0.1 alternate; the half-width uses t(0.975, 2) = 4.3027.
        let x = [1.0f64, 2.0, 4.0, 8.0];
        let noise = [0.1, -0.1, -0.1, 0.1];
        let y: Vec<f64> = x.iter().zip(noise).map(|(m, e)| (-m.ln() + e).exp()).collect();
        let fit = fit_log_log(&x, &y).unwrap();
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        let sse: f64 = lx
            .iter()
            .zip(&y)
            .map(|(a, b)| (b.ln() - fit.intercept - fit.slope * a).powi(2))
            .sum();
        let want = 4.302_652_729_911_275 * (sse / 2.0 / sxx).sqrt();
        assert!((fit.half_width - want).abs() < 1e-9);
    }

    #[test]
    fn slope_rejects_short_or_nonpositive() {
        assert!(fit_log_log(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut r = ExperimentReport::new("t", "f");
        let mut a = MetricRow::labeled("a").with("z", 1.5);
        a.m = Some(4);
        a.test_rmse = Some(0.5);
        r.rows.push(a);
        r.rows.push(MetricRow::labeled("b").with("y", 2.0));
        let mut buf = Vec::new();
        r.write_metrics_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "label,m,n_inputs,delta,seed,train_rmse,test_rmse,path_norm,y,z\n\
             a,4,,,,,0.5,,,1.5\n\
             b,,,,,,,,2,\n"
        );
        let mut buf = Vec::new();
        r.write_plot_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("log_m,log_rmse\n1.38629"));
    }

    #[test]
    fn wall_times_are_not_serialized() {
        let mut r = ExperimentReport::new("t", "f");
        r.wall_times.push(1.0);
        let s = serde_json::to_string(&r).unwrap();
        assert!(!s.contains("wall"));
    }

    proptest! {
        #[test]
        fn power_law_slope_recovered(c in 0.01f64..100.0, p in -2.0f64..2.0) {
            let x = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
            let y: Vec<f64> = x.iter().map(|m: &f64| c * m.powf(p)).collect();
            prop_assert!((fit_log_log(&x, &y).unwrap().slope - p).abs() < 1e-10);
        }
    }
}
