use std::path::{Path, PathBuf};

use fbarron::experiments::{
    convergence_study_partial, cutoff_study, deeponet_baseline, derive_seed, per_coordinate_study, sample_dataset,
    BaselineConfig, ConvergenceConfig, ExperimentReport, MetricRow, PerCoordinateConfig,
};
use fbarron::pde::{build_grid_operator, evaluate_grid_operator, generate_dataset, learn_pointwise, uniform_grid};
use fbarron::report::RunDir;
use fbarron::spectral::{barron_norm, coefficients_on, hilbert_norm};
use fbarron::train::fit;
use fbarron::{Error, NetForm};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{CoefficientsRun, CutoffStudy, PdeRun, RunConfig, SampleDataRun, StudyRun};

/// Why a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed configuration.
    Config(String),
    /// A numerical check failed after the run completed.
    Runtime(String),
    Core(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
            Failure::Core(e) if e.is_validation() => 2,
            Failure::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
            Failure::Core(e) if e.is_validation() => write!(f, "configuration error: {e}"),
            Failure::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<PathBuf, Failure>;

/// Runs the command `path` (e.g. `["study", "cutoff"]`) on a raw config.
pub fn dispatch(path: &[&str], raw: serde_json::Value, seed: Option<u64>, out: &Path) -> Outcome {
    match path {
        ["coefficients"] => coefficients(parse(raw, seed)?, out),
        ["study", "convergence"] => convergence(parse(raw, seed)?, out),
        ["study", "cutoff"] => cutoff(parse(raw, seed)?, out),
        ["study", "per-coordinate"] => per_coordinate(parse(raw, seed)?, out),
        ["study", "baseline"] => baseline(parse(raw, seed)?, out),
        ["pde", "pointwise"] => pde_pointwise(parse(raw, seed)?, out),
        ["pde", "grid"] => pde_grid(parse(raw, seed)?, out),
        ["sample-data"] => sample_data(parse(raw, seed)?, out),
        _ => Err(Failure::Config(format!("unknown command `{}`", path.join(" ")))),
    }
}

fn parse<T: RunConfig + DeserializeOwned>(raw: serde_json::Value, seed: Option<u64>) -> std::result::Result<T, Failure> {
    let mut cfg: T = serde_path_to_error::deserialize(raw).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Failure::Config(e.inner().to_string())
        } else {
            Failure::Config(format!("field `{path}`: {}", e.inner()))
        }
    })?;
    cfg.apply_seed(seed);
    cfg.validate()?;
    Ok(cfg)
}

fn open<T: Serialize>(out: &Path, command: &[&str], cfg: &T) -> std::result::Result<RunDir, Failure> {
    Ok(RunDir::create(out, command, cfg)?)
}

/// Stores whatever report exists, then surfaces `err`.
fn finish(mut dir: RunDir, report: &ExperimentReport, err: Option<Error>) -> Outcome {
    dir.write_report(report)?;
    let path = dir.finish(Some(&report.wall_times))?;
    match err {
        Some(e) => {
            eprintln!("partial report kept in {}", path.display());
            Err(Failure::Core(e))
        }
        None => Ok(path),
    }
}

fn failed_report(id: &str, functional: &str, e: &Error) -> ExperimentReport {
    let mut r = ExperimentReport::new(id, functional);
    r.notes.push(format!("run failed: {e}"));
    r
}

fn coefficients(cfg: CoefficientsRun, out: &Path) -> Outcome {
    let f = cfg.functional()?;
    let table = coefficients_on(&f, cfg.domain, cfg.max_linf, cfg.quad_points(), cfg.method)?;
    let barron = barron_norm(&table, table.s_barron);
    let hilbert = hilbert_norm(&table, table.s_hilbert);
    let mut dir = open(out, &["coefficients"], &cfg)?;
    dir.write_json("table.json", &table)?;
    dir.write_with("table.csv", |w| table.write_csv(w))?;
    let embedding_holds = hilbert <= barron;
    dir.write_json(
        "norms.json",
        &serde_json::json!({
            "functional": f.name,
            "entries": table.len(),
            "barron_norm": barron,
            "s_barron": table.s_barron,
            "hilbert_norm": hilbert,
            "s_hilbert": table.s_hilbert,
            "embedding_holds": embedding_holds,
        }),
    )?;
    let path = dir.finish(None)?;
    if !embedding_holds {
        return Err(Failure::Runtime(format!(
            "hilbert norm {hilbert} exceeds barron norm {barron}"
        )));
    }
    Ok(path)
}

fn convergence(cfg: StudyRun<ConvergenceConfig>, out: &Path) -> Outcome {
    let f = cfg.functional()?;
    let dir = open(out, &["study", "convergence"], &cfg)?;
    let (report, err) = convergence_study_partial(&f, &cfg.study)?;
    finish(dir, &report, err)
}

fn cutoff(cfg: StudyRun<CutoffStudy>, out: &Path) -> Outcome {
    let mut f = cfg.functional()?;
    if let Some(d) = cfg.study.domain {
        f.domain = d;
    }
    let mut dir = open(out, &["study", "cutoff"], &cfg)?;
    let s = &cfg.study;
    let trained = sample_dataset(&f, &f.domain, s.n_inputs, s.n_train, s.data_seed)
        .and_then(|data| fit(NetForm::Dense, s.width, &data, &s.train));
    let trained = match trained {
        Ok(t) => t,
        Err(e) => return finish(dir, &failed_report("cutoff", &f.name, &e), Some(e)),
    };
    dir.write_json("net.json", &trained.net)?;
    dir.write_json("loss_trace.json", &trained.loss_trace)?;
    match cutoff_study(&f, &trained.net, &s.cutoff) {
        Ok(r) => finish(dir, &r, None),
        Err(e) => finish(dir, &failed_report("cutoff", &f.name, &e), Some(e)),
    }
}

fn per_coordinate(cfg: StudyRun<PerCoordinateConfig>, out: &Path) -> Outcome {
    let f = cfg.functional()?;
    let dir = open(out, &["study", "per-coordinate"], &cfg)?;
    match per_coordinate_study(&f, &cfg.study) {
        Ok(r) => finish(dir, &r, None),
        Err(e) => finish(dir, &failed_report("per-coordinate", &f.name, &e), Some(e)),
    }
}

fn baseline(cfg: StudyRun<BaselineConfig>, out: &Path) -> Outcome {
    let f = cfg.functional()?;
    let dir = open(out, &["study", "baseline"], &cfg)?;
    match deeponet_baseline(&f, &cfg.study) {
        Ok(r) => finish(dir, &r, None),
        Err(e) => finish(dir, &failed_report("baseline", &f.name, &e), Some(e)),
    }
}

fn pde_pointwise(cfg: PdeRun, out: &Path) -> Outcome {
    cfg.check_mode(false)?;
    let y = cfg.point.expect("checked");
    let data = generate_dataset(&cfg.problem, &cfg.domain, &[y], cfg.samples, cfg.data_seed)?;
    let mut dir = open(out, &["pde", "pointwise"], &cfg)?;
    dir.write_with("dataset.csv", |w| data.write_csv(w))?;
    let column = data.column(0)?;
    let fit = match learn_pointwise(&column, cfg.width, &cfg.train) {
        Ok(f) => f,
        Err(e) => return finish(dir, &failed_report("pde-pointwise", "poisson", &e), Some(e)),
    };
    dir.write_json("net.json", &fit.net)?;

    // The held-out split used by the fit: the last fifth of the samples.
    let n_train = ((column.len() * 4) / 5).max(1);
    let (_, test) = column.split(n_train);
    dir.write_with("oracle_errors.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample", "prediction", "exact", "error"])?;
        for (i, (b, u)) in test.inputs.iter().zip(&test.labels).enumerate() {
            let p = fit.net.forward(b)?;
            out.write_record([(n_train + i).to_string(), p.to_string(), u.to_string(), (p - u).to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;

    let ratio = fit.test_rmse / fit.test_label_rms;
    let mut row = MetricRow::labeled(format!("y={y}"))
        .with("point", y)
        .with("test_label_rms", fit.test_label_rms)
        .with("relative_rmse", ratio);
    row.m = Some(cfg.width);
    row.n_inputs = Some(cfg.problem.n_modes);
    row.seed = Some(cfg.train.seed);
    row.train_rmse = Some(fit.train_rmse);
    row.test_rmse = Some(fit.test_rmse);
    row.path_norm = Some(fit.net.path_norm());
    let mut report = ExperimentReport::new("pde-pointwise", "poisson");
    report.rows.push(row);
    report.checks.insert("relative_rmse_below_0.05".into(), ratio < 0.05);
    finish(dir, &report, None)
}

fn pde_grid(cfg: PdeRun, out: &Path) -> Outcome {
    cfg.check_mode(true)?;
    let grid = uniform_grid(cfg.grid_size.expect("checked"));
    let mut dir = open(out, &["pde", "grid"], &cfg)?;
    let built = build_grid_operator(
        &cfg.problem,
        &cfg.domain,
        &grid,
        cfg.samples,
        cfg.width,
        &cfg.train,
        cfg.data_seed,
    );
    let (op, data) = match built {
        Ok(b) => b,
        Err(e) => return finish(dir, &failed_report("pde-grid", "poisson", &e), Some(e)),
    };
    dir.write_with("dataset.csv", |w| data.write_csv(w))?;
    dir.write_json("grid_operator.json", &op)?;

    let held_out = cfg.domain.sample_many(
        cfg.problem.basis(),
        cfg.problem.n_modes,
        cfg.eval_functions,
        derive_seed(cfg.data_seed, 1),
    )?;
    let eval = evaluate_grid_operator(&cfg.problem, &op, &held_out, cfg.eval_points)?;
    dir.write_with("oracle_errors.csv", |w| eval.write_csv(w))?;

    let mut report = ExperimentReport::new("pde-grid", "poisson");
    for (q, (&y, &r)) in op.grid.iter().zip(&op.test_rmse).enumerate() {
        let mut row = MetricRow::labeled(format!("y={y}")).with("point", y);
        row.m = Some(cfg.width);
        row.n_inputs = Some(cfg.problem.n_modes);
        row.seed = Some(cfg.train.seed.wrapping_add(q as u64));
        row.test_rmse = Some(r);
        row.path_norm = Some(op.nets[q].path_norm());
        report.rows.push(row);
    }
    report.rows.push(
        MetricRow::labeled("held-out sup error")
            .with("worst_relative_sup", eval.worst_relative_sup())
            .with("max_oracle_residual", eval.max_residual)
            .with("eval_functions", held_out.len() as f64)
            .with("eval_points", cfg.eval_points as f64),
    );
    report.checks.insert("nets_per_grid_point".into(), op.nets.len() == grid.len());
    report.checks.insert("oracle_residual_below_1e-8".into(), eval.max_residual < 1e-8);
    report.checks.insert("relative_sup_below_0.1".into(), eval.worst_relative_sup() < 0.1);
    report.notes.push(format!(
        "sup error measured on {} evenly spaced points in [{}, {}]",
        cfg.eval_points,
        grid[0],
        grid[grid.len() - 1]
    ));
    finish(dir, &report, None)
}

fn sample_data(cfg: SampleDataRun, out: &Path) -> Outcome {
    let f = cfg.functional()?;
    let data = sample_dataset(&f, &f.domain, cfg.n_inputs, cfg.count, cfg.data_seed)?;
    let mut dir = open(out, &["sample-data"], &cfg)?;
    dir.write_with("data.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=cfg.n_inputs).map(|i| format!("b{i}")).collect();
        header.push("f".into());
        out.write_record(&header)?;
        for (b, y) in data.inputs.iter().zip(&data.labels) {
            out.write_record(b.iter().chain(std::iter::once(y)).map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(dir.finish(None)?)
}
