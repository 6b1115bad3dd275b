//! Run configurations. Every config carries `schema_version`; unknown keys
//! are rejected. A global `seed` (from the file or `--seed`) replaces the
//! component seeds with streams derived from it.

use fbarron::experiments::{derive_seed, BaselineConfig, ConvergenceConfig, CutoffConfig, PerCoordinateConfig};
use fbarron::pde::PoissonProblem;
use fbarron::spectral::{Method, POINTS_PER_FREQUENCY};
use fbarron::zoo::ZooEntry;
use fbarron::{DomainSpec, Error, FunctionalSpec, Result, TrainConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub trait RunConfig: Serialize {
    fn schema_version(&self) -> u32;

    /// Applies a global seed override (and records it in the config).
    fn apply_seed(&mut self, seed: Option<u64>);

    /// Checks every parameter before any work starts.
    fn check(&self) -> Result<()>;

    fn validate(&self) -> Result<()> {
        if self.schema_version() != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version()
            )));
        }
        self.check()
    }
}

fn bound() -> DomainSpec {
    DomainSpec::Bound
}

fn twenty() -> usize {
    20
}

fn eval_points() -> usize {
    321
}

fn resolve_seed(slot: &mut Option<u64>, flag: Option<u64>) -> Option<u64> {
    if flag.is_some() {
        *slot = flag;
    }
    *slot
}

fn build(functional: &ZooEntry, domain: Option<DomainSpec>) -> Result<FunctionalSpec> {
    let mut f = functional.build()?;
    if let Some(d) = domain {
        d.validate()?;
        f.domain = d;
    }
    Ok(f)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsRun {
    pub schema_version: u32,
    pub functional: ZooEntry,
    #[serde(default = "bound")]
    pub domain: DomainSpec,
    pub max_linf: u32,
    /// Quadrature nodes per axis; defaults to `max(8·max_linf, 64)`.
    #[serde(default)]
    pub quad_points: Option<usize>,
    #[serde(default)]
    pub method: Method,
}

impl CoefficientsRun {
    pub fn functional(&self) -> Result<FunctionalSpec> {
        self.functional.build()
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
            .unwrap_or((POINTS_PER_FREQUENCY * self.max_linf as usize).max(64))
    }
}

impl RunConfig for CoefficientsRun {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, _seed: Option<u64>) {}

    fn check(&self) -> Result<()> {
        let f = self.functional()?;
        self.domain.validate()?;
        if !f.is_separable() {
            return Err(Error::StructureMissing(f.name));
        }
        if self.max_linf == 0 {
            return Err(Error::InvalidArgument("max_linf must be >= 1".into()));
        }
        Ok(())
    }
}

/// A study over one zoo functional; `study` holds the experiment parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRun<T> {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    pub functional: ZooEntry,
    pub study: T,
}

impl<T> StudyRun<T> {
    pub fn functional(&self) -> Result<FunctionalSpec> {
        self.functional.build()
    }
}

impl RunConfig for StudyRun<ConvergenceConfig> {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.study.train.seed = derive_seed(s, 0);
            self.study.data_seed = derive_seed(s, 1);
        }
    }

    fn check(&self) -> Result<()> {
        self.study.validate(&self.functional()?)
    }
}

impl RunConfig for StudyRun<PerCoordinateConfig> {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.study.train.seed = derive_seed(s, 0);
            self.study.data_seed = derive_seed(s, 1);
        }
    }

    fn check(&self) -> Result<()> {
        let f = self.functional()?;
        self.study.train.validate()?;
        if !f.is_singleton_structure() {
            return Err(Error::Structure(format!(
                "`{}` does not split into single-coordinate pieces",
                f.name
            )));
        }
        if self.study.n_inputs < f.max_coord().max(1) || self.study.n_train == 0 || self.study.n_test == 0 {
            return Err(Error::InvalidArgument("invalid dataset sizes".into()));
        }
        Ok(())
    }
}

impl RunConfig for StudyRun<BaselineConfig> {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.study.train.seed = derive_seed(s, 0);
            self.study.data_seed = derive_seed(s, 1);
        }
    }

    fn check(&self) -> Result<()> {
        let f = self.functional()?;
        self.study.train.validate()?;
        if self.study.specs.is_empty() {
            return Err(Error::InvalidArgument("no baseline specs".into()));
        }
        for s in &self.study.specs {
            s.validate()?;
        }
        if self.study.n_inputs < f.max_coord().max(1) || self.study.n_train == 0 || self.study.n_test == 0 {
            return Err(Error::InvalidArgument("invalid dataset sizes".into()));
        }
        Ok(())
    }
}

/// Trains one dense network, then compares it with its input truncations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffStudy {
    pub n_inputs: usize,
    pub width: usize,
    pub train: TrainConfig,
    pub n_train: usize,
    #[serde(default)]
    pub data_seed: u64,
    /// Training domain; the functional's own domain when absent.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    pub cutoff: CutoffConfig,
}

impl RunConfig for StudyRun<CutoffStudy> {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.study.train.seed = derive_seed(s, 0);
            self.study.data_seed = derive_seed(s, 1);
            self.study.cutoff.seed = derive_seed(s, 2);
        }
    }

    fn check(&self) -> Result<()> {
        let f = build(&self.functional, self.study.domain)?;
        self.study.train.validate()?;
        if self.study.width == 0 || self.study.n_train == 0 {
            return Err(Error::InvalidArgument("width and n_train must be positive".into()));
        }
        if self.study.n_inputs < f.max_coord().max(1) {
            return Err(Error::InvalidArgument(format!(
                "n_inputs = {} does not cover coordinate {} read by `{}`",
                self.study.n_inputs,
                f.max_coord(),
                f.name
            )));
        }
        let c = &self.study.cutoff;
        if c.n_cut == 0 || c.n_cut >= self.study.n_inputs {
            return Err(Error::InvalidArgument(format!(
                "n_cut must lie in 1..{}, got {}",
                self.study.n_inputs, c.n_cut
            )));
        }
        if c.deltas.is_empty() || c.deltas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument("deltas must be nonempty and strictly decreasing".into()));
        }
        for &d in c.deltas.iter().filter(|d| **d != 0.0) {
            DomainSpec::Cut { n: c.n_cut, delta: d }.validate()?;
        }
        Ok(())
    }
}

/// PDE learning at one point or on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeRun {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    pub problem: PoissonProblem,
    /// Where the coefficients of `g` are drawn from.
    #[serde(default = "bound")]
    pub domain: DomainSpec,
    /// Number of right-hand sides `M`.
    pub samples: usize,
    pub width: usize,
    pub train: TrainConfig,
    #[serde(default)]
    pub data_seed: u64,
    /// Evaluation point (pointwise mode).
    #[serde(default)]
    pub point: Option<f64>,
    /// Number of grid points `Q` (grid mode).
    #[serde(default)]
    pub grid_size: Option<usize>,
    /// Held-out `g` for the grid-mode error check.
    #[serde(default = "twenty")]
    pub eval_functions: usize,
    #[serde(default = "eval_points")]
    pub eval_points: usize,
}

impl PdeRun {
    pub fn check_mode(&self, grid: bool) -> Result<()> {
        match (grid, self.point, self.grid_size) {
            (false, Some(y), _) if y > 0.0 && y < 1.0 => Ok(()),
            (false, Some(y), _) => Err(Error::InvalidArgument(format!("point = {y} must lie in (0, 1)"))),
            (false, None, _) => Err(Error::InvalidArgument("pointwise mode needs `point`".into())),
            (true, _, Some(q)) if q >= 1 => Ok(()),
            (true, _, _) => Err(Error::InvalidArgument("grid mode needs `grid_size` >= 1".into())),
        }
    }
}

impl RunConfig for PdeRun {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.train.seed = derive_seed(s, 0);
            self.data_seed = derive_seed(s, 1);
        }
    }

    fn check(&self) -> Result<()> {
        self.problem.validate()?;
        self.domain.validate()?;
        self.train.validate()?;
        if self.samples < 2 || self.width == 0 || self.eval_functions == 0 || self.eval_points < 2 {
            return Err(Error::InvalidArgument(
                "samples >= 2, width >= 1, eval_functions >= 1 and eval_points >= 2 are required".into(),
            ));
        }
        if let DomainSpec::Cut { n, .. } = self.domain {
            if n > self.problem.n_modes {
                return Err(Error::InvalidDomain(format!(
                    "cut threshold N = {n} exceeds n_modes = {}",
                    self.problem.n_modes
                )));
            }
        }
        Ok(())
    }
}

/// Labelled samples `(b, f(b))` for external use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDataRun {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    pub functional: ZooEntry,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    pub n_inputs: usize,
    pub count: usize,
    #[serde(default)]
    pub data_seed: u64,
}

impl SampleDataRun {
    pub fn functional(&self) -> Result<FunctionalSpec> {
        build(&self.functional, self.domain)
    }
}

impl RunConfig for SampleDataRun {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = resolve_seed(&mut self.seed, seed) {
            self.data_seed = derive_seed(s, 1);
        }
    }

    fn check(&self) -> Result<()> {
        let f = self.functional()?;
        f.domain.validate()?;
        if self.count == 0 || self.n_inputs < f.max_coord().max(1) {
            return Err(Error::InvalidArgument(format!(
                "count must be positive and n_inputs must cover coordinate {}",
                f.max_coord()
            )));
        }
        if let DomainSpec::Cut { n, .. } = f.domain {
            if self.n_inputs < n {
                return Err(Error::InvalidDomain(format!(
                    "n_inputs = {} is below the cut threshold N = {n}",
                    self.n_inputs
                )));
            }
        }
        Ok(())
    }
}
