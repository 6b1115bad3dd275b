//! Concrete target functionals with declared decomposition structure
//! `f(v) = Σ_j f_j(b_i : i ∈ D_j)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{CoeffVector, DomainSpec};

pub type BlockFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The finite-dimensional piece `f_j` attached to one block `D_j`.
#[derive(Clone)]
pub enum Piece {
    /// `weight · b^exponent` on a singleton block.
    Power { weight: f64, exponent: u32 },
    /// `weight · b_a · b_b` on a two-element block.
    Product { weight: f64 },
    /// `value`, independent of the block coordinates.
    Constant(f64),
    /// Arbitrary function of the block coordinates (in block order).
    Custom(BlockFn),
}

impl Piece {
    pub fn eval(&self, b: &[f64]) -> f64 {
        match self {
            Piece::Power { weight, exponent } => weight * b[0].powi(*exponent as i32),
            Piece::Product { weight } => weight * b[0] * b[1],
            Piece::Constant(c) => *c,
            Piece::Custom(f) => f(b),
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Power { weight, exponent } => write!(f, "Power({weight}·b^{exponent})"),
            Piece::Product { weight } => write!(f, "Product({weight}·b·b')"),
            Piece::Constant(c) => write!(f, "Constant({c})"),
            Piece::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// One block `D_j` (sorted 1-based coordinates) and its piece.
#[derive(Debug, Clone)]
pub struct Block {
    pub coords: Vec<usize>,
    pub piece: Piece,
}

#[derive(Clone)]
pub enum Structure {
    Separable(Vec<Block>),
    /// Not a finite sum of low-dimensional pieces; only pointwise evaluation
    /// is available.
    Coupled { coords: Vec<usize>, eval: BlockFn },
}

#[derive(Clone)]
pub struct FunctionalSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub domain: DomainSpec,
    pub structure: Structure,
}

impl fmt::Debug for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("FunctionalSpec");
        d.field("name", &self.name).field("params", &self.params).field("domain", &self.domain);
        match &self.structure {
            Structure::Separable(blocks) => d.field("blocks", blocks),
            Structure::Coupled { coords, .. } => d.field("coupled", coords),
        };
        d.finish()
    }
}

impl FunctionalSpec {
    /// Separable functional from explicit blocks. Each block must be nonempty
    /// with sorted, distinct, 1-based coordinates.
    pub fn from_blocks(
        name: impl Into<String>,
        domain: DomainSpec,
        blocks: Vec<Block>,
    ) -> Result<Self> {
        for (j, b) in blocks.iter().enumerate() {
            if b.coords.is_empty() {
                return Err(Error::Structure(format!("block {} is empty", j + 1)));
            }
            if b.coords[0] == 0 || b.coords.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structure(format!(
                    "block {} coordinates {:?} must be sorted, distinct and 1-based",
                    j + 1,
                    b.coords
                )));
            }
            let arity_ok = match b.piece {
                Piece::Power { .. } => b.coords.len() == 1,
                Piece::Product { .. } => b.coords.len() == 2,
                _ => true,
            };
            if !arity_ok {
                return Err(Error::Structure(format!(
                    "block {} piece {:?} does not match {} coordinates",
                    j + 1,
                    b.piece,
                    b.coords.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            params: BTreeMap::new(),
            domain,
            structure: Structure::Separable(blocks),
        })
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        match &self.structure {
            Structure::Separable(b) => Some(b),
            Structure::Coupled { .. } => None,
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.structure, Structure::Separable(_))
    }

    /// Whether every block is a singleton (`D = {{1},{2},...}`-type structure).
    pub fn is_singleton_structure(&self) -> bool {
        self.blocks()
            .is_some_and(|b| b.iter().all(|blk| blk.coords.len() == 1))
    }

    /// Largest coordinate the functional reads.
    pub fn max_coord(&self) -> usize {
        match &self.structure {
            Structure::Separable(blocks) => blocks
                .iter()
                .filter_map(|b| b.coords.last().copied())
                .max()
                .unwrap_or(0),
            Structure::Coupled { coords, .. } => coords.last().copied().unwrap_or(0),
        }
    }

    /// Evaluates on raw coefficients; positions past the end of `b` read as 0.
    pub fn evaluate_slice(&self, b: &[f64]) -> f64 {
        let at = |p: usize| b.get(p - 1).copied().unwrap_or(0.0);
        match &self.structure {
            Structure::Separable(blocks) => {
                let mut buf = Vec::with_capacity(4);
                blocks
                    .iter()
                    .map(|blk| {
                        buf.clear();
                        buf.extend(blk.coords.iter().map(|&p| at(p)));
                        blk.piece.eval(&buf)
                    })
                    .sum()
            }
            Structure::Coupled { coords, eval } => {
                let sub: Vec<f64> = coords.iter().map(|&p| at(p)).collect();
                eval(&sub)
            }
        }
    }

    pub fn evaluate(&self, v: &CoeffVector) -> f64 {
        self.evaluate_slice(v.coeffs())
    }

    fn with_params<I: IntoIterator<Item = (String, f64)>>(mut self, params: I) -> Self {
        self.params.extend(params);
        self
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("weight sequence is empty".into()));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight {} is not finite", i + 1)));
    }
    Ok(())
}

fn weight_params(prefix: &str, weights: &[f64]) -> Vec<(String, f64)> {
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| (format!("{prefix}_{}", i + 1), w))
        .collect()
}

fn power_functional(name: &str, weights: &[f64], exponent: u32) -> Result<FunctionalSpec> {
    check_weights(weights)?;
    let blocks = weights
        .iter()
        .enumerate()
        .map(|(i, &weight)| Block {
            coords: vec![i + 1],
            piece: Piece::Power { weight, exponent },
        })
        .collect();
    Ok(FunctionalSpec::from_blocks(name, DomainSpec::Bound, blocks)?
        .with_params(weight_params(if exponent == 1 { "c" } else { "s" }, weights)))
}

/// `f(v) = Σ c_i b_i`, structure `{{1},...,{N}}`.
pub fn make_linear(weights: &[f64]) -> Result<FunctionalSpec> {
    power_functional("linear", weights, 1)
}

/// `f(v) = Σ s_i b_i³`, structure `{{1},...,{N}}`.
pub fn make_cubic(weights: &[f64]) -> Result<FunctionalSpec> {
    power_functional("cubic", weights, 3)
}

/// `f(v) = Σ s_i b_i b_{i+1}`, structure `{{1,2},...,{N,N+1}}`.
pub fn make_bilinear(weights: &[f64]) -> Result<FunctionalSpec> {
    check_weights(weights)?;
    let blocks = weights
        .iter()
        .enumerate()
        .map(|(i, &weight)| Block {
            coords: vec![i + 1, i + 2],
            piece: Piece::Product { weight },
        })
        .collect();
    Ok(FunctionalSpec::from_blocks("bilinear", DomainSpec::Bound, blocks)?
        .with_params(weight_params("s", weights)))
}

/// Constant functional `f ≡ value`, attached to coordinate 1 so that
/// `a_0 = value`.
pub fn make_constant(value: f64) -> Result<FunctionalSpec> {
    if !value.is_finite() {
        return Err(Error::InvalidArgument("constant is not finite".into()));
    }
    let blocks = vec![Block {
        coords: vec![1],
        piece: Piece::Constant(value),
    }];
    Ok(FunctionalSpec::from_blocks("constant", DomainSpec::Bound, blocks)?
        .with_params([("value".to_string(), value)]))
}

/// Frequency of a real-trigonometric coefficient position on `[0,1]`.
fn trig_frequency(position: usize) -> f64 {
    position.div_ceil(2) as f64
}

/// Gradient energy `E(v) = ∫₀¹ ½α v′(x)² dx` on the real-trigonometric basis,
/// which is `Σ_i 2π²α n_i² b_i²` with `n_i` the frequency of position `i`.
pub fn make_energy(alpha: f64, domain: DomainSpec, n_coeffs: usize) -> Result<FunctionalSpec> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    let DomainSpec::Decay { c, exponent } = domain else {
        return Err(Error::InvalidDomain("energy functional needs a decay domain".into()));
    };
    domain.validate()?;
    if exponent <= 1.5 {
        return Err(Error::DomainTooSlowDecay {
            exponent,
            required: 1.5,
        });
    }
    if n_coeffs < 1 {
        return Err(Error::InvalidArgument("n_coeffs must be >= 1".into()));
    }
    let blocks = (1..=n_coeffs)
        .map(|i| Block {
            coords: vec![i],
            piece: Piece::Power {
                weight: 2.0 * PI * PI * alpha * trig_frequency(i).powi(2),
                exponent: 2,
            },
        })
        .collect();
    Ok(FunctionalSpec::from_blocks("energy", domain, blocks)?.with_params([
        ("alpha".to_string(), alpha),
        ("C".to_string(), c),
        ("exponent".to_string(), exponent),
    ]))
}

/// `f(v) = ‖v‖_{L²} = sqrt(Σ b_i²)` on an orthonormal basis. The square root
/// couples all coordinates, so the functional is marked non-separable.
pub fn make_l2norm(domain: DomainSpec, n_coeffs: usize) -> Result<FunctionalSpec> {
    let DomainSpec::Decay { c, exponent } = domain else {
        return Err(Error::InvalidDomain("L2-norm functional needs a decay domain".into()));
    };
    domain.validate()?;
    if exponent <= 0.5 {
        return Err(Error::DomainTooSlowDecay {
            exponent,
            required: 0.5,
        });
    }
    if n_coeffs < 1 {
        return Err(Error::InvalidArgument("n_coeffs must be >= 1".into()));
    }
    let eval: BlockFn = Arc::new(|b: &[f64]| b.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(FunctionalSpec {
        name: "l2norm".into(),
        params: BTreeMap::from([("C".to_string(), c), ("exponent".to_string(), exponent)]),
        domain,
        structure: Structure::Coupled {
            coords: (1..=n_coeffs).collect(),
            eval,
        },
    })
}

/// Serializable handle on a zoo functional, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZooEntry {
    Linear { weights: Vec<f64> },
    Cubic { weights: Vec<f64> },
    Bilinear { weights: Vec<f64> },
    Energy { alpha: f64, domain: DomainSpec, n_coeffs: usize },
    L2norm { domain: DomainSpec, n_coeffs: usize },
    Constant { value: f64 },
}

impl ZooEntry {
    pub fn build(&self) -> Result<FunctionalSpec> {
        match self {
            ZooEntry::Linear { weights } => make_linear(weights),
            ZooEntry::Cubic { weights } => make_cubic(weights),
            ZooEntry::Bilinear { weights } => make_bilinear(weights),
            ZooEntry::Energy {
                alpha,
                domain,
                n_coeffs,
            } => make_energy(*alpha, *domain, *n_coeffs),
            ZooEntry::L2norm { domain, n_coeffs } => make_l2norm(*domain, *n_coeffs),
            ZooEntry::Constant { value } => make_constant(*value),
        }
    }
}
