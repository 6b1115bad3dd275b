//! Fourier coefficients `a_k(f)` of separable functionals, truncated
//! reconstruction, and the Barron (`ℬ_s`) and Hilbert (`ℋ_s`) norms.
//!
//! Coefficients are computed block by block. For a block `D_j` every
//! coordinate `i` ranges over an interval `(-h_i, h_i)`: `h_i = 1/2` on
//! `L_bound`, `h_i = δ` for tail coordinates of `L_cut`. The analysis integral
//! for coordinate `i` is
//!
//! ```text
//! (2h_i)^{-1/2} ∫_{-h_i}^{h_i} (...) exp(-iπ k_i b_i / h_i) db_i
//! ```
//!
//! which reduces to `∫ (...) exp(-2πi k_i b_i) db_i` when `h_i = 1/2`. The
//! table keeps these analysis values (the ones entering the norms) and, next
//! to them, synthesis values normalized by `(2h_i)^{-1}` so that
//! `Σ_k synth_k Π_i exp(iπ k_i b_i / h_i)` reproduces `f`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{CoeffVector, DomainSpec};
use crate::multi_index::MultiIndex;
use crate::quadrature::CompositeRule;
use crate::zoo::{Block, FunctionalSpec, Piece};

/// Imaginary residue above which a reconstruction is rejected.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Minimum quadrature points per unit of `max_linf`.
pub const POINTS_PER_FREQUENCY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    /// `a_k(f)`.
    pub value: Complex64,
    /// Coefficient of the unnormalized mode `Π exp(iπ k_i b_i / h_i)`.
    pub synthesis: Complex64,
    pub provenance: Provenance,
}

/// How block integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed forms for polynomial pieces, quadrature otherwise.
    #[default]
    Auto,
    /// Tensor Gauss–Legendre quadrature for every piece.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TableJson", try_from = "TableJson")]
pub struct FourierTable {
    entries: BTreeMap<MultiIndex, Entry>,
    domain: DomainSpec,
    pub s_barron: f64,
    pub s_hilbert: f64,
}

impl FourierTable {
    pub fn empty(domain: DomainSpec) -> Self {
        Self {
            entries: BTreeMap::new(),
            domain,
            s_barron: 2.0,
            s_hilbert: 1.0,
        }
    }

    /// Table on `L_bound` from explicit coefficients (synthesis = analysis).
    pub fn from_coefficients<I: IntoIterator<Item = (MultiIndex, Complex64)>>(iter: I) -> Self {
        let mut t = Self::empty(DomainSpec::Bound);
        for (k, a) in iter {
            t.entries.insert(
                k,
                Entry {
                    value: a,
                    synthesis: a,
                    provenance: Provenance::ClosedForm,
                },
            );
        }
        t
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: &MultiIndex) -> Option<&Entry> {
        self.entries.get(k)
    }

    /// `a_k`, zero when `k` is not stored.
    pub fn coefficient(&self, k: &MultiIndex) -> Complex64 {
        self.entries.get(k).map_or(Complex64::new(0.0, 0.0), |e| e.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Entry)> {
        self.entries.iter()
    }

    /// Largest `|a_{-k} - conj(a_k)|` over stored entries.
    pub fn conjugate_asymmetry(&self) -> f64 {
        self.entries
            .iter()
            .map(|(k, e)| (self.coefficient(&-k) - e.value.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Writes `k, l1, max_support, re, im, abs, provenance` rows for plotting
    /// coefficient decay.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "l1", "max_support", "re", "im", "abs", "provenance"])?;
        for (k, e) in &self.entries {
            out.write_record([
                k.to_string(),
                k.l1_norm().to_string(),
                k.max_support().to_string(),
                e.value.re.to_string(),
                e.value.im.to_string(),
                e.value.norm().to_string(),
                match e.provenance {
                    Provenance::ClosedForm => "closed-form".into(),
                    Provenance::Quadrature => "quadrature".into(),
                },
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    domain: DomainSpec,
    s_barron: f64,
    s_hilbert: f64,
    rows: Vec<(MultiIndex, f64, f64, Provenance)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synthesis: Option<Vec<(MultiIndex, f64, f64)>>,
}

impl From<FourierTable> for TableJson {
    fn from(t: FourierTable) -> Self {
        let same = t.entries.values().all(|e| e.value == e.synthesis);
        let synthesis = (!same).then(|| {
            t.entries
                .iter()
                .map(|(k, e)| (k.clone(), e.synthesis.re, e.synthesis.im))
                .collect()
        });
        Self {
            domain: t.domain,
            s_barron: t.s_barron,
            s_hilbert: t.s_hilbert,
            rows: t
                .entries
                .into_iter()
                .map(|(k, e)| (k, e.value.re, e.value.im, e.provenance))
                .collect(),
            synthesis,
        }
    }
}

impl TryFrom<TableJson> for FourierTable {
    type Error = String;

    fn try_from(j: TableJson) -> std::result::Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (k, re, im, provenance) in j.rows {
            let a = Complex64::new(re, im);
            if !a.is_finite() {
                return Err(format!("non-finite coefficient at {k}"));
            }
            entries.insert(
                k,
                Entry {
                    value: a,
                    synthesis: a,
                    provenance,
                },
            );
        }
        for (k, re, im) in j.synthesis.unwrap_or_default() {
            let e = entries
                .get_mut(&k)
                .ok_or_else(|| format!("synthesis row {k} has no coefficient row"))?;
            e.synthesis = Complex64::new(re, im);
        }
        Ok(Self {
            entries,
            domain: j.domain,
            s_barron: j.s_barron,
            s_hilbert: j.s_hilbert,
        })
    }
}

/// `∫_{-1/2}^{1/2} u^p exp(-2πi k u) du`, by integration by parts.
pub fn monomial_fourier(p: u32, k: i64) -> Complex64 {
    if k == 0 {
        let e = p as i32 + 1;
        return Complex64::new((0.5f64.powi(e) - (-0.5f64).powi(e)) / e as f64, 0.0);
    }
    let omega = 2.0 * PI * k as f64;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let i_omega = Complex64::new(0.0, omega);
    let mut acc = Complex64::new(0.0, 0.0); // I_0(k) = 0
    for q in 1..=p {
        let jump = 0.5f64.powi(q as i32) - (-0.5f64).powi(q as i32);
        let boundary = Complex64::new(sign * jump, 0.0) / (-i_omega);
        acc = boundary + acc * (q as f64) / i_omega;
    }
    acc
}

/// Coefficients on `L_bound`.
pub fn coefficients(f: &FunctionalSpec, max_linf: u32, quad_points: usize) -> Result<FourierTable> {
    coefficients_on(f, DomainSpec::Bound, max_linf, quad_points, Method::Auto)
}

/// Coefficients on `L_cut`, with tail coordinates rescaled to `(-δ, δ)`.
pub fn coefficients_cut(
    f: &FunctionalSpec,
    domain: DomainSpec,
    max_linf: u32,
    quad_points: usize,
) -> Result<FourierTable> {
    if !matches!(domain, DomainSpec::Cut { .. }) {
        return Err(Error::InvalidDomain("expected a cut domain".into()));
    }
    coefficients_on(f, domain, max_linf, quad_points, Method::Auto)
}

/// Coefficients over the box domain `domain`, truncated per block at
/// `|k_i| <= max_linf`.
pub fn coefficients_on(
    f: &FunctionalSpec,
    domain: DomainSpec,
    max_linf: u32,
    quad_points: usize,
    method: Method,
) -> Result<FourierTable> {
    domain.validate()?;
    let blocks = f
        .blocks()
        .ok_or_else(|| Error::StructureMissing(f.name.clone()))?;
    if max_linf < 1 {
        return Err(Error::InvalidArgument("max_linf must be >= 1".into()));
    }
    let needed = POINTS_PER_FREQUENCY * max_linf as usize;
    if quad_points < needed {
        return Err(Error::InsufficientResolution {
            needed,
            got: quad_points,
        });
    }

    let per_block: Vec<Vec<(MultiIndex, Entry)>> = blocks
        .par_iter()
        .map(|b| block_coefficients(b, &domain, max_linf, quad_points, method))
        .collect();

    let mut table = FourierTable::empty(domain);
    for contributions in per_block {
        for (k, e) in contributions {
            table
                .entries
                .entry(k)
                .and_modify(|acc| {
                    acc.value += e.value;
                    acc.synthesis += e.synthesis;
                    if e.provenance == Provenance::Quadrature {
                        acc.provenance = Provenance::Quadrature;
                    }
                })
                .or_insert(e);
        }
    }
    Ok(table)
}

fn block_coefficients(
    block: &Block,
    domain: &DomainSpec,
    max_linf: u32,
    quad_points: usize,
    method: Method,
) -> Vec<(MultiIndex, Entry)> {
    let dim = block.coords.len();
    let half: Vec<f64> = block.coords.iter().map(|&p| domain.half_width(p)).collect();
    let analysis_scale: f64 = half.iter().map(|h| (2.0 * h).powf(-0.5)).product();
    let synthesis_scale: f64 = half.iter().map(|h| 1.0 / (2.0 * h)).product();
    let local = MultiIndex::enumerate(dim, max_linf);

    let closed = matches!(method, Method::Auto)
        && matches!(
            block.piece,
            Piece::Power { .. } | Piece::Product { .. } | Piece::Constant(_)
        );
    let raw: Vec<Complex64> = if closed {
        local
            .iter()
            .map(|k| closed_form_integral(&block.piece, k, &half))
            .collect()
    } else {
        quadrature_integrals(&block.piece, &local, &half, max_linf, quad_points)
    };
    let provenance = if closed {
        Provenance::ClosedForm
    } else {
        Provenance::Quadrature
    };

    local
        .into_iter()
        .zip(raw)
        .map(|(k, integral)| {
            let global = MultiIndex::from_pairs(k.iter().map(|(pos, v)| (block.coords[pos - 1], v)));
            (
                global,
                Entry {
                    value: integral * analysis_scale,
                    synthesis: integral * synthesis_scale,
                    provenance,
                },
            )
        })
        .collect()
}

/// `∫_box piece(b) Π exp(-iπ k_i b_i / h_i) db` for polynomial pieces.
fn closed_form_integral(piece: &Piece, k: &MultiIndex, half: &[f64]) -> Complex64 {
    // ∫_{-h}^{h} b^p e^{-iπkb/h} db = (2h)^{p+1} I_p(k).
    let axis = |p: u32, axis: usize| -> Complex64 {
        let width = 2.0 * half[axis];
        monomial_fourier(p, k.get(axis + 1)) * width.powi(p as i32 + 1)
    };
    match piece {
        Piece::Power { weight, exponent } => axis(*exponent, 0) * *weight,
        Piece::Product { weight } => axis(1, 0) * axis(1, 1) * *weight,
        Piece::Constant(c) => (0..half.len()).map(|a| axis(0, a)).product::<Complex64>() * *c,
        Piece::Custom(_) => unreachable!("custom pieces use quadrature"),
    }
}

/// Tensor Gauss–Legendre integrals for every local index in `local`, computed
/// by contracting one axis at a time.
fn quadrature_integrals(
    piece: &Piece,
    local: &[MultiIndex],
    half: &[f64],
    max_linf: u32,
    quad_points: usize,
) -> Vec<Complex64> {
    let dim = half.len();
    let rules: Vec<CompositeRule> = half
        .iter()
        .map(|&h| CompositeRule::for_oscillation(-h, h, quad_points, max_linf as f64))
        .collect();
    let n = rules[0].len();
    let kvals: Vec<i64> = (-(max_linf as i64)..=max_linf as i64).collect();
    let nk = kvals.len();

    // Piece values on the tensor grid, axis 0 most significant.
    let total = n.pow(dim as u32);
    let mut tensor: Vec<Complex64> = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    for _ in 0..total {
        for a in 0..dim {
            point[a] = rules[a].nodes()[idx[a]];
        }
        tensor.push(Complex64::new(piece.eval(&point), 0.0));
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }

    let mut shape = vec![n; dim];
    for a in 0..dim {
        let h = half[a];
        // kernel[kk][j] = w_j exp(-iπ k b_j / h)
        let kernel: Vec<Complex64> = kvals
            .iter()
            .flat_map(|&k| {
                let r = &rules[a];
                r.nodes()
                    .iter()
                    .zip(r.weights())
                    .map(move |(&b, &w)| Complex64::from_polar(w, -PI * k as f64 * b / h))
            })
            .collect();
        let outer: usize = shape[..a].iter().product();
        let inner: usize = shape[a + 1..].iter().product();
        let len = shape[a];
        let mut next = vec![Complex64::new(0.0, 0.0); outer * nk * inner];
        for o in 0..outer {
            for kk in 0..nk {
                let krow = &kernel[kk * len..(kk + 1) * len];
                let dst = &mut next[(o * nk + kk) * inner..(o * nk + kk + 1) * inner];
                for (j, &kw) in krow.iter().enumerate() {
                    let src = &tensor[(o * len + j) * inner..(o * len + j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += kw * s;
                    }
                }
            }
        }
        tensor = next;
        shape[a] = nk;
    }

    local
        .iter()
        .map(|k| {
            let flat = (0..dim).fold(0usize, |acc, a| {
                acc * nk + (k.get(a + 1) + max_linf as i64) as usize
            });
            tensor[flat]
        })
        .collect()
}

/// `Σ_k a_k e_k(v)` as a complex number, using the table's synthesis values
/// and rescaled modes on shrunken coordinates.
pub fn reconstruct_complex(table: &FourierTable, v: &CoeffVector) -> Result<Complex64> {
    let b = v.coeffs();
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, e) in &table.entries {
        if k.max_support() > b.len() {
            return Err(Error::SupportOutOfRange {
                position: k.max_support(),
                len: b.len(),
            });
        }
        let phase: f64 = k
            .iter()
            .map(|(p, kp)| PI * kp as f64 * b[p - 1] / table.domain.half_width(p))
            .sum();
        sum += e.synthesis * Complex64::from_polar(1.0, phase);
    }
    Ok(sum)
}

/// Real part of the truncated Fourier series at `v`; fails if the imaginary
/// part exceeds [`IMAG_RESIDUE_TOL`].
pub fn reconstruct(table: &FourierTable, v: &CoeffVector) -> Result<f64> {
    let z = reconstruct_complex(table, v)?;
    if z.im.abs() >= IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(z.im.abs()));
    }
    Ok(z.re)
}

fn weight(k: &MultiIndex, s: f64) -> f64 {
    let l1 = k.l1_norm() as f64;
    if l1 == 0.0 {
        1.0
    } else {
        1.0 + (2.0 * PI).powf(s) * l1.powf(s)
    }
}

/// `‖f‖_{ℬ_s} = Σ (1 + (2π)^s |k|₁^s) |a_k|` over stored entries.
pub fn barron_norm(table: &FourierTable, s: f64) -> f64 {
    table
        .entries
        .iter()
        .map(|(k, e)| weight(k, s) * e.value.norm())
        .sum()
}

/// `‖f‖_{ℋ_s} = (Σ (1 + (2π)^{2s} |k|₁^{2s}) |a_k|²)^{1/2}` over stored entries.
pub fn hilbert_norm(table: &FourierTable, s: f64) -> f64 {
    table
        .entries
        .iter()
        .map(|(k, e)| weight(k, 2.0 * s) * e.value.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `⟨f, g⟩_{ℋ_s} = Σ (1 + (2π)^{2s} |k|₁^{2s}) conj(a_k(f)) a_k(g)`.
pub fn hilbert_inner(ta: &FourierTable, tb: &FourierTable, s: f64) -> Complex64 {
    // Entries missing from either side contribute zero.
    ta.entries
        .iter()
        .filter_map(|(k, ea)| {
            tb.entries
                .get(k)
                .map(|eb| ea.value.conj() * eb.value * weight(k, 2.0 * s))
        })
        .sum()
}
