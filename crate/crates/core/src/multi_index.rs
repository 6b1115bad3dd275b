//! Integer multi-indices with finite support and the basis functionals
//! `e_k(v) = exp(2πi Σ k_i b_i)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::function_space::CoeffVector;

/// A multi-index `k = (k_1, k_2, ...)` with finitely many nonzero entries.
///
/// Positions are 1-based. Zero entries are never stored, so two indices are
/// equal exactly when their sparse maps are equal.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: BTreeMap<usize, i64>,
}

impl MultiIndex {
    /// The zero index `k = 0`.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds an index from `(position, value)` pairs. Zero values are dropped;
    /// repeated positions accumulate.
    ///
    /// Panics if a position is 0.
    pub fn from_pairs<I: IntoIterator<Item = (usize, i64)>>(pairs: I) -> Self {
        let mut entries = BTreeMap::new();
        for (pos, val) in pairs {
            assert!(pos >= 1, "multi-index positions are 1-based");
            *entries.entry(pos).or_insert(0) += val;
        }
        entries.retain(|_, v| *v != 0);
        Self { entries }
    }

    /// Single nonzero entry `value` at `position`.
    pub fn unit(position: usize, value: i64) -> Self {
        Self::from_pairs([(position, value)])
    }

    /// Builds an index from a dense prefix `(k_1, ..., k_n)`.
    pub fn from_dense(dense: &[i64]) -> Self {
        Self::from_pairs(dense.iter().enumerate().map(|(i, &v)| (i + 1, v)))
    }

    /// `|k|₁ = Σ |k_i|`.
    pub fn l1_norm(&self) -> u64 {
        self.entries.values().map(|v| v.unsigned_abs()).sum()
    }

    /// `N_k`, the largest position with a nonzero entry (0 for the zero index).
    pub fn max_support(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value at a 1-based position (0 when not stored).
    pub fn get(&self, position: usize) -> i64 {
        self.entries.get(&position).copied().unwrap_or(0)
    }

    /// Nonzero `(position, value)` pairs in increasing position order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.entries.iter().map(|(&p, &v)| (p, v))
    }

    /// Number of nonzero entries.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Whether every nonzero position lies in `set`.
    pub fn supported_on(&self, set: &[usize]) -> bool {
        self.entries.keys().all(|p| set.contains(p))
    }

    /// Phase `Σ k_i b_i` (without the 2π factor).
    pub fn phase(&self, b: &[f64]) -> Result<f64> {
        if self.max_support() > b.len() {
            return Err(Error::SupportOutOfRange {
                position: self.max_support(),
                len: b.len(),
            });
        }
        Ok(self.iter().map(|(p, k)| k as f64 * b[p - 1]).sum())
    }

    /// `e_k(b) = exp(2πi Σ k_i b_i)` evaluated on raw coefficients.
    pub fn basis_eval_slice(&self, b: &[f64]) -> Result<Complex64> {
        let phase = self.phase(b)?;
        Ok(Complex64::from_polar(1.0, std::f64::consts::TAU * phase))
    }

    /// `e_k(v)` for a function given by its coefficient vector.
    pub fn basis_eval(&self, v: &CoeffVector) -> Result<Complex64> {
        self.basis_eval_slice(v.coeffs())
    }

    /// All indices with `N_k <= max_dim` and every `|k_i| <= max_linf`, in
    /// ascending [`Ord`] order. Contains `(2·max_linf + 1)^max_dim` entries.
    pub fn enumerate(max_dim: usize, max_linf: u32) -> Vec<MultiIndex> {
        // Per-coordinate value order 0, -1, 1, -2, 2, ... matches `Ord`.
        let values: Vec<i64> = std::iter::once(0)
            .chain((1..=i64::from(max_linf)).flat_map(|v| [-v, v]))
            .collect();
        let mut out = Vec::with_capacity(values.len().pow(max_dim as u32));
        let mut digits = vec![0usize; max_dim];
        loop {
            out.push(MultiIndex::from_pairs(
                digits.iter().enumerate().map(|(i, &d)| (i + 1, values[d])),
            ));
            // Odometer with position 1 most significant.
            let mut pos = max_dim;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < values.len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}

/// Rank of a single entry in the enumeration order 0, -1, 1, -2, 2, ...
fn zigzag(v: i64) -> u64 {
    if v <= 0 {
        2 * v.unsigned_abs() - u64::from(v != 0)
    } else {
        2 * v as u64
    }
}

impl Ord for MultiIndex {
    /// Lexicographic on the dense sequence `(k_1, k_2, ...)`, position 1 most
    /// significant, with entries ranked 0 < -1 < 1 < -2 < 2 < ...
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.max_support().max(other.max_support());
        for p in 1..=n {
            let ord = zigzag(self.get(p)).cmp(&zigzag(other.get(p)));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex::from_pairs(self.iter().chain(rhs.iter()))
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;

    fn neg(self) -> MultiIndex {
        MultiIndex::from_pairs(self.iter().map(|(p, v)| (p, -v)))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, (p, v)) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}:{v}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter().map(|(p, v)| [p as i64, v]))
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let pairs: Vec<(i64, i64)> = Vec::deserialize(deserializer)?;
        let mut entries = BTreeMap::new();
        for (p, v) in pairs {
            if p < 1 {
                return Err(D::Error::custom(format!("position {p} is not 1-based")));
            }
            if v == 0 {
                return Err(D::Error::custom(format!("zero value stored at position {p}")));
            }
            if entries.insert(p as usize, v).is_some() {
                return Err(D::Error::custom(format!("duplicate position {p}")));
            }
        }
        Ok(Self { entries })
    }
}
