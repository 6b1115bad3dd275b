//! Functions `v = Σ b_i Φ_i` on `[0,1]^d` stored as coefficient vectors.
//!
//! Three bases are supported. All are indexed by a 1-based coefficient
//! position; positions map to frequency vectors sorted by `|p|₁` and then
//! lexicographically.
//!
//! * `RealTrig`: `√2 cos(2π p·x)`, `√2 sin(2π p·x)` for `p` in the half
//!   lattice (first nonzero component positive). Orthonormal; the constant
//!   mode is excluded.
//! * `ComplexExp`: conjugate-symmetric pairs `c_p e^{2πi p·x} + c.c.`, stored
//!   as `(Re c_p, Im c_p)`.
//! * `Sine`: `2^{d/2} Π sin(π n_j x_j)` for `n ∈ ℕ₊^d`. Vanishes on the
//!   boundary of the unit cube.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CompositeRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    ComplexExponential,
    RealTrigonometric,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub spatial_dim: usize,
}

/// Which real component a coefficient position carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Cos,
    Sin,
    Re,
    Im,
    Sine,
}

/// The frequency and component that a coefficient position refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub frequency: Vec<i64>,
    pub part: Part,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self::real_trig(1)
    }
}

impl BasisSpec {
    pub fn real_trig(spatial_dim: usize) -> Self {
        Self {
            kind: BasisKind::RealTrigonometric,
            spatial_dim,
        }
    }

    pub fn sine(spatial_dim: usize) -> Self {
        Self {
            kind: BasisKind::Sine,
            spatial_dim,
        }
    }

    pub fn complex_exp(spatial_dim: usize) -> Self {
        Self {
            kind: BasisKind::ComplexExponential,
            spatial_dim,
        }
    }

    /// Modes for positions `1..=n`.
    pub fn modes(&self, n: usize) -> Vec<Mode> {
        let d = self.spatial_dim.max(1);
        let mut out = Vec::with_capacity(n);
        let mut level = 1i64;
        while out.len() < n {
            for p in lattice_level(d, level) {
                let keep = match self.kind {
                    BasisKind::Sine => p.iter().all(|&c| c > 0),
                    _ => p.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0),
                };
                if !keep {
                    continue;
                }
                match self.kind {
                    BasisKind::Sine => out.push(Mode {
                        frequency: p,
                        part: Part::Sine,
                    }),
                    BasisKind::RealTrigonometric => {
                        out.push(Mode {
                            frequency: p.clone(),
                            part: Part::Cos,
                        });
                        out.push(Mode {
                            frequency: p,
                            part: Part::Sin,
                        });
                    }
                    BasisKind::ComplexExponential => {
                        out.push(Mode {
                            frequency: p.clone(),
                            part: Part::Re,
                        });
                        out.push(Mode {
                            frequency: p,
                            part: Part::Im,
                        });
                    }
                }
                if out.len() >= n {
                    break;
                }
            }
            level += 1;
        }
        out.truncate(n);
        out
    }

    /// Value of the basis function for `mode` at `x`.
    pub fn eval_mode(&self, mode: &Mode, x: &[f64]) -> f64 {
        let dot: f64 = mode
            .frequency
            .iter()
            .zip(x)
            .map(|(&p, &xi)| p as f64 * xi)
            .sum();
        match mode.part {
            Part::Cos => 2f64.sqrt() * (TAU * dot).cos(),
            Part::Sin => 2f64.sqrt() * (TAU * dot).sin(),
            Part::Re => 2.0 * (TAU * dot).cos(),
            Part::Im => -2.0 * (TAU * dot).sin(),
            Part::Sine => mode
                .frequency
                .iter()
                .zip(x)
                .map(|(&n, &xi)| 2f64.sqrt() * (PI * n as f64 * xi).sin())
                .product(),
        }
    }

    /// Largest per-axis frequency among the first `n` modes.
    pub fn max_frequency(&self, n: usize) -> u64 {
        self.modes(n)
            .iter()
            .flat_map(|m| m.frequency.iter().map(|p| p.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// Weight of the projection `b_i = weight · ∫ g Φ_i` that inverts
    /// [`eval_mode`](Self::eval_mode).
    fn projection_weight(&self, part: Part) -> f64 {
        match part {
            // ∫ (2 cos)² = 2 over the unit cell.
            Part::Re | Part::Im => 0.5,
            _ => 1.0,
        }
    }
}

/// Integer vectors in `ℤ^d` with `|p|₁ = level`, in lexicographic order.
fn lattice_level(d: usize, level: i64) -> Vec<Vec<i64>> {
    fn rec(d: usize, remaining: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if d == 1 {
            for last in [-remaining, remaining] {
                prefix.push(last);
                out.push(prefix.clone());
                prefix.pop();
                if remaining == 0 {
                    break;
                }
            }
            return;
        }
        for v in -remaining..=remaining {
            prefix.push(v);
            rec(d - 1, remaining - v.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, level, &mut Vec::with_capacity(d), &mut out);
    out
}

/// A truncated function `v = Σ_{i≤N} b_i Φ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector {
    basis: BasisSpec,
    coeffs: Vec<f64>,
}

impl CoeffVector {
    pub fn new(basis: BasisSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "coefficient vector must be nonempty".into(),
            ));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient {} is not finite",
                i + 1
            )));
        }
        Ok(Self { basis, coeffs })
    }

    /// Real-trigonometric vector on `[0,1]`. Panics on empty or non-finite input.
    pub fn raw(coeffs: Vec<f64>) -> Self {
        Self::new(BasisSpec::default(), coeffs).expect("valid coefficients")
    }

    pub fn zeros(basis: BasisSpec, n: usize) -> Self {
        Self {
            basis,
            coeffs: vec![0.0; n.max(1)],
        }
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn with_basis(mut self, basis: BasisSpec) -> Self {
        self.basis = basis;
        self
    }

    /// Coefficient `b_i` for a 1-based position; positions past the end are 0.
    pub fn get(&self, position: usize) -> f64 {
        position
            .checked_sub(1)
            .and_then(|i| self.coeffs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Whether every `|b_i| < 1/2`.
    pub fn in_bound(&self) -> bool {
        self.coeffs.iter().all(|b| b.abs() < 0.5)
    }

    pub fn in_domain(&self, domain: &DomainSpec) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, b)| b.abs() < domain.half_width(i + 1))
    }

    /// `v(x) = Σ b_i Φ_i(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.basis.spatial_dim {
            return Err(Error::DimensionMismatch {
                expected: self.basis.spatial_dim,
                got: x.len(),
            });
        }
        let modes = self.basis.modes(self.coeffs.len());
        Ok(self
            .coeffs
            .iter()
            .zip(&modes)
            .map(|(b, m)| b * self.basis.eval_mode(m, x))
            .sum())
    }
}

/// Where coefficient vectors are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `L_bound`: every `|b_i| < 1/2`.
    Bound,
    /// `L_cut`: `|b_i| < 1/2` for `i <= n`, `|b_i| < delta` beyond.
    Cut { n: usize, delta: f64 },
    /// `|b_i| < min(1/2, c · i^{-exponent})`.
    Decay { c: f64, exponent: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Bound => Ok(()),
            DomainSpec::Cut { n, delta } => {
                if n < 1 {
                    return Err(Error::InvalidDomain("cut threshold N must be >= 1".into()));
                }
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(Error::InvalidDomain(format!(
                        "cut width delta = {delta} must lie in (0, 1/2)"
                    )));
                }
                Ok(())
            }
            DomainSpec::Decay { c, exponent } => {
                if !(c > 0.0 && c.is_finite()) || !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidDomain(format!(
                        "decay bound needs C > 0 and exponent > 0 (got C = {c}, exponent = {exponent})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Half-width of the sampling interval for coefficient `position` (1-based).
    pub fn half_width(&self, position: usize) -> f64 {
        match *self {
            DomainSpec::Bound => 0.5,
            DomainSpec::Cut { n, delta } => {
                if position <= n {
                    0.5
                } else {
                    delta
                }
            }
            DomainSpec::Decay { c, exponent } => (c * (position as f64).powf(-exponent)).min(0.5),
        }
    }

    /// Draws one vector of `n_coeffs` coefficients from `rng`, each uniform on
    /// its open interval.
    pub fn sample_rng<R: Rng + ?Sized>(
        &self,
        basis: BasisSpec,
        n_coeffs: usize,
        rng: &mut R,
    ) -> Result<CoeffVector> {
        self.validate()?;
        if n_coeffs < 1 {
            return Err(Error::InvalidDomain("n_coeffs must be >= 1".into()));
        }
        if let DomainSpec::Cut { n, .. } = *self {
            if n_coeffs < n {
                return Err(Error::InvalidDomain(format!(
                    "n_coeffs = {n_coeffs} is below the cut threshold N = {n}"
                )));
            }
        }
        let coeffs = (1..=n_coeffs)
            .map(|i| {
                let h = self.half_width(i);
                // Endpoint rejection keeps the interval open.
                loop {
                    let b = rng.gen_range(-h..h);
                    if b.abs() < h {
                        break b;
                    }
                }
            })
            .collect();
        Ok(CoeffVector { basis, coeffs })
    }

    /// Seeded draw on the default (real-trigonometric, 1-D) basis.
    pub fn sample(&self, n_coeffs: usize, seed: u64) -> Result<CoeffVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_rng(BasisSpec::default(), n_coeffs, &mut rng)
    }

    /// `count` independent draws from one seeded stream.
    pub fn sample_many(
        &self,
        basis: BasisSpec,
        n_coeffs: usize,
        count: usize,
        seed: u64,
    ) -> Result<Vec<CoeffVector>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| self.sample_rng(basis, n_coeffs, &mut rng))
            .collect()
    }
}

/// Projects `g` onto the first `n_coeffs` basis functions by composite
/// Gauss–Legendre quadrature (`quad_points` nodes per axis at minimum).
pub fn extract_coeffs<G: Fn(&[f64]) -> f64>(
    g: G,
    basis: BasisSpec,
    n_coeffs: usize,
    quad_points: usize,
) -> Result<CoeffVector> {
    if n_coeffs < 1 {
        return Err(Error::InvalidArgument("n_coeffs must be >= 1".into()));
    }
    let modes = basis.modes(n_coeffs);
    let max_freq = modes
        .iter()
        .flat_map(|m| m.frequency.iter().map(|p| p.unsigned_abs()))
        .max()
        .unwrap_or(0) as usize;
    let needed = 4 * max_freq;
    if quad_points < needed {
        return Err(Error::InsufficientResolution {
            needed,
            got: quad_points,
        });
    }
    // g is assumed band-limited to the same modes, so g·Φ has at most
    // 2·max_freq cycles per axis.
    let rule = CompositeRule::for_oscillation(0.0, 1.0, quad_points, 2.0 * max_freq as f64);
    let d = basis.spatial_dim.max(1);

    let mut coeffs = vec![0.0; n_coeffs];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for a in 0..d {
            x[a] = rule.nodes()[idx[a]];
            w *= rule.weights()[idx[a]];
        }
        let gx = w * g(&x);
        for (c, m) in coeffs.iter_mut().zip(&modes) {
            *c += gx * basis.eval_mode(m, &x);
        }
        let mut a = d;
        loop {
            if a == 0 {
                for (c, m) in coeffs.iter_mut().zip(&modes) {
                    *c *= basis.projection_weight(m.part);
                }
                return CoeffVector::new(basis, coeffs);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < rule.len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn real_trig_ordering() {
        let modes = BasisSpec::real_trig(1).modes(5);
        let got: Vec<_> = modes.iter().map(|m| (m.frequency[0], m.part)).collect();
        assert_eq!(
            got,
            vec![(1, Part::Cos), (1, Part::Sin), (2, Part::Cos), (2, Part::Sin), (3, Part::Cos)]
        );
    }

    #[test]
    fn multi_dim_ordering_is_by_l1_then_lex() {
        let modes = BasisSpec::real_trig(2).modes(8);
        let freqs: Vec<_> = modes.iter().step_by(2).map(|m| m.frequency.clone()).collect();
        assert_eq!(freqs, vec![vec![0, 1], vec![1, 0], vec![0, 2], vec![1, -1]]);
        let sine: Vec<_> = BasisSpec::sine(2).modes(3).into_iter().map(|m| m.frequency).collect();
        assert_eq!(sine, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn evaluate_examples() {
        let v = CoeffVector::new(BasisSpec::sine(1), vec![1.0]).unwrap();
        assert!((v.evaluate(&[0.5]).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        let z = CoeffVector::zeros(BasisSpec::real_trig(1), 6);
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(z.evaluate(&[x]).unwrap(), 0.0);
        }

        let v = CoeffVector::raw(vec![0.3]);
        assert!((v.evaluate(&[0.0]).unwrap() - 0.3 * 2f64.sqrt()).abs() < 1e-15);

        assert!(matches!(
            v.evaluate(&[0.0, 0.1]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn cos_band_is_unit_normalized() {
        // Oracle: ∫_0^1 Φ_1(x)² dx by an independent midpoint sum.
        let basis = BasisSpec::real_trig(1);
        let m = &basis.modes(1)[0];
        let n = 4096;
        let s: f64 = (0..n)
            .map(|i| basis.eval_mode(m, &[(i as f64 + 0.5) / n as f64]).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extract_examples() {
        let basis = BasisSpec::real_trig(1);
        let zero = extract_coeffs(|_| 0.0, basis, 6, 64).unwrap();
        assert!(zero.coeffs().iter().all(|&c| c == 0.0));

        let m3 = basis.modes(3)[2].clone();
        let phi3 = extract_coeffs(|x| basis.eval_mode(&m3, x), basis, 6, 64).unwrap();
        for (i, c) in phi3.coeffs().iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-8, "b_{} = {c}", i + 1);
        }

        // sin(2πx) = (1/√2)·(√2 sin 2πx), which is position 2.
        let s = extract_coeffs(|x| (TAU * x[0]).sin(), basis, 4, 1024).unwrap();
        assert!((s.get(2) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(s.get(1).abs() < 1e-12);
    }

    #[test]
    fn extract_requires_resolution() {
        let err = extract_coeffs(|_| 0.0, BasisSpec::real_trig(1), 10, 8).unwrap_err();
        assert!(matches!(err, Error::InsufficientResolution { needed: 20, got: 8 }));
    }

    #[test]
    fn sample_examples() {
        let v = DomainSpec::Bound.sample(4, 7).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.in_bound());

        let cut = DomainSpec::Cut { n: 2, delta: 0.05 };
        let v = cut.sample(4, 7).unwrap();
        assert!(v.get(3).abs() < 0.05 && v.get(4).abs() < 0.05);

        let decay = DomainSpec::Decay { c: 0.4, exponent: 1.5 };
        let v = decay.sample(3, 1).unwrap();
        assert!(v.get(2).abs() < 0.4 * 2f64.powf(-1.5));
        assert!(0.4 * 2f64.powf(-1.5) - 0.141_421_356 < 1e-9);
    }

    #[test]
    fn sample_validation() {
        let bad = DomainSpec::Cut { n: 2, delta: 0.6 };
        assert!(matches!(bad.sample(4, 0), Err(Error::InvalidDomain(_))));
        assert!(matches!(DomainSpec::Bound.sample(0, 0), Err(Error::InvalidDomain(_))));
        let cut = DomainSpec::Cut { n: 5, delta: 0.1 };
        assert!(matches!(cut.sample(3, 0), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn json_shape() {
        let v = CoeffVector::raw(vec![0.1, -0.2]);
        let s = serde_json::to_value(&v).unwrap();
        assert_eq!(s["coeffs"], serde_json::json!([0.1, -0.2]));
        assert_eq!(s["basis"]["kind"], "real-trigonometric");
        let d: DomainSpec = serde_json::from_str(r#"{"kind":"cut","n":3,"delta":0.1}"#).unwrap();
        assert_eq!(d, DomainSpec::Cut { n: 3, delta: 0.1 });
    }

    proptest! {
        #[test]
        fn extract_round_trips(
            kind in prop_oneof![
                Just(BasisKind::RealTrigonometric),
                Just(BasisKind::Sine),
                Just(BasisKind::ComplexExponential),
            ],
            coeffs in proptest::collection::vec(-0.5f64..0.5, 1..12),
        ) {
            let basis = BasisSpec { kind, spatial_dim: 1 };
            let v = CoeffVector::new(basis, coeffs).unwrap();
            let n = v.len();
            let back = extract_coeffs(|x| v.evaluate(x).unwrap(), basis, n, 64).unwrap();
            for (a, b) in v.coeffs().iter().zip(back.coeffs()) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn samples_respect_bounds_and_seed(seed in any::<u64>(), n in 1usize..20) {
            for domain in [
                DomainSpec::Bound,
                DomainSpec::Cut { n: 1, delta: 0.01 },
                DomainSpec::Decay { c: 0.3, exponent: 2.0 },
            ] {
                let a = domain.sample(n, seed).unwrap();
                let b = domain.sample(n, seed).unwrap();
                prop_assert!(a.in_domain(&domain));
                prop_assert!(a.in_bound());
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn two_dim_round_trip() {
        let basis = BasisSpec::real_trig(2);
        let v = CoeffVector::new(basis, vec![0.2, -0.1, 0.05, 0.3, -0.4, 0.15]).unwrap();
        let back = extract_coeffs(|x| v.evaluate(x).unwrap(), basis, 6, 16).unwrap();
        for (a, b) in v.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
