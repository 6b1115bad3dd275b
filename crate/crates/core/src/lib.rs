//! Fourier series of functionals on infinite-dimensional function spaces.
//!
//! A functional `f(v)` is viewed through the basis coefficients `b_i` of its
//! argument `v = Σ b_i Φ_i`. When `f` splits into finitely-supported pieces,
//! it has a Fourier expansion `f(v) = Σ_k a_k e_k(v)` over integer
//! multi-indices `k`, with `e_k(v) = exp(2πi Σ k_i b_i)`. The weighted ℓ¹ and
//! ℓ² sums of `|a_k|` give the Barron and Hilbert norms that control how well
//! a two-layer ReLU network of width `m` approximates `f` (error `O(1/√m)`,
//! independent of the number of coefficients the functional reads).
//!
//! Crate layout:
//!
//! * [`multi_index`]: the index set and the basis functionals `e_k`.
//! * [`function_space`]: coefficient vectors, trigonometric/sine bases,
//!   sampling domains and coefficient extraction.
//! * [`zoo`]: concrete functionals with declared decomposition structure.
//! * [`spectral`]: Fourier coefficient tables, reconstruction and norms.
//! * [`net`] / [`train`]: the shallow ReLU approximant and its optimizers.
//! * [`experiments`]: rate studies, cutoff certification and a grid-sampling
//!   baseline.
//! * [`pde`]: learning point values of a Poisson solution map.
//! * [`report`]: run directories, manifests and CSV/JSON emission.

pub mod error;
pub mod experiments;
pub mod function_space;
pub mod multi_index;
pub mod net;
pub mod pde;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod train;
pub mod zoo;

pub use error::{Error, Result};
pub use function_space::{BasisKind, BasisSpec, CoeffVector, DomainSpec};
pub use multi_index::MultiIndex;
pub use net::{NetForm, ShallowNet};
pub use spectral::FourierTable;
pub use train::{Optimizer, TrainConfig};
pub use zoo::FunctionalSpec;

pub use num_complex::Complex64;
