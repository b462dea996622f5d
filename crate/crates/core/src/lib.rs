//! Trace-symmetric conservative quantum dynamical semigroups on
//! finite-dimensional block algebras `⊕_k M_{n_k}`.
//!
//! - [`blockalg`]: the algebra, its weighted trace and orthonormal basis.
//! - [`superop`]: linear maps on the algebra, semigroups and generator checks.
//! - [`derivgen`]: generators `½ Σ_j [H_j, [H_j, ·]]` built from derivations.
//! - [`extract`]: recovery of a derivation family from a symmetric generator.
//! - [`dilate`]: Monte Carlo random-unitary dilation driven by Brownian motion.
//! - [`corner`]: grid derivatives and nested corner algebras.

pub mod blockalg;
pub mod corner;
pub mod derivgen;
pub mod dilate;
pub mod error;
pub mod extract;
pub mod linalg;
pub mod superop;

pub use blockalg::{AlgebraElement, BlockStructure, CenterElement};
pub use derivgen::DerivationFamily;
pub use error::{Error, Result};
pub use extract::{decompose, Decomposer, ExtractError, ExtractionResult};
pub use superop::{CheckReport, SuperOperator, Witness};
