//! Colorful vector balancing.
//!
//! Given families `V_1, ..., V_n` of vectors in the unit ball of `ℓ2` or
//! `ℓ∞` on `R^d` whose convex hulls sum to a set containing the origin,
//! pick one vector per family so that the picked vectors sum to something
//! small: at most `√d` in the Euclidean norm and at most `48√d` in the
//! maximum norm.
//!
//! The pipeline is [`harness::balance`]:
//!
//! 1. [`reduction`] finds a vertex of `{λ ∈ Δ_V : Vλ = 0}`; all but at most
//!    `d` families are already integral there.
//! 2. The fractional core is rounded by [`euclid`] (derandomized by
//!    conditional expectations) or by [`maxnorm`] (iterated Gaussian walks
//!    followed by snapping to a vertex).
//! 3. The two parts are spliced back together and the norm is recomputed
//!    from the raw vectors.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are what the CLI uses.

pub mod error;
pub mod euclid;
pub mod generators;
pub mod harness;
pub mod linalg;
pub mod maxnorm;
pub mod model;
pub mod oracle;
pub mod reduction;
mod scalar;

pub use error::{Error, Result};
pub use harness::{balance, BalanceConfig, BalanceReport};
pub use model::{Coefficients, IndexPartition, Instance, InstanceFile, NormKind, Selection};
pub use scalar::Scalar;

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type Coefficients64 = Coefficients<f64>;
pub type Coefficients32 = Coefficients<f32>;
pub type Subspace64 = linalg::Subspace<f64>;
pub type ReductionCore64 = reduction::ReductionCore<f64>;
