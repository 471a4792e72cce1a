//! Concrete instances of `min F(XXᵀ) + g(X)`.

mod edmc;
mod sparse;
mod symnmf;

pub use edmc::{kappa, normalized_rmse, EdmcProblem};
pub use sparse::SparseSymmetric;
pub use symnmf::SymNmfProblem;

/// Lower bound on σ when the data would give σ = 0.
pub const SIGMA_FLOOR: f64 = 1e-8;
