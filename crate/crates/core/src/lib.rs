//! Bregman proximal gradient methods with quartic kernels for Burer-Monteiro
//! low-rank problems `min F(XXᵀ) + g(X)`.
//!
//! * [`kernel`]: universal and Gram quartic kernels, Bregman distances and
//!   the closed-form universal iteration map.
//! * [`gram`]: the Gram kernel iteration map (`O(nr² + r³)`).
//! * [`solver`]: Dyn-NoLips with step halving/doubling, plus a projected
//!   gradient baseline with Armijo backtracking.
//! * [`problems`]: symmetric NMF and Euclidean distance matrix completion.
//! * [`data`]: similarity graphs, Helix point clouds, Matrix Market and
//!   trace CSV files.
//!
//! All randomized routines take an explicit `u64` seed and draw from
//! `ChaCha8Rng`, so results are reproducible across platforms.

pub mod data;
pub mod error;
pub mod gram;
pub mod kernel;
pub mod linalg;
pub mod problems;
pub mod solver;

pub use data::{DenseDataset, Modality, PointCloud};
pub use error::{Error, Result};
pub use gram::{eig_sym_small, gram_iteration_map, solve_inner_subproblem, GramMapWorkspace, GramSubproblem};
pub use problems::{kappa, normalized_rmse, EdmcProblem, SparseSymmetric, SymNmfProblem};
pub use solver::{
    bregman_step, dyn_nolips, dyn_nolips_observed, projected_gradient_armijo, stationarity_residual,
    sufficient_decrease_holds, KernelKind, Objective, Penalty, ProblemSpec, RunTrace, SolveResult,
    SolverConfig, StepMode, Termination, TraceRecord,
};
pub use kernel::{
    bregman_distance, kernel_gradient, kernel_value, solve_cubic_tau, universal_map, KernelParams,
};

/// Dense `n × r` factor `X` of `Y = XXᵀ`.
pub type FactorMatrix = ndarray::Array2<f64>;
