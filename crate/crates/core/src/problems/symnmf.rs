use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SparseSymmetric, SIGMA_FLOOR};
use crate::error::{check_shape, domain, Result};
use crate::kernel::KernelParams;
use crate::linalg::{gram, inner, norm_sq};
use crate::solver::{Objective, Penalty, ProblemSpec};
use crate::FactorMatrix;

/// Symmetric NMF: `min ½‖M − XXᵀ‖²` subject to `X ≥ 0`.
#[derive(Clone, Debug)]
pub struct SymNmfProblem {
    m: SparseSymmetric,
    rank: usize,
    norm_m: f64,
    norm_m_sq: f64,
}

impl SymNmfProblem {
    pub fn new(m: SparseSymmetric, rank: usize) -> Result<Self> {
        if rank == 0 || rank > m.n() {
            return domain(format!("rank must be in 1..={} (got {rank})", m.n()));
        }
        let norm_m_sq = m.norm_sq();
        Ok(Self {
            norm_m: norm_m_sq.sqrt(),
            norm_m_sq,
            m,
            rank,
        })
    }

    pub fn matrix(&self) -> &SparseSymmetric {
        &self.m
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn norm_m(&self) -> f64 {
        self.norm_m
    }

    pub fn norm_m_sq(&self) -> f64 {
        self.norm_m_sq
    }

    /// `½(‖M‖² − 2⟨MX, X⟩ + ‖XᵀX‖²)`, clamped at zero.
    pub fn objective(&self, x: ArrayView2<f64>) -> Result<f64> {
        check_shape(self.shape(), x.dim())?;
        Ok(self.value(x))
    }

    /// `2(X(XᵀX) − MX)`.
    pub fn gradient_checked(&self, x: ArrayView2<f64>) -> Result<FactorMatrix> {
        check_shape(self.shape(), x.dim())?;
        Ok(self.gradient(x))
    }

    /// `α = 6`, `β = 0`, `σ = 2‖M‖`, making `f` 1-smooth relative to the
    /// universal kernel.
    pub fn kernel_params(&self) -> KernelParams {
        KernelParams::universal(6.0, (2.0 * self.norm_m).max(SIGMA_FLOOR))
            .expect("constants are positive and finite")
    }

    pub const REL_LIPSCHITZ: f64 = 1.0;

    pub fn spec(&self) -> ProblemSpec<&Self> {
        ProblemSpec::new(self, Penalty::NonnegIndicator, self.kernel_params(), Self::REL_LIPSCHITZ)
            .expect("universal kernel with the nonnegativity constraint")
    }

    /// Entries i.i.d. `U(0, 1)` scaled by `√(mean stored M_ij / r)`.
    pub fn initial_point(&self, seed: u64) -> FactorMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (self.m.mean_value() / self.rank as f64).sqrt();
        FactorMatrix::from_shape_simple_fn((self.m.n(), self.rank), || scale * rng.random::<f64>())
    }
}

impl Objective for SymNmfProblem {
    fn shape(&self) -> (usize, usize) {
        (self.m.n(), self.rank)
    }

    fn value(&self, x: ArrayView2<f64>) -> f64 {
        let mx = self.m.mul_dense(x);
        let xtx = gram(x);
        (0.5 * (self.norm_m_sq - 2.0 * inner(mx.view(), x) + norm_sq(xtx.view()))).max(0.0)
    }

    fn gradient(&self, x: ArrayView2<f64>) -> FactorMatrix {
        let xtx = gram(x);
        let mut g = x.dot(&xtx);
        g -= &self.m.mul_dense(x);
        g *= 2.0;
        g
    }
}
