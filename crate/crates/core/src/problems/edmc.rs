use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SIGMA_FLOOR;
use crate::error::{check_shape, domain, Error, Result};
use crate::kernel::KernelParams;
use crate::solver::{Objective, Penalty, ProblemSpec};
use crate::FactorMatrix;

/// Euclidean distance matrix completion:
/// `min ½ Σ_{{i,j}∈Ω} (‖Xᵢ − Xⱼ‖² − d_ij)²`.
///
/// `Ω` holds unordered pairs, each counted once in the objective.
#[derive(Clone, Debug)]
pub struct EdmcProblem {
    n: usize,
    rank: usize,
    pairs: Vec<(usize, usize)>,
    dist: Vec<f64>,
    max_degree: usize,
}

impl EdmcProblem {
    /// `observations` are `(i, j, d_ij)` with `d_ij` a squared distance.
    pub fn new(n: usize, rank: usize, observations: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if rank == 0 {
            return domain("embedding dimension must be positive");
        }
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        let mut dist = Vec::new();
        let mut degree = vec![0usize; n];
        for (i, j, d) in observations {
            if i >= n || j >= n {
                return domain(format!("pair ({i}, {j}) out of range for n = {n}"));
            }
            if i == j {
                return domain(format!("pair ({i}, {j}) is not between distinct points"));
            }
            if !(d.is_finite() && d >= 0.0) {
                return domain(format!("squared distance for ({i}, {j}) must be finite and nonnegative"));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return domain(format!("duplicate pair ({}, {})", key.0, key.1));
            }
            degree[i] += 1;
            degree[j] += 1;
            pairs.push(key);
            dist.push(d);
        }
        Ok(Self {
            n,
            rank,
            pairs,
            dist,
            max_degree: degree.into_iter().max().unwrap_or(0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn objective(&self, x: ArrayView2<f64>) -> Result<f64> {
        check_shape(self.shape(), x.dim())?;
        Ok(self.value(x))
    }

    pub fn gradient_checked(&self, x: ArrayView2<f64>) -> Result<FactorMatrix> {
        check_shape(self.shape(), x.dim())?;
        Ok(self.gradient(x))
    }

    /// `9 · max_i |{j : {i, j} ∈ Ω}|`.
    pub fn lipschitz_edm(&self) -> f64 {
        9.0 * self.max_degree as f64
    }

    /// `α = 6L_EDM`, `β = 6L_EDM` for the Gram kernel (0 otherwise),
    /// `σ = 2‖P_Ω(D)‖` with `P_Ω(D)` the symmetric matrix of observed
    /// distances (each pair contributes twice), floored at [`SIGMA_FLOOR`].
    pub fn kernel_params(&self, use_gram: bool) -> Result<KernelParams> {
        if self.pairs.is_empty() {
            return Err(Error::Domain("no observed distances".into()));
        }
        let l = self.lipschitz_edm();
        let norm_d = (2.0 * self.dist.iter().map(|d| d * d).sum::<f64>()).sqrt();
        let sigma = (2.0 * norm_d).max(SIGMA_FLOOR);
        KernelParams::new(6.0 * l, if use_gram { 6.0 * l } else { 0.0 }, sigma)
    }

    pub const REL_LIPSCHITZ: f64 = 1.0;

    pub fn spec(&self, use_gram: bool) -> Result<ProblemSpec<&Self>> {
        ProblemSpec::new(self, Penalty::None, self.kernel_params(use_gram)?, Self::REL_LIPSCHITZ)
    }

    /// Entries i.i.d. Gaussian with standard deviation `√(mean d / (2r))`,
    /// so that expected squared distances match the observed mean.
    pub fn initial_point(&self, seed: u64) -> FactorMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = if self.dist.is_empty() {
            0.0
        } else {
            self.dist.iter().sum::<f64>() / self.dist.len() as f64
        };
        let scale = (mean / (2.0 * self.rank as f64)).sqrt();
        FactorMatrix::from_shape_simple_fn((self.n, self.rank), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
    }
}

fn sq_dist(x: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Objective for EdmcProblem {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.rank)
    }

    fn value(&self, x: ArrayView2<f64>) -> f64 {
        0.5 * self
            .pairs
            .iter()
            .zip(&self.dist)
            .map(|(&(i, j), d)| (sq_dist(x, i, j) - d).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, x: ArrayView2<f64>) -> FactorMatrix {
        let r = x.ncols();
        let mut g = Array2::<f64>::zeros(x.dim());
        for (&(i, j), d) in self.pairs.iter().zip(&self.dist) {
            let w = 2.0 * (sq_dist(x, i, j) - d);
            for c in 0..r {
                let diff = w * (x[[i, c]] - x[[j, c]]);
                g[[i, c]] += diff;
                g[[j, c]] -= diff;
            }
        }
        g
    }
}

/// `κ(Y)_ij = Y_ii + Y_jj − 2Y_ij`.
pub fn kappa(y: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = y.nrows();
    if y.ncols() != n {
        return domain(format!("kappa needs a square matrix, got {:?}", y.dim()));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            y[[i, i]] + y[[j, j]] - 2.0 * y[[i, j]]
        }
    }))
}

/// `‖Δ(X) − Δ(X*)‖ / ‖Δ(X*)‖` over the full squared-distance matrices.
/// Invariant under rigid motions of `X`.
pub fn normalized_rmse(truth: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<f64> {
    check_shape(truth.dim(), x.dim())?;
    let n = truth.nrows();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let t = sq_dist(truth, i, j);
            let e = sq_dist(x, i, j) - t;
            num += e * e;
            den += t * t;
        }
    }
    if den == 0.0 {
        return domain("ground-truth distance matrix is zero");
    }
    Ok((num / den).sqrt())
}
