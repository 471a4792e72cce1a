use ndarray::{Array2, ArrayView2};

use crate::error::{domain, Result};
use crate::problems::SparseSymmetric;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    /// Term-frequency vectors, compared by cosine similarity.
    TextTf,
    /// Raw pixel vectors, compared by a self-tuned Gaussian kernel.
    ImageRaw,
    Generic,
}

/// Samples in rows, features in columns.
#[derive(Clone, Debug)]
pub struct DenseDataset {
    pub vectors: Array2<f64>,
    pub modality: Modality,
}

impl DenseDataset {
    pub fn new(vectors: Array2<f64>, modality: Modality) -> Result<Self> {
        if vectors.iter().any(|v| !v.is_finite()) {
            return domain("dataset has non-finite entries");
        }
        if modality == Modality::TextTf && vectors.iter().any(|v| *v < 0.0) {
            return domain("term frequencies must be nonnegative");
        }
        Ok(Self { vectors, modality })
    }
}

/// Neighbour index used for the local Gaussian scale.
const SCALE_NEIGHBOR: usize = 7;

/// Dense similarity matrix with zero diagonal and entries in `[0, 1]`.
///
/// Text data uses cosine similarity (zero rows are dissimilar to everything).
/// Other data uses `exp(−‖xᵢ − xⱼ‖² / (sᵢ sⱼ))` where `sᵢ` is the distance
/// from `xᵢ` to its `min(7, n − 1)`-th nearest neighbour.
pub fn similarity_graph(data: &DenseDataset) -> Result<Array2<f64>> {
    let x = data.vectors.view();
    let n = x.nrows();
    if n < 2 {
        return domain(format!("need at least two samples (got {n})"));
    }
    let w = match data.modality {
        Modality::TextTf => cosine_similarity(x),
        Modality::ImageRaw | Modality::Generic => gaussian_self_tuning(x),
    };
    Ok(w)
}

fn cosine_similarity(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let dots = x.dot(&x.t());
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j || norms[i] == 0.0 || norms[j] == 0.0 {
            0.0
        } else {
            (dots[[i, j]] / (norms[i] * norms[j])).clamp(0.0, 1.0)
        }
    })
}

fn gaussian_self_tuning(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let sq = Array2::from_shape_fn((n, n), |(i, j)| {
        x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    });
    let k = SCALE_NEIGHBOR.min(n - 1);
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq[[i, j]]).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1].sqrt()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            return 0.0;
        }
        let s = scale[i] * scale[j];
        if s == 0.0 {
            if sq[[i, j]] == 0.0 { 1.0 } else { 0.0 }
        } else {
            (-sq[[i, j]] / s).exp()
        }
    })
}

/// `⌊log₂ n⌋ + 1`, capped at `n − 1`.
pub fn default_knn(n: usize) -> usize {
    let k = (usize::BITS - 1 - n.max(1).leading_zeros()) as usize + 1;
    k.min(n.saturating_sub(1)).max(1)
}

/// Keeps `(i, j)` when `j` is among the `k` most similar to `i` or `i` among
/// the `k` most similar to `j`. Ties go to the lower index; zero
/// similarities are never stored.
pub fn knn_sparsify(w: ArrayView2<f64>, k: Option<usize>) -> Result<SparseSymmetric> {
    let n = w.nrows();
    if w.ncols() != n {
        return domain(format!("similarity matrix must be square, got {:?}", w.dim()));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return domain("similarities must be finite and nonnegative");
    }
    for i in 0..n {
        for j in 0..i {
            if w[[i, j]] != w[[j, i]] {
                return domain(format!("similarity matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    let k = k.unwrap_or_else(|| default_knn(n));
    if k == 0 || k >= n {
        return domain(format!("k must be in 1..{n} (got {k})"));
    }
    let mut keep = vec![false; n * n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| w[[i, b]].total_cmp(&w[[i, a]]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    let entries = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter(|&(i, j)| keep[i * n + j] && w[[i, j]] > 0.0)
        .map(|(i, j)| (i, j, w[[i, j]]));
    SparseSymmetric::from_triplets(n, entries)
}

/// `D^{-1/2} A D^{-1/2}` with `D` the row sums of `A`; isolated vertices get
/// degree 1.
pub fn normalize_adjacency(a: &SparseSymmetric) -> SparseSymmetric {
    let inv_sqrt: Vec<f64> = a
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
        .collect();
    a.map_values(|i, j, v| v * inv_sqrt[i] * inv_sqrt[j])
}
