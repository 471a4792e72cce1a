//! Small dense helpers shared by the kernels and problems.

use ndarray::{Array2, ArrayView2};

/// Frobenius inner product `Tr(AᵀB)`.
pub fn inner(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: ArrayView2<f64>) -> f64 {
    norm_sq(a).sqrt()
}

/// `XᵀX` for a tall `n × r` matrix.
pub fn gram(x: ArrayView2<f64>) -> Array2<f64> {
    x.t().dot(&x)
}

pub fn all_finite(a: ArrayView2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Solves `A Y = B` for symmetric positive definite `A` (r × r) by Cholesky
/// factorization. Returns `None` if a pivot is not strictly positive.
pub fn cholesky_solve(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Option<Array2<f64>> {
    let r = a.nrows();
    debug_assert_eq!(a.ncols(), r);
    debug_assert_eq!(b.nrows(), r);
    let mut l = Array2::<f64>::zeros((r, r));
    for j in 0..r {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..r {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    let mut y = b.to_owned();
    for col in 0..y.ncols() {
        // forward: L z = b
        for i in 0..r {
            let mut s = y[[i, col]];
            for k in 0..i {
                s -= l[[i, k]] * y[[k, col]];
            }
            y[[i, col]] = s / l[[i, i]];
        }
        // backward: Lᵀ y = z
        for i in (0..r).rev() {
            let mut s = y[[i, col]];
            for k in (i + 1)..r {
                s -= l[[k, i]] * y[[k, col]];
            }
            y[[i, col]] = s / l[[i, i]];
        }
    }
    Some(y)
}
