use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::problems::EdmcProblem;

/// Points in rows, optionally with the curve parameter that generated them.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Array2<f64>,
    pub t: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>) -> Self {
        Self { points, t: None }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// `n` points `(cos 3t, sin 3t, 2t)` with `t ~ U[0, 2π]`.
pub fn helix_generate(n: usize, seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return domain(format!("helix needs at least two points (got {n})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    let points = Array2::from_shape_fn((n, 3), |(i, k)| match k {
        0 => (3.0 * t[i]).cos(),
        1 => (3.0 * t[i]).sin(),
        _ => 2.0 * t[i],
    });
    Ok(PointCloud { points, t: Some(t) })
}

const MAX_RESAMPLES: usize = 1000;

/// Observes each unordered pair independently with probability `rate` and
/// records its squared distance. Draws are repeated from the same stream
/// until every point has at least one observed pair.
pub fn sample_distances(cloud: &PointCloud, rate: f64, seed: u64) -> Result<EdmcProblem> {
    let n = cloud.len();
    if n < 2 {
        return domain(format!("need at least two points (got {n})"));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return domain(format!("sampling rate must be in (0, 1], got {rate}"));
    }
    let x = &cloud.points;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let mut obs = Vec::new();
        let mut degree = vec![0usize; n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(rate) {
                    let d: f64 = x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    obs.push((i, j, d));
                    degree[i] += 1;
                    degree[j] += 1;
                }
            }
        }
        if degree.iter().all(|&d| d > 0) {
            return EdmcProblem::new(n, cloud.dim(), obs);
        }
    }
    domain(format!("no sample with every point observed after {MAX_RESAMPLES} draws at rate {rate}"))
}
