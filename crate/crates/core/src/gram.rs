//! Bregman iteration map of the Gram kernel
//! `h(X) = (α/4)‖X‖⁴ + (β/4)‖XᵀX‖² + (σ/2)‖X‖²` for unconstrained problems.
//!
//! The map reduces to an `r × r` eigendecomposition of `VᵀV` and a separable
//! quartic problem of size `r`, which is solved by NoLips with a universal
//! kernel on `ℝʳ`. Total cost is `O(nr² + r³)` on top of the gradient.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{check_shape, domain, Error, Result};
use crate::kernel::{kernel_gradient, solve_cubic_tau, KernelParams};
use crate::linalg::{cholesky_solve, norm};
use crate::FactorMatrix;

/// Symmetric eigendecomposition `S = Pᵀ diag(evals) P` of a small PSD
/// matrix, computed by cyclic Jacobi rotations.
///
/// Rows of `P` are eigenvectors; eigenvalues are sorted in decreasing order
/// and clamped at zero. `S` is symmetrized first; asymmetry above
/// `1e-10·max(1, ‖S‖)` or an eigenvalue below `−1e-10·max(1, ‖S‖)` is
/// rejected.
pub fn eig_sym_small(s: ArrayView2<f64>) -> Result<(Array2<f64>, Vec<f64>)> {
    let r = s.nrows();
    if s.ncols() != r {
        return domain(format!("eigendecomposition needs a square matrix, got {:?}", s.dim()));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return domain("non-finite entry in symmetric matrix");
    }
    let scale = norm(s).max(1.0);
    let asym = norm((&s - &s.t()).view());
    if asym > 1e-10 * scale {
        return domain(format!("matrix is not symmetric (‖S − Sᵀ‖ = {asym:e})"));
    }
    let mut a = (&s + &s.t()) * 0.5;
    let mut v = Array2::<f64>::eye(r);
    let target = 1e-12 * norm(a.view());

    for _sweep in 0..100 {
        let off: f64 = (0..r)
            .flat_map(|i| (0..r).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..r {
            for q in (p + 1)..r {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..r {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - sn * akq;
                    a[[k, q]] = sn * akp + c * akq;
                }
                for k in 0..r {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - sn * aqk;
                    a[[q, k]] = sn * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..r {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - sn * vkq;
                    v[[k, q]] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let min_eval = order.last().map(|&i| a[[i, i]]).unwrap_or(0.0);
    if min_eval < -1e-10 * scale {
        return domain(format!("matrix is not positive semidefinite (eigenvalue {min_eval:e})"));
    }
    let evals = order.iter().map(|&i| a[[i, i]].max(0.0)).collect();
    let mut p = Array2::<f64>::zeros((r, r));
    for (row, &i) in order.iter().enumerate() {
        p.row_mut(row).assign(&v.column(i));
    }
    Ok((p, evals))
}

/// The separable quartic problem
/// `min φ(x) = (α/4)‖x‖⁴ + (β/4)Σxᵢ⁴ + (σ/2)‖x‖² − ⟨η, x⟩`.
#[derive(Clone, Debug)]
pub struct GramSubproblem {
    pub eta: Vec<f64>,
    pub params: KernelParams,
}

impl GramSubproblem {
    pub fn new(eta: Vec<f64>, params: KernelParams) -> Result<Self> {
        if eta.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return domain("eta entries must be finite and nonnegative");
        }
        Ok(Self { eta, params })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let (a, b, s) = (self.params.alpha(), self.params.beta(), self.params.sigma());
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let quart: f64 = x.iter().map(|v| v.powi(4)).sum();
        let lin: f64 = x.iter().zip(&self.eta).map(|(v, e)| v * e).sum();
        0.25 * a * sq * sq + 0.25 * b * quart + 0.5 * s * sq - lin
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (a, b, s) = (self.params.alpha(), self.params.beta(), self.params.sigma());
        let sq: f64 = x.iter().map(|v| v * v).sum();
        x.iter()
            .zip(&self.eta)
            .map(|(v, e)| (a * sq + b * v * v + s) * v - e)
            .collect()
    }

    /// `‖∇h(T) − V‖` of the matrix `T` assembled from `mu`, computed in the
    /// eigenbasis of `VᵀV` where every term is diagonal.
    pub fn mirror_residual(&self, mu: &[f64]) -> f64 {
        let (a, b, s) = (self.params.alpha(), self.params.beta(), self.params.sigma());
        let mu_sq: f64 = mu.iter().map(|v| v * v).sum();
        let diag: Vec<f64> = mu.iter().map(|m| a * mu_sq + b * m * m + s).collect();
        let nu: Vec<f64> = self.eta.iter().zip(&diag).map(|(e, d)| e / d).collect();
        let nu_sq: f64 = nu.iter().map(|v| v * v).sum();
        nu.iter()
            .zip(&diag)
            .map(|(n, d)| {
                let exact = a * nu_sq + b * n * n + s;
                (n * (exact - d)).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Safeguarded Newton steps on `∇φ = 0`. The Hessian
    /// `diag(α‖x‖² + 3βxᵢ² + σ) + 2αxxᵀ` is inverted by Sherman-Morrison and
    /// the step is halved until it shrinks `‖∇φ‖`.
    fn newton_polish(&self, mut mu: Vec<f64>, steps: usize) -> Vec<f64> {
        let (a, b, s) = (self.params.alpha(), self.params.beta(), self.params.sigma());
        let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut grad = self.gradient(&mu);
        let mut gnorm = norm(&grad);
        for _ in 0..steps {
            if gnorm == 0.0 {
                break;
            }
            let sq: f64 = mu.iter().map(|v| v * v).sum();
            let d: Vec<f64> = mu.iter().map(|m| a * sq + 3.0 * b * m * m + s).collect();
            let dinv_g: Vec<f64> = grad.iter().zip(&d).map(|(g, di)| g / di).collect();
            let dinv_x: Vec<f64> = mu.iter().zip(&d).map(|(m, di)| m / di).collect();
            let x_dinv_g: f64 = mu.iter().zip(&dinv_g).map(|(m, v)| m * v).sum();
            let x_dinv_x: f64 = mu.iter().zip(&dinv_x).map(|(m, v)| m * v).sum();
            let coef = 2.0 * a * x_dinv_g / (1.0 + 2.0 * a * x_dinv_x);
            let dir: Vec<f64> = dinv_g.iter().zip(&dinv_x).map(|(dg, dx)| dg - coef * dx).collect();
            // the Newton direction decreases ‖∇φ‖² at rate 2‖∇φ‖²
            let mut t = 1.0;
            let accepted = loop {
                let cand: Vec<f64> = mu.iter().zip(&dir).map(|(m, d)| (m - t * d).max(0.0)).collect();
                let cand_grad = self.gradient(&cand);
                let cand_norm = norm(&cand_grad);
                if cand_norm < gnorm {
                    break Some((cand, cand_grad, cand_norm));
                }
                t *= 0.5;
                if t < NEWTON_MIN_STEP {
                    break None;
                }
            };
            let Some((cand, cand_grad, cand_norm)) = accepted else {
                break;
            };
            mu = cand;
            grad = cand_grad;
            gnorm = cand_norm;
        }
        mu
    }

    /// One NoLips step with the universal kernel of weights `(α + 3β, σ)`,
    /// relative to which `φ` is 1-smooth.
    fn nolips_step(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let alpha_u = self.params.alpha() + 3.0 * self.params.beta();
        let sigma = self.params.sigma();
        let sq: f64 = mu.iter().map(|v| v * v).sum();
        let grad = self.gradient(mu);
        let v: Vec<f64> = mu
            .iter()
            .zip(&grad)
            .map(|(m, g)| (alpha_u * sq + sigma) * m - g)
            .collect();
        let vsq: f64 = v.iter().map(|x| x * x).sum();
        let z = solve_cubic_tau(sigma, alpha_u * vsq)?;
        Ok(v.into_iter().map(|x| x / z).collect())
    }
}

const NEWTON_POLISH_STEPS: usize = 4;
const NEWTON_FALLBACK_STEPS: usize = 50;
const NEWTON_MIN_STEP: f64 = 1e-9;

/// Inner-solver settings plus the warm start carried between outer
/// iterations. One workspace per solver run.
#[derive(Clone, Debug)]
pub struct GramMapWorkspace {
    pub warm_mu: Option<Vec<f64>>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    inner_iterations: Vec<usize>,
}

impl Default for GramMapWorkspace {
    fn default() -> Self {
        Self {
            warm_mu: None,
            inner_tol: 1e-6,
            inner_max_iters: 500,
            inner_iterations: Vec::new(),
        }
    }
}

impl GramMapWorkspace {
    pub fn new(inner_tol: f64, inner_max_iters: usize) -> Result<Self> {
        if !(inner_tol > 0.0) {
            return domain(format!("inner tolerance must be positive (got {inner_tol})"));
        }
        if inner_max_iters == 0 {
            return domain("inner iteration cap must be positive");
        }
        Ok(Self {
            inner_tol,
            inner_max_iters,
            ..Self::default()
        })
    }

    /// Inner iteration counts of every subproblem solved with this workspace.
    pub fn inner_iterations(&self) -> &[usize] {
        &self.inner_iterations
    }
}

/// Minimizes the Gram subproblem by NoLips, warm-started from `ws.warm_mu`
/// (or the origin). Stops once `‖∇φ(μ)‖ / ‖η‖ < ws.inner_tol` and the
/// assembled map inverts `∇h` to `ws.inner_tol · max(1, ‖η‖)`, then refines
/// the result with a few Newton steps. If the iteration cap is reached, a
/// longer Newton run gets one chance to meet the tolerance. Only NoLips
/// iterations are counted.
pub fn solve_inner_subproblem(sub: &GramSubproblem, ws: &mut GramMapWorkspace) -> Result<Vec<f64>> {
    let r = sub.eta.len();
    let eta_norm = sub.eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    if eta_norm == 0.0 {
        ws.inner_iterations.push(0);
        ws.warm_mu = Some(vec![0.0; r]);
        return Ok(vec![0.0; r]);
    }
    let mut mu = match ws.warm_mu.take() {
        // φ is minimized on μ ≥ 0 since η ≥ 0
        Some(m) if m.len() == r => m.into_iter().map(|v| v.max(0.0)).collect(),
        _ => vec![0.0; r],
    };
    let residual = |mu: &[f64]| {
        let grad = sub.gradient(mu).iter().map(|g| g * g).sum::<f64>().sqrt() / eta_norm;
        grad.max(sub.mirror_residual(mu) / eta_norm.max(1.0))
    };
    let mut res = residual(&mu);
    let mut iters = 0;
    while res >= ws.inner_tol {
        if iters == ws.inner_max_iters {
            // slow when β ≫ α; finish with Newton before giving up
            mu = sub.newton_polish(mu, NEWTON_FALLBACK_STEPS);
            res = residual(&mu);
            if res < ws.inner_tol {
                break;
            }
            ws.inner_iterations.push(iters);
            return Err(Error::Convergence {
                iterations: iters,
                residual: res,
            });
        }
        mu = sub.nolips_step(&mu)?;
        iters += 1;
        res = residual(&mu);
    }
    let mu = sub.newton_polish(mu, NEWTON_POLISH_STEPS);
    ws.inner_iterations.push(iters);
    ws.warm_mu = Some(mu.clone());
    Ok(mu)
}

/// Bregman iteration map of the Gram kernel (no penalty term).
///
/// With `V = ∇h(X) − λ∇f(X)` and `VᵀV = Pᵀ diag(η²) P`, returns
/// `T = V [α Tr(Z) I + βZ + σI]⁻¹` where `Z = Pᵀ diag(μ²) P` and `μ` solves
/// the inner subproblem. `T` is the unique solution of `∇h(T) = V`.
pub fn gram_iteration_map(
    p: &KernelParams,
    x: ArrayView2<f64>,
    grad_f: ArrayView2<f64>,
    lambda: f64,
    ws: &mut GramMapWorkspace,
) -> Result<FactorMatrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("step size must be positive and finite (lambda={lambda})"));
    }
    check_shape(x.dim(), grad_f.dim())?;
    let mut v = kernel_gradient(p, x);
    v.scaled_add(-lambda, &grad_f);
    invert_gram_gradient(p, v.view(), ws)
}

/// Solves `∇h(T) = V` for the Gram kernel.
pub fn invert_gram_gradient(
    p: &KernelParams,
    v: ArrayView2<f64>,
    ws: &mut GramMapWorkspace,
) -> Result<FactorMatrix> {
    let r = v.ncols();
    let vtv = v.t().dot(&v);
    let (pmat, evals) = eig_sym_small(vtv.view())?;
    let eta: Vec<f64> = evals.iter().map(|e| e.max(0.0).sqrt()).collect();
    let sub = GramSubproblem::new(eta, *p)?;
    let mu = solve_inner_subproblem(&sub, ws)?;

    let mu_sq = Array1::from_iter(mu.iter().map(|m| m * m));
    // Z = Pᵀ diag(μ²) P
    let z = pmat.t().dot(&(&pmat * &mu_sq.view().insert_axis(ndarray::Axis(1))));
    let trace_z: f64 = mu_sq.sum();
    let mut system = z * p.beta();
    for i in 0..r {
        system[[i, i]] += p.alpha() * trace_z + p.sigma();
    }
    // system is symmetric with smallest eigenvalue ≥ σ
    let t_transposed = cholesky_solve(system.view(), v.t())
        .ok_or_else(|| Error::Domain("Gram system matrix lost positive definiteness".into()))?;
    Ok(t_transposed.reversed_axes())
}
