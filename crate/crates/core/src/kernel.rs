//! Quartic distance kernels on `n × r` matrices.
//!
//! The kernel family is
//!
//! ```text
//! h(X) = (α/4)‖X‖⁴ + (β/4)‖XᵀX‖² + (σ/2)‖X‖²
//! ```
//!
//! with Frobenius norms throughout. `β = 0` is the universal kernel, which
//! admits a closed-form Bregman iteration map (optionally composed with a
//! projection onto the nonnegative orthant). `β > 0` is a Gram kernel whose map
//! lives in [`crate::gram`].

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{check_shape, domain, Error, Result};
use crate::linalg::{gram, inner, norm_sq};
use crate::FactorMatrix;

/// Weights `(α, β, σ)` of a quartic kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    alpha: f64,
    beta: f64,
    sigma: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && sigma.is_finite()) {
            return domain("kernel parameters must be finite");
        }
        if alpha < 0.0 || beta < 0.0 {
            return domain(format!("alpha and beta must be nonnegative (alpha={alpha}, beta={beta})"));
        }
        if sigma <= 0.0 {
            return domain(format!("sigma must be positive (sigma={sigma})"));
        }
        Ok(Self { alpha, beta, sigma })
    }

    /// Universal kernel `(α/4)‖X‖⁴ + (σ/2)‖X‖²`.
    pub fn universal(alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(alpha, 0.0, sigma)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_universal(&self) -> bool {
        self.beta == 0.0
    }
}

/// Returns the unique root `z ≥ σ` of `z²(z − σ) = c`.
///
/// Newton's method is run on `δ = z − σ`. The cubic is convex and increasing
/// on `δ ≥ 0` and the starting point `min(∛c, c/σ²)` lies above the root, so
/// the iterates decrease monotonically; iteration stops once they stop
/// decreasing. Bisection takes over if Newton fails to settle.
pub fn solve_cubic_tau(sigma: f64, c: f64) -> Result<f64> {
    if !sigma.is_finite() || !c.is_finite() {
        return domain(format!("non-finite cubic input (sigma={sigma}, c={c})"));
    }
    if sigma <= 0.0 {
        return domain(format!("sigma must be positive (sigma={sigma})"));
    }
    if c < 0.0 {
        return domain(format!("c must be nonnegative (c={c})"));
    }
    if c == 0.0 {
        return Ok(sigma);
    }

    let resid = |d: f64| (sigma + d) * (sigma + d) * d - c;
    let mut delta = c.cbrt().min(c / (sigma * sigma));
    let mut settled = false;
    for _ in 0..100 {
        let g = resid(delta);
        if g <= 0.0 {
            settled = true;
            break;
        }
        let slope = (sigma + delta) * (sigma + 3.0 * delta);
        let next = delta - g / slope;
        if !(next < delta) {
            settled = true;
            break;
        }
        delta = next.max(0.0);
    }
    if !settled || !delta.is_finite() {
        delta = bisect_delta(sigma, c);
    }
    // Newton from above may stop one ulp high; take whichever neighbour of
    // the final iterate has the smaller residual.
    let z = sigma + delta;
    let lower = f64::from_bits(z.to_bits() - 1);
    let best = if lower >= sigma && lower_residual_better(sigma, c, lower, z) {
        lower
    } else {
        z
    };
    Ok(best)
}

fn lower_residual_better(sigma: f64, c: f64, lower: f64, z: f64) -> bool {
    let r = |x: f64| (x * x * (x - sigma) - c).abs();
    r(lower) < r(z)
}

fn bisect_delta(sigma: f64, c: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = c.cbrt().min(c / (sigma * sigma));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (sigma + mid) * (sigma + mid) * mid - c > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `(α/4)‖X‖⁴ + (β/4)‖XᵀX‖² + (σ/2)‖X‖²`.
pub fn kernel_value(p: &KernelParams, x: ArrayView2<f64>) -> f64 {
    let sq = norm_sq(x);
    let mut v = 0.25 * p.alpha * sq * sq + 0.5 * p.sigma * sq;
    if p.beta != 0.0 {
        v += 0.25 * p.beta * norm_sq(gram(x).view());
    }
    v
}

/// `X(α‖X‖² + σ) + βX(XᵀX)`.
pub fn kernel_gradient(p: &KernelParams, x: ArrayView2<f64>) -> FactorMatrix {
    let scale = p.alpha * norm_sq(x) + p.sigma;
    let mut g = x.mapv(|v| scale * v);
    if p.beta != 0.0 {
        let xtx = gram(x);
        g.scaled_add(p.beta, &x.dot(&xtx));
    }
    g
}

/// Bregman distance `D_h(X, Y) = h(X) − h(Y) − ⟨∇h(Y), X − Y⟩`.
///
/// Evaluated through the expansion in `Δ = X − Y`
///
/// ```text
/// D = α(¼(‖X‖² − ‖Y‖²)² + ½‖Y‖²‖Δ‖²) + β(½⟨YᵀY, ΔᵀΔ⟩ + ¼‖YᵀΔ + ΔᵀY + ΔᵀΔ‖²) + (σ/2)‖Δ‖²
/// ```
///
/// where every term is nonnegative, so no cancellation occurs for nearby
/// arguments.
pub fn bregman_distance(p: &KernelParams, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    check_shape(y.dim(), x.dim())?;
    let delta = &x - &y;
    let d_sq = norm_sq(delta.view());
    let y_sq = norm_sq(y);
    // ‖X‖² − ‖Y‖² = ⟨X + Y, X − Y⟩
    let t: f64 = Zip::from(&x)
        .and(&y)
        .fold(0.0, |acc, &a, &b| acc + (a + b) * (a - b));
    let mut d = p.alpha * (0.25 * t * t + 0.5 * y_sq * d_sq) + 0.5 * p.sigma * d_sq;
    if p.beta != 0.0 {
        let ytd = y.t().dot(&delta);
        let dtd = gram(delta.view());
        let yty = gram(y);
        let e = &ytd + &ytd.t() + &dtd;
        d += p.beta * (0.5 * inner(yty.view(), dtd.view()) + 0.25 * norm_sq(e.view()));
    }
    Ok(d)
}

/// Inverts the universal kernel's gradient: returns `T = V / τ_σ(α‖V‖²)`,
/// the unique matrix with `(α‖T‖² + σ)T = V`.
pub fn invert_universal_gradient(p: &KernelParams, v: ArrayView2<f64>) -> Result<FactorMatrix> {
    let z = solve_cubic_tau(p.sigma, p.alpha * norm_sq(v))?;
    Ok(v.mapv(|e| e / z))
}

/// Bregman iteration map of the universal kernel.
///
/// Forms `U = (α‖X‖² + σ)X − λ∇f(X)`, projects onto `U ≥ 0` when `nonneg` is
/// set, and returns `U / τ_σ(α‖U‖²)`.
pub fn universal_map(
    p: &KernelParams,
    x: ArrayView2<f64>,
    grad_f: ArrayView2<f64>,
    lambda: f64,
    nonneg: bool,
) -> Result<FactorMatrix> {
    if !p.is_universal() {
        return Err(Error::Config(
            "universal_map requires beta = 0; use the Gram map for beta > 0".into(),
        ));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("step size must be positive and finite (lambda={lambda})"));
    }
    check_shape(x.dim(), grad_f.dim())?;
    let mut u = kernel_gradient(p, x);
    u.scaled_add(-lambda, &grad_f);
    if nonneg {
        u.mapv_inplace(|v| v.max(0.0));
    }
    invert_universal_gradient(p, u.view())
}

/// Projection onto the nonnegative orthant.
pub fn project_nonneg(x: ArrayView2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}
