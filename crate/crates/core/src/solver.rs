//! Dyn-NoLips: Bregman proximal gradient with step halving/doubling, and a
//! Euclidean projected gradient baseline with Armijo backtracking.

use std::time::Instant;

use ndarray::ArrayView2;

use crate::error::{check_shape, domain, Error, Result};
use crate::gram::{gram_iteration_map, GramMapWorkspace};
use crate::kernel::{bregman_distance, project_nonneg, universal_map, KernelParams};
use crate::linalg::{all_finite, inner, norm};
use crate::FactorMatrix;

/// Smooth part `f(X) = F(XXᵀ)` of the objective.
pub trait Objective {
    /// `(n, r)` of the factor matrix.
    fn shape(&self) -> (usize, usize);
    fn value(&self, x: ArrayView2<f64>) -> f64;
    fn gradient(&self, x: ArrayView2<f64>) -> FactorMatrix;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn value(&self, x: ArrayView2<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: ArrayView2<f64>) -> FactorMatrix {
        (**self).gradient(x)
    }
}

/// Nonsmooth part `g` of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Penalty {
    None,
    /// Indicator of the nonnegative orthant.
    NonnegIndicator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Universal,
    Gram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// `λ = 1/L` at every iteration.
    Fixed,
    /// Halve until sufficient decrease holds, then double for the next try.
    Dynamic,
}

/// `min Ψ(X) = f(X) + g(X)` with a kernel relative to which `f` is
/// `rel_lipschitz`-smooth.
#[derive(Clone, Debug)]
pub struct ProblemSpec<F> {
    pub objective: F,
    pub penalty: Penalty,
    pub kernel: KernelParams,
    pub rel_lipschitz: f64,
}

impl<F: Objective> ProblemSpec<F> {
    pub fn new(objective: F, penalty: Penalty, kernel: KernelParams, rel_lipschitz: f64) -> Result<Self> {
        if !(rel_lipschitz > 0.0 && rel_lipschitz.is_finite()) {
            return domain(format!("relative smoothness constant must be positive (got {rel_lipschitz})"));
        }
        if penalty == Penalty::NonnegIndicator && !kernel.is_universal() {
            return Err(Error::Config(
                "the nonnegativity constraint requires the universal kernel (beta = 0)".into(),
            ));
        }
        Ok(Self {
            objective,
            penalty,
            kernel,
            rel_lipschitz,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.objective.shape()
    }

    /// `Ψ(X) = f(X) + g(X)`; `+∞` outside the domain of `g`.
    pub fn psi(&self, x: ArrayView2<f64>) -> f64 {
        match self.penalty {
            Penalty::NonnegIndicator if x.iter().any(|v| *v < 0.0) => f64::INFINITY,
            _ => self.objective.value(x),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub step_mode: StepMode,
    pub lambda0: f64,
    pub lambda_max: f64,
    /// Stationarity tolerance on [`stationarity_residual`].
    pub tol: f64,
    pub max_iters: usize,
    /// Seed used by callers to draw `X₀`; the solver itself is deterministic.
    pub seed: u64,
    pub kernel_kind: KernelKind,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl SolverConfig {
    /// `λ₀ = 1/L`, `λ_max = 10⁴/L`, `tol = 1e-6`, `10⁴` iterations.
    pub fn new(rel_lipschitz: f64, kernel_kind: KernelKind) -> Self {
        Self {
            step_mode: StepMode::Dynamic,
            lambda0: 1.0 / rel_lipschitz,
            lambda_max: 1e4 / rel_lipschitz,
            tol: 1e-6,
            max_iters: 10_000,
            seed: 0,
            kernel_kind,
            inner_tol: 1e-6,
            inner_max_iters: 500,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return domain(format!("lambda0 must be positive (got {})", self.lambda0));
        }
        if !(self.lambda_max >= self.lambda0 && self.lambda_max.is_finite()) {
            return domain(format!(
                "lambda_max ({}) must be finite and at least lambda0 ({})",
                self.lambda_max, self.lambda0
            ));
        }
        if !(self.tol >= 0.0) {
            return domain("tolerance must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub step_size: f64,
    pub elapsed_s: f64,
    pub residual: f64,
    pub halvings: usize,
}

/// Per-iteration log; row 0 describes the starting point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    /// True if no objective exceeds its predecessor by more than
    /// `rel_slack · max(1, |previous|)`.
    pub fn is_nonincreasing(&self, rel_slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + rel_slack * w[0].objective.abs().max(1.0))
    }

    /// Zeroes the timing column so that traces of identical runs compare equal.
    pub fn clear_timings(&mut self) {
        for r in &mut self.records {
            r.elapsed_s = 0.0;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    TolReached,
    MaxIters,
    InnerFailure,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: FactorMatrix,
    pub trace: RunTrace,
    pub termination: Termination,
    /// Why the run stopped early, for `InnerFailure`.
    pub diagnostic: Option<String>,
    /// Gram inner-loop iteration counts, one per map evaluation of the main
    /// iteration (empty for the universal kernel).
    pub inner_iterations: Vec<usize>,
}

/// Slack absorbing roundoff in the sufficient decrease test.
fn decrease_slack(fx: f64) -> f64 {
    1e-12 * fx.abs().max(1.0)
}

fn decrease_holds_with(
    kernel: &KernelParams,
    x: ArrayView2<f64>,
    fx: f64,
    grad: ArrayView2<f64>,
    xp: ArrayView2<f64>,
    fxp: f64,
    lambda: f64,
) -> bool {
    if !fxp.is_finite() {
        return false;
    }
    let lin = inner(grad, (&xp - &x).view());
    let dist = match bregman_distance(kernel, xp, x) {
        Ok(d) => d,
        Err(_) => return false,
    };
    fxp <= fx + lin + dist / lambda + decrease_slack(fx)
}

/// `f(X⁺) ≤ f(X) + ⟨∇f(X), X⁺ − X⟩ + D_h(X⁺, X)/λ`, up to a roundoff slack of
/// `1e-12·max(1, |f(X)|)`.
pub fn sufficient_decrease_holds<F: Objective>(
    spec: &ProblemSpec<F>,
    x: ArrayView2<f64>,
    xp: ArrayView2<f64>,
    lambda: f64,
) -> bool {
    let f = &spec.objective;
    decrease_holds_with(
        &spec.kernel,
        x,
        f.value(x),
        f.gradient(x).view(),
        xp,
        f.value(xp),
        lambda,
    )
}

fn map_with_gradient<F: Objective>(
    spec: &ProblemSpec<F>,
    kind: KernelKind,
    x: ArrayView2<f64>,
    grad: ArrayView2<f64>,
    lambda: f64,
    ws: &mut GramMapWorkspace,
) -> Result<FactorMatrix> {
    match (kind, spec.penalty) {
        (KernelKind::Gram, Penalty::NonnegIndicator) => Err(Error::Config(
            "the Gram kernel map is only available without a penalty".into(),
        )),
        (KernelKind::Gram, Penalty::None) => gram_iteration_map(&spec.kernel, x, grad, lambda, ws),
        (KernelKind::Universal, penalty) => universal_map(
            &spec.kernel,
            x,
            grad,
            lambda,
            penalty == Penalty::NonnegIndicator,
        ),
    }
}

/// Bregman proximal iteration map `T_λ(X)` for the chosen kernel.
pub fn bregman_step<F: Objective>(
    spec: &ProblemSpec<F>,
    kind: KernelKind,
    x: ArrayView2<f64>,
    lambda: f64,
    ws: &mut GramMapWorkspace,
) -> Result<FactorMatrix> {
    check_shape(spec.shape(), x.dim())?;
    let grad = spec.objective.gradient(x);
    map_with_gradient(spec, kind, x, grad.view(), lambda, ws)
}

fn residual_with_gradient<F: Objective>(
    spec: &ProblemSpec<F>,
    kind: KernelKind,
    x: ArrayView2<f64>,
    grad: ArrayView2<f64>,
    lambda: f64,
    ws: &mut GramMapWorkspace,
) -> Result<f64> {
    let t = map_with_gradient(spec, kind, x, grad, lambda, ws)?;
    Ok(norm((&x - &t).view()) / (lambda * norm(x).max(1.0)))
}

/// `‖X − T_λ(X)‖ / (λ·max(1, ‖X‖))`; zero exactly at fixed points of the map.
pub fn stationarity_residual<F: Objective>(
    spec: &ProblemSpec<F>,
    kind: KernelKind,
    x: ArrayView2<f64>,
    lambda: f64,
    ws: &mut GramMapWorkspace,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("step size must be positive (lambda={lambda})"));
    }
    check_shape(spec.shape(), x.dim())?;
    let grad = spec.objective.gradient(x);
    residual_with_gradient(spec, kind, x, grad.view(), lambda, ws)
}

/// One accepted Dyn-NoLips step, as seen by an observer.
pub struct StepEvent<'a> {
    pub iter: usize,
    pub previous: ArrayView2<'a, f64>,
    pub current: ArrayView2<'a, f64>,
    pub step_size: f64,
    pub halvings: usize,
}

fn check_start<F: Objective>(spec: &ProblemSpec<F>, cfg: &SolverConfig, x0: ArrayView2<f64>) -> Result<()> {
    cfg.validate()?;
    check_shape(spec.shape(), x0.dim())?;
    if !all_finite(x0) {
        return domain("initial point has non-finite entries");
    }
    if !spec.psi(x0).is_finite() {
        return domain("objective is infinite at the initial point");
    }
    Ok(())
}

/// Dyn-NoLips (or NoLips with `λ = 1/L` in fixed mode).
pub fn dyn_nolips<F: Objective>(spec: &ProblemSpec<F>, cfg: &SolverConfig, x0: ArrayView2<f64>) -> Result<SolveResult> {
    dyn_nolips_observed(spec, cfg, x0, |_| {})
}

/// [`dyn_nolips`] calling `observer` after every accepted step.
pub fn dyn_nolips_observed<F: Objective>(
    spec: &ProblemSpec<F>,
    cfg: &SolverConfig,
    x0: ArrayView2<f64>,
    mut observer: impl FnMut(&StepEvent<'_>),
) -> Result<SolveResult> {
    check_start(spec, cfg, x0)?;
    let start = Instant::now();
    let f = &spec.objective;
    let kind = cfg.kernel_kind;
    let lambda_floor = 1e-16 / spec.rel_lipschitz;
    let mut ws = GramMapWorkspace::new(cfg.inner_tol, cfg.inner_max_iters)?;
    let mut residual_ws = GramMapWorkspace::new(cfg.inner_tol, cfg.inner_max_iters)?;

    let mut x = x0.to_owned();
    let mut fx = f.value(x.view());
    let mut grad = f.gradient(x.view());
    let mut trace = RunTrace::default();

    let fail = |x: FactorMatrix, trace: RunTrace, ws: &GramMapWorkspace, msg: String| SolveResult {
        x,
        trace,
        termination: Termination::InnerFailure,
        diagnostic: Some(msg),
        inner_iterations: ws.inner_iterations().to_vec(),
    };

    let residual = match residual_with_gradient(spec, kind, x.view(), grad.view(), cfg.lambda0, &mut residual_ws) {
        Ok(r) => r,
        Err(e) => return Ok(fail(x, trace, &ws, format!("iteration map failed at the start: {e}"))),
    };
    trace.records.push(TraceRecord {
        iter: 0,
        objective: fx,
        step_size: cfg.lambda0,
        elapsed_s: start.elapsed().as_secs_f64(),
        residual,
        halvings: 0,
    });
    if residual < cfg.tol {
        return Ok(SolveResult {
            x,
            trace,
            termination: Termination::TolReached,
            diagnostic: None,
            inner_iterations: Vec::new(),
        });
    }

    let mut lambda = match cfg.step_mode {
        StepMode::Fixed => 1.0 / spec.rel_lipschitz,
        StepMode::Dynamic => cfg.lambda0,
    };
    for k in 1..=cfg.max_iters {
        let mut halvings = 0;
        let (xp, fxp) = loop {
            let xp = match map_with_gradient(spec, kind, x.view(), grad.view(), lambda, &mut ws) {
                Ok(xp) => xp,
                Err(e) => return Ok(fail(x, trace, &ws, format!("iteration map failed at iteration {k}: {e}"))),
            };
            let fxp = f.value(xp.view());
            if cfg.step_mode == StepMode::Fixed
                || decrease_holds_with(&spec.kernel, x.view(), fx, grad.view(), xp.view(), fxp, lambda)
            {
                break (xp, fxp);
            }
            lambda *= 0.5;
            halvings += 1;
            if lambda < lambda_floor {
                return Ok(fail(
                    x,
                    trace,
                    &ws,
                    format!(
                        "no sufficient decrease down to step {lambda:e} at iteration {k}; \
                         check the relative smoothness constants"
                    ),
                ));
            }
        };

        observer(&StepEvent {
            iter: k,
            previous: x.view(),
            current: xp.view(),
            step_size: lambda,
            halvings,
        });
        x = xp;
        fx = fxp;
        grad = f.gradient(x.view());
        let residual = match residual_with_gradient(spec, kind, x.view(), grad.view(), cfg.lambda0, &mut residual_ws) {
            Ok(r) => r,
            Err(e) => return Ok(fail(x, trace, &ws, format!("residual map failed at iteration {k}: {e}"))),
        };
        trace.records.push(TraceRecord {
            iter: k,
            objective: fx,
            step_size: lambda,
            elapsed_s: start.elapsed().as_secs_f64(),
            residual,
            halvings,
        });
        if cfg.step_mode == StepMode::Dynamic {
            lambda = (2.0 * lambda).min(cfg.lambda_max);
        }
        if residual < cfg.tol {
            return Ok(SolveResult {
                x,
                trace,
                termination: Termination::TolReached,
                diagnostic: None,
                inner_iterations: ws.inner_iterations().to_vec(),
            });
        }
    }
    Ok(SolveResult {
        x,
        trace,
        termination: Termination::MaxIters,
        diagnostic: None,
        inner_iterations: ws.inner_iterations().to_vec(),
    })
}

const ARMIJO_SHRINK: f64 = 0.1;
const ARMIJO_SLOPE: f64 = 0.01;

/// Euclidean baseline: `X ← Π(X − t∇f(X))` with Armijo backtracking
/// (shrink factor 0.1, sufficient-decrease slope 0.01), projecting onto
/// `X ≥ 0` when the penalty is the nonnegativity indicator.
///
/// Each iteration first tries ten times the previously accepted step. The
/// trace's `halvings` column counts backtracking steps and its residual is
/// the same Bregman stationarity measure as in [`dyn_nolips`].
pub fn projected_gradient_armijo<F: Objective>(
    spec: &ProblemSpec<F>,
    cfg: &SolverConfig,
    x0: ArrayView2<f64>,
) -> Result<SolveResult> {
    check_start(spec, cfg, x0)?;
    let start = Instant::now();
    let f = &spec.objective;
    let project = spec.penalty == Penalty::NonnegIndicator;
    let mut residual_ws = GramMapWorkspace::new(cfg.inner_tol, cfg.inner_max_iters)?;
    let residual_kind = if project { KernelKind::Universal } else { cfg.kernel_kind };

    let mut x = x0.to_owned();
    let mut fx = f.value(x.view());
    let mut grad = f.gradient(x.view());
    let mut trace = RunTrace::default();
    let mut residual = residual_with_gradient(spec, residual_kind, x.view(), grad.view(), cfg.lambda0, &mut residual_ws)?;
    let mut t = cfg.lambda0;
    trace.records.push(TraceRecord {
        iter: 0,
        objective: fx,
        step_size: t,
        elapsed_s: start.elapsed().as_secs_f64(),
        residual,
        halvings: 0,
    });
    if residual < cfg.tol {
        return Ok(SolveResult {
            x,
            trace,
            termination: Termination::TolReached,
            diagnostic: None,
            inner_iterations: Vec::new(),
        });
    }

    for k in 1..=cfg.max_iters {
        t /= ARMIJO_SHRINK;
        let mut backtracks = 0;
        let (xp, fxp) = loop {
            let mut xp = x.clone();
            xp.scaled_add(-t, &grad);
            if project {
                xp = project_nonneg(xp.view());
            }
            let fxp = f.value(xp.view());
            let slope = inner(grad.view(), (&xp - &x).view());
            if fxp.is_finite() && fxp <= fx + ARMIJO_SLOPE * slope {
                break (xp, fxp);
            }
            t *= ARMIJO_SHRINK;
            backtracks += 1;
            if t < 1e-300 || (fxp.is_finite() && slope == 0.0) {
                return Ok(SolveResult {
                    x,
                    trace,
                    termination: Termination::InnerFailure,
                    diagnostic: Some(format!("Armijo backtracking stalled at iteration {k}")),
                    inner_iterations: Vec::new(),
                });
            }
        };
        x = xp;
        fx = fxp;
        grad = f.gradient(x.view());
        residual = residual_with_gradient(spec, residual_kind, x.view(), grad.view(), cfg.lambda0, &mut residual_ws)?;
        trace.records.push(TraceRecord {
            iter: k,
            objective: fx,
            step_size: t,
            elapsed_s: start.elapsed().as_secs_f64(),
            residual,
            halvings: backtracks,
        });
        if residual < cfg.tol {
            return Ok(SolveResult {
                x,
                trace,
                termination: Termination::TolReached,
                diagnostic: None,
                inner_iterations: Vec::new(),
            });
        }
    }
    Ok(SolveResult {
        x,
        trace,
        termination: Termination::MaxIters,
        diagnostic: None,
        inner_iterations: Vec::new(),
    })
}
