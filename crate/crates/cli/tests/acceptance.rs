//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]` line
//! straight to stdout so the verdicts show up in captured test logs.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use nolips_core::data::{helix_generate, sample_distances, write_matrix_market};
use nolips_core::gram::invert_gram_gradient;
use nolips_core::kernel::{invert_universal_gradient, project_nonneg};
use nolips_core::{
    bregman_distance, bregman_step, dyn_nolips_observed, gram_iteration_map, kernel_gradient, kernel_value,
    normalized_rmse, solve_cubic_tau, universal_map, EdmcProblem, GramMapWorkspace, KernelKind, KernelParams,
    Objective, ProblemSpec, SolveResult, SolverConfig, SparseSymmetric, SymNmfProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(id: u32, title: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout().lock(), "[{verdict}] criterion {id:>2}: {title}: {detail}");
    pass
}

fn frob(a: &Array2<f64>) -> f64 {
    a.mapv(|v| v * v).sum().sqrt()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..=hi.log10()))
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, r: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, r), || {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

fn random_sparse(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseSymmetric {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if rng.random_bool(density) {
                t.push((i, j, rng.random::<f64>()));
            }
        }
    }
    SparseSymmetric::from_triplets(n, t).unwrap()
}

fn factorizable_symnmf(seed: u64, n: usize, r: usize) -> SymNmfProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = Array2::from_shape_simple_fn((n, r), || rng.random::<f64>());
    let m = SparseSymmetric::from_dense(xs.dot(&xs.t()).view()).unwrap();
    SymNmfProblem::new(m, r).unwrap()
}

#[test]
fn criterion_01_cubic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let samples: Vec<(f64, f64)> = (0..10_000)
        .map(|_| (log_uniform(&mut rng, 1e-6, 1e3), rng.random_range(0.0..=1e9)))
        .collect();
    let start = Instant::now();
    let roots: Vec<f64> = samples.iter().map(|&(s, c)| solve_cubic_tau(s, c).unwrap()).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut below = 0;
    for (&(s, c), &z) in samples.iter().zip(&roots) {
        worst = worst.max((z * z * (z - s) - c).abs() / c.max(1.0));
        below += usize::from(z < s);
    }
    let pass = worst <= 1e-10 && below == 0 && elapsed < 1.0;
    let detail = format!("worst scaled residual {worst:.2e}, root below sigma {below} times, {elapsed:.3} s");
    assert!(report(1, "cubic oracle", pass, &detail), "{detail}");
}

#[test]
fn criterion_02_mirror_inversions() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let start = Instant::now();
    let (mut worst_u, mut worst_g) = (0.0f64, 0.0f64);
    for k in 0..400 {
        let n = rng.random_range(1..=200);
        let r = rng.random_range(1..=20);
        let alpha = log_uniform(&mut rng, 1e-2, 1e2);
        let sigma = log_uniform(&mut rng, 1e-3, 1e2);
        let scale = log_uniform(&mut rng, 1e-2, 1e2);
        let v = gaussian(&mut rng, n, r, scale);
        let vnorm = frob(&v).max(1.0);
        if k % 2 == 0 {
            let p = KernelParams::universal(alpha, sigma).unwrap();
            let t = invert_universal_gradient(&p, v.view()).unwrap();
            worst_u = worst_u.max(frob(&(kernel_gradient(&p, t.view()) - &v)) / vnorm);
        } else {
            let beta = log_uniform(&mut rng, 1e-2, 1e2);
            let p = KernelParams::new(alpha, beta, sigma).unwrap();
            let t = invert_gram_gradient(&p, v.view(), &mut GramMapWorkspace::default()).unwrap();
            worst_g = worst_g.max(frob(&(kernel_gradient(&p, t.view()) - &v)) / vnorm);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_u <= 1e-8 && worst_g <= 1e-6 && elapsed < 10.0;
    let detail = format!("universal worst {worst_u:.2e}, gram worst {worst_g:.2e} (200 each), {elapsed:.2} s");
    assert!(report(2, "mirror inversions", pass, &detail), "{detail}");
}

fn rel(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    frob(&(a - b)) / frob(b).max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_03_gram_universal_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut worst_beta0, mut worst_rank1) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=60);
        let r = rng.random_range(1..=6);
        let alpha = log_uniform(&mut rng, 1e-2, 1e2);
        let beta = log_uniform(&mut rng, 1e-2, 1e2);
        let sigma = log_uniform(&mut rng, 1e-3, 1e2);
        let lambda = log_uniform(&mut rng, 1e-2, 1e1);
        let x = gaussian(&mut rng, n, r, 1.0);
        let g = gaussian(&mut rng, n, r, 1.0);

        let p0 = KernelParams::new(alpha, 0.0, sigma).unwrap();
        let gram = gram_iteration_map(&p0, x.view(), g.view(), lambda, &mut GramMapWorkspace::default()).unwrap();
        let uni = universal_map(&p0, x.view(), g.view(), lambda, false).unwrap();
        worst_beta0 = worst_beta0.max(rel(&gram, &uni));

        let x1 = x.column(0).to_owned().insert_axis(ndarray::Axis(1));
        let g1 = g.column(0).to_owned().insert_axis(ndarray::Axis(1));
        let pg = KernelParams::new(alpha, beta, sigma).unwrap();
        let pu = KernelParams::universal(alpha + beta, sigma).unwrap();
        let gram = gram_iteration_map(&pg, x1.view(), g1.view(), lambda, &mut GramMapWorkspace::default()).unwrap();
        let uni = universal_map(&pu, x1.view(), g1.view(), lambda, false).unwrap();
        worst_rank1 = worst_rank1.max(rel(&gram, &uni));
    }
    let pass = worst_beta0 <= 1e-8 && worst_rank1 <= 1e-8;
    let detail = format!("beta=0 worst {worst_beta0:.2e}, r=1 worst {worst_rank1:.2e} (100 each)");
    assert!(report(3, "Gram/universal consistency", pass, &detail), "{detail}");
}

/// Minimizes `h(U) − ⟨V, U⟩` (over `U ≥ 0` if `nonneg`) by projected
/// gradient descent with backtracking until steps fall below 1e-15.
fn subproblem_oracle(p: &KernelParams, v: &Array2<f64>, nonneg: bool, start: &Array2<f64>) -> Array2<f64> {
    let phi = |u: &Array2<f64>| kernel_value(p, u.view()) - (v * u).sum();
    let proj = |u: Array2<f64>| if nonneg { project_nonneg(u.view()) } else { u };
    let mut u = proj(start.clone());
    let mut step = 1.0;
    for _ in 0..500_000 {
        let g = kernel_gradient(p, u.view()) - v;
        let fu = phi(&u);
        step *= 2.0;
        let next = loop {
            let cand = proj(&u - &(step * &g));
            let d = &cand - &u;
            if phi(&cand) <= fu + (&g * &d).sum() + 0.5 / step * (&d * &d).sum() {
                break cand;
            }
            step *= 0.5;
        };
        let moved = frob(&(&next - &u));
        u = next;
        if moved <= 1e-15 * frob(&u).max(1.0) {
            break;
        }
    }
    u
}

#[test]
fn criterion_04_brute_force_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let n = rng.random_range(2..=4);
        let r = rng.random_range(1..=2);
        let lambda = log_uniform(&mut rng, 0.1, 1.0);
        let (step, oracle) = if k % 3 == 0 {
            let prob = SymNmfProblem::new(random_sparse(&mut rng, n, 0.8), r).unwrap();
            let spec = prob.spec();
            let x = gaussian(&mut rng, n, r, 1.0).mapv(f64::abs);
            let step =
                bregman_step(&spec, KernelKind::Universal, x.view(), lambda, &mut GramMapWorkspace::default()).unwrap();
            let v = kernel_gradient(&spec.kernel, x.view()) - lambda * prob.gradient(x.view());
            (step, subproblem_oracle(&spec.kernel, &v, true, &x))
        } else {
            let gram = k % 3 == 2;
            let pts = gaussian(&mut rng, n, r, 1.0);
            let obs: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, (&pts.row(i) - &pts.row(j)).mapv(|v| v * v).sum()))
                .collect();
            let prob = EdmcProblem::new(n, r, obs).unwrap();
            let spec = prob.spec(gram).unwrap();
            let kind = if gram { KernelKind::Gram } else { KernelKind::Universal };
            let x = gaussian(&mut rng, n, r, 1.0);
            let step = bregman_step(&spec, kind, x.view(), lambda, &mut GramMapWorkspace::default()).unwrap();
            let v = kernel_gradient(&spec.kernel, x.view()) - lambda * prob.gradient(x.view());
            (step, subproblem_oracle(&spec.kernel, &v, false, &x))
        };
        worst = worst.max(frob(&(&step - &oracle)) / frob(&oracle).max(1.0));
    }
    let pass = worst <= 1e-4;
    let detail = format!("worst relative distance to oracle {worst:.2e} over 20 instances");
    assert!(report(4, "brute-force map equivalence", pass, &detail), "{detail}");
}

/// Counts draws violating `f(X) ≤ f(Y) + ⟨∇f(Y), X − Y⟩ + D_h(X, Y)` by more
/// than 1e-9 of the term magnitudes; also returns the worst scaled excess.
fn smoothness_violations<F: Objective>(
    f: &F,
    kernel: &KernelParams,
    rng: &mut ChaCha8Rng,
    base_scale: f64,
    nonneg: bool,
    pairs: usize,
) -> (usize, f64) {
    let (n, r) = f.shape();
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..pairs {
        let sx = base_scale * log_uniform(rng, 1e-3, 1e3);
        let mut x = gaussian(rng, n, r, sx);
        let mut y = if k % 3 == 0 {
            let sy = sx * log_uniform(rng, 1e-6, 1.0);
            &x + &gaussian(rng, n, r, sy)
        } else {
            let sy = base_scale * log_uniform(rng, 1e-3, 1e3);
            gaussian(rng, n, r, sy)
        };
        if nonneg && k % 2 == 0 {
            x.mapv_inplace(f64::abs);
            y.mapv_inplace(f64::abs);
        }
        let fx = f.value(x.view());
        let fy = f.value(y.view());
        let lin = (f.gradient(y.view()) * (&x - &y)).sum();
        let d = bregman_distance(kernel, x.view(), y.view()).unwrap();
        let scale = fx.abs() + fy.abs() + lin.abs() + d.abs();
        let excess = (fx - (fy + lin + d)) / scale.max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
        count += usize::from(excess > 1e-9);
    }
    (count, worst)
}

#[test]
fn criterion_05_sampled_relative_smoothness() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let pairs = 100_000;
    let symnmf = SymNmfProblem::new(random_sparse(&mut rng, 20, 0.3), 3).unwrap();
    let s_scale = (symnmf.matrix().mean_value() / 3.0).sqrt();
    let (c1, w1) = smoothness_violations(&symnmf, &symnmf.kernel_params(), &mut rng, s_scale, true, pairs);

    let edmc = sample_distances(&helix_generate(20, 5).unwrap(), 0.3, 5).unwrap();
    let mean_d = edmc.distances().iter().sum::<f64>() / edmc.distances().len() as f64;
    let e_scale = (mean_d / 6.0).sqrt();
    let (c2, w2) = smoothness_violations(&edmc, &edmc.kernel_params(false).unwrap(), &mut rng, e_scale, false, pairs);
    let (c3, w3) = smoothness_violations(&edmc, &edmc.kernel_params(true).unwrap(), &mut rng, e_scale, false, pairs);

    let pass = c1 + c2 + c3 == 0;
    let detail = format!(
        "violations: symnmf {c1} (worst {w1:.1e}), edmc universal {c2} (worst {w2:.1e}), \
         edmc gram {c3} (worst {w3:.1e}); {pairs} pairs each"
    );
    assert!(report(5, "sampled relative smoothness", pass, &detail), "{detail}");
}

/// Tallies of the per-step checks on step sizes, descent and halvings.
#[derive(Default)]
struct StepChecks {
    steps: usize,
    step_out_of_range: usize,
    weak_decrease: usize,
    too_many_halvings: usize,
    trace_increases: usize,
}

impl StepChecks {
    fn ok(&self) -> bool {
        self.step_out_of_range + self.weak_decrease + self.too_many_halvings + self.trace_increases == 0
    }

    fn summary(&self) -> String {
        format!(
            "{} steps checked: lambda out of range {}, weak decrease {}, excess halvings {}, trace increases {}",
            self.steps, self.step_out_of_range, self.weak_decrease, self.too_many_halvings, self.trace_increases
        )
    }
}

/// Runs Dyn-NoLips and checks every accepted step.
fn checked_run<F: Objective>(
    spec: &ProblemSpec<F>,
    cfg: &SolverConfig,
    x0: &Array2<f64>,
    checks: &mut StepChecks,
    mut on_step: impl FnMut(usize, ArrayView2<f64>),
) -> SolveResult {
    let l = spec.rel_lipschitz;
    let max_halvings = (l * cfg.lambda_max).log2().floor() as usize + 1;
    let res = dyn_nolips_observed(spec, cfg, x0.view(), |ev| {
        checks.steps += 1;
        if ev.step_size < 0.5 / l || ev.step_size > cfg.lambda_max {
            checks.step_out_of_range += 1;
        }
        let drop = spec.psi(ev.previous) - spec.psi(ev.current);
        let d = bregman_distance(&spec.kernel, ev.previous, ev.current).unwrap();
        if drop < d / cfg.lambda_max - 1e-10 {
            checks.weak_decrease += 1;
        }
        if ev.halvings > max_halvings {
            checks.too_many_halvings += 1;
        }
        on_step(ev.iter, ev.current);
    })
    .unwrap();
    checks.trace_increases += res.trace.records.windows(2).filter(|w| w[1].objective > w[0].objective).count();
    res
}

#[test]
fn criterion_06_step_checks() {
    let mut checks = StepChecks::default();
    let prob = factorizable_symnmf(6, 60, 4);
    let spec = prob.spec();
    let mut cfg = SolverConfig::new(1.0, KernelKind::Universal);
    cfg.max_iters = 1000;
    for seed in 0..3 {
        checked_run(&spec, &cfg, &prob.initial_point(seed), &mut checks, |_, _| {});
    }
    let edmc = sample_distances(&helix_generate(150, 6).unwrap(), 0.15, 6).unwrap();
    for gram in [false, true] {
        let spec = edmc.spec(gram).unwrap();
        let mut cfg = SolverConfig::new(1.0, if gram { KernelKind::Gram } else { KernelKind::Universal });
        cfg.tol = 1e-12;
        cfg.max_iters = 2000;
        checked_run(&spec, &cfg, &edmc.initial_point(6), &mut checks, |_, _| {});
    }
    let detail = checks.summary();
    assert!(report(6, "step-size and descent checks", checks.ok(), &detail), "{detail}");
}

fn fd_rel_err<F: Objective>(f: &F, x: &Array2<f64>) -> f64 {
    let g = f.gradient(x.view());
    let mut fd = Array2::zeros(x.dim());
    let mut xp = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let h = 1e-5 * x[idx].abs().max(1.0);
        let orig = x[idx];
        xp[idx] = orig + h;
        let up = f.value(xp.view());
        xp[idx] = orig - h;
        let down = f.value(xp.view());
        xp[idx] = orig;
        fd[idx] = (up - down) / (2.0 * h);
    }
    frob(&(&fd - &g)) / frob(&g).max(1e-12)
}

#[test]
fn criterion_07_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut worst_s, mut worst_e) = (0.0f64, 0.0f64);
    for seed in 0..100 {
        let n = rng.random_range(2..=15);
        let r = rng.random_range(1..=n.min(4));
        let prob = SymNmfProblem::new(random_sparse(&mut rng, n, 0.5), r).unwrap();
        let x = gaussian(&mut rng, n, r, 1.0);
        worst_s = worst_s.max(fd_rel_err(&prob, &x));

        let n = rng.random_range(3..=15);
        let prob = sample_distances(&helix_generate(n, seed).unwrap(), 0.5, seed).unwrap();
        let x = gaussian(&mut rng, n, 3, 2.0);
        worst_e = worst_e.max(fd_rel_err(&prob, &x));
    }
    let pass = worst_s <= 1e-5 && worst_e <= 1e-5;
    let detail = format!("worst relative error symnmf {worst_s:.2e}, edmc {worst_e:.2e} (100 each)");
    assert!(report(7, "gradient checks", pass, &detail), "{detail}");
}

#[test]
fn criterion_08_fast_objective_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=200);
        let r = rng.random_range(1..=n.min(10));
        let density = rng.random_range(0.01..0.5);
        let m = random_sparse(&mut rng, n, density);
        let dense = m.to_dense();
        let prob = SymNmfProblem::new(m, r).unwrap();
        let x = gaussian(&mut rng, n, r, 0.5).mapv(f64::abs);
        let naive = 0.5 * (x.dot(&x.t()) - &dense).mapv(|v| v * v).sum();
        let fast = prob.value(x.view());
        worst = worst.max((fast - naive).abs() / naive.abs().max(f64::MIN_POSITIVE));
    }
    let pass = worst <= 1e-8;
    let detail = format!("worst relative difference {worst:.2e} over 50 instances");
    assert!(report(8, "fast-objective identity", pass, &detail), "{detail}");
}

#[test]
fn criterion_09_symnmf_end_to_end() {
    let prob = factorizable_symnmf(9, 100, 5);
    let target = 1e-6 * prob.norm_m_sq();
    let spec = prob.spec();
    let mut cfg = SolverConfig::new(1.0, KernelKind::Universal);
    cfg.tol = 0.0;
    cfg.max_iters = 2000;
    let mut checks = StepChecks::default();
    let mut runs = Vec::new();
    let mut pass = true;
    for seed in 0..5 {
        let start = Instant::now();
        let res = checked_run(&spec, &cfg, &prob.initial_point(seed), &mut checks, |_, _| {});
        let secs = start.elapsed().as_secs_f64();
        let hit = res.trace.records.iter().find(|r| r.objective <= target).map(|r| r.iter);
        pass &= hit.is_some() && secs < 5.0;
        runs.push(format!("seed {seed} reached at {hit:?} ({secs:.2} s)"));
    }
    pass &= checks.ok();
    let detail = format!("target {target:.3e}; {}; {}", runs.join(", "), checks.summary());
    assert!(report(9, "SymNMF end-to-end", pass, &detail), "{detail}");
}

/// Iteration at which the normalized RMSE first drops to 1e-3, wall time, and
/// the inner iteration counts of the run.
fn edmc_run(
    prob: &EdmcProblem,
    truth: &Array2<f64>,
    gram: bool,
    seed: u64,
    checks: &mut StepChecks,
) -> (Option<usize>, f64, Vec<usize>) {
    let spec = prob.spec(gram).unwrap();
    let mut cfg = SolverConfig::new(1.0, if gram { KernelKind::Gram } else { KernelKind::Universal });
    cfg.tol = 1e-12;
    cfg.max_iters = 5000;
    let x0 = prob.initial_point(seed);
    let mut hit = (normalized_rmse(truth.view(), x0.view()).unwrap() <= 1e-3).then_some(0);
    let start = Instant::now();
    let res = checked_run(&spec, &cfg, &x0, checks, |k, x| {
        if hit.is_none() && normalized_rmse(truth.view(), x).unwrap() <= 1e-3 {
            hit = Some(k);
        }
    });
    (hit, start.elapsed().as_secs_f64(), res.inner_iterations)
}

#[test]
fn criteria_10_11_edmc_end_to_end_and_inner_iterations() {
    let mut checks = StepChecks::default();
    let mut inner = Vec::new();
    let mut pass10 = true;
    let mut gram_wins = 0;
    let mut runs = Vec::new();
    for seed in 0..10 {
        let cloud = helix_generate(500, seed).unwrap();
        let prob = sample_distances(&cloud, 0.1, seed).unwrap();
        let (hu, tu, _) = edmc_run(&prob, &cloud.points, false, seed, &mut checks);
        let (hg, tg, it) = edmc_run(&prob, &cloud.points, true, seed, &mut checks);
        inner.extend(it);
        pass10 &= hu.is_some() && hg.is_some() && tu < 60.0 && tg < 60.0;
        if let (Some(u), Some(g)) = (hu, hg) {
            gram_wins += usize::from(g <= u);
        }
        runs.push(format!("seed {seed}: universal {hu:?} in {tu:.1} s, gram {hg:?} in {tg:.1} s"));
    }
    {
        let mut out = std::io::stdout().lock();
        for line in &runs {
            let _ = writeln!(out, "    {line}");
        }
    }
    pass10 &= gram_wins >= 7 && checks.ok();
    let detail10 = format!("gram reached RMSE 1e-3 no later on {gram_wins}/10 seeds; {}", checks.summary());
    let ok10 = report(10, "EDMC end-to-end", pass10, &detail10);

    inner.sort_unstable();
    let median = inner[inner.len() / 2];
    let max = *inner.last().unwrap();
    let pass11 = median <= 50 && max < 500;
    let detail11 = format!("{} inner solves: median {median}, max {max}, cap 500", inner.len());
    let ok11 = report(11, "inner subproblem iterations", pass11, &detail11);
    assert!(ok10 && ok11, "{detail10}; {detail11}");
}

fn nolips(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nolips")).args(args).output().unwrap()
}

fn dir_contents(dir: &str) -> Vec<(std::ffi::OsString, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .iter()
        .map(|f| (f.file_name().unwrap().to_owned(), std::fs::read(f).unwrap()))
        .collect()
}

#[test]
fn criterion_12_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let mtx = p("m.mtx");
    write_matrix_market(factorizable_symnmf(12, 30, 3).matrix(), &mtx).unwrap();
    let helix = p("helix.csv");
    assert!(nolips(&["helix-gen", "--n", "120", "--seed", "4", "--output", &helix]).status.success());

    let invocations: Vec<Vec<&str>> = vec![
        vec!["helix-gen", "--n", "120", "--seed", "4", "--output", "{out}/h.csv"],
        vec!["symnmf", "--input", &mtx, "--rank", "3", "--seeds", "3", "--out-dir", "{out}"],
        vec!["symnmf", "--input", &mtx, "--rank", "3", "--algo", "pg", "--max-iters", "300", "--out-dir", "{out}"],
        vec!["edmc", "--points", &helix, "--kernel", "gram", "--seeds", "2", "--max-iters", "500", "--out-dir", "{out}"],
        vec!["edmc", "--points", &helix, "--kernel", "universal", "--max-iters", "500", "--out-dir", "{out}"],
        vec!["bench", "--input", &mtx, "--rank", "3", "--seeds", "2", "--max-iters", "200", "--output", "{out}/b.csv"],
    ];
    let mut identical = true;
    let mut files = 0;
    for (k, args) in invocations.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let out = p(&format!("run{k}{run}"));
            std::fs::create_dir_all(&out).unwrap();
            let args: Vec<String> = args.iter().map(|a| a.replace("{out}", &out)).collect();
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            assert!(nolips(&args).status.success(), "{args:?}");
            outputs.push(dir_contents(&out));
        }
        files += outputs[0].len();
        identical &= !outputs[0].is_empty() && outputs[0] == outputs[1];
    }
    let detail = format!("{} invocations run twice, {files} output files byte-compared", invocations.len());
    assert!(report(12, "CLI determinism", identical, &detail), "{detail}");
}
