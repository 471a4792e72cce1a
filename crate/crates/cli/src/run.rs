use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use nolips_core::data::{
    helix_generate, knn_sparsify, normalize_adjacency, read_dense_csv, read_distance_csv, read_matrix_market,
    sample_distances, similarity_graph, write_dense_csv, write_matrix_market, write_trace_csv,
};
use nolips_core::{
    dyn_nolips, normalized_rmse, projected_gradient_armijo, DenseDataset, EdmcProblem, Error, KernelKind, Modality,
    Objective, ProblemSpec, SolveResult, SolverConfig, StepMode, SymNmfProblem, Termination,
};
use rayon::prelude::*;

use crate::args::*;

pub type Result<T> = std::result::Result<T, Error>;

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Nolips => "nolips",
            Algo::Pg => "pg",
        }
    }
}

impl Kernel {
    fn name(self) -> &'static str {
        match self {
            Kernel::Universal => "universal",
            Kernel::Gram => "gram",
        }
    }

    fn kind(self) -> KernelKind {
        match self {
            Kernel::Universal => KernelKind::Universal,
            Kernel::Gram => KernelKind::Gram,
        }
    }
}

fn status(t: Termination) -> &'static str {
    match t {
        Termination::TolReached => "tol_reached",
        Termination::MaxIters => "max_iters",
        Termination::InnerFailure => "inner_failure",
    }
}

/// One finished solver run.
pub struct Outcome {
    pub seed: u64,
    pub algo: Algo,
    pub kernel: Kernel,
    pub result: SolveResult,
    pub rmse: Option<f64>,
    pub seconds: f64,
}

impl Outcome {
    fn iterations(&self) -> usize {
        self.result.trace.len().saturating_sub(1)
    }

    fn objective(&self) -> f64 {
        self.result.trace.last().map_or(f64::NAN, |r| r.objective)
    }

    fn failed(&self) -> bool {
        self.result.termination == Termination::InnerFailure
    }
}

fn config(spec_l: f64, kernel: Kernel, args: &SolverArgs, seed: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(spec_l, kernel.kind());
    cfg.step_mode = match args.step {
        Step::Dynamic => StepMode::Dynamic,
        Step::Fixed => StepMode::Fixed,
    };
    if let Some(lm) = args.lambda_max {
        cfg.lambda_max = lm;
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    cfg.max_iters = args.max_iters;
    cfg.seed = seed;
    cfg
}

fn solve<F: Objective>(
    spec: &ProblemSpec<F>,
    algo: Algo,
    kernel: Kernel,
    args: &SolverArgs,
    seed: u64,
    x0: Array2<f64>,
    default_tol: f64,
) -> Result<(SolveResult, f64)> {
    let mut cfg = config(spec.rel_lipschitz, kernel, args, seed);
    if args.tol.is_none() {
        cfg.tol = default_tol;
    }
    let start = Instant::now();
    let mut res = match algo {
        Algo::Nolips => dyn_nolips(spec, &cfg, x0.view())?,
        Algo::Pg => projected_gradient_armijo(spec, &cfg, x0.view())?,
    };
    let seconds = start.elapsed().as_secs_f64();
    if !args.record_time {
        res.trace.clear_timings();
    }
    Ok((res, seconds))
}

const SYMNMF_TOL: f64 = 1e-6;
/// The residual scales like `1/(α‖X‖² + σ)`, and the EDMC kernel constants
/// grow with the data, so the solver default stops EDMC runs far too early.
const EDMC_TOL: f64 = 1e-9;

/// A loaded problem instance plus optional ground truth.
pub enum Instance {
    SymNmf(SymNmfProblem),
    Edmc(EdmcProblem, Option<Array2<f64>>),
}

impl Instance {
    fn label(&self) -> &'static str {
        match self {
            Instance::SymNmf(_) => "symnmf",
            Instance::Edmc(..) => "edmc",
        }
    }

    fn run(&self, algo: Algo, kernel: Kernel, args: &SolverArgs, seed: u64) -> Result<Outcome> {
        let (result, seconds, rmse) = match self {
            Instance::SymNmf(p) => {
                let (r, s) = solve(
                    &p.spec(),
                    algo,
                    Kernel::Universal,
                    args,
                    seed,
                    p.initial_point(seed),
                    SYMNMF_TOL,
                )?;
                (r, s, None)
            }
            Instance::Edmc(p, truth) => {
                let spec = p.spec(kernel == Kernel::Gram)?;
                let (r, s) = solve(&spec, algo, kernel, args, seed, p.initial_point(seed), EDMC_TOL)?;
                let rmse = truth.as_ref().map(|t| normalized_rmse(t.view(), r.x.view())).transpose()?;
                (r, s, rmse)
            }
        };
        Ok(Outcome {
            seed,
            algo,
            kernel,
            result,
            rmse,
            seconds,
        })
    }

    /// Runs every combination in parallel; results keep the input order.
    fn run_all(&self, jobs: &[(Algo, Kernel, u64)], args: &SolverArgs) -> Result<Vec<Outcome>> {
        jobs.par_iter()
            .map(|&(algo, kernel, seed)| self.run(algo, kernel, args, seed))
            .collect()
    }
}

fn load_edmc(input: &EdmcInput) -> Result<Instance> {
    if let Some(points) = &input.source.points {
        let truth = read_dense_csv(points)?;
        let rank = input.rank.unwrap_or(truth.ncols());
        if rank != truth.ncols() {
            return Err(Error::Config(format!(
                "--rank {rank} differs from the point dimension {}",
                truth.ncols()
            )));
        }
        let cloud = nolips_core::PointCloud::new(truth);
        let prob = sample_distances(&cloud, input.sample_rate, input.sample_seed)?;
        Ok(Instance::Edmc(prob, Some(cloud.points)))
    } else {
        let path = input.source.problem.as_ref().expect("clap enforces one source");
        let rank = input
            .rank
            .ok_or_else(|| Error::Config("--rank is required with --problem".into()))?;
        Ok(Instance::Edmc(read_distance_csv(path, None, rank)?, None))
    }
}

/// Writes a line to stdout, ignoring a closed pipe.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_outcome(o: &Outcome) {
    let mut line = format!(
        "seed={} algo={} kernel={} status={} iterations={} objective={:.6e}",
        o.seed,
        o.algo.name(),
        o.kernel.name(),
        status(o.result.termination),
        o.iterations(),
        o.objective()
    );
    if let Some(r) = o.rmse {
        line.push_str(&format!(" rmse={r:.6e}"));
    }
    line.push_str(&format!(" time_s={:.3}", o.seconds));
    emit(&line);
    if let Some(msg) = &o.result.diagnostic {
        eprintln!("seed {}: {msg}", o.seed);
    }
}

fn print_summary(outcomes: &[Outcome]) {
    let k = outcomes.len() as f64;
    let objs: Vec<f64> = outcomes.iter().map(Outcome::objective).collect();
    let mean = objs.iter().sum::<f64>() / k;
    let min = objs.iter().copied().fold(f64::INFINITY, f64::min);
    let iters = outcomes.iter().map(|o| o.iterations() as f64).sum::<f64>() / k;
    let time: f64 = outcomes.iter().map(|o| o.seconds).sum();
    let mut line = format!(
        "summary runs={} objective_mean={mean:.6e} objective_min={min:.6e} iterations_mean={iters:.1} time_s={time:.3}",
        outcomes.len()
    );
    let rmse: Vec<f64> = outcomes.iter().filter_map(|o| o.rmse).collect();
    if !rmse.is_empty() {
        line.push_str(&format!(" rmse_mean={:.6e}", rmse.iter().sum::<f64>() / rmse.len() as f64));
    }
    emit(&line);
}

fn write_traces(label: &str, outcomes: &[Outcome], dir: &Path) -> Result<()> {
    for o in outcomes {
        let file = dir.join(format!("{label}_{}_{}_seed{}.csv", o.algo.name(), o.kernel.name(), o.seed));
        write_trace_csv(&o.result.trace, file)?;
    }
    Ok(())
}

/// Exit status: 0 on success, 3 if any run ended in an inner failure.
fn finish(outcomes: &[Outcome]) -> u8 {
    if outcomes.iter().any(Outcome::failed) {
        3
    } else {
        0
    }
}

fn run_single(inst: &Instance, algo: Algo, kernel: Kernel, solver: &SolverArgs, out_dir: &Path) -> Result<u8> {
    let jobs: Vec<_> = solver.seed_list().into_iter().map(|s| (algo, kernel, s)).collect();
    let outcomes = inst.run_all(&jobs, solver)?;
    write_traces(inst.label(), &outcomes, out_dir)?;
    outcomes.iter().for_each(print_outcome);
    print_summary(&outcomes);
    Ok(finish(&outcomes))
}

pub fn symnmf(a: &SymNmfArgs) -> Result<u8> {
    let inst = Instance::SymNmf(SymNmfProblem::new(read_matrix_market(&a.input)?, a.rank)?);
    run_single(&inst, a.algo, Kernel::Universal, &a.solver, &a.out_dir)
}

pub fn edmc(a: &EdmcArgs) -> Result<u8> {
    let inst = load_edmc(&a.input)?;
    run_single(&inst, a.algo, a.kernel, &a.solver, &a.out_dir)
}

pub fn helix_gen(a: &HelixArgs) -> Result<u8> {
    let cloud = helix_generate(a.n, a.seed)?;
    write_dense_csv(cloud.points.view(), &a.output)?;
    emit(&format!("wrote {} points to {}", a.n, a.output.display()));
    Ok(0)
}

pub fn simgraph(a: &SimgraphArgs) -> Result<u8> {
    let modality = match a.modality {
        ModalityArg::Text => Modality::TextTf,
        ModalityArg::Image => Modality::ImageRaw,
        ModalityArg::Generic => Modality::Generic,
    };
    let data = DenseDataset::new(read_dense_csv(&a.input)?, modality)?;
    let w = similarity_graph(&data)?;
    let m = normalize_adjacency(&knn_sparsify(w.view(), a.k)?);
    write_matrix_market(&m, &a.output)?;
    emit(&format!("n={} stored_entries={} wrote {}", m.n(), m.nnz(), a.output.display()));
    Ok(0)
}

pub const BENCH_HEADER: &str = "algo,kernel,seed,iter,objective,step_size,elapsed_s,residual,halvings,gap";

pub fn bench(a: &BenchArgs) -> Result<u8> {
    let inst = if let Some(input) = &a.source.input {
        let rank = a.rank.expect("clap requires --rank with --input");
        Instance::SymNmf(SymNmfProblem::new(read_matrix_market(input)?, rank)?)
    } else {
        load_edmc(&EdmcInput {
            source: EdmcSource {
                points: a.source.points.clone(),
                problem: a.source.problem.clone(),
            },
            rank: a.rank,
            sample_rate: a.sample_rate,
            sample_seed: a.sample_seed,
        })?
    };
    let mut kernels = a.kernels.clone();
    if matches!(inst, Instance::SymNmf(_)) {
        kernels = vec![Kernel::Universal];
    }
    kernels.dedup();
    let mut jobs = Vec::new();
    for &algo in &a.algos {
        for &kernel in &kernels {
            for seed in a.solver.seed_list() {
                jobs.push((algo, kernel, seed));
            }
        }
    }
    let outcomes = inst.run_all(&jobs, &a.solver)?;
    write_bench_csv(&outcomes, &a.output)?;
    outcomes.iter().for_each(print_outcome);
    print_summary(&outcomes);
    Ok(finish(&outcomes))
}

/// Long format, one row per trace record; `gap` is measured against the best
/// objective seen in any run.
fn write_bench_csv(outcomes: &[Outcome], path: &PathBuf) -> Result<()> {
    let best = outcomes
        .iter()
        .flat_map(|o| o.result.trace.objectives())
        .fold(f64::INFINITY, f64::min);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{BENCH_HEADER}")?;
    for o in outcomes {
        for r in &o.result.trace.records {
            writeln!(
                w,
                "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                o.algo.name(),
                o.kernel.name(),
                o.seed,
                r.iter,
                r.objective,
                r.step_size,
                r.elapsed_s,
                r.residual,
                r.halvings,
                r.objective - best
            )?;
        }
    }
    w.flush()?;
    Ok(())
}
