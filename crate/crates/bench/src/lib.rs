//! Criterion benchmarks for the nolips solvers; see `benches/`.
