//! Criterion benchmarks for the hgl solvers live in `benches/`.
