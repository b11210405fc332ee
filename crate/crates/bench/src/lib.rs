//! Criterion benchmarks for the `fkobs` kernels live in `benches/`.
