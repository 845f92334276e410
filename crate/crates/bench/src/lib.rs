//! Criterion benchmarks for the epoch pipeline and the weight solve; see `benches/`.
