//! Criterion benchmarks for sumread-core; see `benches/`.
