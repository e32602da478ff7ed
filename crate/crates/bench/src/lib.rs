//! Criterion benchmarks for zetawb; see `benches/`.
