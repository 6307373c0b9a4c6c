//! Criterion benchmarks for `entconc-core` live under `benches/`.
