//! Criterion benchmarks for the `wachspress` crate; see `benches/`.
