//! Benchmarks for the warpco pipeline live in `benches/`.
