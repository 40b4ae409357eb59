//! Benchmarks for the explanation pipeline; see `benches/`.
