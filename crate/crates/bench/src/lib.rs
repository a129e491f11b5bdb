//! Criterion benchmarks for the spectral scan, the FTCS step and the cosine
//! spectrum; see `benches/kernels.rs`.
