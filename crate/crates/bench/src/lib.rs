//! Benchmark harness for the spinsim kernels; see `benches/`.
