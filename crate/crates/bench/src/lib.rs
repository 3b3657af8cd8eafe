//! Criterion benchmarks for the simulator kernels, plan builders and the
//! per-step assembly. Run with `cargo bench -p shadowvqs-bench`.
