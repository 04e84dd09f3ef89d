//! Criterion benchmarks for the filters and the sparse solver; see
//! `benches/filters.rs`. Run with `cargo bench -p latfilter-bench`.
