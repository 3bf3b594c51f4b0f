//! Metrics and the benchmark harness.

pub mod bench;
pub mod metrics;
pub mod plot;

pub use bench::{
    aggregate, bench_instance, bench_instances, read_results, run_benchmark, write_results,
    BenchConfig, BenchResults, BksRecord, ExactRecord, Method, Table, Tables, TrialRecord,
};
pub use metrics::{agreement, best_known, compute_gaps, gap_pct, spearman, ExactOutcome, GapRecord};
