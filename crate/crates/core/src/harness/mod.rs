//! Experiment driver: configuration, simulation studies, accuracy metrics,
//! CSV input and output, and the real-data pairwise comparison.

mod benchmark;
mod config;
mod error;
mod fitting;
mod io;
mod metrics;
mod realdata;

pub use benchmark::{
    mean_se, run_benchmark, simulate_replication, write_outputs, write_replications,
    write_results, BenchmarkResult,
};
pub use config::{BenchmarkConfig, CellConfig, CompareConfig, CompareMethod};
pub use error::HarnessError;
pub use fitting::{fit_method, FitOutcome, Fitted, MethodKind, MethodOptions, PartitionMode};
pub use io::{
    ingest_csv, ingest_reader, read_patterns, write_grid_dump, write_patterns, Ingested,
    Normalization,
};
pub use metrics::{
    pairwise_relative_error, relative_difference, relative_error, Constant, GridSpec,
    IntensityFn, Permuted, MAX_GRID_POINTS,
};
pub use realdata::{
    evaluation_points, halton_points, realdata_compare, write_compare, CompareResult, Evaluation,
    HALTON_POINTS, LATTICE_BUDGET,
};
