//! Benchmark harness: scaling sweeps, model fits, baseline comparison and
//! output files.

mod baseline;
mod fit;
mod output;
mod sweep;

pub use baseline::{compare_baseline, BaselineReport, BaselineRow};
pub use fit::{fit_scaling, FitResult};
pub use output::{
    emit_outputs, merge_tree_dot, write_json, write_rows_csv, write_trace_jsonl, CSV_HEADER, PLOT_SCRIPT,
};
pub use sweep::{
    run_sweep, summarize, SizeStats, SweepOutcome, SweepRow, SweepSpec, SweepSummary, TracedRun,
};
