//! Splitting, metrics, reports and the evaluation grid.

pub mod grid;
pub mod metrics;
pub mod report;
pub mod split;

pub use grid::{run_grid, run_repeats, GridConfig, Pipeline};
pub use metrics::{aupr, auroc, basic_metrics, confusion, BasicMetrics, Confusion};
pub use report::{evaluate, format_table, reports_to_csv, MetricsReport};
pub use split::train_test_split;
