//! Effectiveness metrics, significance testing, latency reporting, and
//! hyperparameter sweeps.

pub mod latency;
pub mod metrics;
pub mod sweep;
pub mod ttest;

pub use latency::{
    latency_report, read_timing_csv, write_timing_csv, LatencySummary, PhaseStats, TimingRow,
    PHASES, TIMING_HEADER,
};
pub use metrics::{map_at, ndcg_at, recall_at, MetricConfig, PerQuery};
pub use sweep::{run_sweep, SweepAssets, SweepParam, SweepPoint, SweepSpec};
pub use ttest::{paired_ttest, two_tailed_p, TTestOutcome};
