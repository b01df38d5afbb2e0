//! Sweep harness: feeders, voltage samples, the (s, Δ) sweep, results
//! files, calibration and charts.

pub mod chart;
pub mod config;
pub mod feeder;
pub mod report;
pub mod results;
pub mod sweep;
pub mod voltage;

pub use chart::{emit_chart, render_chart};
pub use config::{apply_config_text, load_config};
pub use feeder::{load_feeder, parse_feeder, synthetic_feeder, write_feeder};
pub use report::{calibrate_and_overlay, coverage, median, BoundCurve, Report};
pub use results::{read_results, ResultsWriter, SweepRecord, RESULTS_HEADER};
pub use sweep::{prepare_network, run_sweep, run_sweep_in_memory, run_sweep_with, SweepConfig};
pub use voltage::{baseline_voltage, generate_voltage_data, VoltageNoise};
