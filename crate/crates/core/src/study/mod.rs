//! Manufactured-solution convergence studies: error measures, rates,
//! configuration, reports and the acceptance suite.

pub mod acceptance;
mod case;
mod config;
mod errors;
mod run;

pub use case::ManufacturedCase;
pub use config::{Gates, StudyConfig};
pub use errors::{compute_eoc, compute_errors, ErrorMeasures};
pub use run::{
    max_growth, run_series, run_study, series_gates, GateResult, LevelResult, SeriesSpec,
    StudyReport,
};
