//! Seeded Monte Carlo experiment driver and CSV output.

mod config;
mod csv;
mod run;

pub use config::{
    ChannelChoice, ClassifierChoice, ExperimentConfig, ExperimentKind, McSettings, SvmSettings, CONFIG_KEYS,
};
pub use csv::{
    format_g6, quantities_to_csv, results_to_csv, write_csv, write_quantity_csv, QuantityRow, ResultRow,
    QUANTITY_HEADER, RESULT_HEADER,
};
pub use run::{run_experiment, train_svm_model, RunOutput};
