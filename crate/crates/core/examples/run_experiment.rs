//! Run a reduced version of the grouped Vehicular A experiment through the
//! harness and print the CSV.

use modclass::harness::{run_experiment, ExperimentConfig};

fn main() -> modclass::Result<()> {
    let mut cfg = ExperimentConfig::preset("fig5")?;
    cfg.apply_text(
        "experiment.trials = 50\n\
         experiment.snr_grid = -5, 0, 5, 10\n\
         svm.training_per_class = 50\n",
    )?;
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    print!("{}", out.to_csv());
    Ok(())
}
