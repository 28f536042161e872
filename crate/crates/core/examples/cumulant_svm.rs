//! Train the cumulant-feature SVM at one SNR, save it, and classify
//! separated streams with the reloaded model.

use modclass::channel::{flat_rayleigh, transmit, MimoChannel};
use modclass::classify::{cumulant_features, svm_classify_streams, SvmModel};
use modclass::harness::{train_svm_model, ExperimentConfig};
use modclass::ica::jade_separate;
use modclass::rng::derive;
use modclass::signal::{draw_symbols, noise_variance_from_snr, Modulation};

fn main() -> modclass::Result<()> {
    let snr = 10.0;
    let cfg = ExperimentConfig {
        candidates: Modulation::ALL.to_vec(),
        ..ExperimentConfig::default()
    };
    let model = train_svm_model(&cfg, 0, snr, None)?;
    let path = std::env::temp_dir().join("modclass-example.svm");
    model.save(&path)?;
    let model = SvmModel::load(&path)?;
    print!("{}", model.to_text());

    let mut rng = derive(13, &[]);
    for truth in Modulation::ALL {
        let h = flat_rayleigh(4, 2, &mut rng);
        let s = draw_symbols(&truth.constellation(), 2, 50, &mut rng)?;
        let block = transmit(&MimoChannel::flat(h), &s, noise_variance_from_snr(snr, 2), &mut rng)?;
        let sep = jade_separate(&block, 2)?;
        let first: Vec<_> = sep.streams.row(0).iter().copied().collect();
        let f = cumulant_features(&first)?;
        let out = svm_classify_streams(&model, &sep.streams, snr, 2.0)?;
        println!(
            "truth {truth:6} |C40| {:.2} C42 {:.2} -> {}",
            f.c40_mag, f.c42, out.label
        );
    }
    Ok(())
}
