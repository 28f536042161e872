//! Maximum-likelihood classification with a known channel and after blind
//! separation.

use modclass::channel::{flat_rayleigh, transmit, MimoChannel};
use modclass::classify::{ml_classify, ml_classify_separated};
use modclass::ica::jade_separate;
use modclass::rng::derive;
use modclass::signal::{draw_symbols, noise_variance_from_snr, Constellation, Modulation};

fn main() -> modclass::Result<()> {
    let candidates: Vec<Constellation> = Modulation::ALL.iter().map(|m| m.constellation()).collect();
    let mut rng = derive(12, &[]);
    for truth in Modulation::ALL {
        let h = flat_rayleigh(4, 2, &mut rng);
        let s = draw_symbols(&truth.constellation(), 2, 100, &mut rng)?;
        let block = transmit(
            &MimoChannel::flat(h.clone()),
            &s,
            noise_variance_from_snr(12.0, 2),
            &mut rng,
        )?;
        let known = ml_classify(&block, &h, None, &candidates)?;
        let blind = ml_classify_separated(&block, &jade_separate(&block, 2)?, &candidates)?;
        println!(
            "truth {truth:6} known-H -> {:6} blind -> {:6}",
            known.label, blind.label
        );
        for (m, score) in &blind.scores {
            println!("    {m:6} log-likelihood {score:.2}");
        }
    }
    Ok(())
}
