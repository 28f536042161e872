//! Separate two QPSK streams with JADE and resolve the ICA ambiguity
//! against the true channel.

use modclass::channel::{flat_rayleigh, transmit, MimoChannel};
use modclass::ica::{jade_separate, resolve_ambiguity};
use modclass::rng::derive;
use modclass::signal::{draw_symbols, noise_variance_from_snr, Modulation};

fn main() -> modclass::Result<()> {
    let mut rng = derive(11, &[]);
    let qpsk = Modulation::Qpsk.constellation();
    let h = flat_rayleigh(4, 2, &mut rng);
    let s = draw_symbols(&qpsk, 2, 200, &mut rng)?;
    let block = transmit(
        &MimoChannel::flat(h.clone()),
        &s,
        noise_variance_from_snr(15.0, 2),
        &mut rng,
    )?;

    let sep = jade_separate(&block, 2)?;
    let d1 = sep.phase_correction(&qpsk)?;
    let fix = resolve_ambiguity(&sep.channel, &d1, &h, qpsk.symmetry_order())?;
    let estimate = &sep.channel * &d1 * &fix.q;
    println!("JADE sweeps: {}", sep.sweeps);
    println!("phase offsets: {:?}", sep.phase_offsets(&qpsk)?);
    println!("ambiguity candidates searched: {}", fix.candidates);
    println!("relative channel error: {:.4}", (&estimate - &h).norm() / h.norm());
    Ok(())
}
