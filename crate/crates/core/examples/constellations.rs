//! Print the supported constellations, their power and symmetry, and the
//! SNR to noise-variance convention.

use modclass::signal::{noise_variance_from_snr, Modulation};

fn main() {
    for m in Modulation::ALL {
        let c = m.constellation();
        println!(
            "{:6} points={:2} power={:.6} symmetry={} phase_moment={:.4}",
            m.name(),
            c.len(),
            c.average_power(),
            c.symmetry_order(),
            c.phase_moment()
        );
    }
    for snr in [0.0, 10.0, 20.0] {
        println!(
            "SNR {snr:>4} dB, M_t = 2 -> sigma^2 = {:.4}",
            noise_variance_from_snr(snr, 2)
        );
    }
}
