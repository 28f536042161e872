//! Coherence arithmetic for the ITU profiles and one OFDM channel draw.

use modclass::channel::{
    coherence_params, doppler_frequency, generate_ofdm_channel, itu_profile, kmh_to_mps, GroupLimits, ProfileName,
};
use modclass::rng::derive;

fn main() -> modclass::Result<()> {
    let (carrier, spacing, frame) = (2e9, 12_500.0, 85e-6);
    for (name, kmh) in [(ProfileName::PedestrianB, 3.0), (ProfileName::VehicularA, 60.0)] {
        let profile = itu_profile(name);
        let p = coherence_params(
            &profile,
            kmh_to_mps(kmh),
            carrier,
            spacing,
            frame,
            GroupLimits::default(),
        )?;
        println!(
            "{name} at {kmh} km/h: rms delay {:.1} ns, B_c {:.1} kHz, f_d {:.1} Hz, T_c {:.2} ms -> {} subcarriers x {} frames",
            p.rms_delay_spread * 1e9,
            p.coherence_bandwidth / 1e3,
            p.max_doppler,
            p.coherence_time * 1e3,
            p.subcarriers,
            p.frames
        );
    }

    // A 10 x 5 group on Vehicular A: how much does H drift across it?
    let profile = itu_profile(ProfileName::VehicularA);
    let fd = doppler_frequency(kmh_to_mps(60.0), carrier);
    let h = generate_ofdm_channel(&profile, fd, 4, 2, spacing, frame, 5, 10, &mut derive(7, &[]))?;
    let reference = h.reference();
    let drift = h
        .matrices()
        .iter()
        .map(|m| (m - reference).norm() / reference.norm())
        .fold(0.0, f64::max);
    println!("largest relative deviation from the first matrix in a 10x5 group: {drift:.3}");
    Ok(())
}
