//! Rayleigh fading processes with the Classic (Clarke/Jakes) Doppler spectrum.
//!
//! Synthesis is spectrum shaping: independent complex Gaussian coefficients
//! on a uniform frequency grid spanning `[-f_d, f_d]` are weighted by the
//! square root of the Classic spectrum's power in each bin and inverse
//! transformed. Only the occupied bins are non-zero, so the inverse transform
//! is evaluated directly at the requested sample times instead of through a
//! full-length FFT. Bin powers are the exact integral of the spectrum over
//! each bin, `(1/pi) * asin(f / f_d)` differences, which keeps the singular
//! band edges finite and the total power at exactly one.

use num_complex::Complex64;
use rand::Rng;

use crate::signal::complex_gaussian;

/// Half-width of the frequency grid, in bins.
pub const DOPPLER_BINS: usize = 64;

/// Power in each of the `2 * DOPPLER_BINS + 1` bins, ordered from `-f_d` to `f_d`.
pub fn classic_bin_powers() -> Vec<f64> {
    let b = DOPPLER_BINS as f64;
    (-(DOPPLER_BINS as i64)..=DOPPLER_BINS as i64)
        .map(|i| {
            let lo = ((i as f64 - 0.5) / b).clamp(-1.0, 1.0);
            let hi = ((i as f64 + 0.5) / b).clamp(-1.0, 1.0);
            (hi.asin() - lo.asin()) / std::f64::consts::PI
        })
        .collect()
}

/// Autocorrelation `E[x(t) x*(t - lag)]` of the synthesized process.
///
/// Approximates `J0(2 pi f_d lag)` for lags well below the grid period
/// `DOPPLER_BINS / f_d`.
pub fn synthesized_autocorrelation(max_doppler: f64, lag: f64) -> f64 {
    let b = DOPPLER_BINS as f64;
    classic_bin_powers()
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let f = (idx as f64 - b) * max_doppler / b;
            p * (2.0 * std::f64::consts::PI * f * lag).cos()
        })
        .sum()
}

/// A unit-power fading process sampled at `len` instants spaced `interval` apart.
pub fn fading_process<R: Rng + ?Sized>(max_doppler: f64, interval: f64, len: usize, rng: &mut R) -> Vec<Complex64> {
    if max_doppler <= 0.0 {
        let g = complex_gaussian(1.0, rng);
        return vec![g; len];
    }
    let b = DOPPLER_BINS as f64;
    let powers = classic_bin_powers();
    let mut coeffs = Vec::with_capacity(powers.len());
    let mut steps = Vec::with_capacity(powers.len());
    for (idx, p) in powers.iter().enumerate() {
        let f = (idx as f64 - b) * max_doppler / b;
        coeffs.push(complex_gaussian(1.0, rng) * p.sqrt());
        steps.push(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * interval));
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(coeffs.iter().sum());
        for (c, s) in coeffs.iter_mut().zip(&steps) {
            *c *= s;
        }
    }
    out
}
