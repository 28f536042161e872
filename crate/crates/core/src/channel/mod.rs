//! MIMO channel generation and the received-signal model `y_k = H s_k + z_k`.

mod doppler;
mod profile;

pub use doppler::{classic_bin_powers, fading_process, synthesized_autocorrelation, DOPPLER_BINS};
pub use profile::{
    coherence_params, doppler_frequency, itu_profile, kmh_to_mps, CoherenceParams, GroupLimits, ProfileName, Tap,
    TapProfile, SPEED_OF_LIGHT,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::signal::{check_noise_variance, complex_gaussian, SymbolBlock, SystemDims};
use crate::CMatrix;

/// Channel matrices for one coherence group, indexed by (frame, subcarrier).
///
/// A flat channel holds a single matrix that applies to every observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    frames: usize,
    subcarriers: usize,
    matrices: Vec<CMatrix>,
}

impl MimoChannel {
    pub fn flat(h: CMatrix) -> Self {
        MimoChannel {
            frames: 1,
            subcarriers: 1,
            matrices: vec![h],
        }
    }

    /// Matrices ordered frame-major: index `k * subcarriers + n`.
    pub fn grid(frames: usize, subcarriers: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        if frames == 0 || subcarriers == 0 || matrices.len() != frames * subcarriers {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for a {frames}x{subcarriers} grid",
                matrices.len()
            )));
        }
        let shape = matrices[0].shape();
        if matrices.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch("channel matrices differ in shape".into()));
        }
        Ok(MimoChannel {
            frames,
            subcarriers,
            matrices,
        })
    }

    pub fn is_flat(&self) -> bool {
        self.matrices.len() == 1
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn receive(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn transmit(&self) -> usize {
        self.matrices[0].ncols()
    }

    pub fn at(&self, frame: usize, subcarrier: usize) -> &CMatrix {
        &self.matrices[frame * self.subcarriers + subcarrier]
    }

    /// Matrix applied to re-indexed observation `k`.
    pub fn for_sample(&self, k: usize) -> &CMatrix {
        if self.is_flat() {
            &self.matrices[0]
        } else {
            &self.matrices[k]
        }
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// The single matrix of a flat channel, or the first matrix of the group.
    pub fn reference(&self) -> &CMatrix {
        &self.matrices[0]
    }
}

/// `M_r x M_t` matrix of i.i.d. unit-variance circular complex Gaussians.
pub fn flat_rayleigh<R: Rng + ?Sized>(receive: usize, transmit: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(receive, transmit, |_, _| complex_gaussian(1.0, rng))
}

/// Frequency-domain channel of an OFDM link over a tapped-delay-line profile.
///
/// Every (tap, receive, transmit) triple carries an independent Classic
/// Doppler process sampled at the frame rate. Subcarrier `n` of frame `k`
/// sees `sum_l g_l(k) exp(-j 2 pi n df tau_l)`.
#[allow(clippy::too_many_arguments)]
pub fn generate_ofdm_channel<R: Rng + ?Sized>(
    profile: &TapProfile,
    max_doppler: f64,
    receive: usize,
    transmit: usize,
    subcarrier_spacing: f64,
    frame_duration: f64,
    subcarriers: usize,
    frames: usize,
    rng: &mut R,
) -> Result<MimoChannel> {
    if frames == 0 || subcarriers == 0 {
        return Err(Error::InvalidArgument(format!(
            "group needs at least one frame and subcarrier, got {frames}x{subcarriers}"
        )));
    }
    if max_doppler < 0.0 || !max_doppler.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Doppler must be >= 0, got {max_doppler}"
        )));
    }
    let mut matrices = vec![CMatrix::zeros(receive, transmit); frames * subcarriers];
    // Phase ramps exp(-j 2 pi n df tau_l), indexed [tap][n].
    let ramps: Vec<Vec<Complex64>> = profile
        .taps
        .iter()
        .map(|tap| {
            (0..subcarriers)
                .map(|n| {
                    Complex64::from_polar(
                        tap.power.sqrt(),
                        -2.0 * std::f64::consts::PI * n as f64 * subcarrier_spacing * tap.delay,
                    )
                })
                .collect()
        })
        .collect();
    for t in 0..transmit {
        for r in 0..receive {
            for ramp in &ramps {
                let gains = fading_process(max_doppler, frame_duration, frames, rng);
                for (k, g) in gains.iter().enumerate() {
                    for (n, w) in ramp.iter().enumerate() {
                        matrices[k * subcarriers + n][(r, t)] += g * w;
                    }
                }
            }
        }
    }
    MimoChannel::grid(frames, subcarriers, matrices)
}

/// Received vectors of one coherence group, with the known noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBlock {
    /// `M_r x KN`, one observation per column.
    pub y: CMatrix,
    pub noise_variance: f64,
    pub transmit: usize,
}

impl ObservationBlock {
    pub fn new(y: CMatrix, noise_variance: f64, transmit: usize) -> Result<Self> {
        check_noise_variance(noise_variance)?;
        if transmit == 0 || transmit > y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{transmit} sources for {} receive antennas",
                y.nrows()
            )));
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("observations"));
        }
        Ok(ObservationBlock {
            y,
            noise_variance,
            transmit,
        })
    }

    /// Build the noiseless block `H S` directly, recording `noise_variance`
    /// as the nominal level the classifiers should assume.
    pub fn noiseless(h: &MimoChannel, symbols: &SymbolBlock, noise_variance: f64) -> Result<Self> {
        let y = mix(h, symbols)?;
        Self::new(y, noise_variance, symbols.streams())
    }

    pub fn receive(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.transmit, self.y.nrows())
    }
}

fn mix(h: &MimoChannel, symbols: &SymbolBlock) -> Result<CMatrix> {
    if h.transmit() != symbols.streams() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} inputs, symbols have {} streams",
            h.transmit(),
            symbols.streams()
        )));
    }
    if !h.is_flat() && h.matrices().len() != symbols.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel group covers {} observations, symbol block has {}",
            h.matrices().len(),
            symbols.len()
        )));
    }
    if h.is_flat() {
        return Ok(h.reference() * &symbols.symbols);
    }
    let mut y = CMatrix::zeros(h.receive(), symbols.len());
    for k in 0..symbols.len() {
        let col = h.for_sample(k) * symbols.symbols.column(k);
        y.set_column(k, &col);
    }
    Ok(y)
}

/// `y_k = H(k) s_k + z_k` over the re-indexed group.
pub fn transmit<R: Rng + ?Sized>(
    h: &MimoChannel,
    symbols: &SymbolBlock,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ObservationBlock> {
    check_noise_variance(noise_variance)?;
    let clean = mix(h, symbols)?;
    let y = crate::signal::add_awgn(&clean, noise_variance, rng)?;
    ObservationBlock::new(y, noise_variance, symbols.streams())
}

/// Convenience: dims-checked flat draw.
pub fn flat_rayleigh_for<R: Rng + ?Sized>(dims: &SystemDims, rng: &mut R) -> Result<MimoChannel> {
    dims.validate()?;
    Ok(MimoChannel::flat(flat_rayleigh(dims.receive, dims.transmit, rng)))
}
