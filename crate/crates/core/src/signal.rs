//! Constellations, symbol sources and the noise conventions shared by the
//! rest of the crate.
//!
//! All constellations have unit average power. SNR is specified per sample
//! as `10 log10(M_t / sigma^2)`, where `sigma^2` is the total complex noise
//! variance (each of the real and imaginary parts carries `sigma^2 / 2`).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::CMatrix;

/// Supported modulation labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
        }
    }

    /// Number of constellation points.
    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
        }
    }

    pub fn constellation(self) -> Constellation {
        Constellation::new(self)
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BPSK" => Ok(Modulation::Bpsk),
            "QPSK" => Ok(Modulation::Qpsk),
            "16QAM" | "QAM16" | "16-QAM" => Ok(Modulation::Qam16),
            _ => Err(Error::UnsupportedConstellation(s.to_string())),
        }
    }
}

/// A unit-average-power point set with its rotational symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
    symmetry_order: u32,
    phase_moment: Complex64,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let points: Vec<Complex64> = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(a, a),
                    Complex64::new(-a, a),
                    Complex64::new(-a, -a),
                    Complex64::new(a, -a),
                ]
            }
            Modulation::Qam16 => {
                let scale = 10f64.sqrt().recip();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im) * scale))
                    .collect()
            }
        };
        let symmetry_order = match modulation {
            Modulation::Bpsk => 2,
            Modulation::Qpsk | Modulation::Qam16 => 4,
        };
        let phase_moment =
            points.iter().map(|s| s.conj().powu(symmetry_order)).sum::<Complex64>() / points.len() as f64;
        Constellation {
            modulation,
            points,
            symmetry_order,
            phase_moment,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `P` such that rotation by `2*pi/P` maps the set onto itself.
    pub fn symmetry_order(&self) -> u32 {
        self.symmetry_order
    }

    /// Mean of `conj(s)^P` over the point set.
    pub fn phase_moment(&self) -> Complex64 {
        self.phase_moment
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// Antenna and grouping dimensions of one coherence group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    pub transmit: usize,
    pub receive: usize,
    pub frames: usize,
    pub subcarriers: usize,
}

impl SystemDims {
    pub fn new(transmit: usize, receive: usize, frames: usize, subcarriers: usize) -> Result<Self> {
        let dims = SystemDims {
            transmit,
            receive,
            frames,
            subcarriers,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.transmit == 0 || self.receive == 0 || self.frames == 0 || self.subcarriers == 0 {
            return Err(Error::InvalidArgument(format!(
                "all dimensions must be positive: {self:?}"
            )));
        }
        if self.transmit > self.receive {
            return Err(Error::InvalidArgument(format!(
                "transmit antennas ({}) exceed receive antennas ({})",
                self.transmit, self.receive
            )));
        }
        Ok(())
    }

    /// Number of observation vectors in the group, `K * N`.
    pub fn samples(&self) -> usize {
        self.frames * self.subcarriers
    }
}

/// `M_t x count` symbols drawn from one constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub symbols: CMatrix,
    pub modulation: Modulation,
}

impl SymbolBlock {
    pub fn streams(&self) -> usize {
        self.symbols.nrows()
    }

    pub fn len(&self) -> usize {
        self.symbols.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.ncols() == 0
    }
}

/// Uniform i.i.d. symbols, one row per transmit antenna.
pub fn draw_symbols<R: Rng + ?Sized>(
    constellation: &Constellation,
    streams: usize,
    count: usize,
    rng: &mut R,
) -> Result<SymbolBlock> {
    if streams == 0 || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "symbol block needs positive size, got {streams}x{count}"
        )));
    }
    let points = constellation.points();
    // Column-major fill keeps the draw order time-major, independent of M_t.
    let symbols = DMatrix::from_fn(streams, count, |_, _| points[rng.random_range(0..points.len())]);
    Ok(SymbolBlock {
        symbols,
        modulation: constellation.modulation(),
    })
}

/// Every vector of `streams` symbols from `constellation`, `|Omega|^streams` in
/// total. The first stream varies fastest.
pub fn symbol_vectors(constellation: &Constellation, streams: usize) -> Vec<Vec<Complex64>> {
    let points = constellation.points();
    let q = points.len();
    let total = q.pow(streams as u32);
    (0..total)
        .map(|mut idx| {
            (0..streams)
                .map(|_| {
                    let p = points[idx % q];
                    idx /= q;
                    p
                })
                .collect()
        })
        .collect()
}

/// `sigma^2 = M_t * 10^(-snr_db / 10)`.
pub fn noise_variance_from_snr(snr_db: f64, transmit: usize) -> f64 {
    transmit as f64 * 10f64.powf(-snr_db / 10.0)
}

/// Inverse of [`noise_variance_from_snr`].
pub fn snr_from_noise_variance(noise_variance: f64, transmit: usize) -> f64 {
    10.0 * (transmit as f64 / noise_variance).log10()
}

pub(crate) fn check_noise_variance(noise_variance: f64) -> Result<()> {
    if noise_variance > 0.0 && noise_variance.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidNoiseVariance(noise_variance))
    }
}

/// One circular complex Gaussian sample with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

/// Add circular white Gaussian noise of total variance `noise_variance`.
pub fn add_awgn<R: Rng + ?Sized>(signal: &CMatrix, noise_variance: f64, rng: &mut R) -> Result<CMatrix> {
    check_noise_variance(noise_variance)?;
    let mut out = signal.clone();
    for v in out.iter_mut() {
        *v += complex_gaussian(noise_variance, rng);
    }
    Ok(out)
}
