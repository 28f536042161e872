use num_complex::Complex64;

use super::ClassificationOutcome;
use crate::channel::ObservationBlock;
use crate::error::{Error, Result};
use crate::ica::SeparationResult;
use crate::signal::{symbol_vectors, Constellation};
use crate::CMatrix;

/// Noiseless received vectors `H s` for every `s` in `Omega^M_t`.
#[derive(Debug, Clone)]
pub struct SymbolHypotheses {
    images: Vec<Vec<Complex64>>,
    log_prior: f64,
}

impl SymbolHypotheses {
    pub fn new(h: &CMatrix, constellation: &Constellation) -> Self {
        let streams = h.ncols();
        let images = symbol_vectors(constellation, streams)
            .into_iter()
            .map(|s| {
                (0..h.nrows())
                    .map(|r| (0..streams).map(|t| h[(r, t)] * s[t]).sum())
                    .collect()
            })
            .collect();
        SymbolHypotheses {
            images,
            log_prior: -(streams as f64) * (constellation.len() as f64).ln(),
        }
    }

    /// Number of terms in the inner sum, `|Omega|^M_t`.
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `log( |Omega|^-M_t sum_s exp(-||y - H s||^2 / sigma^2) )`, without the
    /// Gaussian normalization.
    fn log_mixture(&self, y: &[Complex64], noise_variance: f64, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        let mut max = f64::NEG_INFINITY;
        for image in &self.images {
            let d: f64 = y.iter().zip(image).map(|(a, b)| (a - b).norm_sqr()).sum();
            let e = -d / noise_variance;
            max = max.max(e);
            scratch.push(e);
        }
        let sum: f64 = scratch.iter().map(|e| (e - max).exp()).sum();
        self.log_prior + max + sum.ln()
    }
}

fn check_inputs(block: &ObservationBlock, h: &CMatrix) -> Result<()> {
    if h.nrows() != block.receive() || h.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "channel {:?} for {} receive antennas",
            h.shape(),
            block.receive()
        )));
    }
    if !(block.noise_variance > 0.0) {
        return Err(Error::InvalidNoiseVariance(block.noise_variance));
    }
    if block.y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("observations"));
    }
    Ok(())
}

/// Log-likelihood of the block under `constellation`, averaged over the
/// unknown symbols: `sum_k log[ |Omega|^-M_t sum_s exp(-||y_k - H s||^2 / sigma^2) ]`
/// minus `KN M_r log(pi sigma^2)`.
pub fn avg_log_likelihood(block: &ObservationBlock, h: &CMatrix, constellation: &Constellation) -> Result<f64> {
    check_inputs(block, h)?;
    let hyps = SymbolHypotheses::new(h, constellation);
    Ok(log_likelihood_with(block, &hyps))
}

fn log_likelihood_with(block: &ObservationBlock, hyps: &SymbolHypotheses) -> f64 {
    let sigma2 = block.noise_variance;
    let receive = block.receive();
    let norm = -(receive as f64) * (std::f64::consts::PI * sigma2).ln();
    let mut scratch = Vec::with_capacity(hyps.len());
    let mut y = vec![Complex64::new(0.0, 0.0); receive];
    let mut total = 0.0;
    for col in block.y.column_iter() {
        y.copy_from_slice(col.as_slice());
        total += norm + hyps.log_mixture(&y, sigma2, &mut scratch);
    }
    total
}

/// Pick the candidate maximizing the likelihood with channel `H_hat D_1`.
///
/// `d1 = None` means no phase correction.
pub fn ml_classify(
    block: &ObservationBlock,
    h_hat: &CMatrix,
    d1: Option<&CMatrix>,
    candidates: &[Constellation],
) -> Result<ClassificationOutcome> {
    check_candidates(candidates)?;
    let channel = match d1 {
        Some(d) => {
            if d.shape() != (h_hat.ncols(), h_hat.ncols()) {
                return Err(Error::DimensionMismatch(format!("D1 {:?}", d.shape())));
            }
            h_hat * d
        }
        None => h_hat.clone(),
    };
    let scores = candidates
        .iter()
        .map(|c| Ok((c.modulation(), avg_log_likelihood(block, &channel, c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationOutcome::from_scores(scores))
}

/// ML classification from a blind separation: the phase correction `D_1` is
/// estimated separately under each hypothesis, since its symmetry order and
/// moment depend on the constellation being tested.
pub fn ml_classify_separated(
    block: &ObservationBlock,
    separation: &SeparationResult,
    candidates: &[Constellation],
) -> Result<ClassificationOutcome> {
    check_candidates(candidates)?;
    let scores = candidates
        .iter()
        .map(|c| {
            let d1 = separation.phase_correction(c)?;
            let channel = &separation.channel * d1;
            Ok((c.modulation(), avg_log_likelihood(block, &channel, c)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationOutcome::from_scores(scores))
}

fn check_candidates(candidates: &[Constellation]) -> Result<()> {
    if candidates.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two candidate constellations, got {}",
            candidates.len()
        )));
    }
    Ok(())
}
