use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{crb_from_fim, fim_blind_mc, fim_data_aided, param_index, CrbDiag};
use crate::channel::{flat_rayleigh, transmit, MimoChannel};
use crate::classify::ml_classify;
use crate::error::{Error, Result};
use crate::rng::{derive, stage_stream, Stage};
use crate::signal::{draw_symbols, noise_variance_from_snr, Constellation};
use crate::{CMatrix, Complex64};

/// Channel knowledge assumed by [`pcc_bound_sim`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Classify with the true channel.
    Known,
    /// True channel perturbed at the data-aided CRB.
    DataAided,
    /// True channel perturbed at the blind CRB of the true constellation.
    Blind,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Known => "known",
            BoundKind::DataAided => "pcc_da",
            BoundKind::Blind => "pcc_blind",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSetup {
    pub transmit: usize,
    pub receive: usize,
    /// Observations per block, `KN`.
    pub samples: usize,
    pub n_channels: usize,
    pub trials_per_channel: usize,
    /// Monte Carlo draws per blind FIM.
    pub n_mc: usize,
    /// Multiplies every CRB before perturbing; 0 reproduces `Known`.
    pub crb_scale: f64,
    pub seed: u64,
}

impl Default for BoundSetup {
    fn default() -> Self {
        BoundSetup {
            transmit: 2,
            receive: 4,
            samples: 50,
            n_channels: 500,
            trials_per_channel: 1,
            n_mc: 1000,
            crb_scale: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub snr_db: f64,
    pub pcc: f64,
    pub trials: usize,
    pub correct: usize,
    pub errored: usize,
}

/// Perturb every real and imaginary channel parameter by an independent
/// Gaussian with the matching CRB variance. `normals` holds one standard
/// normal per parameter, in parameter order.
fn perturb(h: &CMatrix, crb: &CrbDiag, normals: &[f64]) -> CMatrix {
    let (mr, mt) = h.shape();
    let mut out = h.clone();
    for m in 0..mr {
        for n in 0..mt {
            let re = param_index(mr, mt, m, n, false);
            let im = param_index(mr, mt, m, n, true);
            out[(m, n)] += Complex64::new(
                crb.values[re].max(0.0).sqrt() * normals[re],
                crb.values[im].max(0.0).sqrt() * normals[im],
            );
        }
    }
    out
}

/// PCC of ML classification (with `D_1 = I`) over flat Rayleigh channels
/// under the chosen channel knowledge, one point per SNR.
///
/// Trial `t` of channel `c` uses the same random streams for every
/// [`BoundKind`], so the curves differ only by the channel error.
pub fn pcc_bound_sim(
    candidates: &[Constellation],
    snr_grid: &[f64],
    setup: &BoundSetup,
    kind: BoundKind,
) -> Result<Vec<BoundPoint>> {
    if setup.n_channels == 0 || setup.trials_per_channel == 0 {
        return Err(Error::InvalidArgument(
            "n_channels and trials_per_channel must be positive".into(),
        ));
    }
    if candidates.len() < 2 {
        return Err(Error::InvalidArgument("need at least two candidates".into()));
    }
    if setup.transmit == 0 || setup.transmit > setup.receive || setup.samples == 0 {
        return Err(Error::DimensionMismatch(format!(
            "M_t = {}, M_r = {}, KN = {}",
            setup.transmit, setup.receive, setup.samples
        )));
    }
    if !(setup.crb_scale >= 0.0) {
        return Err(Error::InvalidArgument(format!("crb_scale {}", setup.crb_scale)));
    }
    snr_grid
        .iter()
        .enumerate()
        .map(|(si, &snr_db)| {
            let sigma2 = noise_variance_from_snr(snr_db, setup.transmit);
            let counts: Vec<(usize, usize)> = (0..setup.n_channels)
                .into_par_iter()
                .map(|c| channel_trials(candidates, setup, kind, si as u64, c, sigma2))
                .collect();
            let correct = counts.iter().map(|c| c.0).sum();
            let errored = counts.iter().map(|c| c.1).sum();
            let trials = setup.n_channels * setup.trials_per_channel;
            Ok(BoundPoint {
                snr_db,
                pcc: correct as f64 / trials as f64,
                trials,
                correct,
                errored,
            })
        })
        .collect()
}

/// `(correct, errored)` over the trials of one channel draw.
fn channel_trials(
    candidates: &[Constellation],
    setup: &BoundSetup,
    kind: BoundKind,
    snr_index: u64,
    channel: usize,
    sigma2: f64,
) -> (usize, usize) {
    let first = (channel * setup.trials_per_channel) as u64;
    let h = flat_rayleigh(
        setup.receive,
        setup.transmit,
        &mut stage_stream(setup.seed, snr_index, first, Stage::Channel),
    );
    let mut blind_cache: HashMap<usize, Result<CrbDiag>> = HashMap::new();
    let mut correct = 0;
    let mut errored = 0;
    for t in 0..setup.trials_per_channel as u64 {
        let trial = first + t;
        let truth = stage_stream(setup.seed, snr_index, trial, Stage::Truth).random_range(0..candidates.len());
        let outcome = (|| -> Result<bool> {
            let constellation = &candidates[truth];
            let mut rng = stage_stream(setup.seed, snr_index, trial, Stage::Symbols);
            let symbols = draw_symbols(constellation, setup.transmit, setup.samples, &mut rng)?;
            let mut rng = stage_stream(setup.seed, snr_index, trial, Stage::Noise);
            let block = transmit(&MimoChannel::flat(h.clone()), &symbols, sigma2, &mut rng)?;
            let estimate = match kind {
                BoundKind::Known => h.clone(),
                BoundKind::DataAided | BoundKind::Blind => {
                    let crb = if kind == BoundKind::DataAided {
                        crb_from_fim(&fim_data_aided(&symbols, sigma2, setup.receive)?)?
                    } else {
                        blind_cache
                            .entry(truth)
                            .or_insert_with(|| {
                                let mut rng = derive(
                                    setup.seed,
                                    &[snr_index, channel as u64, Stage::BlindFisher as u64, truth as u64],
                                );
                                fim_blind_mc(&h, constellation, sigma2, setup.samples, setup.n_mc, &mut rng)
                                    .and_then(|f| crb_from_fim(&f))
                            })
                            .as_ref()
                            .map_err(|e| Error::InvalidArgument(e.to_string()))?
                            .clone()
                    };
                    let mut rng = stage_stream(setup.seed, snr_index, trial, Stage::Perturbation);
                    let normals: Vec<f64> = (0..crb.values.len()).map(|_| rng.sample(StandardNormal)).collect();
                    perturb(&h, &crb.scaled(setup.crb_scale), &normals)
                }
            };
            let out = ml_classify(&block, &estimate, None, candidates)?;
            Ok(out.label == constellation.modulation())
        })();
        match outcome {
            Ok(true) => correct += 1,
            Ok(false) => {}
            Err(_) => errored += 1,
        }
    }
    (correct, errored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Modulation;

    fn candidates() -> Vec<Constellation> {
        vec![Modulation::Bpsk.constellation(), Modulation::Qpsk.constellation()]
    }

    fn setup(n_channels: usize) -> BoundSetup {
        BoundSetup {
            n_channels,
            n_mc: 200,
            seed: 11,
            ..BoundSetup::default()
        }
    }

    #[test]
    fn zero_crb_reproduces_known_channel() {
        let s = BoundSetup {
            crb_scale: 0.0,
            ..setup(40)
        };
        let grid = [-5.0, 5.0];
        let known = pcc_bound_sim(&candidates(), &grid, &s, BoundKind::Known).unwrap();
        for kind in [BoundKind::DataAided, BoundKind::Blind] {
            let other = pcc_bound_sim(&candidates(), &grid, &s, kind).unwrap();
            assert_eq!(known, other);
        }
    }

    #[test]
    fn known_channel_near_perfect_at_high_snr() {
        let p = pcc_bound_sim(&candidates(), &[20.0], &setup(200), BoundKind::Known).unwrap();
        assert!(p[0].pcc >= 0.995, "{p:?}");
        assert_eq!(p[0].errored, 0);
    }

    #[test]
    fn deterministic() {
        let a = pcc_bound_sim(&candidates(), &[0.0], &setup(30), BoundKind::Blind).unwrap();
        let b = pcc_bound_sim(&candidates(), &[0.0], &setup(30), BoundKind::Blind).unwrap();
        assert_eq!(a, b);
    }
}
