use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ChannelChoice, ExperimentConfig, ExperimentKind};
use super::csv::{QuantityRow, ResultRow};
use crate::channel::{
    doppler_frequency, flat_rayleigh, generate_ofdm_channel, itu_profile, kmh_to_mps, transmit, MimoChannel,
    ObservationBlock,
};
use crate::classify::{
    cumulant_features, ml_classify_separated, svm_classify_streams, svm_train, FeatureVector, SvmModel,
};
use crate::crb::{
    crb_from_fim, fim_blind_mc, fim_data_aided, ls_channel_estimate, pcc_bound_sim, BoundKind, BoundSetup,
};
use crate::error::{Error, Result};
use crate::ica::{jade_separate, resolve_ambiguity};
use crate::rng::{derive, stage_stream, Stage};
use crate::signal::{add_awgn, draw_symbols, noise_variance_from_snr, Constellation, SymbolBlock};
use crate::CMatrix;

/// Output of [`run_experiment`]: PCC tables for the classification and
/// bound experiments, averaged CRB/MSE values for the CRB experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Pcc(Vec<ResultRow>),
    Quantities(Vec<QuantityRow>),
}

impl RunOutput {
    pub fn to_csv(&self) -> String {
        match self {
            RunOutput::Pcc(rows) => super::csv::results_to_csv(rows),
            RunOutput::Quantities(rows) => super::csv::quantities_to_csv(rows),
        }
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Trials that ended in an error, summed over all rows.
    pub fn errored(&self) -> usize {
        match self {
            RunOutput::Pcc(rows) => rows.iter().map(|r| r.errored).sum(),
            RunOutput::Quantities(rows) => rows.iter().map(|r| r.errored).sum(),
        }
    }
}

/// Run the configured experiment. Every random draw is addressed by
/// `(seed, snr index, trial, stage)`, so the result does not depend on the
/// number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Fig6Crb => run_crb(cfg).map(RunOutput::Quantities),
        ExperimentKind::Fig7Bounds => run_bounds(cfg).map(RunOutput::Pcc),
        _ => run_classification(cfg, cfg.channel, cfg.speed_kmh, None).map(RunOutput::Pcc),
    }
}

fn constellations(cfg: &ExperimentConfig) -> Vec<Constellation> {
    cfg.candidates.iter().map(|m| m.constellation()).collect()
}

/// One simulated coherence group.
struct Trial {
    truth: usize,
    h: MimoChannel,
    symbols: SymbolBlock,
    block: ObservationBlock,
}

fn simulate(
    cfg: &ExperimentConfig,
    candidates: &[Constellation],
    channel: ChannelChoice,
    speed_kmh: f64,
    snr_index: u64,
    trial: u64,
    sigma2: f64,
) -> Result<Trial> {
    let seed = cfg.seed;
    let truth = stage_stream(seed, snr_index, trial, Stage::Truth).random_range(0..candidates.len());
    let mut rng = stage_stream(seed, snr_index, trial, Stage::Channel);
    let h = match channel {
        ChannelChoice::Flat => MimoChannel::flat(flat_rayleigh(cfg.receive, cfg.transmit, &mut rng)),
        ChannelChoice::Profile(name) => generate_ofdm_channel(
            &itu_profile(name),
            doppler_frequency(kmh_to_mps(speed_kmh), cfg.carrier_hz),
            cfg.receive,
            cfg.transmit,
            cfg.subcarrier_spacing_hz,
            cfg.frame_duration_s,
            cfg.subcarriers,
            cfg.frames,
            &mut rng,
        )?,
    };
    let mut rng = stage_stream(seed, snr_index, trial, Stage::Symbols);
    let symbols = draw_symbols(&candidates[truth], cfg.transmit, cfg.group_size(), &mut rng)?;
    let mut rng = stage_stream(seed, snr_index, trial, Stage::Noise);
    let block = transmit(&h, &symbols, sigma2, &mut rng)?;
    Ok(Trial {
        truth,
        h,
        symbols,
        block,
    })
}

/// SVM training set: per class, `training_per_class` single-stream blocks of
/// `KN` symbols in AWGN at the per-stream SNR.
pub fn train_svm_model(
    cfg: &ExperimentConfig,
    snr_index: u64,
    snr_db: f64,
    retrain_trial: Option<u64>,
) -> Result<SvmModel> {
    let sigma2 = noise_variance_from_snr(snr_db, 1);
    let tag = retrain_trial.map_or(0, |t| t + 1);
    let mut by_class = Vec::new();
    for (ci, m) in cfg.candidates.iter().enumerate() {
        let c = m.constellation();
        let features = (0..cfg.svm.training_per_class as u64)
            .map(|e| {
                let mut rng = derive(cfg.seed, &[snr_index, Stage::Training as u64, tag, ci as u64, e]);
                let s = draw_symbols(&c, 1, cfg.group_size(), &mut rng)?;
                let x = add_awgn(&s.symbols, sigma2, &mut rng)?;
                let row: Vec<_> = x.row(0).iter().copied().collect();
                cumulant_features(&row)
            })
            .collect::<Result<Vec<FeatureVector>>>()?;
        by_class.push((*m, features));
    }
    SvmModel::new(vec![svm_train(&by_class, snr_db, &cfg.svm.params)?])
}

#[derive(Default, Clone, Copy)]
struct Tally {
    correct: usize,
    errored: usize,
}

impl Tally {
    fn add(&mut self, r: &Result<bool>) {
        match r {
            Ok(true) => self.correct += 1,
            Ok(false) => {}
            Err(_) => self.errored += 1,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    cfg: &ExperimentConfig,
    classifier: &str,
    channel: ChannelChoice,
    speed_kmh: f64,
    snr_db: f64,
    trials: usize,
    tally: Tally,
    seconds: f64,
) -> ResultRow {
    let pcc = tally.correct as f64 / trials as f64;
    ResultRow {
        experiment: cfg.experiment.as_str().to_string(),
        classifier: classifier.to_string(),
        channel: channel.name().to_string(),
        speed_kmh,
        snr_db,
        pcc,
        trials,
        ci95: ResultRow::ci95_halfwidth(pcc, trials),
        correct: tally.correct,
        errored: tally.errored,
        wall_seconds: cfg.timing.then_some(seconds),
    }
}

/// JADE followed by ML and/or SVM. `ml_label` renames the ML rows and
/// suppresses SVM (used for the bound comparison curves).
fn run_classification(
    cfg: &ExperimentConfig,
    channel: ChannelChoice,
    speed_kmh: f64,
    ml_label: Option<&str>,
) -> Result<Vec<ResultRow>> {
    let candidates = constellations(cfg);
    let run_ml = cfg.classifier.runs_ml() || ml_label.is_some();
    let run_svm = cfg.classifier.runs_svm() && ml_label.is_none();
    let mut rows = Vec::new();
    for (si, &snr_db) in cfg.snr_grid.iter().enumerate() {
        let start = Instant::now();
        let si = si as u64;
        let sigma2 = noise_variance_from_snr(snr_db, cfg.transmit);
        let shared_model = if run_svm && !cfg.svm.retrain_per_trial {
            Some(train_svm_model(cfg, si, snr_db, None).map_err(|e| e.to_string()))
        } else {
            None
        };
        let outcomes: Vec<(Result<bool>, Result<bool>)> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let trial = simulate(cfg, &candidates, channel, speed_kmh, si, t, sigma2);
                let sep = trial.and_then(|tr| {
                    let sep = jade_separate(&tr.block, cfg.transmit)?;
                    Ok((tr, sep))
                });
                let (tr, sep) = match sep {
                    Ok(v) => v,
                    Err(e) => {
                        let msg = e.to_string();
                        return (
                            Err(Error::InvalidArgument(msg.clone())),
                            Err(Error::InvalidArgument(msg)),
                        );
                    }
                };
                let truth = cfg.candidates[tr.truth];
                let ml = if run_ml {
                    ml_classify_separated(&tr.block, &sep, &candidates).map(|o| o.label == truth)
                } else {
                    Ok(false)
                };
                let svm = if run_svm {
                    let model = match &shared_model {
                        Some(m) => m.clone().map_err(Error::InvalidArgument),
                        None => train_svm_model(cfg, si, snr_db, Some(t)),
                    };
                    model.and_then(|m| {
                        svm_classify_streams(&m, &sep.streams, snr_db, cfg.svm.max_snr_distance_db)
                            .map(|o| o.label == truth)
                    })
                } else {
                    Ok(false)
                };
                (ml, svm)
            })
            .collect();
        let seconds = start.elapsed().as_secs_f64();
        let mut ml = Tally::default();
        let mut svm = Tally::default();
        for (a, b) in &outcomes {
            ml.add(a);
            svm.add(b);
        }
        if run_ml {
            let name = ml_label.unwrap_or("ml");
            rows.push(row(cfg, name, channel, speed_kmh, snr_db, cfg.trials, ml, seconds));
        }
        if run_svm {
            rows.push(row(cfg, "svm", channel, speed_kmh, snr_db, cfg.trials, svm, seconds));
        }
    }
    Ok(rows)
}

/// Known-channel and CRB-perturbed bounds next to the JADE + ML pipeline on
/// a flat channel and on the configured fading profile.
fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let candidates = constellations(cfg);
    let setup = BoundSetup {
        transmit: cfg.transmit,
        receive: cfg.receive,
        samples: cfg.group_size(),
        n_channels: cfg.mc.n_channels,
        trials_per_channel: cfg.mc.trials_per_channel,
        n_mc: cfg.mc.n_mc,
        crb_scale: 1.0,
        seed: cfg.seed,
    };
    let mut rows = Vec::new();
    for kind in [BoundKind::Known, BoundKind::DataAided, BoundKind::Blind] {
        let start = Instant::now();
        let points = pcc_bound_sim(&candidates, &cfg.snr_grid, &setup, kind)?;
        let seconds = start.elapsed().as_secs_f64() / points.len() as f64;
        for p in points {
            let tally = Tally {
                correct: p.correct,
                errored: p.errored,
            };
            rows.push(row(
                cfg,
                kind.name(),
                ChannelChoice::Flat,
                0.0,
                p.snr_db,
                p.trials,
                tally,
                seconds,
            ));
        }
    }
    rows.extend(run_classification(cfg, ChannelChoice::Flat, 0.0, Some("ica_flat"))?);
    if cfg.channel != ChannelChoice::Flat {
        rows.extend(run_classification(
            cfg,
            cfg.channel,
            cfg.speed_kmh,
            Some("ica_vehicular"),
        )?);
    }
    Ok(rows)
}

/// CRBs and estimator MSEs for `Re H_11` averaged over channel draws,
/// under the first candidate constellation.
fn run_crb(cfg: &ExperimentConfig) -> Result<Vec<QuantityRow>> {
    let constellation = cfg.candidates[0].constellation();
    let candidates = vec![constellation.clone()];
    let kn = cfg.group_size();
    let mut rows = Vec::new();
    for (si, &snr_db) in cfg.snr_grid.iter().enumerate() {
        let start = Instant::now();
        let si = si as u64;
        let sigma2 = noise_variance_from_snr(snr_db, cfg.transmit);
        let per_channel: Vec<[Result<f64>; 4]> = (0..cfg.mc.n_channels as u64)
            .into_par_iter()
            .map(|c| {
                let flat = ExperimentConfig {
                    channel: ChannelChoice::Flat,
                    ..cfg.clone()
                };
                let trial = match simulate(&flat, &candidates, ChannelChoice::Flat, 0.0, si, c, sigma2) {
                    Ok(t) => t,
                    Err(e) => {
                        let m = e.to_string();
                        return std::array::from_fn(|_| Err(Error::InvalidArgument(m.clone())));
                    }
                };
                let h: &CMatrix = trial.h.reference();
                let h11 = h[(0, 0)].re;
                let da = fim_data_aided(&trial.symbols, sigma2, cfg.receive)
                    .and_then(|f| crb_from_fim(&f))
                    .map(|c| c.values[0]);
                let mut rng = stage_stream(cfg.seed, si, c, Stage::BlindFisher);
                let blind = fim_blind_mc(h, &constellation, sigma2, kn, cfg.mc.n_mc, &mut rng)
                    .and_then(|f| crb_from_fim(&f))
                    .map(|c| c.values[0]);
                let ls = ls_channel_estimate(&trial.block, &trial.symbols)
                    .map(|est| (est.reference()[(0, 0)].re - h11).powi(2));
                let jade = jade_separate(&trial.block, cfg.transmit).and_then(|sep| {
                    let d1 = sep.phase_correction(&constellation)?;
                    let fix = resolve_ambiguity(&sep.channel, &d1, h, constellation.symmetry_order())?;
                    let est = &sep.channel * d1 * fix.q;
                    Ok((est[(0, 0)].re - h11).powi(2))
                });
                [da, blind, ls, jade]
            })
            .collect();
        let seconds = start.elapsed().as_secs_f64();
        for (q, name) in ["crb_da", "crb_blind", "mse_ls", "mse_jade"].iter().enumerate() {
            let ok: Vec<f64> = per_channel.iter().filter_map(|r| r[q].as_ref().ok().copied()).collect();
            let errored = per_channel.len() - ok.len();
            let value = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().sum::<f64>() / ok.len() as f64
            };
            rows.push(QuantityRow {
                experiment: cfg.experiment.as_str().to_string(),
                quantity: name.to_string(),
                snr_db,
                value,
                trials: ok.len(),
                errored,
                wall_seconds: cfg.timing.then_some(seconds),
            });
        }
    }
    Ok(rows)
}
