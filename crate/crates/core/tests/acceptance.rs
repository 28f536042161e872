//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use modclass::channel::{
    coherence_params, flat_rayleigh, itu_profile, kmh_to_mps, transmit, GroupLimits, MimoChannel, ProfileName,
};
use modclass::classify::{avg_log_likelihood, cumulant_features};
use modclass::crb::{
    blind_derivatives, crb_from_fim, fim_blind_mc, fim_data_aided, ls_channel_estimate, param_index, CrbDiag,
};
use modclass::harness::{run_experiment, ExperimentConfig, ResultRow, RunOutput};
use modclass::rng::derive;
use modclass::signal::{complex_gaussian, draw_symbols, noise_variance_from_snr, Modulation};
use modclass::Complex64;
use rayon::prelude::*;
use std::io::Write as _;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rows_of(cfg: &ExperimentConfig) -> Vec<ResultRow> {
    match run_experiment(cfg).expect("experiment runs") {
        RunOutput::Pcc(rows) => rows,
        RunOutput::Quantities(_) => panic!("expected PCC rows"),
    }
}

fn preset(name: &str, overlay: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(name).unwrap();
    cfg.apply_text(overlay).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn pcc_at(rows: &[ResultRow], classifier: &str, snr: f64) -> f64 {
    rows.iter()
        .find(|r| r.classifier == classifier && (r.snr_db - snr).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no {classifier} row at {snr} dB"))
        .pcc
}

fn coherence() -> Verdict {
    let p = coherence_params(
        &itu_profile(ProfileName::VehicularA),
        kmh_to_mps(60.0),
        2e9,
        12_500.0,
        85e-6,
        GroupLimits::default(),
    )
    .unwrap();
    let rms_ns = p.rms_delay_spread * 1e9;
    verdict(
        p.frames == 18 && (368.0..=377.0).contains(&rms_ns),
        format!(
            "k_frames = {} (want 18), rms delay spread = {rms_ns:.1} ns (want [368, 377])",
            p.frames
        ),
    )
}

fn data_aided_efficiency() -> Verdict {
    let (mt, mr, kn, sigma2) = (2, 4, 50, 0.2);
    let bpsk = Modulation::Bpsk.constellation();
    let mut rng = derive(2, &[0]);
    let s = draw_symbols(&bpsk, mt, kn, &mut rng).unwrap();
    let crb = crb_from_fim(&fim_data_aided(&s, sigma2, mr).unwrap()).unwrap();
    let worst = crb.values.iter().map(|v| (v / 0.002 - 1.0).abs()).fold(0.0, f64::max);

    // Fresh symbols and channel every trial; MSE pooled over all parameters
    // and compared with the ensemble bound sigma^2 / (2 KN).
    let trials = 2000;
    let sq: f64 = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive(2, &[1, t]);
            let h = flat_rayleigh(mr, mt, &mut rng);
            let s = draw_symbols(&bpsk, mt, kn, &mut rng).unwrap();
            let block = transmit(&MimoChannel::flat(h.clone()), &s, sigma2, &mut rng).unwrap();
            let est = ls_channel_estimate(&block, &s).unwrap();
            (est.reference() - &h).iter().map(|e| e.norm_sqr()).sum::<f64>()
        })
        .sum();
    let mse = sq / (trials * 2 * mr * mt) as f64;
    let ratio = mse / (sigma2 / (2.0 * kn as f64));
    verdict(
        worst <= 0.10 && (1.0..=1.05).contains(&ratio),
        format!("max |CRB/0.002 - 1| = {worst:.4} (want <= 0.10), LS MSE / CRB = {ratio:.4} (want [1.0, 1.05])"),
    )
}

fn mean_diag(diags: &[CrbDiag]) -> Vec<f64> {
    let n = diags[0].values.len();
    (0..n)
        .map(|i| diags.iter().map(|d| d.values[i]).sum::<f64>() / diags.len() as f64)
        .collect()
}

fn blind_conflation() -> Verdict {
    let (mt, mr, kn, n_channels, n_mc) = (2, 4, 50, 500, 1000);
    let bpsk = Modulation::Bpsk.constellation();
    let bounds = |snr_db: f64, tag: u64| -> (Vec<f64>, Vec<f64>) {
        let sigma2 = noise_variance_from_snr(snr_db, mt);
        let pairs: Vec<(CrbDiag, CrbDiag)> = (0..n_channels as u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = derive(3, &[tag, c]);
                let h = flat_rayleigh(mr, mt, &mut rng);
                let s = draw_symbols(&bpsk, mt, kn, &mut rng).unwrap();
                let da = crb_from_fim(&fim_data_aided(&s, sigma2, mr).unwrap()).unwrap();
                let blind = crb_from_fim(&fim_blind_mc(&h, &bpsk, sigma2, kn, n_mc, &mut rng).unwrap()).unwrap();
                (da, blind)
            })
            .collect();
        let (da, blind): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        (mean_diag(&da), mean_diag(&blind))
    };
    let (da15, bl15) = bounds(15.0, 15);
    let high = da15
        .iter()
        .zip(&bl15)
        .map(|(d, b)| (b / d - 1.0).abs())
        .fold(0.0, f64::max);
    let (da0, bl0) = bounds(0.0, 0);
    let low = da0.iter().zip(&bl0).map(|(d, b)| b / d).fold(f64::INFINITY, f64::min);
    verdict(
        high <= 0.20 && low >= 0.95,
        format!("15 dB: max |blind/DA - 1| = {high:.4} (want <= 0.20); 0 dB: min blind/DA = {low:.4} (want >= 0.95)"),
    )
}

fn hessian_finite_differences() -> Verdict {
    let (mt, mr) = (2, 2);
    let bpsk = Modulation::Bpsk.constellation();
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let mut rng = derive(4, &[i]);
        let h = flat_rayleigh(mr, mt, &mut rng);
        let sigma2 = 0.05 + 0.95 * (i as f64 / 49.0);
        let s = draw_symbols(&bpsk, mt, 1, &mut rng).unwrap();
        let y: Vec<Complex64> = (0..mr)
            .map(|m| {
                (0..mt).map(|n| h[(m, n)] * s.symbols[(n, 0)]).sum::<Complex64>() + complex_gaussian(sigma2, &mut rng)
            })
            .collect();
        let analytic = blind_derivatives(&y, &h, &bpsk, sigma2).unwrap().hessian;
        let step = 1e-5;
        let dim = 2 * mr * mt;
        let mut numeric = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for m in 0..mr {
            for n in 0..mt {
                for imag in [false, true] {
                    let q = param_index(mr, mt, m, n, imag);
                    let delta = if imag {
                        Complex64::new(0.0, step)
                    } else {
                        Complex64::new(step, 0.0)
                    };
                    let mut hp = h.clone();
                    hp[(m, n)] += delta;
                    let mut hm = h.clone();
                    hm[(m, n)] -= delta;
                    let gp = blind_derivatives(&y, &hp, &bpsk, sigma2).unwrap().gradient;
                    let gm = blind_derivatives(&y, &hm, &bpsk, sigma2).unwrap().gradient;
                    for p in 0..dim {
                        numeric[(p, q)] = (gp[p] - gm[p]) / (2.0 * step);
                    }
                }
            }
        }
        let scale = analytic.amax().max(1e-300);
        worst = worst.max((&analytic - &numeric).amax() / scale);
    }
    verdict(
        worst <= 1e-5,
        format!("max relative Hessian error = {worst:.2e} (want <= 1e-5)"),
    )
}

fn pedestrian_ml() -> Verdict {
    let grid = [5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0];
    let cfg = preset(
        "fig3",
        "experiment.trials = 200\nexperiment.snr_grid = 5,7.5,10,12.5,15,17.5,20\nclassifier.kind = ml",
    );
    let rows = rows_of(&cfg);
    let worst = grid.iter().map(|&s| pcc_at(&rows, "ml", s)).fold(1.0, f64::min);
    verdict(
        worst >= 0.90,
        format!("min ML PCC over SNR >= 5 dB = {worst:.3} (want >= 0.90)"),
    )
}

fn grouping_benefit() -> Verdict {
    let overlay = "experiment.trials = 200\nexperiment.snr_grid = 10\nclassifier.kind = ml";
    let ungrouped = pcc_at(&rows_of(&preset("fig4", overlay)), "ml", 10.0);
    let grouped = pcc_at(&rows_of(&preset("fig5", overlay)), "ml", 10.0);
    verdict(
        grouped - ungrouped > 0.10,
        format!(
            "10 dB ML PCC grouped {grouped:.3} vs ungrouped {ungrouped:.3}, gain {:.3} (want > 0.10)",
            grouped - ungrouped
        ),
    )
}

fn vehicular_svm() -> Verdict {
    let grid = [6.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0];
    let cfg = preset(
        "fig5",
        "experiment.trials = 200\nexperiment.snr_grid = 6,7.5,10,12.5,15,17.5,20\nclassifier.kind = svm",
    );
    let rows = rows_of(&cfg);
    let worst = grid.iter().map(|&s| pcc_at(&rows, "svm", s)).fold(1.0, f64::min);
    verdict(
        worst > 0.80,
        format!("min SVM PCC over SNR >= 6 dB = {worst:.3} (want > 0.80)"),
    )
}

/// SNR where the curve first reaches `level`, linearly interpolated.
fn crossing(rows: &[ResultRow], classifier: &str, level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.classifier == classifier)
        .map(|r| (r.snr_db, r.pcc))
        .collect();
    let first = pts.iter().position(|p| p.1 >= level)?;
    if first == 0 {
        return Some(pts[0].0);
    }
    let (x0, y0) = pts[first - 1];
    let (x1, y1) = pts[first];
    Some(x0 + (level - y0) / (y1 - y0) * (x1 - x0))
}

fn bound_ordering() -> Verdict {
    let cfg = preset("fig7", "experiment.trials = 200\nmc.n_channels = 200");
    let rows = rows_of(&cfg);
    let chain = ["known", "pcc_da", "pcc_blind", "ica_flat"];
    let mut violations = Vec::new();
    for snr in [-5.0, 0.0, 5.0, 10.0] {
        let p: Vec<f64> = chain.iter().map(|c| pcc_at(&rows, c, snr)).collect();
        let mut ok = p.windows(2).all(|w| w[1] <= w[0] + 0.03);
        ok &= pcc_at(&rows, "ica_vehicular", snr) <= p[2] + 0.03;
        if !ok {
            violations.push(format!("{snr} dB {p:?}"));
        }
    }
    let blind = crossing(&rows, "pcc_blind", 0.85);
    let gaps: Vec<Option<f64>> = ["ica_flat", "ica_vehicular"]
        .iter()
        .map(|c| Some(crossing(&rows, c, 0.85)? - blind?))
        .collect();
    let gap_ok = gaps.iter().all(|g| g.is_some_and(|g| g <= 4.0));
    let show = |g: Option<f64>| g.map_or("none".to_string(), |g| format!("{g:.2}"));
    verdict(
        violations.is_empty() && gap_ok,
        format!(
            "ordering violations: {violations:?}; 85% SNR gap ICA - blind bound: flat {} dB, vehicular {} dB (want <= 4)",
            show(gaps[0]),
            show(gaps[1])
        ),
    )
}

fn invariants() -> Verdict {
    let mut notes = Vec::new();

    // Likelihood is invariant to permuting the channel columns.
    let mut perm_err: f64 = 0.0;
    for i in 0..20u64 {
        let mut rng = derive(9, &[0, i]);
        let c = Modulation::ALL[i as usize % 3].constellation();
        let h = flat_rayleigh(4, 2, &mut rng);
        let s = draw_symbols(&c, 2, 50, &mut rng).unwrap();
        let block = transmit(&MimoChannel::flat(h.clone()), &s, 0.3, &mut rng).unwrap();
        let mut swapped = h.clone();
        swapped.swap_columns(0, 1);
        let a = avg_log_likelihood(&block, &h, &c).unwrap();
        let b = avg_log_likelihood(&block, &swapped, &c).unwrap();
        perm_err = perm_err.max((a - b).abs() / a.abs().max(1.0));
    }
    notes.push(format!("perm {perm_err:.1e}"));

    // Cumulant features ignore a common phase rotation.
    let mut phase_err: f64 = 0.0;
    for i in 0..20u64 {
        let mut rng = derive(9, &[1, i]);
        let c = Modulation::ALL[i as usize % 3].constellation();
        let s = draw_symbols(&c, 1, 200, &mut rng).unwrap();
        let x: Vec<Complex64> = s
            .symbols
            .row(0)
            .iter()
            .map(|v| v + complex_gaussian(0.1, &mut rng))
            .collect();
        let rot = Complex64::from_polar(1.0, 0.3 + i as f64);
        let xr: Vec<Complex64> = x.iter().map(|v| v * rot).collect();
        let (a, b) = (cumulant_features(&x).unwrap(), cumulant_features(&xr).unwrap());
        phase_err = phase_err.max((a.c40_mag - b.c40_mag).abs()).max((a.c42 - b.c42).abs());
    }
    notes.push(format!("phase {phase_err:.1e}"));

    let power_err = Modulation::ALL
        .iter()
        .map(|m| (m.constellation().average_power() - 1.0).abs())
        .fold(0.0, f64::max);
    notes.push(format!("power {power_err:.1e}"));

    // Fisher matrices are symmetric and positive semidefinite.
    let mut fim_ok = 0;
    for i in 0..100u64 {
        let mut rng = derive(9, &[2, i]);
        let c = Modulation::ALL[i as usize % 2].constellation();
        let h = flat_rayleigh(3, 2, &mut rng);
        let sigma2 = 0.1 + i as f64 / 50.0;
        let s = draw_symbols(&c, 2, 30, &mut rng).unwrap();
        let da = fim_data_aided(&s, sigma2, 3).unwrap();
        let blind = fim_blind_mc(&h, &c, sigma2, 30, 100, &mut rng).unwrap();
        if da.satisfies_invariants() && blind.satisfies_invariants() {
            fim_ok += 1;
        }
    }
    notes.push(format!("fim {fim_ok}/100"));

    // Identical configs give byte-identical CSV regardless of thread count.
    let cfg = preset(
        "fig5",
        "experiment.trials = 20\nexperiment.snr_grid = 0,10\nsvm.training_per_class = 20",
    );
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap().to_csv())
    };
    let csv_same = run(1) == run(3);
    notes.push(format!("csv identical {csv_same}"));

    verdict(
        perm_err <= 1e-9 && phase_err <= 1e-12 && power_err <= 4.0 * f64::EPSILON && fim_ok == 100 && csv_same,
        notes.join(", "),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("coherence arithmetic", coherence),
        ("data-aided CRB and LS efficiency", data_aided_efficiency),
        ("blind CRB approaches data-aided", blind_conflation),
        ("blind Hessian vs finite differences", hessian_finite_differences),
        ("Pedestrian B ML PCC", pedestrian_ml),
        ("vehicular grouping benefit", grouping_benefit),
        ("Vehicular A grouped SVM PCC", vehicular_svm),
        ("bound ordering", bound_ordering),
        ("invariant suite", invariants),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        // written to the raw handle so the verdicts show without --nocapture
        writeln!(std::io::stderr(), "criterion {}: {tag}: {name}: {}", i + 1, v.detail).unwrap();
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
