//! Linear soft-margin SVM on cumulant features.
//!
//! The dual is solved with SMO using second-order working-set selection.
//! The KKT tolerance is tightened until the primal-dual gap meets
//! [`SvmParams::gap_tolerance`]; the bias is then chosen to minimize the
//! primal hinge loss exactly for the final weight vector.

use std::fmt::Write as _;
use std::path::Path;

use itertools::Itertools;
use num_complex::Complex64;

use super::{cumulant_features, ClassificationOutcome, FeatureVector};
use crate::error::{Error, Result};
use crate::signal::Modulation;
use crate::CMatrix;

const MODEL_HEADER: &str = "modclass-svm 1";
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// Bound on `(primal - dual) / max(1, primal)` at the solution.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gap_tolerance: 1e-6,
            max_iterations: 1_000_000,
        }
    }
}

/// Hyperplane `w . x + b`; positive values vote for the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSvm {
    pub w: [f64; 2],
    pub b: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &FeatureVector) -> f64 {
        self.w[0] * x.c40_mag + self.w[1] * x.c42 + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingStats {
    pub samples: usize,
    pub support_vectors: usize,
    pub iterations: usize,
    /// Relative primal-dual gap at the returned solution.
    pub gap: f64,
}

/// Train a binary linear SVM. `labels[i]` is true for the positive class.
pub fn train_linear_svm(
    points: &[[f64; 2]],
    labels: &[bool],
    params: &SvmParams,
) -> Result<(LinearSvm, TrainingStats)> {
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points, {} labels",
            points.len(),
            labels.len()
        )));
    }
    if !(params.c > 0.0) || !(params.gap_tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("bad SVM parameters {params:?}")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos < 2 || labels.len() - pos < 2 {
        return Err(Error::InvalidArgument(
            "each class needs at least two training vectors".into(),
        ));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }

    let n = points.len();
    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let dot = |a: &[f64; 2], b: &[f64; 2]| a[0] * b[0] + a[1] * b[1];
    let qd: Vec<f64> = points.iter().map(|p| dot(p, p)).collect();
    let mut alpha = vec![0.0; n];
    let mut w = [0.0f64; 2];
    let mut iterations = 0;
    let mut eps = 1e-3;

    loop {
        // SMO until the maximal KKT violation drops below eps
        loop {
            let grad = |t: usize, w: &[f64; 2]| y[t] * dot(w, &points[t]) - 1.0;
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                let g = grad(t, &w);
                if y[t] > 0.0 {
                    if alpha[t] < c && -g >= gmax {
                        gmax = -g;
                        i = t;
                    }
                } else if alpha[t] > 0.0 && g >= gmax {
                    gmax = g;
                    i = t;
                }
            }
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            if i != usize::MAX {
                for t in 0..n {
                    let g = grad(t, &w);
                    let (eligible, grad_diff) = if y[t] > 0.0 {
                        if alpha[t] > 0.0 {
                            gmax2 = gmax2.max(g);
                        }
                        (alpha[t] > 0.0, gmax + g)
                    } else {
                        if alpha[t] < c {
                            gmax2 = gmax2.max(-g);
                        }
                        (alpha[t] < c, gmax - g)
                    };
                    if eligible && grad_diff > 0.0 {
                        let d = [points[i][0] - points[t][0], points[i][1] - points[t][1]];
                        let quad = dot(&d, &d);
                        let quad = if quad > 0.0 { quad } else { TAU };
                        let obj = -grad_diff * grad_diff / quad;
                        if obj <= best {
                            best = obj;
                            j = t;
                        }
                    }
                }
            }
            if i == usize::MAX || j == usize::MAX || gmax + gmax2 < eps {
                break;
            }
            if iterations >= params.max_iterations {
                let gap = duality_gap(points, &y, &alpha, c).0;
                return Err(Error::SvmNotConverged { gap, iterations });
            }
            iterations += 1;

            let (gi, gj) = (grad(i, &w), grad(j, &w));
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kij = dot(&points[i], &points[j]);
            if y[i] != y[j] {
                let quad = qd[i] + qd[j] + 2.0 * kij;
                let quad = if quad > 0.0 { quad } else { TAU };
                let delta = (-gi - gj) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = qd[i] + qd[j] - 2.0 * kij;
                let quad = if quad > 0.0 { quad } else { TAU };
                let delta = (gi - gj) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = ((alpha[i] - old_i) * y[i], (alpha[j] - old_j) * y[j]);
            for k in 0..2 {
                w[k] += di * points[i][k] + dj * points[j][k];
            }
        }

        w = weights(points, &y, &alpha);
        let (gap, b) = duality_gap(points, &y, &alpha, c);
        if gap < params.gap_tolerance {
            if w[0].hypot(w[1]) < 1e-12 {
                return Err(Error::Inseparable("training features coincide across classes".into()));
            }
            let support_vectors = alpha.iter().filter(|&&a| a > 0.0).count();
            return Ok((
                LinearSvm { w, b },
                TrainingStats {
                    samples: n,
                    support_vectors,
                    iterations,
                    gap,
                },
            ));
        }
        if eps < 1e-15 {
            return Err(Error::SvmNotConverged { gap, iterations });
        }
        eps /= 10.0;
    }
}

fn weights(points: &[[f64; 2]], y: &[f64], alpha: &[f64]) -> [f64; 2] {
    let mut w = [0.0; 2];
    for ((p, yi), a) in points.iter().zip(y).zip(alpha) {
        w[0] += a * yi * p[0];
        w[1] += a * yi * p[1];
    }
    w
}

/// Relative primal-dual gap and the hinge-optimal bias for the current `alpha`.
fn duality_gap(points: &[[f64; 2]], y: &[f64], alpha: &[f64], c: f64) -> (f64, f64) {
    let w = weights(points, y, alpha);
    let f: Vec<f64> = points.iter().map(|p| w[0] * p[0] + w[1] * p[1]).collect();
    let b = hinge_optimal_bias(&f, y);
    let hinge: f64 = f.iter().zip(y).map(|(fi, yi)| (1.0 - yi * (fi + b)).max(0.0)).sum();
    let ww = w[0] * w[0] + w[1] * w[1];
    let primal = 0.5 * ww + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * ww;
    ((primal - dual).max(0.0) / primal.max(1.0), b)
}

/// The hinge sum is convex and piecewise linear in `b` with kinks at
/// `y_i - f_i`; return the midpoint of the minimizing kinks.
fn hinge_optimal_bias(f: &[f64], y: &[f64]) -> f64 {
    let kinks: Vec<f64> = f
        .iter()
        .zip(y)
        .map(|(fi, yi)| yi - fi)
        .sorted_by(f64::total_cmp)
        .collect();
    let loss = |b: f64| -> f64 { f.iter().zip(y).map(|(fi, yi)| (1.0 - yi * (fi + b)).max(0.0)).sum() };
    let values: Vec<f64> = kinks.iter().map(|&b| loss(b)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + min);
    let lo = kinks
        .iter()
        .zip(&values)
        .find(|(_, v)| **v <= min + tol)
        .map(|(k, _)| *k)
        .unwrap_or(0.0);
    let hi = kinks
        .iter()
        .zip(&values)
        .rev()
        .find(|(_, v)| **v <= min + tol)
        .map(|(k, _)| *k)
        .unwrap_or(0.0);
    0.5 * (lo + hi)
}

/// One-vs-one machine: positive decision values vote for `positive`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMachine {
    pub positive: Modulation,
    pub negative: Modulation,
    pub svm: LinearSvm,
    /// Present for freshly trained machines, absent after loading.
    pub stats: Option<TrainingStats>,
}

/// All pairwise machines trained at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmEntry {
    pub snr_db: f64,
    pub machines: Vec<PairMachine>,
}

impl SvmEntry {
    pub fn classes(&self) -> Vec<Modulation> {
        let mut out = Vec::new();
        for m in &self.machines {
            for c in [m.positive, m.negative] {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Label of one feature vector by pairwise votes, plus the summed
    /// `|margin|` of the machines the winner took.
    fn vote(&self, x: &FeatureVector) -> (Modulation, f64) {
        let classes = self.classes();
        let mut tally: Vec<(Modulation, usize, f64)> = classes.iter().map(|&c| (c, 0, 0.0)).collect();
        for m in &self.machines {
            let d = m.svm.decision(x);
            let winner = if d > 0.0 { m.positive } else { m.negative };
            let slot = tally.iter_mut().find(|t| t.0 == winner).expect("class listed");
            slot.1 += 1;
            slot.2 += d.abs();
        }
        let best = tally
            .into_iter()
            .reduce(|a, b| {
                let better = b.1 > a.1 || (b.1 == a.1 && (b.2 > a.2 || (b.2 == a.2 && b.0.order() < a.0.order())));
                if better {
                    b
                } else {
                    a
                }
            })
            .expect("at least one class");
        (best.0, best.2)
    }

    /// Fuse per-stream decisions: majority vote, ties to the larger summed
    /// `|margin|`. Scores are `votes + margin share`, so the argmax of the
    /// scores is the fused label.
    pub fn classify_features(&self, features: &[FeatureVector]) -> ClassificationOutcome {
        let classes = self.classes();
        let mut votes = vec![0usize; classes.len()];
        let mut margins = vec![0.0; classes.len()];
        for x in features {
            let (label, margin) = self.vote(x);
            let k = classes.iter().position(|&c| c == label).expect("class listed");
            votes[k] += 1;
            margins[k] += margin;
        }
        let total: f64 = margins.iter().sum();
        let scores = classes
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, votes[k] as f64 + margins[k] / (1.0 + total)))
            .collect();
        ClassificationOutcome::from_scores(scores)
    }
}

/// Per-SNR SVM entries, sorted by SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    entries: Vec<SvmEntry>,
}

impl SvmModel {
    pub fn new(mut entries: Vec<SvmEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("SVM model needs at least one entry".into()));
        }
        for e in &entries {
            if e.machines.is_empty() || e.machines.iter().any(|m| m.svm.w == [0.0, 0.0]) {
                return Err(Error::InvalidArgument(format!(
                    "SVM entry at {} dB has no usable hyperplane",
                    e.snr_db
                )));
            }
        }
        entries.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        Ok(SvmModel { entries })
    }

    pub fn entries(&self) -> &[SvmEntry] {
        &self.entries
    }

    /// Entry with the closest SNR, lower SNR on equal distance.
    pub fn nearest(&self, snr_db: f64, max_distance_db: f64) -> Result<&SvmEntry> {
        let entry = self
            .entries
            .iter()
            .min_by(|a, b| (a.snr_db - snr_db).abs().total_cmp(&(b.snr_db - snr_db).abs()))
            .expect("non-empty model");
        if (entry.snr_db - snr_db).abs() > max_distance_db {
            return Err(Error::NoSvmEntry {
                snr_db,
                max_distance_db,
            });
        }
        Ok(entry)
    }

    /// Text form: a version line, then one line per machine with
    /// `snr_db positive negative w0 w1 b`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{MODEL_HEADER}\n");
        for e in &self.entries {
            for m in &e.machines {
                writeln!(
                    out,
                    "{} {} {} {} {} {}",
                    e.snr_db, m.positive, m.negative, m.svm.w[0], m.svm.w[1], m.svm.b
                )
                .expect("write to string");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MODEL_HEADER => {}
            _ => {
                return Err(Error::ModelFormat {
                    line: 1,
                    msg: format!("expected header '{MODEL_HEADER}'"),
                })
            }
        }
        let mut entries: Vec<SvmEntry> = Vec::new();
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::ModelFormat { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", fields.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("invalid number '{s}'")))
            };
            let class = |s: &str| -> Result<Modulation> { s.parse().map_err(|_| bad(format!("unknown class '{s}'"))) };
            let snr_db = num(fields[0])?;
            let machine = PairMachine {
                positive: class(fields[1])?,
                negative: class(fields[2])?,
                svm: LinearSvm {
                    w: [num(fields[3])?, num(fields[4])?],
                    b: num(fields[5])?,
                },
                stats: None,
            };
            match entries.iter_mut().find(|e| e.snr_db == snr_db) {
                Some(e) => e.machines.push(machine),
                None => entries.push(SvmEntry {
                    snr_db,
                    machines: vec![machine],
                }),
            }
        }
        SvmModel::new(entries).map_err(|e| Error::ModelFormat {
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SvmModel::from_text(&text)
    }
}

/// Train one-vs-one machines over the classes in the given order.
pub fn svm_train(
    features_by_class: &[(Modulation, Vec<FeatureVector>)],
    snr_db: f64,
    params: &SvmParams,
) -> Result<SvmEntry> {
    if features_by_class.len() < 2 {
        return Err(Error::InvalidArgument("SVM training needs at least two classes".into()));
    }
    let mut machines = Vec::new();
    for (a, b) in features_by_class.iter().tuple_combinations() {
        let points: Vec<[f64; 2]> = a.1.iter().chain(&b.1).map(FeatureVector::as_array).collect();
        let labels: Vec<bool> = std::iter::repeat_n(true, a.1.len())
            .chain(std::iter::repeat_n(false, b.1.len()))
            .collect();
        let (svm, stats) = train_linear_svm(&points, &labels, params)?;
        machines.push(PairMachine {
            positive: a.0,
            negative: b.0,
            svm,
            stats: Some(stats),
        });
    }
    Ok(SvmEntry { snr_db, machines })
}

/// Classify separated streams (one per row) with the entry nearest `snr_db`.
pub fn svm_classify_streams(
    model: &SvmModel,
    streams: &CMatrix,
    snr_db: f64,
    max_distance_db: f64,
) -> Result<ClassificationOutcome> {
    let entry = model.nearest(snr_db, max_distance_db)?;
    let features = streams
        .row_iter()
        .map(|row| {
            let v: Vec<Complex64> = row.iter().copied().collect();
            cumulant_features(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    if features.is_empty() {
        return Err(Error::InvalidArgument("no streams to classify".into()));
    }
    Ok(entry.classify_features(&features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;
    use rand::Rng;

    fn cloud(center: [f64; 2], spread: f64, n: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = derive(seed, &[]);
        (0..n)
            .map(|_| {
                let mut jitter = || {
                    if spread > 0.0 {
                        rng.random_range(-spread..spread)
                    } else {
                        0.0
                    }
                };
                FeatureVector {
                    c40_mag: center[0] + jitter(),
                    c42: center[1] + jitter(),
                }
            })
            .collect()
    }

    fn two_clouds() -> Vec<(Modulation, Vec<FeatureVector>)> {
        vec![
            (Modulation::Bpsk, cloud([2.0, -2.0], 0.1, 100, 1)),
            (Modulation::Qpsk, cloud([1.0, -1.0], 0.1, 100, 2)),
        ]
    }

    #[test]
    fn separable_clouds_train_perfectly() {
        let data = two_clouds();
        let entry = svm_train(&data, 10.0, &SvmParams::default()).unwrap();
        let stats = entry.machines[0].stats.unwrap();
        assert!(stats.gap < 1e-6);
        for (label, xs) in &data {
            for x in xs {
                assert_eq!(entry.classify_features(&[*x]).label, *label);
            }
        }
    }

    #[test]
    fn hard_margin_limit_matches_geometry() {
        // two points per class on a line; max margin bisects the gap
        let points = [[0.0, 0.0], [0.0, 1.0], [2.0, 0.0], [2.0, 1.0]];
        let labels = [false, false, true, true];
        let params = SvmParams {
            c: 100.0,
            ..SvmParams::default()
        };
        let (svm, _) = train_linear_svm(&points, &labels, &params).unwrap();
        assert!((svm.w[0] - 1.0).abs() < 1e-6, "{svm:?}");
        assert!(svm.w[1].abs() < 1e-6);
        assert!((svm.b + 1.0).abs() < 1e-6);
    }

    #[test]
    fn training_is_deterministic() {
        let a = svm_train(&two_clouds(), 5.0, &SvmParams::default()).unwrap();
        let b = svm_train(&two_clouds(), 5.0, &SvmParams::default()).unwrap();
        let (sa, sb) = (a.machines[0].svm, b.machines[0].svm);
        for k in 0..2 {
            assert!((sa.w[k] - sb.w[k]).abs() < 1e-9);
        }
        assert!((sa.b - sb.b).abs() < 1e-9);
    }

    #[test]
    fn overlapping_clouds_still_converge() {
        let data = vec![
            (Modulation::Bpsk, cloud([1.6, -1.6], 0.6, 100, 3)),
            (Modulation::Qpsk, cloud([1.2, -1.2], 0.6, 100, 4)),
        ];
        let entry = svm_train(&data, 0.0, &SvmParams::default()).unwrap();
        assert!(entry.machines[0].stats.unwrap().gap < 1e-6);
    }

    #[test]
    fn identical_classes_are_inseparable() {
        let same = cloud([1.0, -1.0], 0.0, 10, 5);
        let data = vec![(Modulation::Bpsk, same.clone()), (Modulation::Qpsk, same)];
        assert!(matches!(
            svm_train(&data, 0.0, &SvmParams::default()),
            Err(Error::Inseparable(_))
        ));
    }

    fn unit_entry() -> SvmEntry {
        SvmEntry {
            snr_db: 10.0,
            machines: vec![PairMachine {
                positive: Modulation::Bpsk,
                negative: Modulation::Qpsk,
                svm: LinearSvm { w: [1.0, 0.0], b: 0.0 },
                stats: None,
            }],
        }
    }

    fn fv(c40: f64) -> FeatureVector {
        FeatureVector { c40_mag: c40, c42: 0.0 }
    }

    #[test]
    fn split_vote_goes_to_larger_margin() {
        let entry = unit_entry();
        let out = entry.classify_features(&[fv(0.9), fv(-0.2)]);
        assert_eq!(out.label, Modulation::Bpsk);
        assert!(out.is_consistent());
        let out = entry.classify_features(&[fv(0.1), fv(-0.5)]);
        assert_eq!(out.label, Modulation::Qpsk);
        let out = entry.classify_features(&[fv(0.3), fv(0.2)]);
        assert_eq!(out.label, Modulation::Bpsk);
    }

    #[test]
    fn nearest_entry_respects_distance() {
        let mut e2 = unit_entry();
        e2.snr_db = 0.0;
        let model = SvmModel::new(vec![unit_entry(), e2]).unwrap();
        assert_eq!(model.nearest(8.5, 2.0).unwrap().snr_db, 10.0);
        assert!(model.nearest(5.0, 2.0).is_err());
        assert_eq!(model.nearest(5.0, 5.0).unwrap().snr_db, 0.0);
    }

    #[test]
    fn text_round_trip() {
        let entry = svm_train(&two_clouds(), 7.5, &SvmParams::default()).unwrap();
        let model = SvmModel::new(vec![entry, unit_entry()]).unwrap();
        let back = SvmModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back.entries().len(), 2);
        for (a, b) in model.entries().iter().zip(back.entries()) {
            assert_eq!(a.snr_db, b.snr_db);
            assert_eq!(a.machines[0].svm, b.machines[0].svm);
        }
        assert!(SvmModel::from_text("modclass-svm 2\n").is_err());
        assert!(SvmModel::from_text("modclass-svm 1\n1 BPSK QPSK 1 x 0\n").is_err());
    }
}
