//! Modulation classifiers: maximum likelihood over candidate constellations,
//! and fourth-order cumulant features with a linear soft-margin SVM.

mod cumulants;
mod ml;
mod svm;

pub use cumulants::{cumulant_features, FeatureVector, MIN_FEATURE_SAMPLES};
pub use ml::{avg_log_likelihood, ml_classify, ml_classify_separated, SymbolHypotheses};
pub use svm::{
    svm_classify_streams, svm_train, train_linear_svm, LinearSvm, PairMachine, SvmEntry, SvmModel, SvmParams,
    TrainingStats,
};

use crate::signal::Modulation;

/// Decision plus the per-hypothesis scores it was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub label: Modulation,
    pub scores: Vec<(Modulation, f64)>,
}

impl ClassificationOutcome {
    /// Argmax of `scores`; exact ties go to the smaller constellation.
    pub(crate) fn from_scores(scores: Vec<(Modulation, f64)>) -> Self {
        let label = scores
            .iter()
            .copied()
            .reduce(|best, cand| {
                if cand.1 > best.1 || (cand.1 == best.1 && cand.0.order() < best.0.order()) {
                    cand
                } else {
                    best
                }
            })
            .map(|(m, _)| m)
            .expect("at least one score");
        ClassificationOutcome { label, scores }
    }

    pub fn score(&self, modulation: Modulation) -> Option<f64> {
        self.scores.iter().find(|(m, _)| *m == modulation).map(|(_, s)| *s)
    }

    /// True when the label carries the maximal score.
    pub fn is_consistent(&self) -> bool {
        match self.score(self.label) {
            Some(top) => self.scores.iter().all(|(_, s)| *s <= top),
            None => false,
        }
    }
}
