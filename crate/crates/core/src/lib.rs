//! Blind modulation classification for MIMO-OFDM links.
//!
//! The received signal of one coherence group is modelled as
//! `y_k = H s_k + z_k` with an unknown flat channel `H`. The pipeline
//! separates the spatial streams with complex JADE, removes the per-stream
//! phase offset up to the constellation's symmetry, and classifies the
//! modulation either by maximum likelihood over the candidate constellations
//! or with fourth-order cumulant features and a linear SVM.
//!
//! Alongside the classifiers the crate computes Fisher information and
//! Cramér–Rao bounds for estimating `H` (data-aided in closed form, blind by
//! Monte Carlo), the efficient least-squares estimator, and classification
//! upper bounds obtained by perturbing the true channel at the CRB.
//!
//! Modules:
//!
//! - [`signal`]: constellations, symbol draws, SNR and AWGN conventions
//! - [`channel`]: flat Rayleigh and ITU tapped-delay-line OFDM channels
//! - [`ica`]: JADE separation, blind phase estimation, ambiguity resolution
//! - [`classify`]: ML classifier, cumulant features, linear SVM
//! - [`crb`]: Fisher information, CRBs, LS estimator, PCC bounds
//! - [`harness`]: seeded Monte Carlo experiments and CSV output
//!
//! See the `examples/` directory of this crate for one runnable program
//! per capability.

pub mod channel;
pub mod classify;
pub mod crb;
mod error;
pub mod harness;
pub mod ica;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used for channels, symbols and observations.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
