//! Blind separation of the spatial streams with complex JADE.
//!
//! The observations are whitened onto the `M_t`-dimensional signal subspace
//! (with the known noise power removed from the subspace eigenvalues), the
//! fourth-order cumulant tensor of the whitened data is reduced to its most
//! significant eigen-matrices, and those are jointly diagonalized with
//! complex Givens rotations. The cumulants are the full circular-plus-
//! non-circular form, so BPSK sources (non-zero pseudo-covariance) separate
//! as well as QPSK or QAM.
//!
//! The channel estimate is only defined up to a column permutation and a
//! per-column phase. [`estimate_phase_offset`] recovers the phase modulo
//! `2 pi / P`; [`resolve_ambiguity`] removes what remains when the true
//! channel is known (evaluation only).

use itertools::Itertools;
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::channel::ObservationBlock;
use crate::error::{Error, Result};
use crate::signal::Constellation;
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JadeOptions {
    /// Separation is refused below `min_samples_per_source * M_t` samples.
    pub min_samples_per_source: usize,
    /// Number of cumulant eigen-matrices kept; `None` keeps `M_t^2`.
    pub eigenmatrices: Option<usize>,
    /// A sweep with every Givens sine below this ends the iteration.
    pub rotation_tolerance: f64,
    pub max_sweeps: usize,
    /// Lower bound for the per-stream interference power.
    pub interference_floor: f64,
}

impl Default for JadeOptions {
    fn default() -> Self {
        JadeOptions {
            min_samples_per_source: 25,
            eigenmatrices: None,
            rotation_tolerance: 1e-8,
            max_sweeps: 200,
            interference_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    /// `M_t x M_r` demixing matrix; rows are scaled so each stream has unit
    /// sample power.
    pub demixing: CMatrix,
    /// `M_r x M_t` channel estimate (noise-compensated inverse of the
    /// unscaled demixer).
    pub channel: CMatrix,
    /// Separated streams, `demixing * Y`.
    pub streams: CMatrix,
    /// Noise power carried into each stream by its demixing row.
    pub interference: Vec<f64>,
    pub sweeps: usize,
}

impl SeparationResult {
    pub fn sources(&self) -> usize {
        self.streams.nrows()
    }

    /// Blind phase offset of every stream under `constellation`.
    pub fn phase_offsets(&self, constellation: &Constellation) -> Result<Vec<f64>> {
        (0..self.sources())
            .map(|m| {
                let row: Vec<Complex64> = self.streams.row(m).iter().copied().collect();
                estimate_phase_offset(&row, constellation)
            })
            .collect()
    }

    /// `D_1 = diag(exp(j phi_m))` for `constellation`.
    pub fn phase_correction(&self, constellation: &Constellation) -> Result<CMatrix> {
        let phases = self.phase_offsets(constellation)?;
        Ok(phase_matrix(&phases))
    }
}

pub fn phase_matrix(phases: &[f64]) -> CMatrix {
    let n = phases.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, phases[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn hermitize(m: &mut CMatrix) {
    let h = m.adjoint();
    *m += h;
    *m *= Complex64::new(0.5, 0.0);
}

/// Separate `sources` streams from `block` with default options.
pub fn jade_separate(block: &ObservationBlock, sources: usize) -> Result<SeparationResult> {
    jade_separate_with(block, sources, &JadeOptions::default())
}

pub fn jade_separate_with(block: &ObservationBlock, sources: usize, opts: &JadeOptions) -> Result<SeparationResult> {
    let (receive, samples) = block.y.shape();
    let n = sources;
    if n == 0 || n > receive {
        return Err(Error::DimensionMismatch(format!(
            "cannot separate {n} sources from {receive} antennas"
        )));
    }
    let floor = opts.min_samples_per_source * n;
    if samples < floor {
        return Err(Error::InsufficientSamples { got: samples, floor });
    }
    let t = samples as f64;
    let y = &block.y;

    // Signal-subspace whitening.
    let mut cov = y * y.adjoint() / Complex64::new(t, 0.0);
    hermitize(&mut cov);
    let eig = cov.symmetric_eigen();
    let order: Vec<usize> = (0..receive)
        .sorted_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
        .collect();
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank_tol = top * 1e-10;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > rank_tol).count();
    if top <= 0.0 || rank < n {
        return Err(Error::RankDeficientCovariance { rank, required: n });
    }
    let mut subspace = CMatrix::zeros(receive, n);
    let mut signal_power = Vec::with_capacity(n);
    for (col, &idx) in order.iter().take(n).enumerate() {
        subspace.set_column(col, &eig.eigenvectors.column(idx));
        let lambda = eig.eigenvalues[idx];
        signal_power.push((lambda - block.noise_variance).max(1e-2 * lambda));
    }
    let whitener = DMatrix::from_fn(n, receive, |i, j| subspace[(j, i)].conj() / signal_power[i].sqrt());
    let x = &whitener * y;

    let mut matrices = cumulant_eigenmatrices(&x, opts.eigenmatrices.unwrap_or(n * n));
    let (rotation, sweeps) = joint_diagonalize(&mut matrices, opts.rotation_tolerance, opts.max_sweeps);

    let raw_demixing = rotation.adjoint() * &whitener;
    let raw_streams = &raw_demixing * y;
    let mut demixing = raw_demixing.clone();
    for m in 0..n {
        let power = raw_streams.row(m).iter().map(|v| v.norm_sqr()).sum::<f64>() / t;
        if power <= 0.0 || !power.is_finite() {
            return Err(Error::NonFinite("separated stream power"));
        }
        let scale = power.sqrt().recip();
        for v in demixing.row_mut(m).iter_mut() {
            *v *= scale;
        }
    }
    let streams = &demixing * y;

    // pinv(V^H D^-1/2 U^H) = U D^1/2 V
    let mut channel = subspace;
    for (col, p) in signal_power.iter().enumerate() {
        let s = p.sqrt();
        for v in channel.column_mut(col).iter_mut() {
            *v *= s;
        }
    }
    let channel = channel * &rotation;

    let interference = (0..n)
        .map(|m| {
            let w2: f64 = demixing.row(m).iter().map(|v| v.norm_sqr()).sum();
            (block.noise_variance * w2).max(opts.interference_floor)
        })
        .collect();

    Ok(SeparationResult {
        demixing,
        channel,
        streams,
        interference,
        sweeps,
    })
}

/// Dominant eigen-matrices of the sample quadricovariance of `x` (`n x T`),
/// each scaled by its eigenvalue.
fn cumulant_eigenmatrices(x: &CMatrix, keep: usize) -> Vec<CMatrix> {
    let (n, samples) = x.shape();
    let t = Complex64::new(samples as f64, 0.0);
    let r = x * x.adjoint() / t;
    let c = x * x.transpose() / t;

    // Fourth moments E[x_i x_j^* x_k x_l^*].
    let nn = n * n;
    let mut pair = CMatrix::zeros(nn, samples); // x_i x_j^*
    for k in 0..samples {
        for i in 0..n {
            for j in 0..n {
                pair[(i * n + j, k)] = x[(i, k)] * x[(j, k)].conj();
            }
        }
    }
    let moments = &pair * pair.transpose() / t; // [(i,j),(k,l)] = E[x_i x_j* x_k x_l*]

    // Q[(i,j),(l,k)] = cum(x_i, x_j^*, x_k, x_l^*)
    let mut q = CMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let cum = moments[(i * n + j, k * n + l)]
                        - r[(i, j)] * r[(k, l)]
                        - r[(i, l)] * r[(k, j)]
                        - c[(i, k)] * c[(j, l)].conj();
                    q[(i * n + j, l * n + k)] = cum;
                }
            }
        }
    }
    hermitize(&mut q);
    let eig = q.symmetric_eigen();
    let order: Vec<usize> = (0..nn)
        .sorted_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()))
        .collect();
    order
        .into_iter()
        .take(keep.clamp(1, nn))
        .map(|idx| {
            let lambda = eig.eigenvalues[idx];
            let v = eig.eigenvectors.column(idx);
            DMatrix::from_fn(n, n, |a, b| v[a * n + b] * lambda)
        })
        .collect()
}

/// Jacobi-like joint diagonalization by complex Givens rotations.
///
/// Returns the accumulated unitary `V` (so that `V^H A V` is nearly diagonal
/// for every input `A`) and the number of sweeps performed.
fn joint_diagonalize(matrices: &mut [CMatrix], tolerance: f64, max_sweeps: usize) -> (CMatrix, usize) {
    let n = matrices.first().map_or(0, |m| m.nrows());
    let mut v = CMatrix::identity(n, n);
    let i = Complex64::new(0.0, 1.0);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut gram = Matrix3::<f64>::zeros();
                for a in matrices.iter() {
                    let g0 = a[(p, p)] - a[(q, q)];
                    let g1 = a[(p, q)];
                    let g2 = a[(q, p)];
                    let h = [g0, g1 + g2, i * (g2 - g1)];
                    for r in 0..3 {
                        for c in 0..3 {
                            gram[(r, c)] += (h[r] * h[c].conj()).re;
                        }
                    }
                }
                let eig = gram.symmetric_eigen();
                let best = eig.eigenvalues.imax();
                let mut angles = eig.eigenvectors.column(best).into_owned();
                if angles[0] < 0.0 {
                    angles = -angles;
                }
                let cos = (0.5 + angles[0] / 2.0).sqrt();
                let sin = Complex64::new(angles[1], -angles[2]) * (0.5 / cos);
                if sin.norm() <= tolerance {
                    continue;
                }
                rotated = true;
                let c = Complex64::new(cos, 0.0);
                for col in 0..n {
                    let (vp, vq) = (v[(col, p)], v[(col, q)]);
                    v[(col, p)] = c * vp + sin * vq;
                    v[(col, q)] = -sin.conj() * vp + c * vq;
                }
                for a in matrices.iter_mut() {
                    for col in 0..n {
                        let (ap, aq) = (a[(p, col)], a[(q, col)]);
                        a[(p, col)] = c * ap + sin.conj() * aq;
                        a[(q, col)] = -sin * ap + c * aq;
                    }
                    for row in 0..n {
                        let (ap, aq) = (a[(row, p)], a[(row, q)]);
                        a[(row, p)] = c * ap + sin * aq;
                        a[(row, q)] = -sin.conj() * ap + c * aq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (v, sweeps)
}

/// Blind non-data-aided phase estimate, defined modulo `2 pi / P`.
///
/// `phi = arg(E[(s*)^P] * sum_k x(k)^P) / P`, returned in `(-pi/P, pi/P]`.
pub fn estimate_phase_offset(stream: &[Complex64], constellation: &Constellation) -> Result<f64> {
    let order = constellation.symmetry_order();
    let moment = constellation.phase_moment();
    if moment.norm() == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{} has zero phase moment",
            constellation.modulation()
        )));
    }
    let sum: Complex64 = stream.iter().map(|x| x.powu(order)).sum();
    if sum.norm() == 0.0 {
        return Err(Error::UndefinedPhase { order });
    }
    Ok((moment * sum).arg() / order as f64)
}

/// Permutation-times-phase correction `Q` with `H_hat D_1 Q ~ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityFix {
    pub q: CMatrix,
    /// `|| (H_hat D_1 Q)^+ H - I ||_F` at the returned `Q`.
    pub objective: f64,
    /// Number of candidates searched, `M_t! * P^M_t`.
    pub candidates: usize,
}

/// Exhaustive search over permutations and `P`-th-root phases.
pub fn resolve_ambiguity(h_hat: &CMatrix, d1: &CMatrix, h_true: &CMatrix, symmetry_order: u32) -> Result<AmbiguityFix> {
    let n = h_hat.ncols();
    if d1.shape() != (n, n) || h_true.shape() != h_hat.shape() {
        return Err(Error::DimensionMismatch(format!(
            "H_hat {:?}, D1 {:?}, H {:?}",
            h_hat.shape(),
            d1.shape(),
            h_true.shape()
        )));
    }
    if symmetry_order == 0 {
        return Err(Error::InvalidArgument("symmetry order must be positive".into()));
    }
    let corrected = h_hat * d1;
    let pinv = corrected
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    // (H_hat D1 M)^+ = M^H (H_hat D1)^+ for unitary M.
    let g = pinv * h_true;
    let identity = CMatrix::identity(n, n);
    let roots: Vec<Complex64> = (0..symmetry_order)
        .map(|p| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * p as f64 / symmetry_order as f64))
        .collect();

    let mut best: Option<(f64, CMatrix)> = None;
    let mut candidates = 0;
    for perm in (0..n).permutations(n) {
        for phases in (0..n).map(|_| roots.iter()).multi_cartesian_product() {
            candidates += 1;
            let mut m = CMatrix::zeros(n, n);
            for (col, (&row, &ph)) in perm.iter().zip(&phases).enumerate() {
                m[(row, col)] = *ph;
            }
            let objective = (m.adjoint() * &g - &identity).norm();
            if best.as_ref().is_none_or(|(b, _)| objective < *b) {
                best = Some((objective, m));
            }
        }
    }
    let (objective, q) = best.expect("at least one candidate");
    Ok(AmbiguityFix {
        q,
        objective,
        candidates,
    })
}
