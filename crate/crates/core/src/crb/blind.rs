use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::{param_index, FisherMatrix};
use crate::error::{Error, Result};
use crate::signal::{check_noise_variance, complex_gaussian, symbol_vectors, Constellation};
use crate::CMatrix;

/// Smallest accepted Monte Carlo sample count for [`fim_blind_mc`].
pub const MIN_MC_SAMPLES: usize = 100;

/// `ln L(y|H)` of one observation with the symbols marginalized, and its
/// first and second derivatives in the real channel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindDerivatives {
    pub log_likelihood: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

struct Workspace {
    hypotheses: Vec<Vec<Complex64>>,
    receive: usize,
    transmit: usize,
    log_const: f64,
    exps: Vec<f64>,
    grads: Vec<DVector<f64>>,
}

impl Workspace {
    fn new(h: &CMatrix, constellation: &Constellation, noise_variance: f64) -> Self {
        let (receive, transmit) = h.shape();
        let hypotheses = symbol_vectors(constellation, transmit);
        let dim = 2 * receive * transmit;
        let count = hypotheses.len();
        let log_const = -(receive as f64) * (std::f64::consts::PI * noise_variance).ln()
            - (transmit as f64) * (constellation.len() as f64).ln();
        Workspace {
            hypotheses,
            receive,
            transmit,
            log_const,
            exps: vec![0.0; count],
            grads: vec![DVector::zeros(dim); count],
        }
    }

    /// Per hypothesis `s`: `E_s = -||y - H s||^2 / s2` and its gradient
    /// `(2/s2) Re(conj(e_m) d s_n)` for direction `d` in `{1, j}`.
    fn evaluate(&mut self, y: &[Complex64], h: &CMatrix, noise_variance: f64, hessian: bool) -> BlindDerivatives {
        let (mr, mt) = (self.receive, self.transmit);
        let scale = 2.0 / noise_variance;
        let mut e = vec![Complex64::new(0.0, 0.0); mr];
        for (idx, s) in self.hypotheses.iter().enumerate() {
            let mut dist = 0.0;
            for m in 0..mr {
                let mut pred = Complex64::new(0.0, 0.0);
                for n in 0..mt {
                    pred += h[(m, n)] * s[n];
                }
                e[m] = y[m] - pred;
                dist += e[m].norm_sqr();
            }
            self.exps[idx] = -dist / noise_variance;
            let g = &mut self.grads[idx];
            for m in 0..mr {
                for n in 0..mt {
                    let v = e[m].conj() * s[n];
                    g[param_index(mr, mt, m, n, false)] = scale * v.re;
                    g[param_index(mr, mt, m, n, true)] = -scale * v.im;
                }
            }
        }
        let max = self.exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = self.exps.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let log_likelihood = self.log_const + max + total.ln();

        let dim = 2 * mr * mt;
        let mut gradient = DVector::zeros(dim);
        for (w, g) in weights.iter().zip(&self.grads) {
            gradient.axpy(*w, g, 1.0);
        }
        if !hessian {
            return BlindDerivatives {
                log_likelihood,
                gradient,
                hessian: DMatrix::zeros(0, 0),
            };
        }

        // sum_s w (g g^T + h_s) - gbar gbar^T, with h_s built from the
        // weighted symbol correlation A = sum_s w s s^H
        let mut out = DMatrix::zeros(dim, dim);
        let mut corr = CMatrix::zeros(mt, mt);
        for ((w, g), s) in weights.iter().zip(&self.grads).zip(&self.hypotheses) {
            if *w == 0.0 {
                continue;
            }
            out.ger(*w, g, g, 1.0);
            for n in 0..mt {
                for q in 0..mt {
                    corr[(n, q)] += s[n] * s[q].conj() * *w;
                }
            }
        }
        out.ger(-1.0, &gradient, &gradient, 1.0);
        for m in 0..mr {
            for n in 0..mt {
                for q in 0..mt {
                    let c = corr[(n, q)] * scale;
                    let (rn, rq) = (param_index(mr, mt, m, n, false), param_index(mr, mt, m, q, false));
                    let (in_, iq) = (param_index(mr, mt, m, n, true), param_index(mr, mt, m, q, true));
                    out[(rn, rq)] -= c.re;
                    out[(in_, iq)] -= c.re;
                    out[(rn, iq)] -= c.im;
                    out[(in_, rq)] += c.im;
                }
            }
        }
        BlindDerivatives {
            log_likelihood,
            gradient,
            hessian: out,
        }
    }
}

fn check_channel(h: &CMatrix) -> Result<()> {
    if h.nrows() == 0 || h.ncols() == 0 || h.ncols() > h.nrows() {
        return Err(Error::DimensionMismatch(format!("channel {:?}", h.shape())));
    }
    if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("channel"));
    }
    Ok(())
}

/// Derivatives of the per-observation log mixture likelihood
/// `ln( |Omega|^-M_t sum_s (pi s2)^-M_r exp(-||y - H s||^2 / s2) )`.
pub fn blind_derivatives(
    y: &[Complex64],
    h: &CMatrix,
    constellation: &Constellation,
    noise_variance: f64,
) -> Result<BlindDerivatives> {
    check_noise_variance(noise_variance)?;
    check_channel(h)?;
    if y.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "observation of length {} for {} receive antennas",
            y.len(),
            h.nrows()
        )));
    }
    let mut ws = Workspace::new(h, constellation, noise_variance);
    Ok(ws.evaluate(y, h, noise_variance, true))
}

/// Compensated (Neumaier) running sum of matrices.
struct MatrixSum {
    sum: DMatrix<f64>,
    comp: DMatrix<f64>,
}

impl MatrixSum {
    fn new(dim: usize) -> Self {
        MatrixSum {
            sum: DMatrix::zeros(dim, dim),
            comp: DMatrix::zeros(dim, dim),
        }
    }

    fn add(&mut self, idx: usize, x: f64) {
        let s = self.sum[idx];
        let t = s + x;
        if s.abs() >= x.abs() {
            self.comp[idx] += (s - t) + x;
        } else {
            self.comp[idx] += (x - t) + s;
        }
        self.sum[idx] = t;
    }

    /// `-KN` times the symmetrized mean.
    fn fisher(self, n_mc: usize, samples: usize) -> DMatrix<f64> {
        let j = (self.sum + self.comp) * (samples as f64 / n_mc as f64);
        (&j + j.transpose()) * 0.5
    }
}

/// Blind FIM `-KN E[d^2 ln L(y|H)]`, the expectation taken by Monte Carlo
/// over `n_mc` draws of `y = H s + z` with uniform `s` in `Omega^M_t`.
///
/// The sample-mean Hessian can come out indefinite at low SNR and small
/// `n_mc`. In that case the score outer product `KN E[g g^T]` over the same
/// draws is returned instead; it has the same expectation and is PSD by
/// construction.
pub fn fim_blind_mc<R: Rng + ?Sized>(
    h: &CMatrix,
    constellation: &Constellation,
    noise_variance: f64,
    samples: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<FisherMatrix> {
    check_noise_variance(noise_variance)?;
    check_channel(h)?;
    if n_mc < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "n_mc = {n_mc} is below the minimum of {MIN_MC_SAMPLES}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("KN must be positive".into()));
    }
    let (mr, mt) = h.shape();
    let points = constellation.points();
    let mut ws = Workspace::new(h, constellation, noise_variance);
    let dim = 2 * mr * mt;
    let mut neg_hessian = MatrixSum::new(dim);
    let mut outer = MatrixSum::new(dim);
    let mut s = vec![Complex64::new(0.0, 0.0); mt];
    let mut y = vec![Complex64::new(0.0, 0.0); mr];
    for _ in 0..n_mc {
        for v in s.iter_mut() {
            *v = points[rng.random_range(0..points.len())];
        }
        for (m, v) in y.iter_mut().enumerate() {
            let clean: Complex64 = (0..mt).map(|n| h[(m, n)] * s[n]).sum();
            *v = clean + complex_gaussian(noise_variance, rng);
        }
        let d = ws.evaluate(&y, h, noise_variance, true);
        for (idx, x) in d.hessian.iter().enumerate() {
            neg_hessian.add(idx, -x);
        }
        for c in 0..dim {
            for r in 0..dim {
                outer.add(c * dim + r, d.gradient[r] * d.gradient[c]);
            }
        }
    }
    let fim = FisherMatrix::new(neg_hessian.fisher(n_mc, samples), mr, mt)?;
    if fim.satisfies_invariants() {
        return Ok(fim);
    }
    FisherMatrix::new(outer.fisher(n_mc, samples), mr, mt)
}
