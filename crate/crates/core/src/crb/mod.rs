//! Fisher information and Cramér–Rao bounds for a flat MIMO channel.
//!
//! Parameters are ordered as `h = [vec(Re H); vec(Im H)]` with column-major
//! `vec`, so entry `(m, n)` of `H` maps to index `n * M_r + m` in each half.

mod blind;
mod bounds;
mod ls;

pub use blind::{blind_derivatives, fim_blind_mc, BlindDerivatives, MIN_MC_SAMPLES};
pub use bounds::{pcc_bound_sim, BoundKind, BoundPoint, BoundSetup};
pub use ls::ls_channel_estimate;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::signal::{check_noise_variance, SymbolBlock};

/// Condition number above which [`crb_from_fim`] switches to a thresholded
/// pseudo-inverse.
pub const MAX_CONDITION: f64 = 1e12;

/// Position of `Re h_mn` (or `Im h_mn` when `imag`) in the parameter vector.
pub fn param_index(receive: usize, transmit: usize, m: usize, n: usize, imag: bool) -> usize {
    n * receive + m + if imag { receive * transmit } else { 0 }
}

fn param_label(receive: usize, transmit: usize, idx: usize) -> (&'static str, usize, usize) {
    let half = receive * transmit;
    let (part, rest) = if idx < half { ("re", idx) } else { ("im", idx - half) };
    (part, rest % receive, rest / receive)
}

/// Real symmetric `2 M_r M_t` square information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub j: DMatrix<f64>,
    pub receive: usize,
    pub transmit: usize,
}

impl FisherMatrix {
    pub fn new(j: DMatrix<f64>, receive: usize, transmit: usize) -> Result<Self> {
        let dim = 2 * receive * transmit;
        if j.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "FIM {:?} for {receive}x{transmit} channel",
                j.shape()
            )));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Fisher matrix"));
        }
        Ok(FisherMatrix { j, receive, transmit })
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    /// Largest `|J - J^T|` entry relative to the largest `|J|` entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.j.amax().max(f64::MIN_POSITIVE);
        (&self.j - self.j.transpose()).amax() / scale
    }

    /// Smallest eigenvalue over the largest (negative means indefinite).
    pub fn min_eigen_ratio(&self) -> f64 {
        let sym = (&self.j + self.j.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        let max = eig.max();
        if max <= 0.0 {
            return eig.min();
        }
        eig.min() / max
    }

    /// Symmetric within `1e-9` and PSD within `-1e-9` relative.
    pub fn satisfies_invariants(&self) -> bool {
        self.asymmetry() <= 1e-9 && self.min_eigen_ratio() >= -1e-9
    }

    /// Row-major CSV with a labelled header row and column.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let label = |i| {
            let (part, m, n) = param_label(self.receive, self.transmit, i);
            format!("{part}_h{m}{n}")
        };
        let mut out = String::from("param");
        for i in 0..dim {
            write!(out, ",{}", label(i)).unwrap();
        }
        out.push('\n');
        for r in 0..dim {
            out.push_str(&label(r));
            for c in 0..dim {
                write!(out, ",{:e}", self.j[(r, c)]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Diagonal of `J^-1`, one variance bound per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbDiag {
    pub values: Vec<f64>,
    pub receive: usize,
    pub transmit: usize,
    /// Set when the pseudo-inverse path was taken.
    pub flagged: bool,
    pub condition: f64,
}

impl CrbDiag {
    pub fn get(&self, m: usize, n: usize, imag: bool) -> f64 {
        self.values[param_index(self.receive, self.transmit, m, n, imag)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Scale every bound, e.g. to zero for a perturbation-free reference.
    pub fn scaled(&self, factor: f64) -> CrbDiag {
        CrbDiag {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// `parameter,part,rx,tx,crb` rows in parameter order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,part,rx,tx,crb\n");
        for (i, v) in self.values.iter().enumerate() {
            let (part, m, n) = param_label(self.receive, self.transmit, i);
            writeln!(out, "{i},{part},{m},{n},{v:e}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Closed-form data-aided FIM. Only same-row pairs `(m, n), (m, q)` couple:
///
/// ```text
/// J(Re h_mn, Re h_mq) = J(Im h_mn, Im h_mq) = (2/s2) sum_k Re(s_n s_q*)
/// J(Re h_mn, Im h_mq) = (2/s2) sum_k Im(s_n s_q*)
/// J(Im h_mn, Re h_mq) = (2/s2) sum_k Im(s_q s_n*)
/// ```
///
/// The mixed blocks vanish for `n = q`. The channel never enters.
pub fn fim_data_aided(symbols: &SymbolBlock, noise_variance: f64, receive: usize) -> Result<FisherMatrix> {
    check_noise_variance(noise_variance)?;
    let transmit = symbols.streams();
    if receive == 0 || transmit == 0 {
        return Err(Error::DimensionMismatch("empty channel".into()));
    }
    let s = &symbols.symbols;
    let corr = s * s.adjoint();
    let scale = 2.0 / noise_variance;
    let dim = 2 * receive * transmit;
    let mut j = DMatrix::zeros(dim, dim);
    for m in 0..receive {
        for n in 0..transmit {
            for q in 0..transmit {
                // corr[(n, q)] = sum_k s_n s_q*
                let c = corr[(n, q)] * scale;
                let (rn, rq) = (
                    param_index(receive, transmit, m, n, false),
                    param_index(receive, transmit, m, q, false),
                );
                let (in_, iq) = (
                    param_index(receive, transmit, m, n, true),
                    param_index(receive, transmit, m, q, true),
                );
                j[(rn, rq)] = c.re;
                j[(in_, iq)] = c.re;
                if n != q {
                    j[(rn, iq)] = c.im;
                    j[(in_, rq)] = -c.im;
                }
            }
        }
    }
    FisherMatrix::new(j, receive, transmit)
}

/// Diagonal of `J^-1` through the eigendecomposition. When the condition
/// number exceeds [`MAX_CONDITION`] (or `J` is not positive definite),
/// eigenvalues below `1e-12 * max` are dropped and the result is flagged.
pub fn crb_from_fim(fim: &FisherMatrix) -> Result<CrbDiag> {
    let sym = (&fim.j + fim.j.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    if !(max > 0.0) {
        return Err(Error::InvalidArgument(
            "Fisher matrix has no positive eigenvalue".into(),
        ));
    }
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    let flagged = condition > MAX_CONDITION;
    let floor = max / MAX_CONDITION;
    let dim = fim.dim();
    let values = (0..dim)
        .map(|i| {
            eig.eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &l)| !flagged || l > floor)
                .map(|(k, &l)| eig.eigenvectors[(i, k)].powi(2) / l)
                .sum()
        })
        .collect();
    Ok(CrbDiag {
        values,
        receive: fim.receive,
        transmit: fim.transmit,
        flagged,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;
    use crate::signal::{draw_symbols, Modulation};
    use crate::{CMatrix, Complex64};

    fn bpsk(streams: usize, len: usize, seed: u64) -> SymbolBlock {
        draw_symbols(&Modulation::Bpsk.constellation(), streams, len, &mut derive(seed, &[])).unwrap()
    }

    #[test]
    fn unit_power_diagonal_is_2kn_over_sigma2() {
        for m in [Modulation::Bpsk, Modulation::Qpsk] {
            let s = draw_symbols(&m.constellation(), 2, 50, &mut derive(1, &[])).unwrap();
            let fim = fim_data_aided(&s, 0.2, 4).unwrap();
            for i in 0..fim.dim() {
                assert!((fim.j[(i, i)] - 500.0).abs() < 1e-9);
            }
            assert!(fim.satisfies_invariants());
        }
    }

    #[test]
    fn long_bpsk_blocks_are_nearly_diagonal() {
        let fim = fim_data_aided(&bpsk(2, 10_000, 2), 0.2, 2).unwrap();
        let diag = fim.j[(0, 0)];
        for r in 0..fim.dim() {
            for c in 0..fim.dim() {
                if r != c {
                    assert!(fim.j[(r, c)].abs() / diag < 0.05);
                }
            }
        }
    }

    #[test]
    fn matches_finite_sum_of_score_outer_products() {
        // J = (2/s2) sum_k Re(dmu^H dmu) over parameter directions
        let mut rng = derive(3, &[]);
        let s = draw_symbols(&Modulation::Qpsk.constellation(), 2, 7, &mut rng).unwrap();
        let (mr, mt, sigma2) = (3, 2, 0.7);
        let fim = fim_data_aided(&s, sigma2, mr).unwrap();
        let dim = 2 * mr * mt;
        let dmu = |p: usize, k: usize| -> CMatrix {
            let (part, m, n) = param_label(mr, mt, p);
            let d = if part == "re" {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            let mut v = CMatrix::zeros(mr, 1);
            v[(m, 0)] = d * s.symbols[(n, k)];
            v
        };
        for a in 0..dim {
            for b in 0..dim {
                let want: f64 = (0..7)
                    .map(|k| (dmu(a, k).adjoint() * dmu(b, k))[(0, 0)].re)
                    .sum::<f64>()
                    * 2.0
                    / sigma2;
                assert!((fim.j[(a, b)] - want).abs() < 1e-9, "{a},{b}");
            }
        }
    }

    #[test]
    fn diagonal_inverse() {
        let fim = FisherMatrix::new(DMatrix::from_diagonal_element(8, 8, 500.0), 2, 2).unwrap();
        let crb = crb_from_fim(&fim).unwrap();
        assert!(!crb.flagged);
        for v in &crb.values {
            assert!((v - 0.002).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_dense_inverse() {
        let mut rng = derive(4, &[]);
        let mut s = draw_symbols(&Modulation::Qpsk.constellation(), 3, 12, &mut rng).unwrap();
        // correlate streams
        for k in 0..12 {
            let a = s.symbols[(0, k)];
            s.symbols[(1, k)] = (s.symbols[(1, k)] + a * 0.8) / 1.8;
        }
        let fim = fim_data_aided(&s, 0.3, 3).unwrap();
        let crb = crb_from_fim(&fim).unwrap();
        let inv = fim.j.clone().try_inverse().unwrap();
        for i in 0..fim.dim() {
            assert!(((crb.values[i] - inv[(i, i)]) / inv[(i, i)]).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_fim_is_flagged() {
        // identical streams: J has a null direction
        let mut s = bpsk(2, 20, 5);
        for k in 0..20 {
            s.symbols[(1, k)] = s.symbols[(0, k)];
        }
        let crb = crb_from_fim(&fim_data_aided(&s, 0.2, 2).unwrap()).unwrap();
        assert!(crb.flagged);
        assert!(crb.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn csv_layout() {
        let fim = FisherMatrix::new(DMatrix::from_diagonal_element(4, 4, 2.0), 2, 1).unwrap();
        let text = fim.to_csv();
        assert_eq!(text.lines().next().unwrap(), "param,re_h00,re_h10,im_h00,im_h10");
        assert_eq!(text.lines().count(), 5);
        let crb = crb_from_fim(&fim).unwrap();
        let csv = crb.to_csv();
        assert!(csv.starts_with("parameter,part,rx,tx,crb\n0,re,0,0,5e-1\n"));
        assert!((crb.get(1, 0, true) - 0.5).abs() < 1e-15);
    }
}
