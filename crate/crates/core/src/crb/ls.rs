use nalgebra::{DMatrix, DVector};

use crate::channel::{MimoChannel, ObservationBlock};
use crate::error::{Error, Result};
use crate::signal::SymbolBlock;
use crate::{CMatrix, Complex64};

/// Least-squares channel estimate from known symbols.
///
/// For each receive row `m` the real system
/// `[Re y_m; Im y_m] = [Re S^T, -Im S^T; Im S^T, Re S^T] [Re h_m; Im h_m]`
/// is solved; the estimator is unbiased and attains the data-aided CRB.
pub fn ls_channel_estimate(block: &ObservationBlock, symbols: &SymbolBlock) -> Result<MimoChannel> {
    let (mr, kn) = block.y.shape();
    let mt = symbols.streams();
    if symbols.len() != kn {
        return Err(Error::DimensionMismatch(format!(
            "{kn} observations, {} symbol vectors",
            symbols.len()
        )));
    }
    if kn < mt {
        return Err(Error::RankDeficientSymbols { row: 0 });
    }
    let s = &symbols.symbols;
    let a = DMatrix::from_fn(2 * kn, 2 * mt, |r, c| {
        let (k, imag_row) = (r % kn, r >= kn);
        let (n, imag_col) = (c % mt, c >= mt);
        let v = s[(n, k)];
        match (imag_row, imag_col) {
            (false, false) => v.re,
            (false, true) => -v.im,
            (true, false) => v.im,
            (true, true) => v.re,
        }
    });
    let svd = a.svd(true, true);
    let max = svd.singular_values.max();
    let tol = max * (2 * kn) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&v| v > tol).count();

    let mut h = CMatrix::zeros(mr, mt);
    for m in 0..mr {
        if rank < 2 * mt {
            return Err(Error::RankDeficientSymbols { row: m });
        }
        let b = DVector::from_fn(2 * kn, |r, _| {
            let v = block.y[(m, r % kn)];
            if r < kn {
                v.re
            } else {
                v.im
            }
        });
        let x = svd.solve(&b, tol).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for n in 0..mt {
            h[(m, n)] = Complex64::new(x[n], x[mt + n]);
        }
    }
    Ok(MimoChannel::flat(h))
}
