use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shortest series accepted by [`cumulant_features`].
pub const MIN_FEATURE_SAMPLES: usize = 10;

/// Normalized fourth-order cumulants of one stream, both carrier-phase
/// invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub c40_mag: f64,
    pub c42: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 2] {
        [self.c40_mag, self.c42]
    }
}

/// `|C40|` and `C42` from sample moments, normalized by the squared sample
/// power:
///
/// ```text
/// C40 = (E[s^4] - 3 E[s^2]^2) / E[|s|^2]^2
/// C42 = (E[|s|^4] - |E[s^2]|^2 - 2 E[|s|^2]^2) / E[|s|^2]^2
/// ```
pub fn cumulant_features(stream: &[Complex64]) -> Result<FeatureVector> {
    if stream.len() < MIN_FEATURE_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: stream.len(),
            floor: MIN_FEATURE_SAMPLES,
        });
    }
    let n = stream.len() as f64;
    let mut m20 = Complex64::new(0.0, 0.0);
    let mut m40 = Complex64::new(0.0, 0.0);
    let mut m21 = 0.0;
    let mut m42 = 0.0;
    for s in stream {
        if !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::NonFinite("stream"));
        }
        let s2 = s * s;
        let p = s.norm_sqr();
        m20 += s2;
        m40 += s2 * s2;
        m21 += p;
        m42 += p * p;
    }
    m20 /= n;
    m40 /= n;
    m21 /= n;
    m42 /= n;
    if m21 <= 0.0 {
        return Err(Error::InvalidArgument("stream has zero sample power".into()));
    }
    let norm = m21 * m21;
    Ok(FeatureVector {
        c40_mag: ((m40 - 3.0 * m20 * m20) / norm).norm(),
        c42: (m42 - m20.norm_sqr() - 2.0 * norm) / norm,
    })
}
