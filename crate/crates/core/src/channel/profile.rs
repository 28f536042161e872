//! ITU tapped-delay-line profiles and the coherence arithmetic used to size
//! observation groups.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileName {
    PedestrianB,
    VehicularA,
}

impl ProfileName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::PedestrianB => "PedestrianB",
            ProfileName::VehicularA => "VehicularA",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "pedestrianb" | "pedb" => Ok(ProfileName::PedestrianB),
            "vehiculara" | "veha" => Ok(ProfileName::VehicularA),
            _ => Err(Error::UnknownProfile(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Relative delay in seconds.
    pub delay: f64,
    /// Average power, linear, normalized over the profile.
    pub power: f64,
}

/// A power-normalized multipath profile with Classic Doppler on every tap.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    pub name: String,
    pub taps: Vec<Tap>,
}

impl TapProfile {
    /// Build from delays in ns and powers in dB; powers are normalized to sum 1.
    pub fn from_db(name: impl Into<String>, delays_ns: &[f64], powers_db: &[f64]) -> Result<Self> {
        if delays_ns.is_empty() || delays_ns.len() != powers_db.len() {
            return Err(Error::InvalidArgument(
                "tap delays and powers must be non-empty and equally long".into(),
            ));
        }
        if delays_ns[0] < 0.0 || delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "tap delays must be non-negative and strictly increasing".into(),
            ));
        }
        let linear: Vec<f64> = powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = linear.iter().sum();
        let taps = delays_ns
            .iter()
            .zip(&linear)
            .map(|(&d, &p)| Tap {
                delay: d * 1e-9,
                power: p / total,
            })
            .collect();
        Ok(TapProfile {
            name: name.into(),
            taps,
        })
    }

    /// Power-weighted RMS delay spread in seconds.
    pub fn rms_delay_spread(&self) -> f64 {
        let total: f64 = self.taps.iter().map(|t| t.power).sum();
        let mean = self.taps.iter().map(|t| t.power * t.delay).sum::<f64>() / total;
        let second = self.taps.iter().map(|t| t.power * t.delay * t.delay).sum::<f64>() / total;
        (second - mean * mean).max(0.0).sqrt()
    }
}

/// Six-tap ITU profile (delays in ns, powers in dB before normalization).
pub fn itu_profile(name: ProfileName) -> TapProfile {
    let (delays, powers): (&[f64], &[f64]) = match name {
        ProfileName::PedestrianB => (
            &[0.0, 200.0, 800.0, 1200.0, 2300.0, 3700.0],
            &[0.0, -0.9, -4.9, -8.0, -7.8, -23.9],
        ),
        ProfileName::VehicularA => (
            &[0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0],
            &[0.0, -1.0, -9.0, -10.0, -15.0, -20.0],
        ),
    };
    TapProfile::from_db(name.as_str(), delays, powers).expect("built-in profile is valid")
}

/// Maximum Doppler shift `v * f_c / c` in Hz.
pub fn doppler_frequency(speed_mps: f64, carrier_hz: f64) -> f64 {
    speed_mps * carrier_hz / SPEED_OF_LIGHT
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Caps applied when a coherence quantity is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupLimits {
    pub max_subcarriers: usize,
    pub max_frames: usize,
}

impl Default for GroupLimits {
    fn default() -> Self {
        GroupLimits {
            max_subcarriers: 512,
            max_frames: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceParams {
    pub rms_delay_spread: f64,
    pub coherence_bandwidth: f64,
    pub max_doppler: f64,
    pub coherence_time: f64,
    pub subcarriers: usize,
    pub frames: usize,
}

/// `B_c = 1 / (50 sigma_tau)`, `T_c = 9 / (16 pi f_d)`, group sizes floored and
/// clamped to `[1, limit]`.
pub fn coherence_params(
    profile: &TapProfile,
    speed_mps: f64,
    carrier_hz: f64,
    subcarrier_spacing: f64,
    frame_duration: f64,
    limits: GroupLimits,
) -> Result<CoherenceParams> {
    if speed_mps < 0.0 || !speed_mps.is_finite() {
        return Err(Error::InvalidArgument(format!("speed must be >= 0, got {speed_mps}")));
    }
    for (label, v) in [
        ("carrier", carrier_hz),
        ("subcarrier spacing", subcarrier_spacing),
        ("frame duration", frame_duration),
    ] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{label} must be positive, got {v}")));
        }
    }
    let rms = profile.rms_delay_spread();
    let coherence_bandwidth = if rms > 0.0 { 1.0 / (50.0 * rms) } else { f64::INFINITY };
    let max_doppler = doppler_frequency(speed_mps, carrier_hz);
    let coherence_time = if max_doppler > 0.0 {
        9.0 / (16.0 * std::f64::consts::PI * max_doppler)
    } else {
        f64::INFINITY
    };
    let clamp = |ratio: f64, max: usize| -> usize {
        if ratio.is_finite() {
            (ratio.floor() as usize).clamp(1, max.max(1))
        } else {
            max.max(1)
        }
    };
    Ok(CoherenceParams {
        rms_delay_spread: rms,
        coherence_bandwidth,
        max_doppler,
        coherence_time,
        subcarriers: clamp(coherence_bandwidth / subcarrier_spacing, limits.max_subcarriers),
        frames: clamp(coherence_time / frame_duration, limits.max_frames),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vehicular_a_table_values() {
        let p = itu_profile(ProfileName::VehicularA);
        let delays: Vec<f64> = p.taps.iter().map(|t| (t.delay * 1e9).round()).collect();
        assert_eq!(delays, vec![0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0]);
        let ref_power = p.taps[0].power;
        let rel_db: Vec<f64> = p.taps.iter().map(|t| 10.0 * (t.power / ref_power).log10()).collect();
        for (got, want) in rel_db.iter().zip([0.0, -1.0, -9.0, -10.0, -15.0, -20.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn pedestrian_b_table_values() {
        let p = itu_profile(ProfileName::PedestrianB);
        let delays: Vec<f64> = p.taps.iter().map(|t| (t.delay * 1e9).round()).collect();
        assert_eq!(delays, vec![0.0, 200.0, 800.0, 1200.0, 2300.0, 3700.0]);
        let ref_power = p.taps[0].power;
        for (t, want) in p.taps.iter().zip([0.0, -0.9, -4.9, -8.0, -7.8, -23.9]) {
            assert_relative_eq!(10.0 * (t.power / ref_power).log10(), want, epsilon = 1e-9);
        }
    }

    #[test]
    fn profiles_are_normalized() {
        for name in [ProfileName::PedestrianB, ProfileName::VehicularA] {
            let total: f64 = itu_profile(name).taps.iter().map(|t| t.power).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vehicular_a_coherence() {
        let p = itu_profile(ProfileName::VehicularA);
        let c = coherence_params(&p, kmh_to_mps(60.0), 2e9, 12.5e3, 85e-6, GroupLimits::default()).unwrap();
        assert_eq!(c.frames, 18);
        // direct weighted-RMS evaluation over the table gives ~370.4 ns
        assert!((c.rms_delay_spread * 1e9 - 370.4).abs() < 0.1, "{}", c.rms_delay_spread);
        assert!((c.coherence_bandwidth / 1e3 - 54.0).abs() < 0.1);
        assert_eq!(c.subcarriers, 4);
    }

    #[test]
    fn degenerate_profile_and_static_terminal() {
        let p = TapProfile::from_db("single", &[0.0], &[0.0]).unwrap();
        let limits = GroupLimits {
            max_subcarriers: 64,
            max_frames: 100,
        };
        let c = coherence_params(&p, 0.0, 2e9, 12.5e3, 85e-6, limits).unwrap();
        assert_eq!(c.rms_delay_spread, 0.0);
        assert!(c.coherence_bandwidth.is_infinite());
        assert!(c.coherence_time.is_infinite());
        assert_eq!(c.subcarriers, 64);
        assert_eq!(c.frames, 100);
    }

    #[test]
    fn bad_profiles_are_rejected() {
        assert!(TapProfile::from_db("x", &[0.0, 0.0], &[0.0, -1.0]).is_err());
        assert!(TapProfile::from_db("x", &[10.0, 5.0], &[0.0, -1.0]).is_err());
        assert!(TapProfile::from_db("x", &[], &[]).is_err());
        assert!("Rural".parse::<ProfileName>().is_err());
        assert_eq!("vehicular_a".parse::<ProfileName>().unwrap(), ProfileName::VehicularA);
    }

    #[test]
    fn doppler_at_60_kmh() {
        let fd = doppler_frequency(kmh_to_mps(60.0), 2e9);
        assert!((fd - 111.19).abs() < 0.01);
    }
}
