use std::fmt;
use std::str::FromStr;

use crate::channel::ProfileName;
use crate::classify::SvmParams;
use crate::error::{Error, Result};
use crate::signal::Modulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Fig3Pedestrian,
    Fig4VehicularUngrouped,
    Fig5VehicularGrouped,
    Fig6Crb,
    Fig7Bounds,
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fig3Pedestrian => "fig3_pedestrian",
            ExperimentKind::Fig4VehicularUngrouped => "fig4_vehicular_ungrouped",
            ExperimentKind::Fig5VehicularGrouped => "fig5_vehicular_grouped",
            ExperimentKind::Fig6Crb => "fig6_crb",
            ExperimentKind::Fig7Bounds => "fig7_bounds",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentKind::Fig3Pedestrian,
            ExperimentKind::Fig4VehicularUngrouped,
            ExperimentKind::Fig5VehicularGrouped,
            ExperimentKind::Fig6Crb,
            ExperimentKind::Fig7Bounds,
            ExperimentKind::Custom,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::Config(format!("experiment.name: unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelChoice {
    Flat,
    Profile(ProfileName),
}

impl ChannelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ChannelChoice::Flat => "flat",
            ChannelChoice::Profile(p) => p.as_str(),
        }
    }
}

impl FromStr for ChannelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("flat") {
            Ok(ChannelChoice::Flat)
        } else {
            s.parse().map(ChannelChoice::Profile)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierChoice {
    Ml,
    Svm,
    Both,
}

impl ClassifierChoice {
    pub fn runs_ml(self) -> bool {
        matches!(self, ClassifierChoice::Ml | ClassifierChoice::Both)
    }

    pub fn runs_svm(self) -> bool {
        matches!(self, ClassifierChoice::Svm | ClassifierChoice::Both)
    }
}

impl FromStr for ClassifierChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(ClassifierChoice::Ml),
            "svm" => Ok(ClassifierChoice::Svm),
            "both" => Ok(ClassifierChoice::Both),
            _ => Err(Error::Config(format!(
                "classifier.kind: expected ml, svm or both, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmSettings {
    pub params: SvmParams,
    /// Feature vectors per class per SNR.
    pub training_per_class: usize,
    pub max_snr_distance_db: f64,
    /// Draw a fresh training set for every trial instead of once per SNR.
    pub retrain_per_trial: bool,
}

impl Default for SvmSettings {
    fn default() -> Self {
        SvmSettings {
            params: SvmParams::default(),
            training_per_class: 100,
            max_snr_distance_db: 2.0,
            retrain_per_trial: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_mc: usize,
    pub n_channels: usize,
    pub trials_per_channel: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_mc: 1000,
            n_channels: 500,
            trials_per_channel: 1,
        }
    }
}

/// Everything a run needs. Build from [`ExperimentConfig::preset`] or
/// [`Default`], then overlay a config file with [`ExperimentConfig::apply_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub snr_grid: Vec<f64>,
    pub channel: ChannelChoice,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub frame_duration_s: f64,
    pub transmit: usize,
    pub receive: usize,
    /// Frames per coherence group, `K`.
    pub frames: usize,
    /// Subcarriers per coherence group, `N`.
    pub subcarriers: usize,
    pub classifier: ClassifierChoice,
    pub candidates: Vec<Modulation>,
    pub svm: SvmSettings,
    pub mc: McSettings,
    /// Record wall-clock seconds per row; off keeps output byte-reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Custom,
            seed: 1,
            trials: 500,
            snr_grid: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            channel: ChannelChoice::Flat,
            speed_kmh: 0.0,
            carrier_hz: 2e9,
            subcarrier_spacing_hz: 12_500.0,
            frame_duration_s: 85e-6,
            transmit: 2,
            receive: 4,
            frames: 50,
            subcarriers: 1,
            classifier: ClassifierChoice::Ml,
            candidates: vec![Modulation::Bpsk, Modulation::Qpsk],
            svm: SvmSettings::default(),
            mc: McSettings::default(),
            timing: false,
        }
    }
}

/// Recognized `section.key` names.
pub const CONFIG_KEYS: &[&str] = &[
    "experiment.name",
    "experiment.seed",
    "experiment.trials",
    "experiment.snr_grid",
    "channel.profile",
    "channel.speed_kmh",
    "channel.carrier_hz",
    "channel.subcarrier_spacing_hz",
    "channel.frame_duration_s",
    "system.transmit",
    "system.receive",
    "group.frames",
    "group.subcarriers",
    "classifier.kind",
    "classifier.candidates",
    "svm.kernel",
    "svm.c",
    "svm.training_per_class",
    "svm.max_snr_distance_db",
    "svm.retrain_per_trial",
    "svm.gap_tolerance",
    "mc.n_mc",
    "mc.n_channels",
    "mc.trials_per_channel",
    "output.timing",
];

fn fine_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Figure presets: `fig3` .. `fig7`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = ExperimentConfig::default();
        let cfg = match name {
            "fig3" => ExperimentConfig {
                experiment: ExperimentKind::Fig3Pedestrian,
                channel: ChannelChoice::Profile(ProfileName::PedestrianB),
                speed_kmh: 3.0,
                classifier: ClassifierChoice::Both,
                snr_grid: fine_grid(-10.0, 20.0, 2.5),
                ..base
            },
            "fig4" => ExperimentConfig {
                experiment: ExperimentKind::Fig4VehicularUngrouped,
                channel: ChannelChoice::Profile(ProfileName::VehicularA),
                speed_kmh: 60.0,
                classifier: ClassifierChoice::Both,
                snr_grid: fine_grid(-10.0, 20.0, 2.5),
                ..base
            },
            "fig5" => ExperimentConfig {
                experiment: ExperimentKind::Fig5VehicularGrouped,
                channel: ChannelChoice::Profile(ProfileName::VehicularA),
                speed_kmh: 60.0,
                frames: 10,
                subcarriers: 5,
                classifier: ClassifierChoice::Both,
                snr_grid: fine_grid(-10.0, 20.0, 2.5),
                ..base
            },
            "fig6" => ExperimentConfig {
                experiment: ExperimentKind::Fig6Crb,
                snr_grid: fine_grid(-5.0, 20.0, 5.0),
                ..base
            },
            "fig7" => ExperimentConfig {
                experiment: ExperimentKind::Fig7Bounds,
                channel: ChannelChoice::Profile(ProfileName::VehicularA),
                speed_kmh: 60.0,
                frames: 10,
                subcarriers: 5,
                snr_grid: fine_grid(-10.0, 10.0, 2.5),
                ..base
            },
            _ => {
                return Err(Error::Config(format!(
                    "--preset: unknown preset `{name}` (expected fig3, fig4, fig5, fig6 or fig7)"
                )))
            }
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Overlay `section.key = value` lines. Blank lines and `#` comments
    /// are skipped; unknown keys and malformed values are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `section.key = value`", idx + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", idx + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got `{value}`"));
        let uint = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let real = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad("a finite number"))
        };
        let boolean = || value.parse::<bool>().map_err(|_| bad("true or false"));
        match key {
            "experiment.name" => self.experiment = value.parse()?,
            "experiment.seed" => self.seed = value.parse().map_err(|_| bad("a 64-bit unsigned integer"))?,
            "experiment.trials" => self.trials = uint()?,
            "experiment.snr_grid" => {
                self.snr_grid = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("a comma-separated list of dB values"))?
            }
            "channel.profile" => self.channel = value.parse().map_err(|_| bad("flat, PedestrianB or VehicularA"))?,
            "channel.speed_kmh" => self.speed_kmh = real()?,
            "channel.carrier_hz" => self.carrier_hz = real()?,
            "channel.subcarrier_spacing_hz" => self.subcarrier_spacing_hz = real()?,
            "channel.frame_duration_s" => self.frame_duration_s = real()?,
            "system.transmit" => self.transmit = uint()?,
            "system.receive" => self.receive = uint()?,
            "group.frames" => self.frames = uint()?,
            "group.subcarriers" => self.subcarriers = uint()?,
            "classifier.kind" => self.classifier = value.parse().map_err(|_| bad("ml, svm or both"))?,
            "classifier.candidates" => {
                self.candidates = value
                    .split(',')
                    .map(|v| v.trim().parse::<Modulation>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|_| bad("a comma-separated list of BPSK, QPSK, 16QAM"))?
            }
            "svm.kernel" => {
                if !value.eq_ignore_ascii_case("linear") {
                    return Err(bad("linear (the only supported kernel)"));
                }
            }
            "svm.c" => self.svm.params.c = real()?,
            "svm.gap_tolerance" => self.svm.params.gap_tolerance = real()?,
            "svm.training_per_class" => self.svm.training_per_class = uint()?,
            "svm.max_snr_distance_db" => self.svm.max_snr_distance_db = real()?,
            "svm.retrain_per_trial" => self.svm.retrain_per_trial = boolean()?,
            "mc.n_mc" => self.mc.n_mc = uint()?,
            "mc.n_channels" => self.mc.n_channels = uint()?,
            "mc.trials_per_channel" => self.mc.trials_per_channel = uint()?,
            "output.timing" => self.timing = boolean()?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Check ranges; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("experiment.trials must be at least 1".into());
        }
        if self.snr_grid.is_empty() {
            return fail("experiment.snr_grid must not be empty".into());
        }
        if self.transmit == 0 || self.receive == 0 {
            return fail("system.transmit and system.receive must be positive".into());
        }
        if self.transmit > self.receive {
            return fail(format!(
                "system.transmit ({}) must not exceed system.receive ({})",
                self.transmit, self.receive
            ));
        }
        if self.frames == 0 || self.subcarriers == 0 {
            return fail("group.frames and group.subcarriers must be positive".into());
        }
        if self.candidates.len() < 2 {
            return fail("classifier.candidates needs at least two constellations".into());
        }
        for (i, a) in self.candidates.iter().enumerate() {
            if self.candidates[..i].contains(a) {
                return fail(format!("classifier.candidates lists {a} twice"));
            }
        }
        if self.speed_kmh < 0.0 {
            return fail(format!("channel.speed_kmh must be >= 0, got {}", self.speed_kmh));
        }
        for (key, v) in [
            ("channel.carrier_hz", self.carrier_hz),
            ("channel.subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("channel.frame_duration_s", self.frame_duration_s),
            ("svm.c", self.svm.params.c),
            ("svm.gap_tolerance", self.svm.params.gap_tolerance),
        ] {
            if !(v > 0.0) {
                return fail(format!("{key} must be positive, got {v}"));
            }
        }
        if self.svm.max_snr_distance_db < 0.0 {
            return fail("svm.max_snr_distance_db must be >= 0".into());
        }
        if self.classifier.runs_svm() && self.svm.training_per_class < 2 {
            return fail("svm.training_per_class must be at least 2".into());
        }
        if self.mc.n_mc < crate::crb::MIN_MC_SAMPLES {
            return fail(format!("mc.n_mc must be at least {}", crate::crb::MIN_MC_SAMPLES));
        }
        if self.mc.n_channels == 0 || self.mc.trials_per_channel == 0 {
            return fail("mc.n_channels and mc.trials_per_channel must be positive".into());
        }
        Ok(())
    }

    pub fn group_size(&self) -> usize {
        self.frames * self.subcarriers
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
