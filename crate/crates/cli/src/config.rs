//! Flat experiment configuration. Precedence: built-in defaults, then the
//! `--config` file, then command-line flags.

use std::path::{Path, PathBuf};

use halfspace_core::evaluation::{NoiseKind, NoiseModel};
use halfspace_core::geometry::UnitVector;
use halfspace_core::localization::BandScheduleConfig;
use halfspace_core::ptas::{PtasConfig, PtasConstants, Selection};
use halfspace_core::regression::RegressionOptions;
use halfspace_core::rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Realizable,
    Rcn,
    BandFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignpolyKind {
    /// Amplifier on `[−1.5, 1.5]`; uses `tau`.
    Booster,
    /// Sign approximation on `[−a, a]`; uses `a`, `gamma`, `tau`.
    Truncated,
    /// ℓ1 approximation under the sphere marginal; uses `d`, `tau`.
    Sphere,
    /// ℓ1 approximation under the strip density; uses `d`, `gamma`, `theta`, `tau`.
    Strip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyProfile {
    Full,
    Quick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub d: usize,
    pub eta: f64,
    pub mu: f64,
    pub eps: f64,
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
    pub a: f64,

    pub noise: Noise,
    /// Flip probability for `rcn`, in-band flip rate for `band_flip`.
    pub noise_rate: f64,
    pub band_width: f64,

    pub train_samples: usize,
    pub test_samples: u64,
    /// Polynomial degree for `kkms`.
    pub degree: usize,
    /// Labeled CSV to train `kkms` on instead of a synthetic sample.
    pub train: Option<PathBuf>,

    pub c_gamma: f64,
    pub c_beta: f64,
    pub c_r: f64,
    pub alpha0: f64,
    pub strip_samples: Option<usize>,
    pub strip_budget: u64,
    pub validation_samples: Option<usize>,
    pub selection: Selection,
    /// Run `ptas` through the `η = kε` sweep.
    pub approx_ratio: bool,

    pub localization_rounds: usize,
    pub samples_per_round: usize,
    pub radius_scale: f64,
    pub hinge_iterations: usize,

    pub signpoly_kind: SignpolyKind,
    pub density_points: usize,
    pub verify_profile: VerifyProfile,
    /// JSON file with a full verification matrix; overrides `verify_profile`.
    pub verify_config: Option<PathBuf>,

    pub calibrate_c_r: Vec<f64>,
    pub calibrate_c_gamma: Vec<f64>,
    pub calibrate_seeds: u64,

    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ptas = PtasConfig::default();
        let loc = BandScheduleConfig::default();
        Self {
            seed: 0,
            d: 8,
            eta: 0.12,
            mu: 0.5,
            eps: 0.05,
            tau: 0.1,
            gamma: 0.1,
            theta: 0.5,
            a: 1.0,
            noise: Noise::Rcn,
            noise_rate: 0.05,
            band_width: 0.1,
            train_samples: 5000,
            test_samples: 100_000,
            degree: 7,
            train: None,
            c_gamma: ptas.constants.c_gamma,
            c_beta: ptas.constants.c_beta,
            c_r: ptas.constants.c_r,
            alpha0: ptas.constants.alpha0,
            strip_samples: None,
            strip_budget: ptas.strip_budget,
            validation_samples: None,
            selection: Selection::Validation,
            approx_ratio: false,
            localization_rounds: loc.rounds,
            samples_per_round: loc.samples_per_round,
            radius_scale: loc.radius_scale,
            hinge_iterations: loc.hinge_iterations,
            signpoly_kind: SignpolyKind::Truncated,
            density_points: 2001,
            verify_profile: VerifyProfile::Full,
            verify_config: None,
            calibrate_c_r: vec![0.1, 0.2, 0.25],
            calibrate_c_gamma: vec![1.0, 2.0, 4.0],
            calibrate_seeds: 3,
            out: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path} is not a JSON object")]
    NotObject { path: PathBuf },
    #[error("bad config: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ExperimentConfig {
    /// Merges `file` (if any) and then `overrides` over the defaults.
    pub fn load(file: Option<&Path>, overrides: Map<String, Value>) -> Result<Self, ConfigError> {
        let mut merged = match serde_json::to_value(Self::default())? {
            Value::Object(m) => m,
            _ => unreachable!("config serializes to an object"),
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => merged.extend(m),
                _ => {
                    return Err(ConfigError::NotObject {
                        path: path.to_path_buf(),
                    })
                }
            }
        }
        merged.extend(overrides);
        Ok(serde_json::from_value(Value::Object(merged))?)
    }

    pub fn constants(&self) -> PtasConstants {
        PtasConstants {
            c_gamma: self.c_gamma,
            c_beta: self.c_beta,
            c_r: self.c_r,
            alpha0: self.alpha0,
        }
    }

    pub fn localization(&self) -> BandScheduleConfig {
        BandScheduleConfig {
            rounds: self.localization_rounds,
            samples_per_round: self.samples_per_round,
            radius_scale: self.radius_scale,
            hinge_iterations: self.hinge_iterations,
            ..BandScheduleConfig::default()
        }
    }

    pub fn ptas(&self) -> PtasConfig {
        PtasConfig {
            constants: self.constants(),
            localization: self.localization(),
            regression: RegressionOptions::default(),
            strip_samples: self.strip_samples,
            strip_budget: self.strip_budget,
            validation_samples: self.validation_samples,
            selection: self.selection,
            seed: rng::child_seed(self.seed, 4),
        }
    }

    /// The target `w*` is drawn from the seed so runs are reproducible.
    pub fn noise_model(&self) -> halfspace_core::Result<NoiseModel> {
        let target = UnitVector::random(self.d, &mut rng::stream(self.seed, 1))?;
        let kind = match self.noise {
            Noise::Realizable => NoiseKind::Realizable,
            Noise::Rcn => NoiseKind::Rcn { p: self.noise_rate },
            Noise::BandFlip => NoiseKind::BandFlip {
                width: self.band_width,
                rate: self.noise_rate,
            },
        };
        NoiseModel::new(kind, target)
    }

    pub fn oracle_seed(&self) -> u64 {
        rng::child_seed(self.seed, 2)
    }

    pub fn test_seed(&self) -> u64 {
        rng::child_seed(self.seed, 3)
    }
}
