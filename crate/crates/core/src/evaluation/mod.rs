//! Noise models, error estimates and the verification harness.

pub mod verify;

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{angle, fill_uniform_sphere, UnitVector};
use crate::oracle::{ExampleSource, Oracle};
use crate::regression::{label_sign, PolynomialClassifier};
use crate::rng::{self, par_chunks};

/// Anything that maps a point to a ±1 label.
pub trait Classifier: Sync {
    fn predict(&self, x: &[f64]) -> i8;
}

/// The halfspace `h_w(x) = sign(⟨w, x⟩)`.
impl Classifier for UnitVector {
    fn predict(&self, x: &[f64]) -> i8 {
        label_sign(self.dot(x))
    }
}

impl Classifier for PolynomialClassifier {
    fn predict(&self, x: &[f64]) -> i8 {
        PolynomialClassifier::predict(self, x)
    }
}

impl<F: Fn(&[f64]) -> i8 + Sync> Classifier for F {
    fn predict(&self, x: &[f64]) -> i8 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Realizable,
    /// Each label flipped independently with probability `p`.
    Rcn { p: f64 },
    /// Labels flipped with probability `rate` inside `|⟨w*, x⟩| ≤ width`.
    BandFlip { width: f64, rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub target: UnitVector,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, target: UnitVector) -> Result<Self> {
        match kind {
            NoiseKind::Realizable => {}
            NoiseKind::Rcn { p } => {
                if !(0.0..0.5).contains(&p) {
                    return Err(invalid(format!("rcn flip rate must lie in [0, 1/2), got {p}")));
                }
            }
            NoiseKind::BandFlip { width, rate } => {
                if !(width > 0.0 && width <= 1.0) || !(0.0..=1.0).contains(&rate) {
                    return Err(invalid(format!(
                        "band_flip needs width in (0, 1] and rate in [0, 1], got {width}, {rate}"
                    )));
                }
            }
        }
        Ok(Self { kind, target })
    }

    pub fn dimension(&self) -> usize {
        self.target.dim()
    }

    /// Noisy label of `x`, consuming one uniform variate from `rng` for the
    /// noisy kinds.
    pub fn label<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> i8 {
        let margin = self.target.dot(x);
        let clean = label_sign(margin);
        let flip = match self.kind {
            NoiseKind::Realizable => false,
            NoiseKind::Rcn { p } => rng.random::<f64>() < p,
            NoiseKind::BandFlip { width, rate } => {
                let u = rng.random::<f64>();
                margin.abs() <= width && u < rate
            }
        };
        if flip {
            -clean
        } else {
            clean
        }
    }
}

/// Draws `x` uniform on the sphere and labels it through a [`NoiseModel`].
#[derive(Debug, Clone)]
pub struct ModelSource {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl ModelSource {
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }
}

impl ExampleSource for ModelSource {
    fn dimension(&self) -> usize {
        self.model.dimension()
    }

    fn next_example(&mut self) -> Option<(UnitVector, i8)> {
        let mut x = vec![0.0; self.model.dimension()];
        fill_uniform_sphere(&mut self.rng, &mut x);
        let y = self.model.label(&x, &mut self.rng);
        Some((UnitVector::from_unit(x).expect("sphere sample is unit length"), y))
    }
}

pub fn label_oracle(model: NoiseModel, seed: u64) -> Oracle<ModelSource> {
    Oracle::new(ModelSource {
        model,
        rng: rng::stream(seed, 0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, n: u64) -> Self {
        let mean = errors as f64 / n as f64;
        Self {
            mean,
            stderr: (mean * (1.0 - mean) / n as f64).sqrt(),
            n,
        }
    }
}

/// Population error of `h_w` under a model with a closed form.
pub fn exact_halfspace_error(model: &NoiseModel, w: &UnitVector) -> Result<f64> {
    let dis = angle(w, &model.target)? / PI;
    match model.kind {
        NoiseKind::Realizable => Ok(dis),
        NoiseKind::Rcn { p } => Ok(p + (1.0 - 2.0 * p) * dis),
        NoiseKind::BandFlip { .. } => Err(Error::Unsupported(
            "no closed-form error under band_flip noise; use Monte Carlo".into(),
        )),
    }
}

/// Error of `clf` over `n` fresh draws from `model`.
pub fn mc_error(clf: &dyn Classifier, model: &NoiseModel, n: u64, seed: u64) -> Result<ErrorEstimate> {
    if n == 0 {
        return Err(invalid("Monte Carlo sample size must be positive"));
    }
    let d = model.dimension();
    let errors: u64 = par_chunks(n as usize, seed, |rng, range| {
        let mut x = vec![0.0; d];
        range
            .filter(|_| {
                fill_uniform_sphere(rng, &mut x);
                let y = model.label(&x, rng);
                clf.predict(&x) != y
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    Ok(ErrorEstimate::from_counts(errors, n))
}
