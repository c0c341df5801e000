//! The end-to-end learner: localize, restrict to a strip around the
//! localized direction, run polynomial regression inside the strip, and
//! combine.

use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evaluation::Classifier;
use crate::geometry::{StripSpec, UnitVector};
use crate::localization::{abl_learn, AblOutcome, BandScheduleConfig};
use crate::oracle::{ExampleSource, Oracle};
use crate::regression::{
    kkms_learn_with, label_sign, monomial_count, LabeledSample, PolynomialClassifier,
    RegressionOptions,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PtasConstants {
    pub c_gamma: f64,
    pub c_beta: f64,
    pub c_r: f64,
    pub alpha0: f64,
}

impl Default for PtasConstants {
    fn default() -> Self {
        Self {
            c_gamma: 2.0,
            c_beta: 1.0,
            c_r: 0.2,
            alpha0: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtasParams {
    pub degree: usize,
    pub regression_slack: f64,
    pub strip_half_width: f64,
    pub constants: PtasConstants,
    /// True when η is above `1/(2(1+α₀))` and localization is skipped.
    pub high_noise: bool,
}

/// `log(1/μ)` guarded as `log(e + 1/μ)`.
fn guarded_log(mu: f64) -> f64 {
    (E + 1.0 / mu).ln()
}

pub fn choose_parameters(eta: f64, mu: f64, d: usize, constants: PtasConstants) -> Result<PtasParams> {
    if !(eta > 0.0 && eta <= 1.0) || !(mu > 0.0 && mu <= 1.0) {
        return Err(invalid(format!("η and μ must lie in (0, 1], got {eta}, {mu}")));
    }
    if d < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {d}")));
    }
    let PtasConstants {
        c_gamma,
        c_beta,
        c_r,
        alpha0,
    } = constants;
    if !(c_gamma > 0.0 && c_beta > 0.0 && c_r > 0.0 && alpha0 > 1.0) {
        return Err(invalid("PTAS constants must be positive with α₀ > 1"));
    }
    let l = guarded_log(mu);
    let degree_from = |power: i32| ((c_r * l.powi(power) / (mu * mu)).ceil() as usize).max(1);
    if eta > 1.0 / (2.0 * (1.0 + alpha0)) {
        Ok(PtasParams {
            degree: degree_from(2),
            regression_slack: mu * eta / 2.0,
            strip_half_width: 1.0,
            constants,
            high_noise: true,
        })
    } else {
        let gamma = (c_gamma * eta * l.sqrt() / (d as f64).sqrt()).min(1.0);
        Ok(PtasParams {
            degree: degree_from(3),
            regression_slack: mu / (4.0 * c_beta * l.sqrt()),
            strip_half_width: gamma,
            constants,
            high_noise: false,
        })
    }
}

/// `h_w` outside the strip, the polynomial classifier inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedClassifier {
    pub halfspace: UnitVector,
    pub strip: StripSpec,
    pub inner: PolynomialClassifier,
}

impl Classifier for CombinedClassifier {
    fn predict(&self, x: &[f64]) -> i8 {
        if self.strip.contains(x) {
            self.inner.predict(x)
        } else {
            label_sign(self.halfspace.dot(x))
        }
    }
}

/// Keeps the first `m` drawn points that land in `strip`; labels are
/// revealed only for those.
pub fn strip_rejection_sample<S: ExampleSource>(
    oracle: &mut Oracle<S>,
    strip: &StripSpec,
    m: usize,
    budget: u64,
) -> Result<LabeledSample> {
    if m == 0 || budget < m as u64 {
        return Err(invalid(format!("need 1 ≤ m ≤ budget, got m = {m}, budget = {budget}")));
    }
    oracle.filtered(m, budget, |x| strip.contains(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Evaluate both hypotheses on a fresh sample and keep the better one.
    Validation,
    /// Return `h_w` or the combined classifier with probability 1/2 each.
    CoinFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PtasConfig {
    pub constants: PtasConstants,
    pub localization: BandScheduleConfig,
    pub regression: RegressionOptions,
    /// Strip sample size; `None` means `max(50·C(d+r, r), ⌈1/β²⌉)`.
    pub strip_samples: Option<usize>,
    pub strip_budget: u64,
    /// Validation sample size; `None` means `⌈10/η²⌉`.
    pub validation_samples: Option<usize>,
    pub selection: Selection,
    /// Seeds the coin flip.
    pub seed: u64,
}

impl Default for PtasConfig {
    fn default() -> Self {
        Self {
            constants: PtasConstants::default(),
            localization: BandScheduleConfig::default(),
            regression: RegressionOptions::default(),
            strip_samples: None,
            strip_budget: 1_000_000,
            validation_samples: None,
            selection: Selection::Validation,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chosen {
    Halfspace,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtasReport {
    pub eta: f64,
    pub mu: f64,
    pub dimension: usize,
    pub params: PtasParams,
    /// Labels consumed by localization and the strip sample.
    pub labels_used: u64,
    pub abl_labels: u64,
    pub strip_labels: u64,
    /// Labels of the selection sample, reported separately.
    pub validation_labels: u64,
    pub draws_used: u64,
    pub strip_draws: u64,
    pub strip_fit_threshold: f64,
    pub strip_train_error: f64,
    pub validation_error_halfspace: Option<f64>,
    pub validation_error_combined: Option<f64>,
    pub chosen: Chosen,
    pub halfspace: UnitVector,
    pub localization_rounds: usize,
    pub localization_stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtasOutcome {
    pub combined: CombinedClassifier,
    pub chosen: Chosen,
    pub report: PtasReport,
}

impl Classifier for PtasOutcome {
    fn predict(&self, x: &[f64]) -> i8 {
        match self.chosen {
            Chosen::Halfspace => self.combined.halfspace.predict(x),
            Chosen::Combined => self.combined.predict(x),
        }
    }
}

pub fn default_strip_samples(d: usize, params: &PtasParams) -> usize {
    let features = monomial_count(d, params.degree).saturating_mul(50);
    let slack = (1.0 / (params.regression_slack * params.regression_slack)).ceil() as usize;
    features.max(slack)
}

fn error_on(clf: &dyn Classifier, sample: &LabeledSample) -> f64 {
    let wrong = sample
        .points()
        .iter()
        .zip(sample.labels())
        .filter(|(p, &y)| clf.predict(p.as_slice()) != y)
        .count();
    wrong as f64 / sample.len() as f64
}

pub fn ptas_learn<S: ExampleSource>(
    oracle: &mut Oracle<S>,
    eta: f64,
    mu: f64,
    cfg: &PtasConfig,
) -> Result<PtasOutcome> {
    let d = oracle.dimension();
    let params = choose_parameters(eta, mu, d, cfg.constants)?;
    let labels0 = oracle.labels_revealed();
    let draws0 = oracle.draws();

    // step 1: localization, skipped in the high-noise branch where γ = 1
    let abl: Option<AblOutcome> = if params.high_noise {
        None
    } else {
        Some(abl_learn(oracle, eta, &cfg.localization)?)
    };
    let abl_labels = oracle.labels_revealed() - labels0;
    let halfspace = match &abl {
        Some(out) => out.w.clone(),
        None => UnitVector::basis(d, 0)?,
    };

    // step 2-3: strip sample and regression inside it
    let strip = StripSpec::new(halfspace.clone(), params.strip_half_width)?;
    let m = cfg.strip_samples.unwrap_or_else(|| default_strip_samples(d, &params));
    let before = (oracle.labels_revealed(), oracle.draws());
    let strip_sample = strip_rejection_sample(oracle, &strip, m, cfg.strip_budget.max(m as u64))?;
    let strip_labels = oracle.labels_revealed() - before.0;
    let strip_draws = oracle.draws() - before.1;
    let inner = kkms_learn_with(&strip_sample, params.degree, &cfg.regression)?;
    let strip_train_error = inner.empirical_error(&strip_sample);
    let combined = CombinedClassifier {
        halfspace: halfspace.clone(),
        strip,
        inner,
    };
    let labels_used = oracle.labels_revealed() - labels0;

    // step 4: selection
    let (chosen, val_h, val_c, validation_labels) = if params.high_noise {
        // the strip is the whole sphere, so h_w never predicts
        (Chosen::Combined, None, None, 0)
    } else {
        match cfg.selection {
            Selection::Validation => {
                let n = cfg
                    .validation_samples
                    .unwrap_or_else(|| (10.0 / (eta * eta)).ceil() as usize);
                let val = oracle.labeled(n.max(1))?;
                let eh = error_on(&halfspace, &val);
                let ec = error_on(&combined, &val);
                // ties keep the halfspace
                let chosen = if ec < eh { Chosen::Combined } else { Chosen::Halfspace };
                (chosen, Some(eh), Some(ec), val.len() as u64)
            }
            Selection::CoinFlip => {
                let heads = rng::stream(cfg.seed, 0x51).random::<bool>();
                let chosen = if heads { Chosen::Halfspace } else { Chosen::Combined };
                (chosen, None, None, 0)
            }
        }
    };

    let report = PtasReport {
        eta,
        mu,
        dimension: d,
        params,
        labels_used,
        abl_labels,
        strip_labels,
        validation_labels,
        draws_used: oracle.draws() - draws0,
        strip_draws,
        strip_fit_threshold: combined.inner.threshold,
        strip_train_error,
        validation_error_halfspace: val_h,
        validation_error_combined: val_c,
        chosen,
        halfspace,
        localization_rounds: abl.as_ref().map_or(0, |a| a.rounds.len()),
        localization_stopped_early: abl.as_ref().is_some_and(|a| a.stopped_early),
    };
    Ok(PtasOutcome {
        combined,
        chosen,
        report,
    })
}

/// One run of the noise-tolerant learner inside
/// [`noise_tolerance_to_approx_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub eta: f64,
    pub validation_error: f64,
}

#[derive(Debug, Clone)]
pub struct ApproxRatioOutcome<C> {
    pub best: C,
    pub best_eta: f64,
    pub candidates: Vec<Candidate>,
}

/// Runs `learner` at `η = kε` for `k = 1, …, ⌈1/ε⌉` and keeps the
/// hypothesis with the lowest error on `validation` (earliest on ties).
pub fn noise_tolerance_to_approx_ratio<C, F>(
    mut learner: F,
    validation: &LabeledSample,
    eps: f64,
) -> Result<ApproxRatioOutcome<C>>
where
    C: Classifier,
    F: FnMut(f64) -> Result<C>,
{
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("ε must lie in (0, 1], got {eps}")));
    }
    if validation.is_empty() {
        return Err(invalid("validation sample is empty"));
    }
    let runs = (1.0 / eps - 1e-9).ceil().max(1.0) as usize;
    let mut best: Option<(C, f64, f64)> = None;
    let mut candidates = Vec::with_capacity(runs);
    for k in 1..=runs {
        let eta = (k as f64 * eps).min(1.0);
        let clf = learner(eta)?;
        let err = error_on(&clf, validation);
        candidates.push(Candidate {
            eta,
            validation_error: err,
        });
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((clf, eta, err));
        }
    }
    let (best, best_eta, _) = best.expect("at least one run");
    Ok(ApproxRatioOutcome {
        best,
        best_eta,
        candidates,
    })
}
