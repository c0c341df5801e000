//! Band localization: a crude averaging start refined by hinge-loss
//! minimization on shrinking bands around the current direction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, UnitVector};
use crate::oracle::{ExampleSource, Oracle};
use crate::regression::LabeledSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandScheduleConfig {
    /// Upper limit on refinement rounds; the schedule may use fewer.
    pub rounds: usize,
    pub initial_band: f64,
    pub shrink: f64,
    /// Explicit radius per round. When empty, round `k` uses
    /// `radius_scale · 2^{-k}`.
    pub constraint_radius_schedule: Vec<f64>,
    pub radius_scale: f64,
    pub samples_per_round: usize,
    /// Unlabeled draws allowed per round.
    pub draw_budget: u64,
    pub hinge_iterations: usize,
    /// A round collecting fewer in-band points than this ends the schedule.
    pub min_band_points: usize,
}

impl Default for BandScheduleConfig {
    fn default() -> Self {
        Self {
            rounds: 12,
            initial_band: 1.0,
            shrink: 0.5,
            constraint_radius_schedule: Vec::new(),
            radius_scale: 0.3,
            samples_per_round: 1000,
            draw_budget: 1_000_000,
            hinge_iterations: 1000,
            min_band_points: 50,
        }
    }
}

impl BandScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(invalid("band schedule needs at least one round"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.initial_band > 0.0) || !(self.radius_scale > 0.0) {
            return Err(invalid("initial band and radius scale must be positive"));
        }
        if self.constraint_radius_schedule.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("all constraint radii must be positive"));
        }
        if self.samples_per_round == 0 || self.hinge_iterations == 0 {
            return Err(invalid("samples_per_round and hinge_iterations must be positive"));
        }
        Ok(())
    }

    pub fn band(&self, k: usize) -> f64 {
        self.initial_band * self.shrink.powi(k as i32)
    }

    /// Radius for refinement round `k ≥ 1`.
    pub fn radius(&self, k: usize) -> f64 {
        match self.constraint_radius_schedule.get(k - 1) {
            Some(&r) => r,
            None if !self.constraint_radius_schedule.is_empty() => {
                *self.constraint_radius_schedule.last().unwrap()
            }
            None => self.radius_scale * 0.5f64.powi(k as i32),
        }
    }

    /// Rounds used at noise level `eta`: enough for the band to shrink to
    /// about `eta`, capped by `rounds`.
    pub fn rounds_for(&self, eta: f64) -> usize {
        let want = ((1.0 / eta).log2() / (1.0 / self.shrink).log2()).ceil().max(0.0) as usize + 1;
        want.min(self.rounds)
    }
}

pub fn average_initializer(sample: &LabeledSample) -> Result<UnitVector> {
    let d = sample
        .dimension()
        .ok_or_else(|| Error::DegenerateSample("empty sample".into()))?;
    let mut sum = vec![0.0; d];
    for (p, &y) in sample.points().iter().zip(sample.labels()) {
        for (s, x) in sum.iter_mut().zip(p.as_slice()) {
            *s += f64::from(y) * x;
        }
    }
    UnitVector::normalize(sum).map_err(|_| Error::DegenerateSample("Σ y_i x_i vanishes".into()))
}

/// Mean of `(1 − y⟨w, x⟩/band)_+`.
fn hinge(sample: &LabeledSample, w: &[f64], band: f64) -> f64 {
    let total: f64 = sample
        .points()
        .iter()
        .zip(sample.labels())
        .map(|(p, &y)| (1.0 - f64::from(y) * dot(w, p.as_slice()) / band).max(0.0))
        .sum();
    total / sample.len() as f64
}

/// Euclidean projection onto `{‖v‖ ≤ 1} ∩ {‖v − c‖ ≤ radius}` for unit `c`.
fn project(v: &mut [f64], c: &[f64], radius: f64) {
    let norm = dot(v, v).sqrt();
    let dist = v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if norm <= 1.0 && dist <= radius {
        return;
    }
    if radius <= 0.0 {
        v.copy_from_slice(c);
        return;
    }
    // onto the unit ball alone
    if norm > 1.0 {
        let u: Vec<f64> = v.iter().map(|a| a / norm).collect();
        let du = u.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if du <= radius {
            v.copy_from_slice(&u);
            return;
        }
    }
    // onto the radius ball alone
    if dist > radius {
        let u: Vec<f64> = v
            .iter()
            .zip(c)
            .map(|(a, b)| b + (a - b) * radius / dist)
            .collect();
        if dot(&u, &u) <= 1.0 {
            v.copy_from_slice(&u);
            return;
        }
    }
    // both constraints active: the circle ⟨x, c⟩ = h, ‖x‖ = 1
    let h = 1.0 - 0.5 * radius * radius;
    let along = dot(v, c);
    let mut perp: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - along * b).collect();
    let pn = dot(&perp, &perp).sqrt();
    if pn < 1e-300 {
        // v lies on the axis; any orthogonal direction is optimal
        let i = c
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        perp.iter_mut().for_each(|p| *p = 0.0);
        perp[i] = 1.0;
        let a = perp[i] * c[i];
        perp.iter_mut().zip(c).for_each(|(p, b)| *p -= a * b);
        let n = dot(&perp, &perp).sqrt();
        perp.iter_mut().for_each(|p| *p /= n);
    } else {
        perp.iter_mut().for_each(|p| *p /= pn);
    }
    let s = (1.0 - h * h).max(0.0).sqrt();
    for ((x, b), p) in v.iter_mut().zip(c).zip(&perp) {
        *x = h * b + s * p;
    }
}

/// Projected subgradient descent on the band hinge loss over
/// `{‖w − w_prev‖ ≤ radius, ‖w‖ ≤ 1}`, normalized at the end.
pub fn hinge_minimize_in_band(
    sample: &LabeledSample,
    w_prev: &UnitVector,
    band: f64,
    radius: f64,
    iterations: usize,
) -> Result<UnitVector> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("no points in band".into()));
    }
    if !(band > 0.0) || !(radius >= 0.0) {
        return Err(invalid(format!("band must be positive and radius non-negative, got {band}, {radius}")));
    }
    if sample.dimension() != Some(w_prev.dim()) {
        return Err(invalid("band sample dimension differs from w_prev"));
    }
    if radius == 0.0 {
        return Ok(w_prev.clone());
    }
    let c = w_prev.as_slice();
    let d = c.len();
    let n = sample.len() as f64;
    let diameter = (2.0 * radius).min(2.0);
    let mut w = c.to_vec();
    let mut avg = vec![0.0; d];
    let mut best = (hinge(sample, &w, band), w.clone());
    let mut g = vec![0.0; d];
    let mut steps = 0;
    for t in 0..iterations {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut obj = 0.0;
        for (p, &y) in sample.points().iter().zip(sample.labels()) {
            let m = f64::from(y) * dot(&w, p.as_slice()) / band;
            if m < 1.0 {
                obj += 1.0 - m;
                let s = f64::from(y) / (band * n);
                g.iter_mut().zip(p.as_slice()).for_each(|(gi, x)| *gi -= s * x);
            }
        }
        obj /= n;
        if obj < best.0 {
            best = (obj, w.clone());
        }
        let gn = dot(&g, &g).sqrt();
        if gn == 0.0 {
            break;
        }
        let step = diameter / (gn * ((t + 1) as f64).sqrt());
        w.iter_mut().zip(&g).for_each(|(wi, gi)| *wi -= step * gi);
        project(&mut w, c, radius);
        avg.iter_mut().zip(&w).for_each(|(a, wi)| *a += (wi - *a) / (t + 1) as f64);
        steps += 1;
    }
    let avg_obj = if steps > 0 { hinge(sample, &avg, band) } else { f64::INFINITY };
    let fin_obj = hinge(sample, &w, band);
    let chosen = if avg_obj <= best.0 && avg_obj <= fin_obj {
        avg
    } else if fin_obj < best.0 {
        w
    } else {
        best.1
    };
    Ok(UnitVector::normalize(chosen).unwrap_or_else(|_| w_prev.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub band: f64,
    pub radius: f64,
    pub points: usize,
    pub draws: u64,
    pub w: UnitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblOutcome {
    pub w: UnitVector,
    /// Direction after the averaging start.
    pub initial: UnitVector,
    pub rounds: Vec<RoundRecord>,
    pub labels_used: u64,
    pub draws_used: u64,
    /// True when a band collected too few points and the schedule stopped.
    pub stopped_early: bool,
}

pub fn abl_learn<S: ExampleSource>(
    oracle: &mut Oracle<S>,
    eta: f64,
    cfg: &BandScheduleConfig,
) -> Result<AblOutcome> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("η must lie in (0, 1], got {eta}")));
    }
    cfg.validate()?;
    let labels0 = oracle.labels_revealed();
    let draws0 = oracle.draws();
    let first = oracle.labeled(cfg.samples_per_round)?;
    let initial = average_initializer(&first)?;
    let mut w = initial.clone();
    let mut rounds = Vec::new();
    let mut stopped_early = false;
    for k in 1..=cfg.rounds_for(eta) {
        let band = cfg.band(k);
        let radius = cfg.radius(k);
        let before = oracle.draws();
        let center = w.clone();
        let sample = oracle.collect(cfg.samples_per_round, cfg.draw_budget, |x| {
            center.dot(x).abs() <= band
        })?;
        if sample.len() < cfg.min_band_points.max(1) {
            stopped_early = true;
            break;
        }
        w = hinge_minimize_in_band(&sample, &w, band, radius, cfg.hinge_iterations)?;
        rounds.push(RoundRecord {
            band,
            radius,
            points: sample.len(),
            draws: oracle.draws() - before,
            w: w.clone(),
        });
    }
    Ok(AblOutcome {
        w,
        initial,
        rounds,
        labels_used: oracle.labels_revealed() - labels0,
        draws_used: oracle.draws() - draws0,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{label_oracle, NoiseKind, NoiseModel};
    use crate::geometry::{angle, disagreement_mass, sample_uniform_sphere};
    use crate::rng;
    use proptest::prelude::*;

    fn realizable(d: usize, n: usize, seed: u64, w: &UnitVector) -> LabeledSample {
        let pts = sample_uniform_sphere(d, n, seed).unwrap();
        let labels = pts.iter().map(|p| if w.dot(p.as_slice()) > 0.0 { 1 } else { -1 }).collect();
        LabeledSample::new(pts, labels).unwrap()
    }

    #[test]
    fn averaging_start() {
        let w = UnitVector::normalize(vec![1.0, -2.0, 0.5]).unwrap();
        let s = realizable(3, 10_000, 1, &w);
        let v = average_initializer(&s).unwrap();
        assert!(angle(&v, &w).unwrap() <= 0.15);

        let flipped: Vec<i8> = s.labels().iter().map(|y| -y).collect();
        let f = average_initializer(&LabeledSample::new(s.points().to_vec(), flipped).unwrap()).unwrap();
        for (a, b) in f.as_slice().iter().zip(v.as_slice()) {
            assert!((a + b).abs() < 1e-12);
        }

        let x = UnitVector::normalize(vec![0.3, 0.4, 0.5]).unwrap();
        let one = LabeledSample::new(vec![x.clone()], vec![1]).unwrap();
        let got = average_initializer(&one).unwrap();
        for (a, b) in got.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }

        let pair = LabeledSample::new(vec![x.clone(), x], vec![1, -1]).unwrap();
        assert!(matches!(average_initializer(&pair), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn hinge_step_improves_angle() {
        let mut r = rng::stream(3, 0);
        for trial in 0..20 {
            let w_star = UnitVector::random(10, &mut r).unwrap();
            let w_prev = w_star.at_angle(0.2, &mut r).unwrap();
            let pool = realizable(10, 20_000, 100 + trial, &w_star);
            let (pts, labels): (Vec<_>, Vec<_>) = pool
                .points()
                .iter()
                .zip(pool.labels())
                .filter(|(p, _)| w_prev.dot(p.as_slice()).abs() <= 0.3)
                .map(|(p, &y)| (p.clone(), y))
                .unzip();
            let band = LabeledSample::new(pts, labels).unwrap();
            let w = hinge_minimize_in_band(&band, &w_prev, 0.3, 0.4, 1000).unwrap();
            let before = angle(&w_prev, &w_star).unwrap();
            let after = angle(&w, &w_star).unwrap();
            assert!(after < before, "trial {trial}: {after} ≥ {before}");
        }
    }

    #[test]
    fn zero_radius_and_positive_labels() {
        let w_prev = UnitVector::basis(4, 0).unwrap();
        let pts = sample_uniform_sphere(4, 500, 2).unwrap();
        let band: Vec<UnitVector> = pts
            .into_iter()
            .filter(|p| p.as_slice()[0].abs() <= 0.5)
            .collect();
        let s = LabeledSample::new(band.clone(), vec![1; band.len()]).unwrap();
        assert_eq!(hinge_minimize_in_band(&s, &w_prev, 0.5, 0.0, 100).unwrap(), w_prev);
        let w = hinge_minimize_in_band(&s, &w_prev, 0.5, 2.0, 1000).unwrap();
        let mut mean = vec![0.0; 4];
        for p in &band {
            mean.iter_mut().zip(p.as_slice()).for_each(|(m, x)| *m += x);
        }
        assert!(w.dot(&mean) > 0.0);
        let empty = LabeledSample::new(vec![], vec![]).unwrap();
        assert!(matches!(
            hinge_minimize_in_band(&empty, &w_prev, 0.5, 1.0, 10),
            Err(Error::DegenerateSample(_))
        ));
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_nearest(
            v in prop::collection::vec(-3.0f64..3.0, 3),
            c in prop::collection::vec(-1.0f64..1.0, 3),
            radius in 0.01f64..2.5,
            probes in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 50),
        ) {
            let Ok(c) = UnitVector::normalize(c) else { return Ok(()); };
            let c = c.as_slice();
            let mut p = v.clone();
            project(&mut p, c, radius);
            let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(dot(&p, &p).sqrt() <= 1.0 + 1e-9);
            prop_assert!(dist(&p, c) <= radius + 1e-9);
            let dp = dist(&p, &v);
            for q in probes {
                if dot(&q, &q) <= 1.0 && dist(&q, c) <= radius {
                    prop_assert!(dp <= dist(&q, &v) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn schedule_shape() {
        let cfg = BandScheduleConfig::default();
        assert_eq!(cfg.band(0), 1.0);
        assert_eq!(cfg.band(3), 0.125);
        assert!((cfg.radius(1) - 0.15).abs() < 1e-15);
        assert_eq!(cfg.rounds_for(0.5), 2);
        assert_eq!(cfg.rounds_for(1.0), 1);
        let bad = BandScheduleConfig { shrink: 1.0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn abl_realizable() {
        let mut r = rng::stream(5, 0);
        let w_star = UnitVector::random(5, &mut r).unwrap();
        let model = NoiseModel::new(NoiseKind::Realizable, w_star.clone()).unwrap();
        let mut oracle = label_oracle(model, 6);
        let out = abl_learn(&mut oracle, 0.01, &BandScheduleConfig::default()).unwrap();
        assert!(disagreement_mass(&out.w, &w_star).unwrap() <= 0.02);
        assert_eq!(out.labels_used, oracle.labels_revealed());
    }
}
