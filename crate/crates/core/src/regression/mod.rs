//! ℓ1 polynomial regression and 0-1 threshold search.

mod basis;
mod lad;

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::UnitVector;

pub use basis::{monomial_count, MonomialBasis, DEFAULT_FEATURE_CAP};
pub use lad::{lad_solve, LadOptions, LadSolution};

/// `sign` with `sign(0) = −1`, as a label.
pub fn label_sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    points: Vec<UnitVector>,
    labels: Vec<i8>,
}

impl LabeledSample {
    pub fn new(points: Vec<UnitVector>, labels: Vec<i8>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| l.abs() != 1) {
            return Err(invalid(format!("label {l} is not ±1")));
        }
        if let Some(first) = points.first() {
            let d = first.dim();
            if points.iter().any(|p| p.dim() != d) {
                return Err(invalid("points have mixed dimensions"));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the points, `None` for an empty sample.
    pub fn dimension(&self) -> Option<usize> {
        self.points.first().map(UnitVector::dim)
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Reads `x1,…,xd,y` rows. Rows that are not unit length are normalized.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("bad CSV field: {e}")))?;
            let Some((&y, x)) = vals.split_last() else {
                return Err(invalid("empty CSV row"));
            };
            let label = match y {
                v if v == 1.0 => 1,
                v if v == -1.0 => -1,
                v => return Err(invalid(format!("label {v} is not ±1"))),
            };
            points.push(UnitVector::from_unit(x.to_vec()).or_else(|_| UnitVector::normalize(x.to_vec()))?);
            labels.push(label);
        }
        Self::new(points, labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let d = self.dimension().unwrap_or(0);
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (p, &y) in self.points.iter().zip(&self.labels) {
            let mut row: Vec<String> = p.as_slice().iter().map(|v| format!("{v:?}")).collect();
            row.push(if y > 0 { "1".into() } else { "-1".into() });
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A polynomial in `d` variables of degree ≤ `r`, stored densely over the
/// graded-lex monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariatePolynomial {
    basis: MonomialBasis,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dimension: usize,
    degree: usize,
    terms: Vec<Term>,
}

impl MultivariatePolynomial {
    pub fn from_dense(d: usize, r: usize, coeffs: Vec<f64>) -> Result<Self> {
        let basis = MonomialBasis::new(d, r, usize::MAX)?;
        if coeffs.len() != basis.len() {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn from_terms(d: usize, r: usize, terms: &[Term]) -> Result<Self> {
        let basis = MonomialBasis::new(d, r, usize::MAX)?;
        let index: std::collections::HashMap<Vec<u32>, usize> =
            (0..basis.len()).map(|i| (basis.exponents(i), i)).collect();
        let mut coeffs = vec![0.0; basis.len()];
        for t in terms {
            let &i = index.get(&t.exponents).ok_or_else(|| {
                invalid(format!("exponents {:?} not in degree-{r} basis on {d} variables", t.exponents))
            })?;
            coeffs[i] += t.coefficient;
        }
        Ok(Self { basis, coeffs })
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn degree(&self) -> usize {
        self.basis.max_degree()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nonzero terms in graded-lex order.
    pub fn terms(&self) -> Vec<Term> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| Term {
                exponents: self.basis.exponents(i),
                coefficient: c,
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.basis.len()];
        self.eval_with(x, &mut buf)
    }

    fn eval_with(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        self.basis.features_into(x, buf);
        buf.iter().zip(&self.coeffs).map(|(f, c)| f * c).sum()
    }

    pub fn eval_many(&self, xs: &[UnitVector]) -> Vec<f64> {
        xs.par_chunks(256)
            .flat_map_iter(|chunk| {
                let mut buf = vec![0.0; self.basis.len()];
                chunk
                    .iter()
                    .map(|x| self.eval_with(x.as_slice(), &mut buf))
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

impl Serialize for MultivariatePolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            dimension: self.dimension(),
            degree: self.degree(),
            terms: self.terms(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultivariatePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = PolyRepr::deserialize(de)?;
        Self::from_terms(r.dimension, r.degree, &r.terms).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialClassifier {
    pub poly: MultivariatePolynomial,
    pub threshold: f64,
}

impl PolynomialClassifier {
    pub fn predict(&self, x: &[f64]) -> i8 {
        label_sign(self.poly.eval(x) - self.threshold)
    }

    pub fn predict_many(&self, xs: &[UnitVector]) -> Vec<i8> {
        self.poly
            .eval_many(xs)
            .into_iter()
            .map(|v| label_sign(v - self.threshold))
            .collect()
    }

    /// Fraction of `sample` misclassified.
    pub fn empirical_error(&self, sample: &LabeledSample) -> f64 {
        if sample.is_empty() {
            return 0.0;
        }
        let wrong = self
            .predict_many(sample.points())
            .iter()
            .zip(sample.labels())
            .filter(|(p, y)| p != y)
            .count();
        wrong as f64 / sample.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionOptions {
    pub feature_cap: usize,
    pub solver: LadOptions,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            feature_cap: DEFAULT_FEATURE_CAP,
            solver: LadOptions::default(),
        }
    }
}

/// Output of [`l1_regression_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct L1Fit {
    pub poly: MultivariatePolynomial,
    /// `(1/m) Σ|P(x_i) − y_i|`.
    pub mean_loss: f64,
    /// Certified distance of `mean_loss` from the optimum.
    pub gap: f64,
    pub iterations: usize,
}

pub fn monomial_features(x: &UnitVector, r: usize) -> Result<Vec<f64>> {
    let b = MonomialBasis::new(x.dim(), r, DEFAULT_FEATURE_CAP)?;
    Ok(b.features(x.as_slice()))
}

pub fn l1_regression(sample: &LabeledSample, r: usize) -> Result<MultivariatePolynomial> {
    l1_regression_with(sample, r, &RegressionOptions::default()).map(|f| f.poly)
}

pub fn l1_regression_with(
    sample: &LabeledSample,
    r: usize,
    opts: &RegressionOptions,
) -> Result<L1Fit> {
    let d = sample
        .dimension()
        .ok_or_else(|| invalid("ℓ1 regression needs at least one example"))?;
    let basis = MonomialBasis::new(d, r, opts.feature_cap)?;
    // Points lie on the sphere, so monomials with x_d² are redundant.
    let cols = basis.sphere_reduced();
    let m = sample.len();
    let p = cols.len();
    let mut rows = vec![0.0; m * p];
    rows.par_chunks_mut(p * 64)
        .enumerate()
        .for_each(|(c, block)| {
            let mut full = vec![0.0; basis.len()];
            for (k, row) in block.chunks_mut(p).enumerate() {
                basis.features_into(sample.points()[c * 64 + k].as_slice(), &mut full);
                for (dst, &j) in row.iter_mut().zip(&cols) {
                    *dst = full[j];
                }
            }
        });
    let phi = DMatrix::from_row_slice(m, p, &rows);
    let y: Vec<f64> = sample.labels().iter().map(|&l| f64::from(l)).collect();
    let sol = lad_solve(&phi, &y, opts.solver)?;
    let mut coeffs = vec![0.0; basis.len()];
    for (&j, &c) in cols.iter().zip(&sol.coefficients) {
        coeffs[j] = c;
    }
    Ok(L1Fit {
        poly: MultivariatePolynomial { basis, coeffs },
        mean_loss: sol.mean_loss,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

/// Threshold `a` minimizing the empirical error of `label_sign(P(x) − a)`.
///
/// Candidates are the midpoints between consecutive distinct values of `P`,
/// a value below all of them, a value above all of them, and 0; ties go to
/// the smallest `|a|`.
pub fn threshold_search(poly: &MultivariatePolynomial, sample: &LabeledSample) -> PolynomialClassifier {
    let values = poly.eval_many(sample.points());
    let threshold = best_threshold(&values, sample.labels());
    PolynomialClassifier {
        poly: poly.clone(),
        threshold,
    }
}

pub(crate) fn best_threshold(values: &[f64], labels: &[i8]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let neg_total = labels.iter().filter(|&&l| l < 0).count();
    let errors_at = |a: f64| {
        values
            .iter()
            .zip(labels)
            .filter(|(v, l)| label_sign(**v - a) != **l)
            .count()
    };
    let lo = values[order[0]];
    let hi = values[order[order.len() - 1]];
    let mut best = (errors_at(0.0), 0.0f64);
    let mut consider = |err: usize, a: f64| {
        if err < best.0 || (err == best.0 && (a.abs(), a) < (best.1.abs(), best.1)) {
            best = (err, a);
        }
    };
    // every value ≤ a predicts −1: the cut after k smallest values errs on
    // the positives below it and the negatives above it
    consider(neg_total, lo - 1.0);
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    for k in 0..order.len() {
        if labels[order[k]] > 0 {
            pos_below += 1;
        } else {
            neg_below += 1;
        }
        let err = pos_below + neg_total - neg_below;
        if k + 1 == order.len() {
            consider(err, hi + 1.0);
        } else {
            let (v, next) = (values[order[k]], values[order[k + 1]]);
            if v < next {
                consider(err, 0.5 * (v + next));
            }
        }
    }
    best.1
}

pub fn kkms_learn(sample: &LabeledSample, r: usize) -> Result<PolynomialClassifier> {
    kkms_learn_with(sample, r, &RegressionOptions::default())
}

pub fn kkms_learn_with(
    sample: &LabeledSample,
    r: usize,
    opts: &RegressionOptions,
) -> Result<PolynomialClassifier> {
    let fit = l1_regression_with(sample, r, opts)?;
    Ok(threshold_search(&fit.poly, sample))
}

/// Mean ℓ1 loss of `poly` against the labels.
pub fn l1_loss(poly: &MultivariatePolynomial, sample: &LabeledSample) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let vals = poly.eval_many(sample.points());
    vals.iter()
        .zip(sample.labels())
        .map(|(v, &y)| (v - f64::from(y)).abs())
        .sum::<f64>()
        / sample.len() as f64
}

impl From<LabeledSample> for (Vec<UnitVector>, Vec<i8>) {
    fn from(s: LabeledSample) -> Self {
        (s.points, s.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform_sphere;
    use proptest::prelude::*;

    fn sample_with(d: usize, n: usize, seed: u64, label: impl Fn(&[f64]) -> i8) -> LabeledSample {
        let pts = sample_uniform_sphere(d, n, seed).unwrap();
        let labels = pts.iter().map(|p| label(p.as_slice())).collect();
        LabeledSample::new(pts, labels).unwrap()
    }

    #[test]
    fn feature_examples() {
        let x = UnitVector::from_unit(vec![0.6, 0.8]).unwrap();
        assert_eq!(monomial_features(&x, 1).unwrap(), vec![1.0, 0.6, 0.8]);
        let f = monomial_features(&x, 2).unwrap();
        for (a, b) in f.iter().zip([1.0, 0.6, 0.8, 0.36, 0.48, 0.64]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_fits() {
        let s = sample_with(3, 3, 1, |_| 1);
        let p = l1_regression(&s, 0).unwrap();
        assert!((p.coefficients()[0] - 1.0).abs() < 1e-6);
        assert!(l1_loss(&p, &s) < 1e-9);

        let pts = sample_uniform_sphere(3, 3, 2).unwrap();
        let s = LabeledSample::new(pts, vec![1, 1, -1]).unwrap();
        let fit = l1_regression_with(&s, 0, &RegressionOptions::default()).unwrap();
        // grid search over constants
        let grid_best = (0..=4000)
            .map(|i| {
                let c = -2.0 + i as f64 * 1e-3;
                s.labels().iter().map(|&y| (c - f64::from(y)).abs()).sum::<f64>() / 3.0
            })
            .fold(f64::INFINITY, f64::min);
        assert!((fit.mean_loss - grid_best).abs() < 1e-6);
        assert!((fit.mean_loss - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn linear_fit_beats_grid_oracle() {
        let w = [0.6, 0.8];
        let s = sample_with(2, 40, 3, |x| label_sign(x[0] * w[0] + x[1] * w[1]));
        let fit = l1_regression_with(&s, 1, &RegressionOptions::default()).unwrap();
        let mut grid_best = f64::INFINITY;
        let steps = 60;
        for a in 0..=steps {
            for b in 0..=steps {
                for c in 0..=steps {
                    let co = [
                        -1.0 + 2.0 * a as f64 / steps as f64,
                        -6.0 + 12.0 * b as f64 / steps as f64,
                        -6.0 + 12.0 * c as f64 / steps as f64,
                    ];
                    let loss = s
                        .points()
                        .iter()
                        .zip(s.labels())
                        .map(|(p, &y)| {
                            let x = p.as_slice();
                            (co[0] + co[1] * x[0] + co[2] * x[1] - f64::from(y)).abs()
                        })
                        .sum::<f64>()
                        / 40.0;
                    grid_best = grid_best.min(loss);
                }
            }
        }
        assert!(fit.mean_loss <= grid_best + 1e-3, "{} vs {}", fit.mean_loss, grid_best);
    }

    #[test]
    fn threshold_examples() {
        let a = best_threshold(&[1.0, 2.0, 3.0, 4.0], &[-1, -1, 1, 1]);
        assert!(a > 2.0 && a < 3.0);
        let a = best_threshold(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 1, 1]);
        assert!(a < 1.0);
        let a = best_threshold(&[1.0, 2.0, 3.0, 4.0], &[-1, -1, -1, -1]);
        assert!(a >= 4.0);
        // smallest |a| among ties
        let a = best_threshold(&[-1.0, 1.0], &[-1, 1]);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn polynomial_json_roundtrip() {
        let p = MultivariatePolynomial::from_dense(2, 2, vec![1.0, 0.0, -2.0, 0.5, 0.0, 3.0]).unwrap();
        let js = serde_json::to_string(&p).unwrap();
        let q: MultivariatePolynomial = serde_json::from_str(&js).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.terms().len(), 4);
        assert!((p.eval(&[0.6, 0.8]) - (1.0 - 1.6 + 0.18 + 1.92)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_samples() {
        let pts = sample_uniform_sphere(3, 2, 1).unwrap();
        assert!(LabeledSample::new(pts.clone(), vec![1]).is_err());
        assert!(LabeledSample::new(pts, vec![1, 0]).is_err());
        let empty = LabeledSample::new(vec![], vec![]).unwrap();
        assert!(l1_regression(&empty, 1).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = sample_with(3, 10, 4, |x| label_sign(x[0]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        s.write_csv(&path).unwrap();
        let t = LabeledSample::read_csv(&path).unwrap();
        assert_eq!(s, t);
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("x1,x2,x3,y\n"));
    }

    fn brute_threshold_errors(values: &[f64], labels: &[i8]) -> usize {
        let mut cuts: Vec<f64> = values.to_vec();
        cuts.push(f64::NEG_INFINITY);
        cuts.iter()
            .map(|&a| {
                values
                    .iter()
                    .zip(labels)
                    .filter(|(v, l)| label_sign(**v - a) != **l)
                    .count()
            })
            .min()
            .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn threshold_is_optimal_and_beats_zero(
            vals in prop::collection::vec(-3i32..3, 1..30),
            labs in prop::collection::vec(prop::bool::ANY, 30),
        ) {
            let values: Vec<f64> = vals.iter().map(|&v| f64::from(v) * 0.5).collect();
            let labels: Vec<i8> = labs[..values.len()].iter().map(|&b| if b { 1 } else { -1 }).collect();
            let a = best_threshold(&values, &labels);
            let err = |a: f64| values.iter().zip(&labels).filter(|(v, l)| label_sign(**v - a) != **l).count();
            prop_assert_eq!(err(a), brute_threshold_errors(&values, &labels));
            prop_assert!(err(a) <= err(0.0));
        }

        #[test]
        fn l1_dominates_zero_one(seed in 0u64..1000, r in 0usize..3) {
            let s = sample_with(3, 30, seed, |x| label_sign(x[0] - 0.2 * x[1]));
            let fit = l1_regression_with(&s, r, &RegressionOptions::default()).unwrap();
            let clf = PolynomialClassifier { poly: fit.poly.clone(), threshold: 0.0 };
            prop_assert!(clf.empirical_error(&s) <= l1_loss(&fit.poly, &s) + 1e-9);
            prop_assert!((l1_loss(&fit.poly, &s) - fit.mean_loss).abs() < 1e-9);
        }
    }

    #[test]
    fn loss_monotone_in_degree() {
        let s = sample_with(3, 60, 9, |x| label_sign(x[0] * x[1] + 0.1));
        let mut last = f64::INFINITY;
        for r in 0..=4 {
            let fit = l1_regression_with(&s, r, &RegressionOptions::default()).unwrap();
            assert!(fit.mean_loss <= last + 1e-6, "r={r}: {} > {last}", fit.mean_loss);
            last = fit.mean_loss;
        }
    }
}
