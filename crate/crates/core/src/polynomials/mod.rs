//! Univariate polynomials and constructive approximations of the sign function.

mod approx;
pub mod chebyshev;

pub use approx::{
    booster_poly, booster_sigma_k, growth_bound, jackson_approx, l1_error_vs_sign, ramp,
    sign_approx_shorttail, sign_approx_truncated, ApproximationCertificate, Certified,
    LiftedPolynomial, ShorttailOptions, CERT_GRID,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use chebyshev::{clenshaw, clenshaw_batch, to_unit, LANES};

/// Maximum degree of a polynomial stored as explicit monomial coefficients.
pub const DEFAULT_DEGREE_CAP: usize = 10_000;

/// Maximum degree of a stored Chebyshev series.
pub const CHEBYSHEV_DEGREE_CAP: usize = 1 << 18;

/// A real polynomial in one variable.
///
/// High-degree approximations are kept in the Chebyshev basis on their
/// natural interval, and compositions stay factored; monomial coefficients of
/// those objects would overflow or cancel catastrophically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub enum UnivariatePolynomial {
    /// `Σ c_k x^k`.
    Monomial(Vec<f64>),
    /// `Σ c_k T_k(t)` with `t` the affine image of `x` from `domain` to `[-1, 1]`.
    Chebyshev { domain: (f64, f64), coeffs: Vec<f64> },
    /// `outer(inner(scale·x))`.
    Composed {
        outer: Box<UnivariatePolynomial>,
        inner: Box<UnivariatePolynomial>,
        scale: f64,
    },
}

fn trim(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        coeffs.push(0.0);
    }
    coeffs
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl UnivariatePolynomial {
    pub fn monomial(coeffs: Vec<f64>) -> Self {
        Self::Monomial(trim(coeffs))
    }

    pub fn constant(c: f64) -> Self {
        Self::Monomial(vec![c])
    }

    pub fn identity() -> Self {
        Self::Monomial(vec![0.0, 1.0])
    }

    pub fn chebyshev(domain: (f64, f64), coeffs: Vec<f64>) -> Result<Self> {
        if !(domain.0 < domain.1 && domain.0.is_finite() && domain.1.is_finite()) {
            return Err(invalid(format!("bad chebyshev domain {domain:?}")));
        }
        let coeffs = trim(coeffs);
        if coeffs.len() - 1 > CHEBYSHEV_DEGREE_CAP {
            return Err(Error::Capacity {
                what: "chebyshev degree",
                requested: coeffs.len() - 1,
                cap: CHEBYSHEV_DEGREE_CAP,
            });
        }
        Ok(Self::Chebyshev { domain, coeffs })
    }

    /// Factored `outer(inner(scale·x))`.
    pub fn composed(outer: Self, inner: Self, scale: f64) -> Self {
        Self::Composed {
            outer: Box::new(outer),
            inner: Box::new(inner),
            scale,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Self::Monomial(c) | Self::Chebyshev { coeffs: c, .. } => c.len() - 1,
            Self::Composed { outer, inner, .. } => outer.degree().saturating_mul(inner.degree()),
        }
    }

    /// Monomial coefficients, when stored that way.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            Self::Monomial(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Monomial(c) => horner(c, x),
            Self::Chebyshev { domain, coeffs } => clenshaw(coeffs, to_unit(x, domain.0, domain.1)),
            Self::Composed {
                outer,
                inner,
                scale,
            } => outer.eval(inner.eval(scale * x)),
        }
    }

    /// Evaluates at every `xs[i]` into `out[i]`.
    pub fn eval_batch(&self, xs: &[f64], out: &mut [f64]) {
        assert_eq!(xs.len(), out.len(), "eval_batch length mismatch");
        match self {
            Self::Monomial(c) => {
                let mut xc = xs.chunks_exact(LANES);
                let mut oc = out.chunks_exact_mut(LANES);
                for (x, o) in (&mut xc).zip(&mut oc) {
                    let mut acc = [0.0; LANES];
                    for &ck in c.iter().rev() {
                        for l in 0..LANES {
                            acc[l] = acc[l] * x[l] + ck;
                        }
                    }
                    o.copy_from_slice(&acc);
                }
                for (x, o) in xc.remainder().iter().zip(oc.into_remainder()) {
                    *o = horner(c, *x);
                }
            }
            Self::Chebyshev { domain, coeffs } => {
                let ts: Vec<f64> = xs.iter().map(|&x| to_unit(x, domain.0, domain.1)).collect();
                clenshaw_batch(coeffs, &ts, out);
            }
            Self::Composed {
                outer,
                inner,
                scale,
            } => {
                let scaled: Vec<f64> = xs.iter().map(|x| scale * x).collect();
                let mut mid = vec![0.0; xs.len()];
                inner.eval_batch(&scaled, &mut mid);
                outer.eval_batch(&mid, out);
            }
        }
    }

    /// Shortest length over which the polynomial can change appreciably,
    /// judged from its Chebyshev components; infinite for monomials.
    pub fn feature_scale(&self) -> f64 {
        match self {
            Self::Monomial(_) => f64::INFINITY,
            Self::Chebyshev { domain, coeffs } => (domain.1 - domain.0) / coeffs.len() as f64,
            Self::Composed { inner, scale, .. } => inner.feature_scale() / scale.abs(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `outer ∘ inner`. Two monomial-basis inputs are expanded into monomial
/// coefficients, subject to [`DEFAULT_DEGREE_CAP`]; anything else stays
/// factored.
pub fn compose(outer: &UnivariatePolynomial, inner: &UnivariatePolynomial) -> Result<UnivariatePolynomial> {
    use UnivariatePolynomial::Monomial;
    match (outer, inner) {
        (Monomial(o), Monomial(i)) => {
            let deg = (o.len() - 1).saturating_mul(i.len() - 1);
            if deg > DEFAULT_DEGREE_CAP {
                return Err(Error::Capacity {
                    what: "composed polynomial degree",
                    requested: deg,
                    cap: DEFAULT_DEGREE_CAP,
                });
            }
            let mut acc = vec![*o.last().unwrap()];
            for &c in o.iter().rev().skip(1) {
                acc = poly_mul(&acc, i);
                acc[0] += c;
            }
            Ok(UnivariatePolynomial::monomial(acc))
        }
        _ => Ok(UnivariatePolynomial::composed(outer.clone(), inner.clone(), 1.0)),
    }
}

pub fn eval(p: &UnivariatePolynomial, x: f64) -> f64 {
    p.eval(x)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BasisTag {
    Monomial,
    Chebyshev,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FormTag {
    Composed,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Basis {
        basis: BasisTag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
        coefficients: Vec<f64>,
    },
    Composed {
        form: FormTag,
        outer: Box<Repr>,
        inner: Box<Repr>,
        scale: f64,
    },
}

impl TryFrom<Repr> for UnivariatePolynomial {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Self> {
        match r {
            Repr::Basis {
                basis: BasisTag::Monomial,
                domain: None,
                coefficients,
            } => {
                if coefficients.is_empty() {
                    return Err(invalid("polynomial needs at least one coefficient"));
                }
                Ok(Self::monomial(coefficients))
            }
            Repr::Basis {
                basis: BasisTag::Monomial,
                domain: Some(_),
                ..
            } => Err(invalid("monomial polynomials take no domain")),
            Repr::Basis {
                basis: BasisTag::Chebyshev,
                domain,
                coefficients,
            } => {
                let [lo, hi] = domain.ok_or_else(|| invalid("chebyshev polynomial needs a domain"))?;
                if coefficients.is_empty() {
                    return Err(invalid("polynomial needs at least one coefficient"));
                }
                Self::chebyshev((lo, hi), coefficients)
            }
            Repr::Composed {
                outer, inner, scale, ..
            } => Ok(Self::composed((*outer).try_into()?, (*inner).try_into()?, scale)),
        }
    }
}

impl From<UnivariatePolynomial> for Repr {
    fn from(p: UnivariatePolynomial) -> Self {
        match p {
            UnivariatePolynomial::Monomial(coefficients) => Repr::Basis {
                basis: BasisTag::Monomial,
                domain: None,
                coefficients,
            },
            UnivariatePolynomial::Chebyshev { domain, coeffs } => Repr::Basis {
                basis: BasisTag::Chebyshev,
                domain: Some([domain.0, domain.1]),
                coefficients: coeffs,
            },
            UnivariatePolynomial::Composed {
                outer,
                inner,
                scale,
            } => Repr::Composed {
                form: FormTag::Composed,
                outer: Box::new((*outer).into()),
                inner: Box::new((*inner).into()),
                scale,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mono(c: &[f64]) -> UnivariatePolynomial {
        UnivariatePolynomial::monomial(c.to_vec())
    }

    #[test]
    fn evaluates_small_cases() {
        assert_eq!(mono(&[1.0]).eval(5.0), 1.0);
        assert_eq!(mono(&[0.0, 1.0]).eval(0.3), 0.3);
        assert_eq!(mono(&[-1.0, 0.0, 2.0]).eval(2.0), 7.0);
        assert_eq!(mono(&[1.0, 2.0, 0.0, 0.0]).degree(), 1);
    }

    #[test]
    fn composes_by_expansion() {
        let p = mono(&[0.5, -2.0, 3.0]);
        assert_eq!(compose(&UnivariatePolynomial::identity(), &p).unwrap(), p);
        let sq = compose(&mono(&[0.0, 0.0, 1.0]), &mono(&[1.0, 1.0])).unwrap();
        assert_eq!(sq.coefficients().unwrap(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn compose_enforces_cap() {
        let big = UnivariatePolynomial::monomial([vec![0.0; 200], vec![1.0]].concat());
        let err = compose(&big, &big).unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 40_000, .. }));
    }

    #[test]
    fn chebyshev_matches_monomial() {
        // T_5 on [-1, 1] and on [0, 2]
        let t5 = mono(&[0.0, 5.0, 0.0, -20.0, 0.0, 16.0]);
        let mut c = vec![0.0; 6];
        c[5] = 1.0;
        let a = UnivariatePolynomial::chebyshev((-1.0, 1.0), c.clone()).unwrap();
        let b = UnivariatePolynomial::chebyshev((0.0, 2.0), c).unwrap();
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            assert!((a.eval(x) - t5.eval(x)).abs() < 1e-12);
            assert!((b.eval(x + 1.0) - t5.eval(x)).abs() < 1e-12);
        }
        assert!((a.eval(2.0) - 362.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let inner = UnivariatePolynomial::chebyshev((-1.0, 1.0), vec![0.1, 0.7, 0.0, -0.2]).unwrap();
        let p = UnivariatePolynomial::composed(mono(&[0.0, 1.5, 0.0, -0.5]), inner, 0.5);
        let s = p.to_json().unwrap();
        assert!(s.contains("\"form\":\"composed\""));
        let q = UnivariatePolynomial::from_json(&s).unwrap();
        for i in 0..=10 {
            let x = -1.0 + 0.2 * i as f64;
            assert!((p.eval(x) - q.eval(x)).abs() <= 1e-12);
        }
        let m = UnivariatePolynomial::from_json(r#"{"basis":"monomial","coefficients":[1,2]}"#).unwrap();
        assert_eq!(m.eval(2.0), 5.0);
        assert!(UnivariatePolynomial::from_json(r#"{"basis":"chebyshev","coefficients":[1]}"#).is_err());
        assert!(UnivariatePolynomial::from_json(r#"{"basis":"monomial","coefficients":[]}"#).is_err());
    }

    fn poly_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 1..=6)
    }

    proptest! {
        #[test]
        fn compose_agrees_with_nested_eval(o in poly_strategy(), i in poly_strategy()) {
            let (o, i) = (mono(&o), mono(&i));
            let c = compose(&o, &i).unwrap();
            let f = UnivariatePolynomial::composed(o.clone(), i.clone(), 1.0);
            for k in 0..100 {
                let x = -1.0 + 2.0 * k as f64 / 99.0;
                let want = o.eval(i.eval(x));
                prop_assert!((c.eval(x) - want).abs() <= 1e-10 * (1.0 + want.abs()));
                prop_assert_eq!(f.eval(x), want);
            }
        }

        #[test]
        fn batch_matches_scalar(c in prop::collection::vec(-1.0f64..1.0, 1..30), n in 1usize..40) {
            let xs: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
            let polys = [
                mono(&c),
                UnivariatePolynomial::chebyshev((-1.0, 1.0), c.clone()).unwrap(),
                UnivariatePolynomial::composed(mono(&c), mono(&[0.0, 0.5]), 2.0),
            ];
            for p in &polys {
                let mut out = vec![0.0; n];
                p.eval_batch(&xs, &mut out);
                for (x, o) in xs.iter().zip(&out) {
                    prop_assert!((p.eval(*x) - o).abs() <= 1e-13 * (1.0 + o.abs()));
                }
            }
        }

        #[test]
        fn eval_at_zero_is_constant_term(c in prop::collection::vec(-5.0f64..5.0, 1..20)) {
            let p = mono(&c);
            prop_assert_eq!(p.eval(0.0), p.coefficients().unwrap()[0]);
        }
    }
}
