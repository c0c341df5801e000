//! Certified polynomial approximations: Jackson-type interpolants, the
//! Gaussian-CDF booster, and the sign approximations built from them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chebyshev::{lobatto_coefficients, lobatto_points};
use super::{UnivariatePolynomial, CHEBYSHEV_DEGREE_CAP};
use crate::density::Density;
use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, UnitVector};
use crate::quadrature::{integrate_batch_with_breakpoints, QuadOptions};

/// Points in every sup-norm certification grid (endpoints included).
pub const CERT_GRID: usize = 100_000;

const GRID_CHUNK: usize = 2048;

/// Measured errors of a constructed approximation.
///
/// For a Jackson interpolant `sup_error_outside` is the sup distance to the
/// target over the whole domain; for sign approximations it is taken outside
/// the dead zone around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationCertificate {
    pub grid_size: usize,
    pub sup_error_outside: f64,
    pub sup_abs_inside: f64,
    pub l1_error: Option<f64>,
    pub domain: (f64, f64),
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub polynomial: UnivariatePolynomial,
    pub certificate: ApproximationCertificate,
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `φ(x) = x/γ` on `[−γ, γ]`, `±1` beyond.
pub fn ramp(gamma: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    move |x| (x / gamma).clamp(-1.0, 1.0)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    v[n - 1] = hi;
    v
}

fn eval_grid(p: &UnivariatePolynomial, xs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    out.par_chunks_mut(GRID_CHUNK)
        .zip(xs.par_chunks(GRID_CHUNK))
        .for_each(|(o, x)| p.eval_batch(x, o));
    out
}

fn check_coefficients(what: &'static str, p: &UnivariatePolynomial) -> Result<()> {
    if let UnivariatePolynomial::Chebyshev { coeffs, .. } | UnivariatePolynomial::Monomial(coeffs) = p {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::PrecisionFailure {
                what,
                detail: format!("non-finite coefficient {c}"),
            });
        }
    }
    Ok(())
}

fn interpolate<F: Fn(f64) -> f64>(f: F, degree: usize, lo: f64, hi: f64) -> Result<UnivariatePolynomial> {
    if degree > CHEBYSHEV_DEGREE_CAP {
        return Err(Error::Capacity {
            what: "chebyshev degree",
            requested: degree,
            cap: CHEBYSHEV_DEGREE_CAP,
        });
    }
    let values: Vec<f64> = lobatto_points(degree, lo, hi).into_iter().map(f).collect();
    let mut coeffs = lobatto_coefficients(&values);
    // Trailing coefficients at rounding level carry no information.
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= 8.0 * f64::EPSILON * scale) {
        coeffs.pop();
    }
    UnivariatePolynomial::chebyshev((lo, hi), coeffs)
}

struct JacksonFit {
    certified: Certified,
    grid: Vec<f64>,
    values: Vec<f64>,
}

fn jackson_fit<F>(f: F, lipschitz: f64, degree: usize) -> Result<JacksonFit>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(invalid(format!("Lipschitz constant must be finite and ≥ 0, got {lipschitz}")));
    }
    if degree == 0 {
        return Err(invalid("Jackson degree must be at least 1"));
    }
    let bound = 6.0 * lipschitz / degree as f64;
    let grid = linspace(-1.0, 1.0, CERT_GRID);
    let target: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect();
    let mut n = degree;
    let mut measured = f64::NAN;
    for _ in 0..=3 {
        let q = interpolate(&f, n, -1.0, 1.0)?;
        check_coefficients("jackson approximation", &q)?;
        let values = eval_grid(&q, &grid);
        let (err, sup) = values
            .par_iter()
            .zip(&target)
            .map(|(v, t)| ((v - t).abs(), v.abs()))
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        measured = err;
        if err <= bound {
            let certificate = ApproximationCertificate {
                grid_size: grid.len(),
                sup_error_outside: err,
                sup_abs_inside: sup,
                l1_error: None,
                domain: (-1.0, 1.0),
                degree: q.degree(),
            };
            return Ok(JacksonFit {
                certified: Certified {
                    polynomial: q,
                    certificate,
                },
                grid,
                values,
            });
        }
        n = (n as f64 * 1.5).ceil() as usize;
    }
    Err(Error::ConstructionFailure {
        what: "jackson approximation",
        measured,
        bound,
    })
}

/// Polynomial within `6L/r` of the `L`-Lipschitz `f` in sup norm on `[−1, 1]`.
///
/// Interpolates at Chebyshev-Lobatto points and checks the bound on a
/// [`CERT_GRID`]-point grid; a failed check retries at 1.5× the degree up to
/// three times, still against the original `6L/r`.
pub fn jackson_approx<F>(f: F, lipschitz: f64, degree: usize) -> Result<Certified>
where
    F: Fn(f64) -> f64 + Sync,
{
    Ok(jackson_fit(f, lipschitz, degree)?.certified)
}

/// The scale `σ` and truncation order `k` of the booster for accuracy `τ`.
pub fn booster_sigma_k(tau: f64) -> (f64, usize) {
    let sigma = 2.0 * (2.0 * (4.0 / ((2.0 * PI).sqrt() * tau)).ln()).sqrt();
    let a = 2.0 * (1.5 * sigma).powi(2) * std::f64::consts::E;
    let b = (4.0 / tau).log2();
    (sigma, a.ceil().max(b.ceil()) as usize)
}

/// `(1/√(2π)) Σ_{n≥k} (−1)^n y^{2n+1} / (n! 2^n (2n+1))`, the part of the
/// Gaussian CDF series dropped by truncating at order `k`.
fn cdf_series_tail(y: f64, k: usize) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let ly = y.abs().ln();
    let mut sum = 0.0;
    for n in k.. {
        let nf = n as f64;
        let log_term = (2.0 * nf + 1.0) * ly - libm::lgamma(nf + 1.0) - nf * std::f64::consts::LN_2 - (2.0 * nf + 1.0).ln();
        let term = log_term.exp();
        sum += if n % 2 == 0 { term } else { -term };
        if term <= 1e-18 * sum.abs() || term < 1e-300 || n > k + 10_000 {
            break;
        }
    }
    y.signum() * sum / (2.0 * PI).sqrt()
}

/// `p(x) = 2r(σx) − 1`, `r` the order-`2k` Taylor polynomial of the Gaussian CDF.
///
/// Stored as its exact Chebyshev interpolant on `[−1.5, 1.5]`. Node values are
/// computed as `erf(y/√2) − 2·tail(y)`, which avoids the alternating monomial
/// sum whose terms reach `e^{y²/2}`.
pub fn booster_poly(tau: f64) -> Result<Certified> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("booster accuracy must lie in (0, 1), got {tau}")));
    }
    let (sigma, k) = booster_sigma_k(tau);
    let degree = 2 * k - 1;
    let mut p = interpolate(
        |x| {
            let y = sigma * x;
            libm::erf(y / std::f64::consts::SQRT_2) - 2.0 * cdf_series_tail(y, k)
        },
        degree,
        -1.5,
        1.5,
    )?;
    if let UnivariatePolynomial::Chebyshev { coeffs, .. } = &mut p {
        // odd function: even Chebyshev modes are pure rounding noise
        coeffs.iter_mut().step_by(2).for_each(|c| *c = 0.0);
    }
    check_coefficients("booster polynomial", &p)?;

    let mut grid = linspace(-1.5, 1.5, CERT_GRID);
    grid.extend([-0.5, 0.5]);
    let values = eval_grid(&p, &grid);
    let sup_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = grid
        .iter()
        .zip(&values)
        .filter(|(x, _)| x.abs() >= 0.5)
        .fold(0.0f64, |m, (x, v)| m.max((v - sign(*x)).abs()));
    if !sup_abs.is_finite() || !err.is_finite() {
        return Err(Error::PrecisionFailure {
            what: "booster polynomial",
            detail: format!("non-finite values on the certification grid at τ = {tau}"),
        });
    }
    if sup_abs >= 1.0 + tau {
        return Err(Error::ConstructionFailure {
            what: "booster polynomial (|p| < 1 + τ)",
            measured: sup_abs,
            bound: 1.0 + tau,
        });
    }
    if err >= tau {
        return Err(Error::ConstructionFailure {
            what: "booster polynomial (|p − sign| < τ)",
            measured: err,
            bound: tau,
        });
    }
    let certificate = ApproximationCertificate {
        grid_size: grid.len(),
        sup_error_outside: err,
        sup_abs_inside: sup_abs,
        l1_error: None,
        domain: (-1.5, 1.5),
        degree: p.degree(),
    };
    Ok(Certified {
        polynomial: p,
        certificate,
    })
}

/// Sign approximation on `[−a, a]` that is `τ`-accurate outside `[−γa, γa]`
/// and bounded by `1 + τ` everywhere on `[−a, a]`.
pub fn sign_approx_truncated(a: f64, gamma: f64, tau: f64) -> Result<Certified> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("half-length a must be positive, got {a}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("γ must lie in (0, 1), got {gamma}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("τ must lie in (0, 1), got {tau}")));
    }
    // Work on [−1, 1] and rescale at the end.
    let degree = (12.0 / gamma).ceil() as usize;
    let fit = jackson_fit(ramp(gamma), 1.0 / gamma, degree)?;
    let booster = booster_poly(tau)?;
    let q = fit.certified.polynomial;
    let b = booster.polynomial;

    // The certification grid is a·u for the unit grid u the Jackson step
    // already evaluated, so q's values are reused.
    let mut outer = eval_grid(&b, &fit.values);
    let mut xs: Vec<f64> = fit.grid.iter().map(|u| a * u).collect();
    for x in [-gamma * a, gamma * a] {
        xs.push(x);
        outer.push(b.eval(q.eval(x / a)));
    }
    let sup_abs = outer.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = xs
        .iter()
        .zip(&outer)
        .filter(|(x, _)| x.abs() >= gamma * a)
        .fold(0.0f64, |m, (x, v)| m.max((v - sign(*x)).abs()));
    if !(sup_abs < 1.0 + tau) {
        return Err(Error::ConstructionFailure {
            what: "truncated sign approximation (|p| < 1 + τ)",
            measured: sup_abs,
            bound: 1.0 + tau,
        });
    }
    if !(err < tau) {
        return Err(Error::ConstructionFailure {
            what: "truncated sign approximation (|p − sign| < τ)",
            measured: err,
            bound: tau,
        });
    }
    let polynomial = UnivariatePolynomial::composed(b, q, 1.0 / a);
    let certificate = ApproximationCertificate {
        grid_size: xs.len(),
        sup_error_outside: err,
        sup_abs_inside: sup_abs,
        l1_error: None,
        domain: (-a, a),
        degree: polynomial.degree(),
    };
    Ok(Certified {
        polynomial,
        certificate,
    })
}

/// Knobs for [`sign_approx_shorttail`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShorttailOptions {
    /// Constant in `r = Θ(log(1/τ)/τ²)`.
    pub degree_multiplier: f64,
    /// Retries with the multiplier raised 1.5× after an ℓ1 certificate miss.
    pub max_retries: usize,
    /// Points used to spot-check the density hypotheses.
    pub check_grid: usize,
}

impl Default for ShorttailOptions {
    fn default() -> Self {
        Self {
            degree_multiplier: 1.0,
            max_retries: 3,
            check_grid: 2001,
        }
    }
}

/// Polynomial with `∫|p − sign|ρ ≤ τ` for a density with Gaussian-type tails
/// at scale `σ`.
///
/// The sign approximation is built on `[−rτσ, rτσ]` with `r = Θ(log(1/τ)/τ²)`,
/// widened to cover the support of `ρ` when that is larger, because outside
/// its design interval the composed polynomial grows without bound.
pub fn sign_approx_shorttail(
    sigma: f64,
    gamma: f64,
    tau: f64,
    rho: &dyn Density,
    opts: ShorttailOptions,
) -> Result<Certified> {
    if !(sigma > 0.0 && sigma.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("σ and γ must be positive, got {sigma}, {gamma}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("τ must lie in (0, 1), got {tau}")));
    }
    if tau > sigma / (2.0 * gamma) {
        return Err(invalid(format!(
            "τ = {tau} exceeds σ/(2γ) = {}",
            sigma / (2.0 * gamma)
        )));
    }
    if !(opts.degree_multiplier > 0.0) || opts.check_grid < 2 {
        return Err(invalid("bad short-tail options"));
    }
    let (lo, hi) = rho.support();
    let peak = 2.0 / sigma;
    for x in linspace(lo, hi, opts.check_grid) {
        let v = rho.pdf(x)?;
        if v > peak * (1.0 + 1e-9) {
            return Err(invalid(format!("density {v} at x = {x} exceeds 2/σ = {peak}")));
        }
        let tail = peak * (-x * x / (32.0 * sigma * sigma)).exp();
        if x.abs() > 2.0 * gamma && v > tail * (1.0 + 1e-9) {
            return Err(invalid(format!(
                "density {v} at x = {x} exceeds the tail bound {tail}"
            )));
        }
    }

    let half_support = lo.abs().max(hi.abs());
    let dead = tau * sigma / 100.0;
    let mut mult = opts.degree_multiplier;
    let mut measured = f64::NAN;
    for _ in 0..=opts.max_retries {
        let r = (mult * (1.0 / tau).ln() / (tau * tau)).max(1.0 / (tau * tau)).ceil();
        let a = (r * tau * sigma).max(half_support);
        if dead >= a {
            return Err(invalid("dead zone τσ/100 covers the whole support"));
        }
        let mut built = sign_approx_truncated(a, dead / a, tau / 100.0)?;
        let l1 = l1_error_split(&built.polynomial, rho, (lo, hi), &[-dead, dead])?;
        measured = l1;
        if l1 <= tau {
            built.certificate.l1_error = Some(l1);
            return Ok(built);
        }
        mult *= 1.5;
    }
    Err(Error::ConstructionFailure {
        what: "short-tail sign approximation (ℓ1 error)",
        measured,
        bound: tau,
    })
}

/// Growth envelope `b·|2x/a|^deg(p)` for `|x| ≥ a`.
pub fn growth_bound(p: &UnivariatePolynomial, a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    if x.abs() < a {
        return Err(invalid(format!("|x| = {} is inside [−a, a]", x.abs())));
    }
    let grid = linspace(-a, a, 1001);
    let sup = eval_grid(p, &grid).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > b * (1.0 + 1e-12) {
        return Err(invalid(format!("b = {b} is below sup |p| = {sup} on [−a, a]")));
    }
    Ok(b * (2.0 * x.abs() / a).powf(p.degree() as f64))
}

const L1_OPTS: QuadOptions = QuadOptions {
    abs_tol: 1e-6,
    rel_tol: 0.0,
    max_subdivisions: 200_000,
};

fn l1_error_split(
    p: &UnivariatePolynomial,
    rho: &dyn Density,
    domain: (f64, f64),
    extra_breaks: &[f64],
) -> Result<f64> {
    let (slo, shi) = rho.support();
    let lo = domain.0.max(slo);
    let hi = domain.1.min(shi);
    if !(lo < hi) {
        return Ok(0.0);
    }
    let mut pts = vec![lo, hi, 0.0];
    pts.extend(rho.breakpoints());
    pts.extend_from_slice(extra_breaks);
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // Seed the partition at roughly the polynomial's own resolution so that
    // narrow transitions cannot slip between the first Kronrod nodes.
    let panels = ((hi - lo) / p.feature_scale() / 8.0).clamp(1.0, 4096.0) as usize;
    if panels > 1 {
        let step = (hi - lo) / panels as f64;
        pts.extend((1..panels).map(|i| lo + step * i as f64));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    let mut failure = None;
    let mut pv = Vec::new();
    let r = integrate_batch_with_breakpoints(
        |xs, ys| {
            pv.resize(xs.len(), 0.0);
            p.eval_batch(xs, &mut pv);
            for ((x, y), v) in xs.iter().zip(ys.iter_mut()).zip(&pv) {
                *y = match rho.pdf(*x) {
                    Ok(d) => (v - sign(*x)).abs() * d,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                };
            }
        },
        &pts,
        L1_OPTS,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// `∫_domain |p(x) − sign(x)| ρ(x) dx`, split at the origin.
pub fn l1_error_vs_sign(p: &UnivariatePolynomial, rho: &dyn Density, domain: (f64, f64)) -> Result<f64> {
    if !(domain.0 < domain.1) {
        return Err(invalid(format!("empty domain {domain:?}")));
    }
    l1_error_split(p, rho, domain, &[])
}

/// `P(x) = p(⟨w, x⟩)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPolynomial {
    pub direction: UnitVector,
    pub profile: UnivariatePolynomial,
}

impl LiftedPolynomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.profile.eval(self.direction.dot(x))
    }

    /// Evaluates at the rows of the row-major `points` (each of length d).
    pub fn eval_rows(&self, points: &[f64], out: &mut [f64]) {
        let d = self.direction.dim();
        let proj: Vec<f64> = points
            .chunks_exact(d)
            .map(|x| dot(self.direction.as_slice(), x))
            .collect();
        self.profile.eval_batch(&proj, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{TruncatedGaussian, Uniform};
    use crate::polynomials::UnivariatePolynomial as P;
    use proptest::prelude::*;

    #[test]
    fn jackson_constant_is_exact() {
        let c = jackson_approx(|_| 0.7, 0.0, 5).unwrap();
        assert_eq!(c.polynomial.degree(), 0);
        assert!(c.certificate.sup_error_outside < 1e-15);
    }

    #[test]
    fn jackson_ramp_and_abs() {
        let c = jackson_approx(ramp(0.5), 2.0, 24).unwrap();
        assert!(c.certificate.sup_error_outside <= 0.5);
        assert_eq!(c.certificate.grid_size, CERT_GRID);
        let c = jackson_approx(f64::abs, 1.0, 60).unwrap();
        assert!(c.certificate.sup_error_outside <= 0.1);
        assert!(c.polynomial.degree() <= 60);
    }

    #[test]
    fn jackson_rejects_impossible_bound() {
        // sign is not Lipschitz; claiming L = 0.01 cannot be certified
        let err = jackson_approx(sign, 0.01, 10).unwrap_err();
        assert!(matches!(err, Error::ConstructionFailure { .. }), "{err}");
    }

    #[test]
    fn booster_tail_matches_direct_series() {
        // At small |y| the alternating series is accurate in f64.
        let (_, k) = (0.0, 6);
        for y in [0.3f64, -0.8, 1.1] {
            let mut direct = 0.0;
            let mut fact = 1.0;
            for n in 0..k {
                if n > 0 {
                    fact *= n as f64;
                }
                let term = y.powi(2 * n as i32 + 1) / (fact * 2f64.powi(n as i32) * (2 * n + 1) as f64);
                direct += if n % 2 == 0 { term } else { -term };
            }
            let want = 0.5 + direct / (2.0 * PI).sqrt();
            let got = 0.5 * (1.0 + libm::erf(y / std::f64::consts::SQRT_2)) - cdf_series_tail(y, k);
            assert!((got - want).abs() < 1e-14, "y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn booster_is_odd_and_certified() {
        for tau in [0.5, 0.25] {
            let b = booster_poly(tau).unwrap();
            assert!(b.certificate.sup_abs_inside < 1.0 + tau);
            assert!(b.certificate.sup_error_outside < tau);
            for i in 0..=300 {
                let x = -1.5 + 0.01 * i as f64;
                assert!((b.polynomial.eval(x) + b.polynomial.eval(-x)).abs() < 1e-12);
            }
        }
        assert!(booster_poly(1.0).is_err());
    }

    #[test]
    fn booster_degree_is_logarithmic() {
        let (_, k1) = booster_sigma_k(0.1);
        let (_, k2) = booster_sigma_k(0.01);
        let (_, k3) = booster_sigma_k(0.001);
        // k grows linearly in log(1/τ)
        let d1 = k2 as f64 - k1 as f64;
        let d2 = k3 as f64 - k2 as f64;
        assert!((d1 / d2 - 1.0).abs() < 0.2, "{k1} {k2} {k3}");
    }

    #[test]
    fn truncated_small_case() {
        let c = sign_approx_truncated(2.0, 0.5, 0.25).unwrap();
        assert_eq!(c.certificate.domain, (-2.0, 2.0));
        assert!(c.certificate.sup_error_outside < 0.25);
        assert!(c.polynomial.eval(0.0).abs() < 1.25);
        assert!(sign_approx_truncated(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn l1_of_constants_against_uniform() {
        let u = Uniform::new(-1.0, 1.0).unwrap();
        let one = l1_error_vs_sign(&P::constant(1.0), &u, (-1.0, 1.0)).unwrap();
        let zero = l1_error_vs_sign(&P::constant(0.0), &u, (-1.0, 1.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-9);
        assert!((zero - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shorttail_rejects_bad_inputs() {
        let g = TruncatedGaussian::new(0.1, 1.0).unwrap();
        assert!(sign_approx_shorttail(0.1, 0.05, 1.5, &g, ShorttailOptions::default()).is_err());
        // τ > σ/(2γ)
        assert!(matches!(
            sign_approx_shorttail(0.1, 1.0, 0.2, &g, ShorttailOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        // constant density: fine near 0, too heavy in the tail for σ = 0.01
        let u = Uniform::new(-1.0, 1.0).unwrap();
        assert!(matches!(
            sign_approx_shorttail(0.01, 0.005, 0.2, &u, ShorttailOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn growth_bound_chebyshev_t5() {
        let t5 = P::monomial(vec![0.0, 5.0, 0.0, -20.0, 0.0, 16.0]);
        let bound = growth_bound(&t5, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(bound, 1024.0);
        assert!((t5.eval(2.0) - 362.0).abs() < 1e-9);
        assert!(growth_bound(&t5, 1.0, 1.0, 0.5).is_err());
        assert!(growth_bound(&t5, 1.0, 0.5, 2.0).is_err());
        assert_eq!(growth_bound(&P::constant(3.0), 1.0, 3.0, 7.0).unwrap(), 3.0);
    }

    #[test]
    fn lifted_eval_projects() {
        let w = UnitVector::normalize(vec![3.0, 4.0]).unwrap();
        let l = LiftedPolynomial {
            direction: w,
            profile: P::monomial(vec![1.0, 0.0, 1.0]),
        };
        assert!((l.eval(&[1.0, 0.0]) - 1.36).abs() < 1e-15);
        let mut out = [0.0; 2];
        l.eval_rows(&[1.0, 0.0, 0.0, 1.0], &mut out);
        assert!((out[1] - 1.64).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn growth_bound_holds_for_random_polys(
            c in prop::collection::vec(-1.0f64..1.0, 1..=11),
            a in 0.2f64..3.0,
            s in 1.0f64..3.0,
            neg in any::<bool>(),
        ) {
            let p = P::monomial(c);
            let grid = linspace(-a, a, 1001);
            let b = grid.iter().fold(0.0f64, |m, x| m.max(p.eval(*x).abs())).max(1e-300);
            let x = if neg { -s * a } else { s * a };
            let bound = growth_bound(&p, a, b, x).unwrap();
            prop_assert!(p.eval(x).abs() <= bound * (1.0 + 1e-9));
        }
    }
}
