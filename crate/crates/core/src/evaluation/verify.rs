//! Verification harness: every bound the construction relies on, checked
//! numerically or by Monte Carlo, one row per (check, case).

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::tabulate_cdf;
use crate::error::Result;
use crate::evaluation::{NoiseKind, NoiseModel};
use crate::geometry::{
    fill_uniform_sphere, marginal_density, marginal_density_bound_check, strip_density_tail_check,
    SphereMarginal, StripDensity, StripDensityParams, UnitVector,
};
use crate::polynomials::{
    booster_poly, compose, growth_bound, jackson_approx, ramp, sign_approx_shorttail,
    sign_approx_truncated, ShorttailOptions, UnivariatePolynomial,
};
use crate::quadrature::{integrate, QuadOptions};
use crate::rng::{self, par_chunks, CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The case violates the hypothesis of the bound and was not checked.
    Precondition,
}

/// `lhs ≤ rhs` is the checked predicate unless stated otherwise in `case`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub passed: usize,
    pub failed: usize,
    pub preconditions: usize,
}

impl VerifyReport {
    fn new(rows: Vec<VerifyRow>) -> Self {
        let count = |s| rows.iter().filter(|r| r.status == s).count();
        Self {
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            preconditions: count(Status::Precondition),
            rows,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripCase {
    pub d: usize,
    pub gamma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripLiftCase {
    pub d: usize,
    pub gamma: f64,
    pub theta: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedCase {
    pub a: f64,
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShorttailCase {
    /// Gaussian of scale σ truncated to `[−1, 1]`.
    Gaussian { sigma: f64, gamma: f64, tau: f64 },
    /// The sphere marginal with σ = 1/√d and γ = σ.
    Sphere { d: usize, tau: f64 },
    /// The strip-conditioned projection with σ = sin θ/√d.
    Strip { d: usize, gamma: f64, theta: f64, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub mc_samples: u64,
    pub marginal_dims: Vec<usize>,
    pub marginal_grid: usize,
    /// Sample size for the d = 3 uniformity check; 0 skips it.
    pub uniform_d3_samples: u64,
    pub strip_bound_cases: Vec<StripCase>,
    pub strip_grid: usize,
    pub strip_ks_cases: Vec<StripCase>,
    pub ks_samples: u64,
    pub localization_cases: Vec<(usize, f64)>,
    pub localization_margins: Vec<f64>,
    pub localization_noise: f64,
    pub booster_taus: Vec<f64>,
    pub truncated_cases: Vec<TruncatedCase>,
    pub shorttail_cases: Vec<ShorttailCase>,
    pub shorttail: ShorttailOptions,
    /// (d, τ) for the lifted approximation under the uniform distribution.
    pub uniform_lift_cases: Vec<(usize, f64)>,
    pub strip_lift_cases: Vec<StripLiftCase>,
    /// Growth of `T_8` and composition against nested evaluation.
    pub polynomial_identities: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let strip = |d, gamma, theta| StripCase { d, gamma, theta };
        Self {
            seed: 0,
            mc_samples: 1_000_000,
            marginal_dims: (2..=100).collect(),
            marginal_grid: 1000,
            uniform_d3_samples: 1_000_000,
            strip_bound_cases: vec![
                strip(10, 0.1, 0.4),
                strip(30, 0.05, 0.2),
                strip(5, 0.3, 1.2),
                strip(50, 0.02, 0.8),
                strip(3, 0.5, 2.0),
            ],
            strip_grid: 201,
            strip_ks_cases: vec![strip(10, 0.1, 0.4), strip(5, 0.3, 1.2), strip(30, 0.05, 0.2)],
            ks_samples: 1_000_000,
            localization_cases: [10, 50]
                .iter()
                .flat_map(|&d| [0.1, 0.3, 1.0].map(|t| (d, t)))
                .collect(),
            localization_margins: vec![0.5, 1.0, 2.0],
            localization_noise: 0.1,
            booster_taus: vec![0.5, 0.25, 0.1],
            truncated_cases: vec![
                TruncatedCase {
                    a: 1.0,
                    gamma: 0.1,
                    tau: 0.05,
                },
                TruncatedCase {
                    a: 2.0,
                    gamma: 0.5,
                    tau: 0.25,
                },
            ],
            shorttail_cases: vec![
                ShorttailCase::Gaussian {
                    sigma: 0.1,
                    gamma: 0.05,
                    tau: 0.2,
                },
                ShorttailCase::Sphere { d: 20, tau: 0.25 },
                ShorttailCase::Strip {
                    d: 50,
                    gamma: 0.05,
                    theta: 0.3,
                    tau: 0.25,
                },
            ],
            shorttail: ShorttailOptions::default(),
            uniform_lift_cases: vec![(20, 0.25)],
            strip_lift_cases: vec![StripLiftCase {
                d: 20,
                gamma: 0.05,
                theta: 0.5,
                tau: 0.25,
            }],
            polynomial_identities: true,
        }
    }
}

impl VerifyConfig {
    /// No checks at all; fill in only the families you want.
    pub fn empty() -> Self {
        Self {
            marginal_dims: vec![],
            uniform_d3_samples: 0,
            strip_bound_cases: vec![],
            strip_ks_cases: vec![],
            localization_cases: vec![],
            booster_taus: vec![],
            truncated_cases: vec![],
            shorttail_cases: vec![],
            uniform_lift_cases: vec![],
            strip_lift_cases: vec![],
            polynomial_identities: false,
            ..Self::default()
        }
    }

    /// A reduced matrix that runs in seconds.
    pub fn quick() -> Self {
        Self {
            mc_samples: 100_000,
            marginal_dims: vec![3, 10, 100],
            marginal_grid: 200,
            uniform_d3_samples: 100_000,
            strip_bound_cases: vec![StripCase {
                d: 10,
                gamma: 0.1,
                theta: 0.4,
            }],
            strip_grid: 51,
            strip_ks_cases: vec![StripCase {
                d: 10,
                gamma: 0.1,
                theta: 0.4,
            }],
            ks_samples: 100_000,
            localization_cases: vec![(10, 0.3)],
            localization_margins: vec![1.0],
            booster_taus: vec![0.5],
            truncated_cases: vec![TruncatedCase {
                a: 2.0,
                gamma: 0.5,
                tau: 0.25,
            }],
            shorttail_cases: vec![],
            uniform_lift_cases: vec![],
            strip_lift_cases: vec![],
            ..Self::default()
        }
    }
}

fn row(check: &str, case: String, lhs: f64, rhs: f64) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        case,
        lhs,
        rhs,
        status: if lhs <= rhs { Status::Pass } else { Status::Fail },
    }
}

fn failed(check: &str, case: String, err: impl std::fmt::Display) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        case: format!("{case}; error: {err}"),
        lhs: f64::NAN,
        rhs: f64::NAN,
        status: Status::Fail,
    }
}

fn precondition(check: &str, case: String, lhs: f64, rhs: f64) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        case,
        lhs,
        rhs,
        status: Status::Precondition,
    }
}

/// Kolmogorov-Smirnov distance between sorted `samples` and `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Projections `⟨w*, x⟩` of uniform points kept by `|⟨e_1, x⟩| ≤ γ`, with
/// `w* = cos θ e_1 + sin θ e_2`.
fn strip_projections(case: StripCase, n: u64, seed: u64) -> Vec<f64> {
    let (s, c) = case.theta.sin_cos();
    let mut out = Vec::with_capacity(n as usize);
    let mut round = 0;
    while (out.len() as u64) < n {
        let need = n - out.len() as u64;
        let mass_guess = (2.0 * case.gamma * (case.d as f64).sqrt() * 0.4).min(1.0);
        let draws = ((need as f64 / mass_guess) as usize + CHUNK).max(CHUNK);
        let parts = par_chunks(draws, rng::child_seed(seed, round), |r, range| {
            let mut x = vec![0.0; case.d];
            let mut kept = Vec::new();
            for _ in range {
                fill_uniform_sphere(r, &mut x);
                if x[0].abs() <= case.gamma {
                    kept.push(c * x[0] + s * x[1]);
                }
            }
            kept
        });
        for p in parts {
            out.extend(p);
        }
        round += 1;
    }
    out.truncate(n as usize);
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

fn marginal_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    let opts = QuadOptions::with_abs_tol(1e-12);
    for &d in &cfg.marginal_dims {
        let case = format!("d={d}");
        // t = sin φ removes the endpoint singularity at d = 2
        let total = SphereMarginal::new(d, 1.0).and_then(|m| {
            integrate(|p: f64| m.value(p.sin()) * p.cos(), -PI / 2.0, PI / 2.0, opts)
        });
        match total {
            Ok(v) => rows.push(row("marginal_normalization", case.clone(), (v.value - 1.0).abs(), 1e-9)),
            Err(e) => rows.push(failed("marginal_normalization", case.clone(), e)),
        }
        let df = d as f64;
        for t in linspace(-1.0, 1.0, cfg.marginal_grid) {
            let v = marginal_density(d, 1.0, t).unwrap_or(f64::NAN);
            let mut r = row(
                "marginal_gaussian_bound",
                format!("{case} t={t}"),
                v,
                df.sqrt() * (-t * t * df / 4.0).exp(),
            );
            if !marginal_density_bound_check(d, t) {
                r.status = Status::Fail;
            }
            rows.push(r);
        }
    }
    // d = 3 projections are uniform on [−1, 1]
    let n = cfg.uniform_d3_samples;
    if n == 0 {
        return;
    }
    let mut proj: Vec<f64> = par_chunks(n as usize, rng::child_seed(cfg.seed, 3), |r, range| {
        let mut x = [0.0; 3];
        range
            .map(|_| {
                fill_uniform_sphere(r, &mut x);
                x[0]
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let ks = ks_statistic(&mut proj, |t| (0.5 * (1.0 + t)).clamp(0.0, 1.0));
    rows.push(row("uniform_projection_d3", format!("ks, n={n}"), ks, 0.005));
}

fn strip_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    for &c in &cfg.strip_bound_cases {
        let case = format!("d={} gamma={} theta={}", c.d, c.gamma, c.theta);
        let params = StripDensityParams {
            dimension: c.d,
            half_width: c.gamma,
            angle: c.theta,
        };
        let dens = match StripDensity::new(params) {
            Ok(v) => v,
            Err(e) => {
                rows.push(failed("strip_density_bound", case, e));
                continue;
            }
        };
        let grid = linspace(-1.0, 1.0, cfg.strip_grid.max(2));
        let mut sup_ratio = 0.0f64;
        let mut tail_ratio = 0.0f64;
        let mut tail_ok = true;
        let mut err = None;
        for &z in &grid {
            match dens.value(z) {
                Ok(v) => {
                    sup_ratio = sup_ratio.max(v / params.sup_bound());
                    if z.abs() >= c.gamma {
                        let b = params.tail_bound(z);
                        if b > 0.0 {
                            tail_ratio = tail_ratio.max(v / b);
                        } else if v > 0.0 {
                            tail_ratio = f64::INFINITY;
                        }
                        tail_ok &= strip_density_tail_check(params, z);
                    }
                }
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        if let Some(e) = err {
            rows.push(failed("strip_density_bound", case, e));
            continue;
        }
        rows.push(row("strip_density_bound", format!("{case}; sup"), sup_ratio, 1.0));
        let mut r = row("strip_density_bound", format!("{case}; tail"), tail_ratio, 1.0);
        if !tail_ok {
            r.status = Status::Fail;
        }
        rows.push(r);
    }
    for (k, &c) in cfg.strip_ks_cases.iter().enumerate() {
        let case = format!("d={} gamma={} theta={}", c.d, c.gamma, c.theta);
        let params = StripDensityParams {
            dimension: c.d,
            half_width: c.gamma,
            angle: c.theta,
        };
        let result = (|| -> Result<(f64, f64)> {
            let dens = StripDensity::new(params)?;
            let (lo, hi) = crate::density::Density::support(&dens);
            let grid = linspace(lo, hi, 4001);
            let cdf = tabulate_cdf(&dens, &grid, QuadOptions::with_abs_tol(1e-10))?;
            let total = *cdf.last().unwrap();
            let mut samples = strip_projections(c, cfg.ks_samples, rng::child_seed(cfg.seed, 100 + k as u64));
            let step = (hi - lo) / 4000.0;
            let ks = ks_statistic(&mut samples, |z| {
                if z <= lo {
                    return 0.0;
                }
                if z >= hi {
                    return total;
                }
                let u = (z - lo) / step;
                let i = (u.floor() as usize).min(3999);
                let f = u - i as f64;
                cdf[i] * (1.0 - f) + cdf[i + 1] * f
            });
            Ok((ks, (total - 1.0).abs()))
        })();
        match result {
            Ok((ks, norm)) => {
                rows.push(row("strip_density_normalization", case.clone(), norm, 1e-4));
                rows.push(row("strip_density_vs_mc", format!("{case}; ks, n={}", cfg.ks_samples), ks, 0.01));
            }
            Err(e) => rows.push(failed("strip_density_vs_mc", case, e)),
        }
    }
}

fn localization_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    for (k, &(d, theta)) in cfg.localization_cases.iter().enumerate() {
        let case = format!("d={d} theta={theta}");
        let seed = rng::child_seed(cfg.seed, 200 + k as u64);
        let mut r = rng::stream(seed, u64::MAX);
        let w_star = match UnitVector::random(d, &mut r) {
            Ok(v) => v,
            Err(e) => {
                rows.push(failed("localization_angle", case, e));
                continue;
            }
        };
        let w = w_star.at_angle(theta, &mut r).expect("valid angle");
        let model = NoiseModel::new(NoiseKind::Rcn { p: cfg.localization_noise }, w_star.clone())
            .expect("valid noise rate");
        let margins = &cfg.localization_margins;
        // per chunk: errors of w, errors of w*, disagreements beyond each margin
        let parts = par_chunks(cfg.mc_samples as usize, seed, |rng, range| {
            let mut x = vec![0.0; d];
            let mut ew = 0u64;
            let mut es = 0u64;
            let mut far = vec![0u64; margins.len()];
            for _ in range {
                fill_uniform_sphere(rng, &mut x);
                let y = model.label(&x, rng);
                let pw = w.dot(&x);
                let hw = if pw > 0.0 { 1 } else { -1 };
                let hs = if w_star.dot(&x) > 0.0 { 1 } else { -1 };
                ew += u64::from(hw != y);
                es += u64::from(hs != y);
                if hw != hs {
                    for (f, m) in far.iter_mut().zip(margins) {
                        *f += u64::from(pw.abs() > m * theta);
                    }
                }
            }
            (ew, es, far)
        });
        let n = cfg.mc_samples as f64;
        let (mut ew, mut es, mut far) = (0u64, 0u64, vec![0u64; margins.len()]);
        for (a, b, f) in parts {
            ew += a;
            es += b;
            far.iter_mut().zip(f).for_each(|(x, y)| *x += y);
        }
        let (pw, ps) = (ew as f64 / n, es as f64 / n);
        let se = ((pw * (1.0 - pw) + ps * (1.0 - ps)) / n).sqrt();
        rows.push(row(
            "localization_angle",
            format!("{case}; rcn p={}", cfg.localization_noise),
            theta / PI,
            pw + ps + 3.0 * se,
        ));
        for (m, f) in margins.iter().zip(far) {
            let freq = f as f64 / n;
            let se = (freq * (1.0 - freq) / n).sqrt();
            let bound = 4.0 * theta / PI * (-(m * m) * d as f64 / 8.0).exp();
            rows.push(row(
                "localization_tail",
                format!("{case}; margin r={m}"),
                freq,
                bound + 3.0 * se,
            ));
        }
    }
}

fn polynomial_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    for &tau in &cfg.booster_taus {
        let case = format!("tau={tau}");
        match booster_poly(tau) {
            Ok(b) => {
                rows.push(row(
                    "booster_bounded",
                    format!("{case}; sup |p| on [-1.5, 1.5] < 1+tau"),
                    b.certificate.sup_abs_inside,
                    1.0 + tau,
                ));
                rows.push(row(
                    "booster_accuracy",
                    format!("{case}; sup |p - sign| off [-0.5, 0.5] < tau; degree {}", b.certificate.degree),
                    b.certificate.sup_error_outside,
                    tau,
                ));
                growth_rows(&b.polynomial, 1.5, 1.0 + tau, &FAR, &format!("booster {case}"), rows);
            }
            Err(e) => rows.push(failed("booster_accuracy", case, e)),
        }
    }
    for c in &cfg.truncated_cases {
        let case = format!("a={} gamma={} tau={}", c.a, c.gamma, c.tau);
        let degree = (12.0 / c.gamma).ceil() as usize;
        match jackson_approx(ramp(c.gamma), 1.0 / c.gamma, degree) {
            Ok(j) => rows.push(row(
                "jackson_ramp",
                format!("gamma={}; degree {degree}", c.gamma),
                j.certificate.sup_error_outside,
                0.5,
            )),
            Err(e) => rows.push(failed("jackson_ramp", format!("gamma={}", c.gamma), e)),
        }
        match sign_approx_truncated(c.a, c.gamma, c.tau) {
            Ok(p) => {
                rows.push(row(
                    "truncated_sign_bounded",
                    format!("{case}; sup |p| on [-a, a]"),
                    p.certificate.sup_abs_inside,
                    1.0 + c.tau,
                ));
                rows.push(row(
                    "truncated_sign_accuracy",
                    format!("{case}; sup |p - sign| off [-gamma a, gamma a]"),
                    p.certificate.sup_error_outside,
                    c.tau,
                ));
                growth_rows(&p.polynomial, c.a, 1.0 + c.tau, &NEAR, &case, rows);
            }
            Err(e) => rows.push(failed("truncated_sign_accuracy", case, e)),
        }
    }
    if !cfg.polynomial_identities {
        return;
    }
    // T_8 has sup 1 on [−1, 1] and grows like (x + √(x² − 1))^8 outside
    let mut t8 = vec![0.0; 9];
    t8[8] = 1.0;
    match UnivariatePolynomial::chebyshev((-1.0, 1.0), t8) {
        Ok(t8) => growth_rows(&t8, 1.0, 1.0, &FAR, "chebyshev T8", rows),
        Err(e) => rows.push(failed("growth_bound", "chebyshev T8".into(), e)),
    }
    // composition agrees with nested evaluation
    let outer = UnivariatePolynomial::monomial(vec![0.5, -1.0, 0.25, 2.0, 0.0, -0.75]);
    let inner = UnivariatePolynomial::monomial(vec![0.1, 0.9, 0.0, -0.3, 0.2]);
    match compose(&outer, &inner) {
        Ok(c) => {
            let err = linspace(-1.0, 1.0, 2001)
                .into_iter()
                .map(|x| (c.eval(x) - outer.eval(inner.eval(x))).abs())
                .fold(0.0, f64::max);
            rows.push(row("composition", "deg 5 ∘ deg 4 on [-1, 1]".into(), err, 1e-8));
        }
        Err(e) => rows.push(failed("composition", "deg 5 ∘ deg 4".into(), e)),
    }
}

/// Multiples of `a` where growth is checked. High-degree polynomials
/// overflow `f64` well before `2a`, so they only get the near points.
const NEAR: [f64; 4] = [1.0, 1.0001, 1.001, 1.01];
const FAR: [f64; 5] = [1.0, 1.01, 1.1, 1.5, 2.0];

/// Compared in log10 because `b·|2x/a|^deg` overflows for the composed
/// approximations.
fn growth_rows(p: &UnivariatePolynomial, a: f64, b: f64, reach: &[f64], case: &str, rows: &mut Vec<VerifyRow>) {
    for &f in reach {
        let x = a * f;
        let case = format!("{case}; x={x}; log10");
        match growth_bound(p, a, b, x) {
            Ok(_) => rows.push(row(
                "growth_bound",
                case,
                p.eval(x).abs().log10(),
                b.log10() + p.degree() as f64 * (2.0 * x.abs() / a).log10(),
            )),
            Err(e) => rows.push(failed("growth_bound", case, e)),
        }
    }
}

fn shorttail_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    for c in &cfg.shorttail_cases {
        let (case, built) = match *c {
            ShorttailCase::Gaussian { sigma, gamma, tau } => {
                let case = format!("gaussian sigma={sigma} gamma={gamma} tau={tau}");
                let built = crate::density::TruncatedGaussian::new(sigma, 1.0)
                    .and_then(|g| sign_approx_shorttail(sigma, gamma, tau, &g, cfg.shorttail));
                (case, built.map(|b| (b, tau)))
            }
            ShorttailCase::Sphere { d, tau } => {
                let sigma = 1.0 / (d as f64).sqrt();
                let case = format!("sphere d={d} tau={tau}");
                let built = SphereMarginal::new(d, 1.0)
                    .and_then(|m| sign_approx_shorttail(sigma, sigma, tau, &m, cfg.shorttail));
                (case, built.map(|b| (b, tau)))
            }
            ShorttailCase::Strip { d, gamma, theta, tau } => {
                let case = format!("strip d={d} gamma={gamma} theta={theta} tau={tau}");
                let bound = theta.sin() / (2.0 * gamma * (d as f64).sqrt());
                if !(tau < bound) || gamma >= 0.5 {
                    rows.push(precondition("shorttail_l1", case, tau, bound));
                    continue;
                }
                let sigma = theta.sin() / (d as f64).sqrt();
                let built = StripDensity::new(StripDensityParams {
                    dimension: d,
                    half_width: gamma,
                    angle: theta,
                })
                .and_then(|s| sign_approx_shorttail(sigma, gamma, tau, &s, cfg.shorttail));
                (case, built.map(|b| (b, tau)))
            }
        };
        match built {
            Ok((b, tau)) => rows.push(row(
                "shorttail_l1",
                format!("{case}; degree {}", b.certificate.degree),
                b.certificate.l1_error.unwrap_or(f64::NAN),
                tau,
            )),
            Err(e) => rows.push(failed("shorttail_l1", case, e)),
        }
    }
}

/// Mean and standard error of `|p(⟨w*, x⟩) − sign(⟨w*, x⟩)|` over uniform
/// points, optionally restricted to `|⟨e_1, x⟩| ≤ γ`, with
/// `w* = cos θ e_1 + sin θ e_2`.
fn lifted_l1_mc(
    p: &UnivariatePolynomial,
    d: usize,
    strip: Option<(f64, f64)>,
    n: u64,
    seed: u64,
) -> (f64, f64) {
    let (gamma, theta) = strip.unwrap_or((1.0, 0.0));
    let (s, c) = theta.sin_cos();
    let mut kept = 0u64;
    let (mut sum, mut sq) = (0.0, 0.0);
    let mut round = 0;
    while kept < n {
        let parts = par_chunks(CHUNK * 8, rng::child_seed(seed, round), |r, range| {
            let mut x = vec![0.0; d];
            let mut proj = Vec::with_capacity(range.len());
            for _ in range {
                fill_uniform_sphere(r, &mut x);
                if x[0].abs() <= gamma {
                    proj.push(c * x[0] + s * x[1]);
                }
            }
            let mut vals = vec![0.0; proj.len()];
            p.eval_batch(&proj, &mut vals);
            proj.iter()
                .zip(&vals)
                .map(|(z, v)| (v - if *z > 0.0 { 1.0 } else { -1.0 }).abs())
                .collect::<Vec<_>>()
        });
        for e in parts.into_iter().flatten() {
            if kept == n {
                break;
            }
            kept += 1;
            sum += e;
            sq += e * e;
        }
        round += 1;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

fn lift_rows(cfg: &VerifyConfig, rows: &mut Vec<VerifyRow>) {
    for (k, &(d, tau)) in cfg.uniform_lift_cases.iter().enumerate() {
        let case = format!("uniform d={d} tau={tau}");
        let sigma = 1.0 / (d as f64).sqrt();
        let built = SphereMarginal::new(d, 1.0)
            .and_then(|m| sign_approx_shorttail(sigma, sigma, tau, &m, cfg.shorttail));
        match built {
            Ok(b) => {
                let (mean, se) = lifted_l1_mc(
                    &b.polynomial,
                    d,
                    None,
                    cfg.mc_samples,
                    rng::child_seed(cfg.seed, 300 + k as u64),
                );
                rows.push(row(
                    "uniform_halfspace_l1",
                    format!("{case}; mc n={}, stderr {se:.2e}", cfg.mc_samples),
                    mean,
                    tau + 3.0 * se,
                ));
            }
            Err(e) => rows.push(failed("uniform_halfspace_l1", case, e)),
        }
    }
    for (k, c) in cfg.strip_lift_cases.iter().enumerate() {
        let case = format!("strip d={} gamma={} theta={} tau={}", c.d, c.gamma, c.theta, c.tau);
        let bound = c.theta.sin() / (2.0 * c.gamma * (c.d as f64).sqrt());
        if !(c.tau < bound) || c.gamma >= 0.5 {
            rows.push(precondition("strip_halfspace_l1", case, c.tau, bound));
            continue;
        }
        let sigma = c.theta.sin() / (c.d as f64).sqrt();
        let built = StripDensity::new(StripDensityParams {
            dimension: c.d,
            half_width: c.gamma,
            angle: c.theta,
        })
        .and_then(|s| sign_approx_shorttail(sigma, c.gamma, c.tau, &s, cfg.shorttail));
        match built {
            Ok(b) => {
                let (mean, se) = lifted_l1_mc(
                    &b.polynomial,
                    c.d,
                    Some((c.gamma, c.theta)),
                    cfg.mc_samples,
                    rng::child_seed(cfg.seed, 400 + k as u64),
                );
                rows.push(row(
                    "strip_halfspace_l1",
                    format!("{case}; mc n={}, stderr {se:.2e}", cfg.mc_samples),
                    mean,
                    c.tau + 3.0 * se,
                ));
            }
            Err(e) => rows.push(failed("strip_halfspace_l1", case, e)),
        }
    }
}

/// Runs every check in `cfg` and collects the rows in a fixed order.
pub fn verify_suite(cfg: &VerifyConfig) -> VerifyReport {
    let mut rows = Vec::new();
    marginal_rows(cfg, &mut rows);
    strip_rows(cfg, &mut rows);
    localization_rows(cfg, &mut rows);
    polynomial_rows(cfg, &mut rows);
    shorttail_rows(cfg, &mut rows);
    lift_rows(cfg, &mut rows);
    VerifyReport::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).rev().map(|i| (i as f64 + 0.5) / n as f64).collect();
        let ks = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((ks - 0.5 / n as f64).abs() < 1e-12, "{ks}");
        let mut shifted: Vec<f64> = xs.iter().map(|x| x * 0.5).collect();
        assert!(ks_statistic(&mut shifted, |x| x.clamp(0.0, 1.0)) > 0.49);
    }

    #[test]
    fn quick_suite_passes_and_is_deterministic() {
        let cfg = VerifyConfig::quick();
        let a = verify_suite(&cfg);
        let bad: Vec<_> = a.rows.iter().filter(|r| r.status != Status::Pass).collect();
        assert!(bad.is_empty(), "{bad:#?}");
        assert!(a.passed >= 15);
        let b = verify_suite(&cfg);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn violated_hypothesis_is_reported_not_checked() {
        let cfg = VerifyConfig {
            shorttail_cases: vec![ShorttailCase::Strip {
                d: 100,
                gamma: 0.2,
                theta: 0.1,
                tau: 0.25,
            }],
            strip_lift_cases: vec![StripLiftCase {
                d: 100,
                gamma: 0.2,
                theta: 0.1,
                tau: 0.25,
            }],
            ..VerifyConfig::empty()
        };
        let rep = verify_suite(&cfg);
        let pre: Vec<_> = rep.rows.iter().filter(|r| r.status == Status::Precondition).collect();
        assert_eq!(pre.len(), 2);
        assert!(rep.all_passed());
    }

    fn marginal_only(dims: Vec<usize>) -> VerifyConfig {
        VerifyConfig {
            marginal_dims: dims,
            marginal_grid: 101,
            ..VerifyConfig::empty()
        }
    }

    #[test]
    fn gaussian_bound_rows_per_grid_point() {
        let rep = verify_suite(&marginal_only(vec![3, 4, 5]));
        let n = rep.rows.iter().filter(|r| r.check == "marginal_gaussian_bound").count();
        assert_eq!(n, 3 * 101);
    }

    #[test]
    fn gaussian_bound_fails_near_the_poles_at_d2() {
        // the arcsine density 1/(π√(1−t²)) is unbounded, so no Gaussian
        // envelope can hold at the ends of [−1, 1]
        let rep = verify_suite(&marginal_only(vec![2]));
        let bad: Vec<_> = rep.rows.iter().filter(|r| r.status == Status::Fail).collect();
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|r| r.check == "marginal_gaussian_bound"));
        let norm = rep.rows.iter().find(|r| r.check == "marginal_normalization").unwrap();
        assert_eq!(norm.status, Status::Pass, "{norm:?}");
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = VerifyConfig::default();
        let js = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<VerifyConfig>(&js).unwrap(), cfg);
        let partial: VerifyConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.booster_taus, cfg.booster_taus);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rep = VerifyReport::new(vec![row("x", "c".into(), 0.1, 0.2)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        rep.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("check,case,lhs,rhs,status\n"), "{text}");
        assert!(text.contains("pass"));
    }
}
