//! Points on the unit sphere, strips around great circles, and the densities
//! of one-dimensional projections of the uniform measure.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_batch, QuadOptions};
use crate::rng;

/// Largest dimension accepted anywhere in the crate.
pub const MAX_DIMENSION: usize = 1_000_000;

/// Constant `c` in `strip_mass(d, γ) ≥ c·min(γ√d, 1)`. The infimum over all
/// `d ≥ 2` and `γ ∈ (0, 1]` is `√2/π ≈ 0.4502`, approached at `d = 2`, `γ → 0`.
pub const STRIP_MASS_LOWER_CONSTANT: f64 = 0.45;

const NORM_TOL: f64 = 1e-12;

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {d}")));
    }
    if d > MAX_DIMENSION {
        return Err(Error::Capacity {
            what: "dimension",
            requested: d,
            cap: MAX_DIMENSION,
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A point on `S^{d-1}`, `d ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Scales `coords` to unit length.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        let norm = dot(&coords, &coords).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid(format!("cannot normalize vector with norm {norm}")));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        // One more pass absorbs the rounding of the first division.
        let norm = dot(&coords, &coords).sqrt();
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { coords })
    }

    /// Wraps coordinates that are already unit length.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        let norm = dot(&coords, &coords).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("expected a unit vector, norm is {norm}")));
        }
        Ok(Self { coords })
    }

    /// The standard basis vector `e_{i+1}` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        check_dimension(d)?;
        if i >= d {
            return Err(invalid(format!("basis index {i} out of range for d = {d}")));
        }
        let mut coords = vec![0.0; d];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        check_dimension(d)?;
        let mut coords = vec![0.0; d];
        fill_uniform_sphere(rng, &mut coords);
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        dot(&self.coords, x)
    }

    pub fn negated(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// A uniformly random unit vector at angle exactly `theta` from `self`.
    pub fn at_angle<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(invalid(format!("angle must lie in [0, π], got {theta}")));
        }
        let d = self.dim();
        // Random direction orthogonal to self via Gram-Schmidt.
        let u = loop {
            let mut g = vec![0.0; d];
            fill_uniform_sphere(rng, &mut g);
            let proj = self.dot(&g);
            g.iter_mut().zip(&self.coords).for_each(|(gi, wi)| *gi -= proj * wi);
            let n = dot(&g, &g).sqrt();
            if n > 1e-6 {
                g.iter_mut().for_each(|gi| *gi /= n);
                break g;
            }
        };
        let (s, c) = theta.sin_cos();
        Self::normalize(self.coords.iter().zip(&u).map(|(w, u)| c * w + s * u).collect())
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::normalize(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.coords
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Overwrites `out` with a uniform point on the sphere of dimension `out.len()`.
pub fn fill_uniform_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
            sq += *c * *c;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

/// `n` i.i.d. uniform points on `S^{d-1}`, reproducible from `seed`.
pub fn sample_uniform_sphere(d: usize, n: usize, seed: u64) -> Result<Vec<UnitVector>> {
    check_dimension(d)?;
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    let chunks = rng::par_chunks(n, seed, |rng, range| {
        range
            .map(|_| {
                let mut coords = vec![0.0; d];
                fill_uniform_sphere(rng, &mut coords);
                UnitVector { coords }
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn check_same_dim(a: &UnitVector, b: &UnitVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

pub fn angle(w: &UnitVector, w_star: &UnitVector) -> Result<f64> {
    check_same_dim(w, w_star)?;
    Ok(w.dot(w_star.as_slice()).clamp(-1.0, 1.0).acos())
}

/// Uniform-measure probability that `h_w` and `h_{w*}` disagree.
pub fn disagreement_mass(w: &UnitVector, w_star: &UnitVector) -> Result<f64> {
    Ok(angle(w, w_star)? / PI)
}

/// Density of `⟨e, x⟩` for `x` uniform on the sphere of radius `radius` in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereMarginal {
    d: usize,
    radius: f64,
    log_norm: f64,
}

impl SphereMarginal {
    pub fn new(d: usize, radius: f64) -> Result<Self> {
        check_dimension(d)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        // 1 / B(1/2, (d-1)/2)
        let half = (d as f64 - 1.0) / 2.0;
        let log_norm = libm::lgamma(half + 0.5) - libm::lgamma(0.5) - libm::lgamma(half);
        Ok(Self {
            d,
            radius,
            log_norm,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = (t / self.radius).abs();
        if u > 1.0 {
            return 0.0;
        }
        let exponent = (self.d as f64 - 3.0) / 2.0;
        if exponent == 0.0 {
            return self.log_norm.exp() / self.radius;
        }
        let log_base = if u * u < 0.5 {
            (-u * u).ln_1p()
        } else {
            ((1.0 - u) * (1.0 + u)).ln()
        };
        (self.log_norm + exponent * log_base).exp() / self.radius
    }
}

impl Density for SphereMarginal {
    fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.value(x))
    }

    fn support(&self) -> (f64, f64) {
        (-self.radius, self.radius)
    }
}

/// `ρ_{d,r}(t) = ρ_{d,1}(t/r)/r`.
pub fn marginal_density(d: usize, radius: f64, t: f64) -> Result<f64> {
    Ok(SphereMarginal::new(d, radius)?.value(t))
}

/// Whether `ρ_{d,1}(t) ≤ √d·exp(−t²d/4)`.
pub fn marginal_density_bound_check(d: usize, t: f64) -> bool {
    match SphereMarginal::new(d, 1.0) {
        Ok(m) => {
            let df = d as f64;
            m.value(t) <= df.sqrt() * (-t * t * df / 4.0).exp()
        }
        Err(_) => false,
    }
}

/// `T_{d,γ}(w) = {u : |⟨w,u⟩| ≤ γ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub center: UnitVector,
    pub half_width: f64,
}

impl StripSpec {
    pub fn new(center: UnitVector, half_width: f64) -> Result<Self> {
        check_half_width(half_width)?;
        Ok(Self { center, half_width })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.center.dot(x).abs() <= self.half_width
    }
}

fn check_half_width(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("strip half-width must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// Uniform-measure probability of a strip of half-width `gamma` in dimension `d`.
pub fn strip_mass(d: usize, gamma: f64) -> Result<f64> {
    check_dimension(d)?;
    check_half_width(gamma)?;
    if gamma == 1.0 {
        return Ok(1.0);
    }
    let m = SphereMarginal::new(d, 1.0)?;
    // t = sin φ removes the endpoint singularity at d = 2 and keeps the
    // integrand smooth for every d.
    let exponent = d as f64 - 2.0;
    let lim = gamma.asin();
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        ..QuadOptions::default()
    };
    let r = integrate(
        |phi: f64| (m.log_norm + exponent * phi.cos().ln()).exp(),
        0.0,
        lim,
        opts,
    )?;
    Ok((2.0 * r.value).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripDensityParams {
    pub dimension: usize,
    pub half_width: f64,
    pub angle: f64,
}

impl StripDensityParams {
    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        if self.dimension < 3 {
            return Err(invalid("strip projected density needs d ≥ 3"));
        }
        check_half_width(self.half_width)?;
        if !(self.angle > 0.0 && self.angle < PI) {
            return Err(invalid(format!("angle must lie in (0, π), got {}", self.angle)));
        }
        Ok(())
    }

    /// Sup-norm ceiling `√d / (sin θ·√(1−γ²))`.
    pub fn sup_bound(&self) -> f64 {
        let g = self.half_width;
        (self.dimension as f64).sqrt() / (self.angle.sin() * ((1.0 - g) * (1.0 + g)).sqrt())
    }

    /// Gaussian-type tail bound at `|z| ≥ γ`.
    pub fn tail_bound(&self, z: f64) -> f64 {
        let s = self.angle.sin();
        let excess = z.abs() - self.half_width;
        self.sup_bound() * (-(self.dimension as f64 - 1.0) * excess * excess / (4.0 * s * s)).exp()
    }
}

/// Density of `⟨w*, x⟩` for `x` uniform on `T_{d,γ}(w)` where `θ(w, w*) = angle`.
///
/// Writing `x = αw + √(1−α²)v` with `v` uniform on the sphere orthogonal to
/// `w`, the projection is `α cos θ` plus `sin θ √(1−α²)` times a `ρ_{d−1,1}`
/// variable, so
///
/// `ρ(z) = (1/A) ∫_{−γ}^{γ} ρ_{d,1}(α) ρ_{d−1, sin θ √(1−α²)}(z − α cos θ) dα`.
///
/// This is the `u = α cos θ` form with the Jacobian absorbed, and it stays
/// valid for `θ ≥ π/2`.
#[derive(Debug, Clone)]
pub struct StripDensity {
    params: StripDensityParams,
    outer: SphereMarginal,
    inner: SphereMarginal,
    mass: f64,
    opts: QuadOptions,
}

impl StripDensity {
    pub fn new(params: StripDensityParams) -> Result<Self> {
        params.validate()?;
        let mass = strip_mass(params.dimension, params.half_width)?;
        Ok(Self {
            params,
            outer: SphereMarginal::new(params.dimension, 1.0)?,
            inner: SphereMarginal::new(params.dimension - 1, 1.0)?,
            mass,
            opts: QuadOptions {
                abs_tol: 1e-8 * mass,
                rel_tol: 1e-10,
                ..QuadOptions::default()
            },
        })
    }

    pub fn params(&self) -> &StripDensityParams {
        &self.params
    }

    /// Probability `A` of the strip.
    pub fn strip_mass(&self) -> f64 {
        self.mass
    }

    fn z_max(&self) -> f64 {
        let lo = self.params.half_width.acos();
        let hi = PI - lo;
        let gap = if self.params.angle < lo {
            lo - self.params.angle
        } else if self.params.angle > hi {
            self.params.angle - hi
        } else {
            0.0
        };
        gap.cos()
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&z) {
            return Ok(0.0);
        }
        let gamma = self.params.half_width;
        let (s, c) = self.params.angle.sin_cos();
        let spread = s * ((1.0 - z) * (1.0 + z)).sqrt();
        let lo = (-gamma).max(z * c - spread);
        let hi = gamma.min(z * c + spread);
        if hi <= lo {
            return Ok(0.0);
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        // α = mid + half·sin φ: the dα = half·cos φ dφ factor cancels the
        // inverse square-root singularities at roots of the inner marginal.
        let r = integrate_batch(
            |phis, out| {
                for (phi, o) in phis.iter().zip(out.iter_mut()) {
                    let (sp, cp) = phi.sin_cos();
                    let alpha = mid + half * sp;
                    let radius = s * ((1.0 - alpha) * (1.0 + alpha)).max(0.0).sqrt();
                    *o = if radius <= 0.0 {
                        0.0
                    } else {
                        let v = (z - alpha * c) / radius;
                        let inner = if v.abs() >= 1.0 {
                            0.0
                        } else {
                            self.inner.value(v) / radius
                        };
                        half * cp * self.outer.value(alpha) * inner
                    };
                }
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            self.opts,
        )
        .map_err(|e| match e {
            Error::NumericFailure { diagnostics, .. } => Error::NumericFailure {
                context: "strip projected density",
                diagnostics: format!(
                    "d = {}, γ = {}, θ = {}, z = {z}: {diagnostics}",
                    self.params.dimension, self.params.half_width, self.params.angle
                ),
            },
            other => other,
        })?;
        Ok((r.value / self.mass).max(0.0))
    }
}

impl Density for StripDensity {
    fn pdf(&self, x: f64) -> Result<f64> {
        self.value(x)
    }

    fn support(&self) -> (f64, f64) {
        let z = self.z_max();
        (-z, z)
    }

    fn breakpoints(&self) -> Vec<f64> {
        // The integration window changes shape where z cos θ ± sin θ √(1−z²)
        // crosses ±γ, i.e. at z = cos(θ ± ψ) for ψ ∈ {acos γ, π − acos γ}.
        let a = self.params.half_width.acos();
        let th = self.params.angle;
        let zmax = self.z_max();
        let mut pts: Vec<f64> = [th + a, th - a, th + PI - a, th - PI + a]
            .iter()
            .flat_map(|&p| [p.cos(), -p.cos()])
            .filter(|z| z.abs() < zmax)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        pts
    }
}

pub fn strip_projected_density(params: StripDensityParams, z: f64) -> Result<f64> {
    StripDensity::new(params)?.value(z)
}

/// Whether the strip density at `|z| ≥ γ` respects [`StripDensityParams::tail_bound`].
pub fn strip_density_tail_check(params: StripDensityParams, z: f64) -> bool {
    if z.abs() < params.half_width {
        return false;
    }
    match strip_projected_density(params, z) {
        Ok(v) => v <= params.tail_bound(z),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::beta::beta_reg;

    #[test]
    fn angles_of_basis_vectors() {
        let e1 = UnitVector::basis(3, 0).unwrap();
        let e2 = UnitVector::basis(3, 1).unwrap();
        assert_eq!(angle(&e1, &e1).unwrap(), 0.0);
        assert!((angle(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((angle(&e1, &e1.negated()).unwrap() - PI).abs() < 1e-15);
        assert!((disagreement_mass(&e1, &e2).unwrap() - 0.5).abs() < 1e-15);
        let e4 = UnitVector::basis(4, 0).unwrap();
        assert!(angle(&e1, &e4).is_err());
    }

    #[test]
    fn sampler_rejects_bad_input() {
        assert!(sample_uniform_sphere(1, 5, 0).is_err());
        assert!(sample_uniform_sphere(3, 0, 0).is_err());
        assert!(matches!(
            UnitVector::basis(MAX_DIMENSION + 1, 0),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn sampler_is_seeded() {
        let a = sample_uniform_sphere(4, 100, 7).unwrap();
        let b = sample_uniform_sphere(4, 100, 7).unwrap();
        let c = sample_uniform_sphere(4, 100, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn marginal_special_cases() {
        assert!((marginal_density(3, 1.0, 0.7).unwrap() - 0.5).abs() < 1e-14);
        assert!((marginal_density(2, 1.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert_eq!(marginal_density(5, 1.0, 1.5).unwrap(), 0.0);
        // radius scaling
        let a = marginal_density(7, 2.0, 0.6).unwrap();
        let b = marginal_density(7, 1.0, 0.3).unwrap() / 2.0;
        assert!((a - b).abs() < 1e-15);
        assert!(marginal_density(4, 0.0, 0.1).is_err());
    }

    #[test]
    fn marginal_normalizer_is_stable_in_high_dimension() {
        let v = marginal_density(10_000, 1.0, 0.0).unwrap();
        // c_d ~ √(d/2π)
        assert!((v / (10_000.0 / (2.0 * PI)).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn strip_mass_matches_incomplete_beta() {
        // P(|t| ≤ γ) = I_{γ²}(1/2, (d−1)/2)
        for d in [2usize, 3, 5, 20, 100, 2000] {
            for g in [0.01, 0.05, 0.3, 0.9] {
                let want = beta_reg(0.5, (d as f64 - 1.0) / 2.0, g * g);
                let got = strip_mass(d, g).unwrap();
                assert!((got - want).abs() < 1e-10, "d={d} γ={g}: {got} vs {want}");
            }
        }
        assert_eq!(strip_mass(9, 1.0).unwrap(), 1.0);
        assert!((strip_mass(3, 0.3).unwrap() - 0.3).abs() < 1e-12);
        assert!(strip_mass(3, 0.0).is_err());
        assert!(strip_mass(3, 1.1).is_err());
    }

    #[test]
    fn strip_mass_lower_bound_constant() {
        for d in [2usize, 3, 4, 10, 100, 10_000] {
            for k in 1..=50 {
                let g = k as f64 / 50.0;
                let m = strip_mass(d, g).unwrap();
                assert!(m >= STRIP_MASS_LOWER_CONSTANT * (g * (d as f64).sqrt()).min(1.0));
            }
        }
    }

    #[test]
    fn strip_density_normalises() {
        for (d, g, th) in [(3, 1.0, 0.5), (4, 0.2, 1.0), (10, 0.1, 0.4), (50, 0.05, 0.3), (6, 0.5, 2.5)] {
            let rho = StripDensity::new(StripDensityParams {
                dimension: d,
                half_width: g,
                angle: th,
            })
            .unwrap();
            let (lo, hi) = rho.support();
            let total = crate::density::tabulate_cdf(&rho, &[lo, hi], QuadOptions::with_abs_tol(1e-7))
                .unwrap()[1];
            assert!((total - 1.0).abs() < 1e-6, "d={d} γ={g} θ={th}: {total}");
        }
    }

    #[test]
    fn strip_density_full_sphere_is_marginal() {
        // γ = 1 keeps the whole sphere, so ⟨w*, x⟩ is ρ_{d,1}.
        let p = StripDensityParams {
            dimension: 5,
            half_width: 1.0,
            angle: 0.7,
        };
        for z in [-0.9, -0.3, 0.0, 0.2, 0.8] {
            let got = strip_projected_density(p, z).unwrap();
            let want = marginal_density(5, 1.0, z).unwrap();
            assert!((got - want).abs() < 1e-7, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn density_bounds_spot_checks() {
        assert!(marginal_density_bound_check(3, 0.0));
        assert!(marginal_density_bound_check(20, 0.5));
        assert!(marginal_density_bound_check(50, 0.99));
        let p = StripDensityParams {
            dimension: 10,
            half_width: 0.1,
            angle: 0.4,
        };
        assert!(strip_density_tail_check(p, 0.1));
        assert!(strip_density_tail_check(p, 0.5));
        let p = StripDensityParams {
            dimension: 30,
            half_width: 0.05,
            angle: 0.2,
        };
        assert!(strip_density_tail_check(p, 0.4));
    }

    proptest! {
        #[test]
        fn normalize_gives_unit_norm(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
            prop_assume!(dot(&v, &v) > 1e-12);
            let u = UnitVector::normalize(v).unwrap();
            prop_assert!((dot(u.as_slice(), u.as_slice()).sqrt() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn marginal_is_even(d in 2usize..200, r in 0.1f64..3.0, t in -3.0f64..3.0) {
            let a = marginal_density(d, r, t).unwrap();
            let b = marginal_density(d, r, -t).unwrap();
            prop_assert!(a == b);
        }

        #[test]
        fn at_angle_hits_the_angle(d in 2usize..20, theta in 0.0f64..PI, seed in any::<u64>()) {
            let mut rng = rng::stream(seed, 0);
            let w = UnitVector::random(d, &mut rng).unwrap();
            let v = w.at_angle(theta, &mut rng).unwrap();
            prop_assert!((angle(&w, &v).unwrap() - theta).abs() < 1e-6);
        }
    }
}
