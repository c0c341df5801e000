//! One-dimensional probability densities with bounded support.

use std::f64::consts::PI;


use crate::error::{invalid, Result};
use crate::quadrature::{try_integrate, QuadOptions};

/// A density on the real line with support inside `support()`.
pub trait Density: Send + Sync {
    fn pdf(&self, x: f64) -> Result<f64>;

    fn support(&self) -> (f64, f64);

    /// Interior points where the density is not smooth. Quadrature splits there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn pdf(&self, x: f64) -> Result<f64> {
        (**self).pdf(x)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("uniform density needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

impl Density for Uniform {
    fn pdf(&self, x: f64) -> Result<f64> {
        Ok(if (self.lo..=self.hi).contains(&x) {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        })
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Centered Gaussian with standard deviation `sigma`, truncated to `[-bound, bound]`
/// and renormalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussian {
    sigma: f64,
    bound: f64,
    norm: f64,
}

impl TruncatedGaussian {
    pub fn new(sigma: f64, bound: f64) -> Result<Self> {
        if !(sigma > 0.0 && bound > 0.0 && sigma.is_finite() && bound.is_finite()) {
            return Err(invalid(format!(
                "truncated gaussian needs sigma > 0 and bound > 0, got {sigma}, {bound}"
            )));
        }
        let mass = libm::erf(bound / (sigma * 2f64.sqrt()));
        Ok(Self {
            sigma,
            bound,
            norm: 1.0 / (sigma * (2.0 * PI).sqrt() * mass),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Density for TruncatedGaussian {
    fn pdf(&self, x: f64) -> Result<f64> {
        if x.abs() > self.bound {
            return Ok(0.0);
        }
        let z = x / self.sigma;
        Ok(self.norm * (-0.5 * z * z).exp())
    }

    fn support(&self) -> (f64, f64) {
        (-self.bound, self.bound)
    }
}

/// Cumulative distribution at each point of the sorted `grid`, integrating the
/// density from the left end of its support.
pub fn tabulate_cdf(density: &dyn Density, grid: &[f64], opts: QuadOptions) -> Result<Vec<f64>> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("cdf grid must be sorted"));
    }
    let (lo, hi) = density.support();
    let mut cuts = density.breakpoints();
    cuts.retain(|b| *b > lo && *b < hi);
    let mut acc = 0.0;
    let mut prev = lo;
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let x = x.clamp(lo, hi);
        if x > prev {
            let mut pts = vec![prev];
            pts.extend(cuts.iter().copied().filter(|c| *c > prev && *c < x));
            pts.push(x);
            for w in pts.windows(2) {
                acc += try_integrate(|t| density.pdf(t), w[0], w[1], opts)?.value;
            }
            prev = x;
        }
        out.push(acc);
    }
    Ok(out)
}
