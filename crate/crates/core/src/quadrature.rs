//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! The integrator keeps every panel in a max-heap keyed by its error estimate
//! and bisects the worst one until the summed estimate drops below the
//! requested tolerance. Integrands are evaluated in batches of abscissae so
//! that expensive polynomial evaluations can run lane-parallel.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_745_923,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const NODES: usize = 21;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 0.0,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            // deterministic tie-break on position
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn abscissae(a: f64, b: f64, out: &mut [f64]) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for j in 0..10 {
        out[2 * j] = center - half * XGK[j];
        out[2 * j + 1] = center + half * XGK[j];
    }
    out[20] = center;
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn combine(a: f64, b: f64, ys: &[f64]) -> Result<Panel> {
    if let Some(bad) = ys.iter().position(|y| !y.is_finite()) {
        let mut xs = [0.0; NODES];
        abscissae(a, b, &mut xs);
        return Err(Error::NumericFailure {
            context: "quadrature",
            diagnostics: format!("integrand returned {} at x = {:.17e}", ys[bad], xs[bad]),
        });
    }
    let half = 0.5 * (b - a);
    let f_center = ys[20];
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    for j in 0..10 {
        let (f1, f2) = (ys[2 * j], ys[2 * j + 1]);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((ys[2 * j] - mean).abs() + (ys[2 * j + 1] - mean).abs());
    }
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over `[a, b]` where `f` fills `ys[i] = f(xs[i])` for a
/// batch of abscissae.
pub fn integrate_batch<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(&[f64], &mut [f64]),
{
    integrate_batch_with_breakpoints(f, &[a, b], opts)
}

/// Scalar-integrand convenience wrapper over [`integrate_batch`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    integrate_batch(
        |xs, ys| {
            for (x, y) in xs.iter().zip(ys.iter_mut()) {
                *y = f(*x);
            }
        },
        a,
        b,
        opts,
    )
}

/// Fallible scalar integrand; the first error aborts the integration.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut failure = None;
    let res = integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
                f64::NAN
            }
        },
        a,
        b,
        opts,
    );
    match failure {
        Some(e) => Err(e),
        None => res,
    }
}

/// Integrates over consecutive pieces delimited by `points` (sorted), sharing a
/// single global error budget across pieces.
pub fn integrate_batch_with_breakpoints<F>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least two breakpoints".into(),
        ));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "quadrature limits must be finite".into(),
        ));
    }
    let (lo, hi) = (points[0], points[points.len() - 1]);
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
            evaluations: 0,
        });
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "quadrature breakpoints must be non-decreasing".into(),
        ));
    }

    let mut xs = vec![0.0; 2 * NODES];
    let mut ys = vec![0.0; 2 * NODES];
    let mut evaluations = 0usize;
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;

    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        abscissae(w[0], w[1], &mut xs[..NODES]);
        f(&xs[..NODES], &mut ys[..NODES]);
        evaluations += NODES;
        heap.push(combine(w[0], w[1], &ys[..NODES])?);
    }

    let mut subdivisions = heap.len();
    let tolerance = |value: f64| opts.abs_tol.max(opts.rel_tol * value.abs());

    loop {
        let (value, error) = heap
            .iter()
            .fold((frozen_value, frozen_error), |(v, e), p| (v + p.value, e + p.error));
        if error <= tolerance(value) || heap.is_empty() {
            return Ok(QuadResult {
                value,
                abs_error: error,
                subdivisions,
                evaluations,
            });
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(Error::NumericFailure {
                context: "quadrature",
                diagnostics: format!(
                    "no convergence on [{lo}, {hi}] after {subdivisions} subdivisions: \
                     estimate {value:.12e}, error {error:.3e}, tolerance {:.3e}",
                    tolerance(value)
                ),
            });
        }
        // Refine a batch of the worst panels per sweep to amortise the
        // error re-summation.
        let sweep = (heap.len() / 8).clamp(1, 64);
        for _ in 0..sweep {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            let width = worst.b - worst.a;
            if width <= 64.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE) {
                // Cannot be bisected further in floating point.
                frozen_value += worst.value;
                frozen_error += worst.error;
                continue;
            }
            abscissae(worst.a, mid, &mut xs[..NODES]);
            abscissae(mid, worst.b, &mut xs[NODES..]);
            f(&xs, &mut ys);
            evaluations += 2 * NODES;
            heap.push(combine(worst.a, mid, &ys[..NODES])?);
            heap.push(combine(mid, worst.b, &ys[NODES..])?);
            subdivisions += 1;
        }
        if heap.is_empty() && frozen_error > tolerance(frozen_value) {
            return Err(Error::NumericFailure {
                context: "quadrature",
                diagnostics: format!(
                    "roundoff limits refinement on [{lo}, {hi}]: error {frozen_error:.3e}"
                ),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(|x| 3.0 * x * x + 2.0 * x + 1.0, -1.0, 2.0, QuadOptions::default()).unwrap();
        // x^3 + x^2 + x from -1 to 2: (8 + 4 + 2) - (-1 + 1 - 1) = 15
        assert!((r.value - 15.0).abs() < 1e-12);
        assert_eq!(r.subdivisions, 1);
    }

    #[test]
    fn integrates_smooth_functions() {
        let r = integrate(f64::exp, 0.0, 1.0, QuadOptions::with_abs_tol(1e-12)).unwrap();
        assert!((r.value - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        let r = integrate(|x| (1.0 - x * x).sqrt(), -1.0, 1.0, QuadOptions::with_abs_tol(1e-9)).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn kink_needs_subdivision() {
        let r = integrate(|x: f64| (x - 0.3).abs(), -1.0, 1.0, QuadOptions::with_abs_tol(1e-10)).unwrap();
        // 0.5 * 1.3^2 + 0.5 * 0.7^2
        assert!((r.value - 1.09).abs() < 1e-10);
        assert!(r.subdivisions > 1);
    }

    #[test]
    fn breakpoints_split_the_domain() {
        let step = |x: f64| if x > 0.25 { 1.0 } else { 0.0 };
        let r = integrate_batch_with_breakpoints(
            |xs, ys| xs.iter().zip(ys.iter_mut()).for_each(|(x, y)| *y = step(*x)),
            &[0.0, 0.25, 1.0],
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - 0.75).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, QuadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NumericFailure { .. }), "{err}");
    }

    #[test]
    fn subdivision_cap_is_enforced() {
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 0.0,
            max_subdivisions: 5,
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, opts).unwrap_err();
        assert!(matches!(err, Error::NumericFailure { .. }));
    }
}
