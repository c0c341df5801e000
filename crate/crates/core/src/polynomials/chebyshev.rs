//! Chebyshev series on an interval: interpolation and Clenshaw evaluation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Lanes evaluated in lockstep by the batch evaluators.
pub(crate) const LANES: usize = 8;

/// Coefficients `c_k` of the degree-`n` interpolant of `values` at the
/// Chebyshev-Lobatto points `cos(πj/n)`, `j = 0..=n`.
pub fn lobatto_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    if n == 0 {
        return vec![values[0]];
    }
    // DCT-I through a length-2n FFT of the even extension.
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * n);
    buf.extend(values.iter().map(|&v| Complex::new(v, 0.0)));
    buf.extend(values[1..n].iter().rev().map(|&v| Complex::new(v, 0.0)));
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut coeffs: Vec<f64> = buf[..=n].iter().map(|c| c.re * scale).collect();
    coeffs[0] *= 0.5;
    coeffs[n] *= 0.5;
    coeffs
}

/// Lobatto points mapped to `[lo, hi]`, in the order matching
/// [`lobatto_coefficients`].
pub fn lobatto_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 0 {
        return vec![0.5 * (lo + hi)];
    }
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..=n)
        .map(|j| {
            // sin form keeps the points symmetric to the last bit
            let t = (std::f64::consts::FRAC_PI_2 * (n as f64 - 2.0 * j as f64) / n as f64).sin();
            mid + half * t
        })
        .collect()
}

pub(crate) fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * x - (lo + hi)) / (hi - lo)
}

pub fn clenshaw(coeffs: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    let two_t = 2.0 * t;
    for &c in coeffs[1..].iter().rev() {
        let b0 = c + two_t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + t * b1 - b2
}

/// Clenshaw over many points; lanes advance together so the recurrence
/// pipelines across points instead of stalling on each one.
pub fn clenshaw_batch(coeffs: &[f64], ts: &[f64], out: &mut [f64]) {
    let mut ts_chunks = ts.chunks_exact(LANES);
    let mut out_chunks = out.chunks_exact_mut(LANES);
    for (t, o) in (&mut ts_chunks).zip(&mut out_chunks) {
        let mut two_t = [0.0; LANES];
        for l in 0..LANES {
            two_t[l] = 2.0 * t[l];
        }
        let mut b1 = [0.0; LANES];
        let mut b2 = [0.0; LANES];
        for &c in coeffs[1..].iter().rev() {
            for l in 0..LANES {
                let b0 = c + two_t[l] * b1[l] - b2[l];
                b2[l] = b1[l];
                b1[l] = b0;
            }
        }
        for l in 0..LANES {
            o[l] = coeffs[0] + t[l] * b1[l] - b2[l];
        }
    }
    for (t, o) in ts_chunks
        .remainder()
        .iter()
        .zip(out_chunks.into_remainder().iter_mut())
    {
        *o = clenshaw(coeffs, *t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_polynomials_exactly() {
        // 4x^3 - 3x = T_3
        let n = 5;
        let vals: Vec<f64> = lobatto_points(n, -1.0, 1.0)
            .iter()
            .map(|x| 4.0 * x * x * x - 3.0 * x)
            .collect();
        let c = lobatto_coefficients(&vals);
        for (k, ck) in c.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((ck - want).abs() < 1e-14, "c[{k}] = {ck}");
        }
    }

    #[test]
    fn clenshaw_matches_cosine_form() {
        let c = [0.3, -1.2, 0.5, 0.25, -0.125];
        for i in 0..=20 {
            let t = -1.0 + 0.1 * i as f64;
            let th = t.acos();
            let want: f64 = c.iter().enumerate().map(|(k, ck)| ck * (k as f64 * th).cos()).sum();
            assert!((clenshaw(&c, t) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn batch_agrees_with_scalar() {
        let c: Vec<f64> = (0..40).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let ts: Vec<f64> = (0..37).map(|i| -1.0 + i as f64 / 18.0).collect();
        let mut out = vec![0.0; ts.len()];
        clenshaw_batch(&c, &ts, &mut out);
        for (t, o) in ts.iter().zip(&out) {
            assert_eq!(*o, clenshaw(&c, *t));
        }
    }

    #[test]
    fn lobatto_points_are_symmetric() {
        let p = lobatto_points(7, -1.0, 1.0);
        for j in 0..=7 {
            assert_eq!(p[j], -p[7 - j]);
        }
        assert_eq!(p[0], 1.0);
    }
}
