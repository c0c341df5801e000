//! Least-absolute-deviations fitting, `min_β Σ|y_i − ⟨φ_i, β⟩|`.
//!
//! Solved through the bounded dual `max yᵀλ s.t. Φᵀλ = 0, λ ∈ [−1, 1]^m` by a
//! Mehrotra predictor-corrector interior point method. Each iterate yields a
//! primal candidate `β` and, after projecting `λ` back onto `null(Φᵀ)`, a
//! dual lower bound; the gap between the two is the optimality certificate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadOptions {
    pub max_iterations: usize,
    /// Required certified gap, averaged per sample.
    pub tolerance: f64,
}

impl Default for LadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadSolution {
    pub coefficients: Vec<f64>,
    /// `(1/m) Σ|y_i − ⟨φ_i, β⟩|`.
    pub mean_loss: f64,
    /// Certified upper bound on `mean_loss − optimum`.
    pub gap: f64,
    pub iterations: usize,
}

struct Projector {
    phi: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl Projector {
    fn new(phi: &DMatrix<f64>, gram: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(gram.clone());
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = top * f64::EPSILON * gram.nrows().max(1) as f64 * 16.0;
        let inv = eig.eigenvalues.map(|v| if v > cut { 1.0 / v } else { 0.0 });
        let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
        Self {
            phi: phi.clone(),
            pinv,
        }
    }

    /// Orthogonal projection of `lambda` onto `null(Φᵀ)`, then scaled into the box.
    fn feasible(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let mut l = lambda.clone();
        for _ in 0..2 {
            let g = self.phi.tr_mul(&l);
            let t = &self.pinv * g;
            l -= &self.phi * t;
        }
        let peak = l.amax();
        if peak > 1.0 {
            l /= peak;
        }
        l
    }
}

fn loss(phi: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    (y - phi * beta).iter().map(|r| r.abs()).sum()
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Basic solution through the `p` rows with the smallest residuals, which is
/// where an LAD optimum sits when the design has full column rank.
fn purify(phi: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> Option<DVector<f64>> {
    let (m, p) = phi.shape();
    if m < p {
        return None;
    }
    let res = y - phi * beta;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| res[a].abs().total_cmp(&res[b].abs()).then(a.cmp(&b)));
    let rows = &idx[..p];
    let sub = DMatrix::from_fn(p, p, |i, j| phi[(rows[i], j)]);
    let rhs = DVector::from_iterator(p, rows.iter().map(|&i| y[i]));
    let sol = sub.lu().solve(&rhs)?;
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

pub fn lad_solve(phi: &DMatrix<f64>, y: &[f64], opts: LadOptions) -> Result<LadSolution> {
    let (m, p) = phi.shape();
    if m == 0 || y.len() != m {
        return Err(invalid(format!("LAD needs m ≥ 1 rows matching y, got {m} rows, {} labels", y.len())));
    }
    if p == 0 {
        return Err(invalid("LAD needs at least one feature"));
    }
    if phi.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("LAD inputs must be finite"));
    }
    let yv = DVector::from_column_slice(y);
    let phit = phi.transpose();
    let gram = &phit * phi;
    let proj = Projector::new(phi, &gram);
    let mf = m as f64;

    // Best certificate pieces seen so far.
    let mut best_beta = &proj.pinv * (&phit * &yv);
    let mut upper = loss(phi, &yv, &best_beta);
    let mut lower = f64::NEG_INFINITY;

    // Dual variable x = λ + 1 ∈ [0, 2] with slack s = 2 − x; multipliers
    // z, w for the two bounds; π = −β for the equality Φᵀx = Φᵀ1.
    let mut x = DVector::from_element(m, 1.0);
    let mut s = DVector::from_element(m, 1.0);
    let mut pi = -best_beta.clone();
    let r0 = -&yv - phi * &pi;
    let mut z = r0.map(|r| r.max(0.0) + 1.0);
    let mut w = r0.map(|r| (-r).max(0.0) + 1.0);
    let ones = DVector::from_element(m, 1.0);
    let b = &phit * &ones;
    let trace = gram.trace().max(f64::MIN_POSITIVE);

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let beta = -&pi;
        let up = loss(phi, &yv, &beta);
        if up < upper {
            upper = up;
            best_beta = beta;
        }
        let lam = proj.feasible(&x.map(|v| v - 1.0));
        lower = lower.max(yv.dot(&lam));
        if (upper - lower) / mf <= 0.1 * opts.tolerance {
            break;
        }
        iterations += 1;

        let mu = (x.dot(&z) + s.dot(&w)) / (2.0 * mf);
        let r_b = &b - &phit * &x;
        let r_c = -&yv - phi * &pi - &z + &w;
        let theta = DVector::from_fn(m, |i, _| 1.0 / (z[i] / x[i] + w[i] / s[i]));

        let mut scaled = phit.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= theta[j];
        }
        let normal = &scaled * phi;
        let mut reg = 1e-14 * trace / p as f64;
        let chol = loop {
            let mut mtx = normal.clone();
            for i in 0..p {
                mtx[(i, i)] += reg;
            }
            if let Some(c) = mtx.cholesky() {
                break c;
            }
            reg *= 100.0;
            if reg > trace {
                return Err(Error::NumericFailure {
                    context: "LAD normal equations",
                    diagnostics: format!("Cholesky failed at iteration {iterations}"),
                });
            }
        };

        let solve = |r_xz: &DVector<f64>, r_sw: &DVector<f64>| {
            let q = DVector::from_fn(m, |i, _| r_xz[i] / x[i] - r_sw[i] / s[i] - r_c[i]);
            let rhs = &r_b - &phit * q.component_mul(&theta);
            let dpi = chol.solve(&rhs);
            let dx = (phi * &dpi + &q).component_mul(&theta);
            let dz = DVector::from_fn(m, |i, _| (r_xz[i] - z[i] * dx[i]) / x[i]);
            let dw = DVector::from_fn(m, |i, _| (r_sw[i] + w[i] * dx[i]) / s[i]);
            (dx, dpi, dz, dw)
        };

        // predictor
        let r_xz = -x.component_mul(&z);
        let r_sw = -s.component_mul(&w);
        let (dx, _, dz, dw) = solve(&r_xz, &r_sw);
        let ds = -&dx;
        let ap = max_step(&x, &dx).min(max_step(&s, &ds)).min(1.0);
        let ad = max_step(&z, &dz).min(max_step(&w, &dw)).min(1.0);
        let mu_aff = ((&x + ap * &dx).dot(&(&z + ad * &dz)) + (&s + ap * &ds).dot(&(&w + ad * &dw))) / (2.0 * mf);
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let r_xz = DVector::from_fn(m, |i, _| sigma * mu - x[i] * z[i] - dx[i] * dz[i]);
        let r_sw = DVector::from_fn(m, |i, _| sigma * mu - s[i] * w[i] - ds[i] * dw[i]);
        let (dx, dpi, dz, dw) = solve(&r_xz, &r_sw);
        let ds = -&dx;
        let ap = (0.9995 * max_step(&x, &dx).min(max_step(&s, &ds))).min(1.0);
        let ad = (0.9995 * max_step(&z, &dz).min(max_step(&w, &dw))).min(1.0);
        x += ap * &dx;
        s += ap * &ds;
        pi += ad * &dpi;
        z += ad * &dz;
        w += ad * &dw;
        if !(x.iter().chain(z.iter()).chain(w.iter()).all(|v| v.is_finite())) {
            return Err(Error::NumericFailure {
                context: "LAD interior point",
                diagnostics: format!("non-finite iterate at iteration {iterations}"),
            });
        }
    }

    if let Some(pure) = purify(phi, &yv, &best_beta) {
        let up = loss(phi, &yv, &pure);
        if up < upper {
            upper = up;
            best_beta = pure;
        }
    }
    let gap = ((upper - lower) / mf).max(0.0);
    if gap > opts.tolerance {
        return Err(Error::OptimizationFailure {
            iterations,
            objective: upper / mf,
            gap,
        });
    }
    Ok(LadSolution {
        coefficients: best_beta.iter().copied().collect(),
        mean_loss: upper / mf,
        gap,
        iterations,
    })
}
