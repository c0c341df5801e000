//! Monomials of total degree ≤ r in graded-lex order.

use crate::error::{Error, Result};

/// Default cap on the number of monomials.
pub const DEFAULT_FEATURE_CAP: usize = 20_000;

/// `C(d + r, r)`, saturating.
pub fn monomial_count(d: usize, r: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=r as u128 {
        acc = acc * (d as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Evaluation table for all monomials in `d` variables of degree ≤ `r`.
///
/// A monomial is a non-decreasing sequence of variable indices; each one is
/// its parent (the sequence minus its last index) times one variable, so a
/// feature vector costs one multiplication per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    d: usize,
    r: usize,
    parent: Vec<u32>,
    var: Vec<u32>,
    degree: Vec<u32>,
    last_exp: Vec<u32>,
}

impl MonomialBasis {
    pub fn new(d: usize, r: usize, cap: usize) -> Result<Self> {
        let count = monomial_count(d, r);
        if count > cap {
            return Err(Error::Capacity {
                what: "monomial features C(d+r, r)",
                requested: count,
                cap,
            });
        }
        let mut parent = Vec::with_capacity(count);
        let mut var = Vec::with_capacity(count);
        let mut degree = Vec::with_capacity(count);
        let mut last_exp = Vec::with_capacity(count);
        // the constant monomial; var = 0 lets every variable extend it
        parent.push(0);
        var.push(0);
        degree.push(0);
        last_exp.push(0);
        let mut level_start = 0;
        for k in 1..=r {
            let level_end = parent.len();
            for p in level_start..level_end {
                for j in var[p] as usize..d {
                    parent.push(p as u32);
                    var.push(j as u32);
                    degree.push(k as u32);
                    last_exp.push(last_exp[p] + u32::from(j + 1 == d));
                }
            }
            level_start = level_end;
        }
        debug_assert_eq!(parent.len(), count);
        Ok(Self {
            d,
            r,
            parent,
            var,
            degree,
            last_exp,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Fills `out` (length [`Self::len`]) with every monomial evaluated at `x`.
    pub fn features_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        out[0] = 1.0;
        for i in 1..self.parent.len() {
            out[i] = out[self.parent[i] as usize] * x[self.var[i] as usize];
        }
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.features_into(x, &mut out);
        out
    }

    /// Exponent vector of monomial `i`.
    pub fn exponents(&self, mut i: usize) -> Vec<u32> {
        let mut e = vec![0; self.d];
        while i != 0 {
            e[self.var[i] as usize] += 1;
            i = self.parent[i] as usize;
        }
        e
    }

    pub fn total_degree(&self, i: usize) -> usize {
        self.degree[i] as usize
    }

    /// Indices of the monomials whose exponent of the last variable is ≤ 1.
    ///
    /// On the unit sphere `x_d² = 1 − Σ_{i<d} x_i²`, so these span the same
    /// functions as the full basis without its linear dependencies.
    pub fn sphere_reduced(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.last_exp[i] <= 1).collect()
    }
}
