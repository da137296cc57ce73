//! Sparse polynomials over players' strategy variables and exact univariate
//! maximization by critical-point enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MixedStrategy;

/// One monomial; `powers` concatenates the exponent blocks of all players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A polynomial in variables grouped into blocks (one block per player).
///
/// Monomials are kept sorted by exponent vector with duplicates merged and
/// zero coefficients dropped, so structurally equal polynomials compare equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    blocks: Vec<usize>,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(blocks: Vec<usize>) -> Self {
        Polynomial { blocks, terms: Vec::new() }
    }

    /// Builds from `(coefficient, per-block exponent vectors)` pairs.
    pub fn new(blocks: Vec<usize>, terms: Vec<(f64, Vec<Vec<u32>>)>) -> Result<Self> {
        let mut flat = Vec::with_capacity(terms.len());
        for (t, (coef, powers)) in terms.into_iter().enumerate() {
            if powers.len() != blocks.len() {
                return Err(Error::InvalidGame(format!(
                    "term {}: {} exponent blocks, expected {}",
                    t + 1,
                    powers.len(),
                    blocks.len()
                )));
            }
            let mut p = Vec::new();
            for (b, (block, dim)) in powers.iter().zip(&blocks).enumerate() {
                if block.len() != *dim {
                    return Err(Error::InvalidGame(format!(
                        "term {}: exponent block {} has length {}, expected {}",
                        t + 1,
                        b + 1,
                        block.len(),
                        dim
                    )));
                }
                p.extend_from_slice(block);
            }
            flat.push(Monomial { coef, powers: p });
        }
        Self::from_monomials(blocks, flat)
    }

    pub fn from_monomials(blocks: Vec<usize>, terms: Vec<Monomial>) -> Result<Self> {
        let width: usize = blocks.iter().sum();
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for m in terms {
            if m.powers.len() != width {
                return Err(Error::InvalidGame(format!(
                    "monomial has {} exponents, expected {}",
                    m.powers.len(),
                    width
                )));
            }
            if !m.coef.is_finite() {
                return Err(Error::InvalidGame("non-finite coefficient".into()));
            }
            *merged.entry(m.powers).or_insert(0.0) += m.coef;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(powers, coef)| Monomial { coef, powers })
            .collect();
        Ok(Polynomial { blocks, terms })
    }

    /// Univariate polynomial in a single one-dimensional block.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| Monomial { coef: *c, powers: vec![k as u32] })
            .collect();
        Self::from_monomials(vec![1], terms).expect("valid univariate")
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        off.push(0);
        for b in &self.blocks {
            acc += b;
            off.push(acc);
        }
        off
    }

    /// Exponents of `term` restricted to block `b`.
    pub fn block_powers<'a>(&self, term: &'a Monomial, b: usize) -> &'a [u32] {
        let off = self.offsets();
        &term.powers[off[b]..off[b + 1]]
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.powers.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates at one point per block.
    pub fn eval(&self, point: &[&[f64]]) -> f64 {
        let off = self.offsets();
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coef;
                for (b, x) in point.iter().enumerate() {
                    for (e, xv) in t.powers[off[b]..off[b + 1]].iter().zip(x.iter()) {
                        if *e > 0 {
                            v *= xv.powi(*e as i32);
                        }
                    }
                }
                v
            })
            .sum()
    }

    /// Integrates out every block except `keep` against the given measures,
    /// yielding a polynomial in block `keep` alone.
    ///
    /// `measures[b]` is ignored for `b == keep`.
    pub fn collapse(&self, keep: usize, measures: &[&MixedStrategy]) -> Polynomial {
        let off = self.offsets();
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut coef = t.coef;
            for (b, m) in measures.iter().enumerate() {
                if b == keep {
                    continue;
                }
                let exps = &t.powers[off[b]..off[b + 1]];
                if exps.iter().all(|e| *e == 0) {
                    continue;
                }
                coef *= m.expectation(|x| {
                    exps.iter().zip(x).map(|(e, xv)| xv.powi(*e as i32)).product()
                });
            }
            out.push(Monomial { coef, powers: t.powers[off[keep]..off[keep + 1]].to_vec() });
        }
        Polynomial::from_monomials(vec![self.blocks[keep]], out).expect("consistent widths")
    }

    /// Gradient of a single-block polynomial.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.blocks.len(), 1);
        let d = x.len();
        let mut g = vec![0.0; d];
        for t in &self.terms {
            for k in 0..d {
                let ek = t.powers[k];
                if ek == 0 {
                    continue;
                }
                let mut v = t.coef * ek as f64;
                for (j, (e, xv)) in t.powers.iter().zip(x).enumerate() {
                    let e = if j == k { e - 1 } else { *e };
                    if e > 0 {
                        v *= xv.powi(e as i32);
                    }
                }
                g[k] += v;
            }
        }
        g
    }

    /// Dense coefficients (ascending) of a single one-dimensional block.
    pub fn to_univariate(&self) -> Option<UnivariatePoly> {
        if self.blocks != [1] {
            return None;
        }
        let deg = self.terms.iter().map(|t| t.powers[0]).max().unwrap_or(0) as usize;
        let mut c = vec![0.0; deg + 1];
        for t in &self.terms {
            c[t.powers[0] as usize] += t.coef;
        }
        Some(UnivariatePoly::new(c))
    }

    /// Sum of two polynomials with identical block structure.
    pub fn add(&self, other: &Polynomial) -> Polynomial {
        debug_assert_eq!(self.blocks, other.blocks);
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Polynomial::from_monomials(self.blocks.clone(), terms).expect("same blocks")
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let terms = self.terms.iter().map(|t| Monomial { coef: s * t.coef, powers: t.powers.clone() }).collect();
        Polynomial::from_monomials(self.blocks.clone(), terms).expect("same blocks")
    }

    /// Reorders blocks: output block `k` is input block `order[k]`.
    pub fn permute_blocks(&self, order: &[usize]) -> Polynomial {
        let off = self.offsets();
        let blocks = order.iter().map(|&b| self.blocks[b]).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial {
                coef: t.coef,
                powers: order.iter().flat_map(|&b| t.powers[off[b]..off[b + 1]].iter().copied()).collect(),
            })
            .collect();
        Polynomial::from_monomials(blocks, terms).expect("permutation keeps widths")
    }
}

/// Dense univariate polynomial, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariatePoly {
    coeffs: Vec<f64>,
}

impl UnivariatePoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UnivariatePoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> UnivariatePoly {
        if self.coeffs.len() <= 1 {
            return UnivariatePoly::new(vec![0.0]);
        }
        UnivariatePoly::new(
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect(),
        )
    }

    /// All real roots in `[lo, hi]`, ascending.
    ///
    /// Roots are isolated recursively: between consecutive critical points
    /// the polynomial is monotone, so each bracket holds at most one root,
    /// which bisection pins down to machine precision.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if (lo..=hi).contains(&r) {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut pts = vec![lo];
                pts.extend(self.derivative().roots_in(lo, hi));
                pts.push(hi);
                let mut roots: Vec<f64> = Vec::new();
                let push = |r: f64, roots: &mut Vec<f64>| {
                    if roots.last().is_none_or(|l| r - l > 1e-14 * (1.0 + r.abs())) {
                        roots.push(r);
                    }
                };
                for w in pts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let (fa, fb) = (self.eval(a), self.eval(b));
                    if fa == 0.0 {
                        push(a, &mut roots);
                    } else if fa * fb < 0.0 {
                        push(bisect(|x| self.eval(x), a, b, fa), &mut roots);
                    }
                }
                if self.eval(hi) == 0.0 {
                    push(hi, &mut roots);
                }
                roots
            }
        }
    }

    /// Global maximum over `[lo, hi]`: the best of both endpoints and every
    /// interior critical point. Ties keep the leftmost candidate.
    pub fn maximize(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (lo, self.eval(lo));
        if self.degree() == 0 {
            return best;
        }
        let mut candidates = self.derivative().roots_in(lo, hi);
        candidates.push(hi);
        for x in candidates {
            let v = self.eval(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        best
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
