//! Reference computations shared by the integration tests. They only use
//! `ContinuousGame::eval` on pure profiles and plain linear algebra, never the
//! library's own expectation, LP or oracle code.

#![allow(dead_code)]

use std::f64::consts::PI;

use multioracle::space::GroundMetric;
use multioracle::{ContinuousGame, MixedStrategy, Profile, StrategySpace};
use nalgebra::{DMatrix, DVector};

/// `Σ (Π weights) u_i(atoms)` by walking the full product of supports, with
/// player `fixed.0` optionally pinned to the pure strategy `fixed.1`.
pub fn product_expectation(game: &ContinuousGame, i: usize, profile: &Profile, fixed: Option<(usize, &[f64])>) -> f64 {
    let n = game.players();
    let supports: Vec<Vec<(Vec<f64>, f64)>> = (0..n)
        .map(|k| match fixed {
            Some((j, x)) if j == k => vec![(x.to_vec(), 1.0)],
            _ => profile.get(k).iter().map(|(a, w)| (a.0.clone(), w)).collect(),
        })
        .collect();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let point: Vec<&[f64]> = (0..n).map(|k| supports[k][idx[k]].0.as_slice()).collect();
        let weight: f64 = (0..n).map(|k| supports[k][idx[k]].1).product();
        total += weight * game.eval(i, &point);
        let mut k = n;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < supports[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Largest gain from a unilateral pure deviation, every action of every
/// finite space tried.
pub fn finite_deviation_gap(game: &ContinuousGame, profile: &Profile) -> f64 {
    let mut gap = f64::NEG_INFINITY;
    for i in 0..game.players() {
        let StrategySpace::Finite { actions } = game.space(i) else {
            panic!("player {i} does not have a finite space");
        };
        let base = product_expectation(game, i, profile, None);
        for a in 1..=*actions {
            let dev = product_expectation(game, i, profile, Some((i, &[a as f64])));
            gap = gap.max(dev - base);
        }
    }
    gap
}

/// Ground distance written out from the definitions.
pub fn rho(space: &StrategySpace, x: &[f64], y: &[f64]) -> f64 {
    match space {
        StrategySpace::Circle { metric: GroundMetric::Arc } => {
            let d = (x[0] - y[0]).abs().rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        }
        StrategySpace::Circle { metric: GroundMetric::Euclidean } => {
            ((x[0].cos() - y[0].cos()).powi(2) + (x[0].sin() - y[0].sin()).powi(2)).sqrt()
        }
        _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    }
}

/// Minimum transport cost by enumerating every choice of `m + n - 1` cells,
/// solving the marginal equations on those cells and keeping the cheapest
/// nonnegative solution. Intended for supports of size at most 3.
pub fn brute_force_transport(space: &StrategySpace, p: &MixedStrategy, q: &MixedStrategy) -> f64 {
    let (m, n) = (p.len(), q.len());
    let cells = m * n;
    let k = m + n - 1;
    let cost: Vec<f64> = (0..cells).map(|c| rho(space, &p.atoms()[c / n], &q.atoms()[c % n])).collect();
    let mut rhs: Vec<f64> = p.weights().to_vec();
    rhs.extend_from_slice(q.weights());
    let b = DVector::from_vec(rhs);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let chosen: Vec<usize> = (0..cells).filter(|c| mask & (1 << c) != 0).collect();
        let a = DMatrix::from_fn(m + n, k, |r, col| {
            let c = chosen[col];
            let hit = if r < m { c / n == r } else { c % n == r - m };
            if hit {
                1.0
            } else {
                0.0
            }
        });
        let Ok(x) = a.clone().svd(true, true).solve(&b, 1e-12) else { continue };
        if (&a * &x - &b).amax() > 1e-10 || x.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let c: f64 = chosen.iter().zip(x.iter()).map(|(c, v)| cost[*c] * v).sum();
        best = best.min(c);
    }
    best
}

/// Parameters of the built-in torus example.
pub const TORUS_ALPHA: [f64; 2] = [1.0, 1.5];
pub const TORUS_PHI: [f64; 2] = [0.0, PI / 8.0];

pub fn torus_utility(i: usize, theta: [f64; 2]) -> f64 {
    let (own, other) = (theta[i], theta[1 - i]);
    TORUS_ALPHA[i] * (own - TORUS_PHI[i]).cos() - (own - other).cos()
}

/// Expected torus utility of player `i` playing `own` against the other
/// player's mixed strategy.
pub fn torus_vs(i: usize, own: f64, other: &MixedStrategy) -> f64 {
    other
        .iter()
        .map(|(a, w)| {
            let mut theta = [0.0; 2];
            theta[i] = own;
            theta[1 - i] = a[0];
            w * torus_utility(i, theta)
        })
        .sum()
}

/// Largest deviation gain over the grid `-π + k·h` covering `[-π, π)`.
pub fn torus_grid_gap(profile: &Profile, h: f64) -> f64 {
    let steps = (2.0 * PI / h).ceil() as usize;
    let mut gap = f64::NEG_INFINITY;
    for i in 0..2 {
        let other = profile.get(1 - i);
        let current: f64 = profile.get(i).iter().map(|(a, w)| w * torus_vs(i, a[0], other)).sum();
        let best = (0..steps)
            .map(|k| -PI + k as f64 * h)
            .filter(|t| *t < PI)
            .map(|t| torus_vs(i, t, other))
            .fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - current);
    }
    gap
}

/// `E|X - x|` for `X ~ m`: the Wasserstein distance from `m` to a point mass.
pub fn distance_to_point(space: &StrategySpace, m: &MixedStrategy, x: &[f64]) -> f64 {
    m.iter().map(|(a, w)| w * rho(space, a, x)).sum()
}

/// Maximum of a univariate function on `[lo, hi]` from a uniform grid of
/// `points` samples followed by golden-section refinement around the best
/// grid point.
pub fn grid_maximum<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let h = (hi - lo) / (points - 1) as f64;
    let (mut bx, mut bv) = (lo, f(lo));
    for k in 1..points {
        let x = if k == points - 1 { hi } else { lo + k as f64 * h };
        let v = f(x);
        if v > bv {
            bx = x;
            bv = v;
        }
    }
    let (mut a, mut b) = ((bx - h).max(lo), (bx + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    let vm = f(mid);
    if vm > bv {
        (mid, vm)
    } else {
        (bx, bv)
    }
}
