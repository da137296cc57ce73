//! Distances between finitely supported mixed strategies.
//!
//! The Wasserstein distance of order one is the value of the transportation
//! linear program over `spt p × spt q`. Total variation and the
//! `d_min·d_TV <= d_W <= d_max·d_TV` sandwich are provided alongside it as
//! cheap diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::space::{MixedStrategy, Profile, PureStrategy, StrategySpace, DEDUP_RADIUS};

/// Tolerance on marginals and plan cost.
pub const PLAN_TOL: f64 = 1e-9;

/// Ground distance between two pure strategies.
pub fn ground_distance(space: &StrategySpace, x: &[f64], y: &[f64]) -> Result<f64> {
    space.distance(x, y)
}

/// A coupling of two finitely supported measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `(source atom, target atom, mass)` for every positive entry.
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn row_sums(&self, n_source: usize) -> Vec<f64> {
        let mut s = vec![0.0; n_source];
        for &(i, _, m) in &self.entries {
            s[i] += m;
        }
        s
    }

    pub fn col_sums(&self, n_target: usize) -> Vec<f64> {
        let mut s = vec![0.0; n_target];
        for &(_, j, m) in &self.entries {
            s[j] += m;
        }
        s
    }

    /// `Σ ρ(x_i, y_j) μ(i, j)`.
    pub fn cost(&self, space: &StrategySpace, p: &MixedStrategy, q: &MixedStrategy) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, m)| m * space.distance_unchecked(&p.atoms()[i], &q.atoms()[j]))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub wasserstein: f64,
    pub total_variation: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// False when the union of supports is a single point (`d_min` undefined).
    pub d_min_defined: bool,
    pub plan: TransportPlan,
}

fn check_atoms(space: &StrategySpace, p: &MixedStrategy) -> Result<()> {
    for a in p.atoms() {
        if a.len() != space.dimension() {
            return Err(Error::DimensionMismatch { expected: space.dimension(), got: a.len() });
        }
    }
    Ok(())
}

/// Wasserstein distance and an optimal plan.
pub fn wasserstein(
    p: &MixedStrategy,
    q: &MixedStrategy,
    space: &StrategySpace,
) -> Result<(f64, TransportPlan)> {
    check_atoms(space, p)?;
    check_atoms(space, q)?;
    let (m, n) = (p.len(), q.len());

    // a Dirac side forces the plan
    if m == 1 || n == 1 {
        let mut entries = Vec::with_capacity(m * n);
        for (i, wi) in p.weights().iter().enumerate() {
            for (j, wj) in q.weights().iter().enumerate() {
                entries.push((i, j, wi * wj));
            }
        }
        let plan = TransportPlan { entries };
        return Ok((plan.cost(space, p, q), plan));
    }

    let cost: Vec<f64> = (0..m * n)
        .map(|k| space.distance_unchecked(&p.atoms()[k / n], &q.atoms()[k % n]))
        .collect();
    let mut lp = LinearProgram::new(Sense::Minimize, cost);
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        lp.add_constraint(row, Relation::Eq, p.weights()[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        lp.add_constraint(row, Relation::Eq, q.weights()[j]);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Lp(format!("transportation problem ({m}x{n}): {e}")))?;
    let entries = sol
        .x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (k / n, k % n, *v))
        .collect();
    let plan = TransportPlan { entries };
    Ok((plan.cost(space, p, q), plan))
}

/// Total variation distance; atoms within the dedup radius count as equal.
pub fn total_variation(p: &MixedStrategy, q: &MixedStrategy, space: &StrategySpace) -> f64 {
    let mut matched_q = vec![false; q.len()];
    let mut sum = 0.0;
    for (x, px) in p.iter() {
        let mut qx = 0.0;
        for (j, (y, qy)) in q.iter().enumerate() {
            if !matched_q[j] && space.distance_unchecked(x, y) <= DEDUP_RADIUS {
                matched_q[j] = true;
                qx += qy;
            }
        }
        sum += (px - qx).abs();
    }
    sum += q
        .weights()
        .iter()
        .zip(&matched_q)
        .filter(|(_, m)| !**m)
        .map(|(w, _)| w)
        .sum::<f64>();
    (0.5 * sum).min(1.0)
}

/// `(d_min·d_TV, d_max·d_TV, d_min defined)`.
pub fn wasserstein_bounds(
    p: &MixedStrategy,
    q: &MixedStrategy,
    space: &StrategySpace,
) -> Result<(f64, f64, bool)> {
    check_atoms(space, p)?;
    check_atoms(space, q)?;
    let mut union: Vec<&PureStrategy> = Vec::new();
    for a in p.atoms().iter().chain(q.atoms()) {
        if !union.iter().any(|b| space.distance_unchecked(a, b) <= DEDUP_RADIUS) {
            union.push(a);
        }
    }
    if union.len() < 2 {
        return Ok((0.0, 0.0, false));
    }
    let mut d_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    for i in 0..union.len() {
        for j in i + 1..union.len() {
            let d = space.distance_unchecked(union[i], union[j]);
            d_min = d_min.min(d);
            d_max = d_max.max(d);
        }
    }
    let tv = total_variation(p, q, space);
    Ok((d_min * tv, d_max * tv, true))
}

/// All distances at once.
pub fn metric_report(p: &MixedStrategy, q: &MixedStrategy, space: &StrategySpace) -> Result<MetricReport> {
    let (wasserstein, plan) = wasserstein(p, q, space)?;
    let (lower_bound, upper_bound, d_min_defined) = wasserstein_bounds(p, q, space)?;
    Ok(MetricReport {
        wasserstein,
        total_variation: total_variation(p, q, space),
        lower_bound,
        upper_bound,
        d_min_defined,
        plan,
    })
}

/// Product metric on profiles: the largest per-player Wasserstein distance.
pub fn profile_distance(a: &Profile, b: &Profile, spaces: &[StrategySpace]) -> Result<f64> {
    if a.players() != b.players() || a.players() != spaces.len() {
        return Err(Error::DimensionMismatch { expected: spaces.len(), got: a.players().min(b.players()) });
    }
    let mut best: f64 = 0.0;
    for ((p, q), space) in a.strategies.iter().zip(&b.strategies).zip(spaces) {
        best = best.max(wasserstein(p, q, space)?.0);
    }
    Ok(best)
}
