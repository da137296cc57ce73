//! Strategy spaces, pure and finitely supported mixed strategies, profiles.

use std::f64::consts::PI;
use std::ops::Deref;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atoms closer than this (in the ground metric) are treated as one strategy.
pub const DEDUP_RADIUS: f64 = 1e-8;

/// Slack allowed on the coordinate sum when testing simplex membership.
pub const SIMPLEX_TOL: f64 = 1e-9;

const TWO_PI: f64 = 2.0 * PI;

/// Ground metric used on a strategy space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMetric {
    Euclidean,
    /// Shorter arc length; only meaningful on the circle.
    Arc,
}

/// A compact strategy set `X_i ⊆ R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StrategySpace {
    /// Axis-aligned box `[lower, upper]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Probability simplex in `R^dimension`.
    Simplex { dimension: usize },
    /// The unit circle, parametrized by angle in `[-π, π)`.
    Circle { metric: GroundMetric },
    /// Finitely many actions, encoded as the integer points `1..=actions` of `R^1`.
    Finite { actions: usize },
}

impl StrategySpace {
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new_box(vec![lower], vec![upper])
    }

    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidSpace("box must have dimension >= 1".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u) {
            return Err(Error::InvalidSpace("box requires finite lower <= upper".into()));
        }
        Ok(StrategySpace::Box { lower, upper })
    }

    pub fn simplex(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSpace("simplex dimension must be >= 1".into()));
        }
        Ok(StrategySpace::Simplex { dimension })
    }

    pub fn circle() -> Self {
        StrategySpace::Circle { metric: GroundMetric::Arc }
    }

    pub fn finite(actions: usize) -> Result<Self> {
        if actions == 0 {
            return Err(Error::InvalidSpace("finite space needs at least one action".into()));
        }
        Ok(StrategySpace::Finite { actions })
    }

    /// Checks the structural invariants of a space built without the constructors.
    pub fn validate(&self) -> Result<()> {
        match self {
            StrategySpace::Box { lower, upper } => {
                Self::new_box(lower.clone(), upper.clone()).map(|_| ())
            }
            StrategySpace::Simplex { dimension } => Self::simplex(*dimension).map(|_| ()),
            StrategySpace::Circle { .. } => Ok(()),
            StrategySpace::Finite { actions } => Self::finite(*actions).map(|_| ()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            StrategySpace::Box { lower, .. } => lower.len(),
            StrategySpace::Simplex { dimension } => *dimension,
            StrategySpace::Circle { .. } | StrategySpace::Finite { .. } => 1,
        }
    }

    pub fn metric(&self) -> GroundMetric {
        match self {
            StrategySpace::Circle { metric } => *metric,
            _ => GroundMetric::Euclidean,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: x.len() });
        }
        Ok(())
    }

    /// Membership test with tolerance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        Ok(match self {
            StrategySpace::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            StrategySpace::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                x.iter().all(|v| *v >= -tol) && (sum - 1.0).abs() <= tol.max(SIMPLEX_TOL)
            }
            StrategySpace::Circle { .. } => true,
            StrategySpace::Finite { actions } => {
                let k = x[0].round();
                (x[0] - k).abs() <= tol && k >= 1.0 && k <= *actions as f64
            }
        })
    }

    /// Draws a point uniformly from the space.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PureStrategy {
        let coords = match self {
            StrategySpace::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if l == u { *l } else { rng.random_range(*l..=*u) })
                .collect(),
            StrategySpace::Simplex { dimension } => {
                let draws: Vec<f64> = (0..*dimension).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = draws.iter().sum();
                let mut x: Vec<f64> = draws.iter().map(|e| e / total).collect();
                // force an exact unit sum onto the largest coordinate
                let (imax, _) = x
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
                let rest: f64 = x.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, v)| v).sum();
                x[imax] = 1.0 - rest;
                x
            }
            StrategySpace::Circle { .. } => vec![rng.random_range(-PI..PI)],
            StrategySpace::Finite { actions } => vec![rng.random_range(1..=*actions) as f64],
        };
        PureStrategy(coords)
    }

    /// Nearest point of the space (Euclidean projection; wraparound for the circle).
    pub fn project(&self, x: &[f64]) -> PureStrategy {
        let coords = match self {
            StrategySpace::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            StrategySpace::Simplex { .. } => project_simplex(x),
            StrategySpace::Circle { .. } => vec![wrap_angle(x[0])],
            StrategySpace::Finite { actions } => vec![x[0].round().clamp(1.0, *actions as f64)],
        };
        PureStrategy(coords)
    }

    /// Ground distance `ρ(x, y)`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match (self, self.metric()) {
            (StrategySpace::Circle { .. }, GroundMetric::Arc) => {
                let d = (wrap_angle(x[0]) - wrap_angle(y[0])).abs();
                d.min(TWO_PI - d)
            }
            (StrategySpace::Circle { .. }, GroundMetric::Euclidean) => {
                // chordal distance between the embedded points
                let (a, b) = (x[0], y[0]);
                ((a.cos() - b.cos()).powi(2) + (a.sin() - b.sin()).powi(2)).sqrt()
            }
            _ => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }

    /// Every point of a finite space, in action order. `None` for continuous spaces.
    pub fn enumerate(&self) -> Option<Vec<PureStrategy>> {
        match self {
            StrategySpace::Finite { actions } => {
                Some((1..=*actions).map(|a| PureStrategy(vec![a as f64])).collect())
            }
            StrategySpace::Box { lower, upper } if lower == upper => {
                Some(vec![PureStrategy(lower.clone())])
            }
            _ => None,
        }
    }
}

/// Maps an angle to its representative in `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let w = theta - TWO_PI * ((theta + PI) / TWO_PI).floor();
    if w >= PI {
        w - TWO_PI
    } else if w < -PI {
        -PI
    } else {
        w
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// A pure strategy: a point of some strategy space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PureStrategy(pub Vec<f64>);

impl PureStrategy {
    pub fn scalar(v: f64) -> Self {
        PureStrategy(vec![v])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for PureStrategy {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PureStrategy {
    fn from(v: Vec<f64>) -> Self {
        PureStrategy(v)
    }
}

/// A finitely supported probability measure over a strategy space.
///
/// Weights are strictly positive and sum to one; no two atoms lie within the
/// dedup radius of each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    atoms: Vec<PureStrategy>,
    weights: Vec<f64>,
}

impl MixedStrategy {
    pub fn dirac(x: PureStrategy) -> Self {
        MixedStrategy { atoms: vec![x], weights: vec![1.0] }
    }

    /// Builds a mixed strategy, enforcing all invariants.
    ///
    /// Zero weights are dropped, atoms within `tau` of each other are merged
    /// (weight-averaged position, projected back to the space) and the
    /// weights are renormalized.
    pub fn canonicalize(
        atoms: Vec<PureStrategy>,
        weights: Vec<f64>,
        space: &StrategySpace,
        tau: f64,
    ) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: atoms.len(), got: weights.len() });
        }
        for a in &atoms {
            space.check_dim(a)?;
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let mut clusters: Vec<(PureStrategy, f64)> = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(a, w)| match space {
                StrategySpace::Circle { .. } => (PureStrategy(vec![wrap_angle(a[0])]), w),
                _ => (a, w),
            })
            .collect();
        if clusters.is_empty() {
            return Err(Error::EmptySupport);
        }

        // merge until no pair is within tau
        loop {
            let mut merged_any = false;
            let mut i = 0;
            while i < clusters.len() {
                let mut j = i + 1;
                while j < clusters.len() {
                    if space.distance_unchecked(&clusters[i].0, &clusters[j].0) <= tau {
                        let (b, wb) = clusters.remove(j);
                        let (a, wa) = &clusters[i];
                        let pos = merge_position(space, a, *wa, &b, wb);
                        clusters[i] = (pos, wa + wb);
                        merged_any = true;
                    } else {
                        j += 1;
                    }
                }
                i += 1;
            }
            if !merged_any {
                break;
            }
        }

        let total: f64 = clusters.iter().map(|(_, w)| w).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let (atoms, mut weights): (Vec<_>, Vec<_>) = clusters.into_iter().unzip();
        if (total - 1.0).abs() > 1e-14 {
            for w in &mut weights {
                *w /= total;
            }
        }
        Ok(MixedStrategy { atoms, weights })
    }

    pub fn atoms(&self) -> &[PureStrategy] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PureStrategy, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `Σ p(x) f(x)`.
    pub fn expectation<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

fn merge_position(
    space: &StrategySpace,
    a: &PureStrategy,
    wa: f64,
    b: &PureStrategy,
    wb: f64,
) -> PureStrategy {
    let t = wb / (wa + wb);
    match space {
        StrategySpace::Circle { .. } => {
            let delta = wrap_angle(b[0] - a[0]);
            PureStrategy(vec![wrap_angle(a[0] + t * delta)])
        }
        _ => {
            let avg: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x + t * (y - x)).collect();
            space.project(&avg)
        }
    }
}

/// One mixed strategy per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub strategies: Vec<MixedStrategy>,
}

impl Profile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Profile { strategies }
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn get(&self, i: usize) -> &MixedStrategy {
        &self.strategies[i]
    }

    /// Replaces player `i`'s strategy by the Dirac measure at `x`.
    pub fn with_pure(&self, i: usize, x: PureStrategy) -> Profile {
        let mut strategies = self.strategies.clone();
        strategies[i] = MixedStrategy::dirac(x);
        Profile { strategies }
    }

    /// Checks the profile against a list of spaces.
    pub fn validate(&self, spaces: &[StrategySpace], tol: f64) -> Result<()> {
        if self.strategies.len() != spaces.len() {
            return Err(Error::DimensionMismatch { expected: spaces.len(), got: self.strategies.len() });
        }
        for (player, (s, space)) in self.strategies.iter().zip(spaces).enumerate() {
            for a in s.atoms() {
                if !space.contains(a, tol)? {
                    return Err(Error::OutsideSpace { player, point: a.0.clone() });
                }
            }
        }
        Ok(())
    }
}
