//! Best-response oracles.
//!
//! Against finitely supported opponents a player's expected payoff is a
//! function of their own pure strategy alone. For polynomial utilities that
//! function is again a polynomial, obtained by integrating out the opponents;
//! in one dimension it is maximized exactly through its critical points.
//! Everything else goes through multistart local search.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::game::{ContinuousGame, UtilityFunction};
use crate::poly::{Polynomial, UnivariatePoly};
use crate::space::{MixedStrategy, Profile, PureStrategy, StrategySpace};

type ObjectiveFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;

/// Smallest step before a local search stops.
const MIN_STEP: f64 = 1e-11;

/// `x ↦ U_i(x, p_{-i})`.
pub enum InducedObjective<'a> {
    UnivariatePolynomial(UnivariatePoly),
    /// Polynomial in player `i`'s coordinates (a single block).
    MultivariatePolynomial(Polynomial),
    Callable(ObjectiveFn<'a>),
}

impl fmt::Debug for InducedObjective<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InducedObjective::UnivariatePolynomial(p) => f.debug_tuple("UnivariatePolynomial").field(p).finish(),
            InducedObjective::MultivariatePolynomial(p) => f.debug_tuple("MultivariatePolynomial").field(p).finish(),
            InducedObjective::Callable(_) => f.write_str("Callable"),
        }
    }
}

impl InducedObjective<'_> {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InducedObjective::UnivariatePolynomial(p) => p.eval(x[0]),
            InducedObjective::MultivariatePolynomial(p) => p.eval(&[x]),
            InducedObjective::Callable(f) => f(x),
        }
    }

    /// Analytic gradient, when the objective is a polynomial.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            InducedObjective::UnivariatePolynomial(p) => Some(vec![p.derivative().eval(x[0])]),
            InducedObjective::MultivariatePolynomial(p) => Some(p.gradient(x)),
            InducedObjective::Callable(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestResponse {
    pub strategy: PureStrategy,
    pub value: f64,
    pub certified_global: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    #[default]
    Auto,
    PolyExact,
    Multistart,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub mode: OracleMode,
    /// Random starts in addition to the player's current atoms.
    pub starts: usize,
    /// Ascent iterations per start.
    pub iterations: usize,
    pub exec: Execution,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { mode: OracleMode::Auto, starts: 16, iterations: 200, exec: Execution::default() }
    }
}

impl OracleConfig {
    /// The budget used for post-hoc certification.
    pub fn strict(self) -> Self {
        OracleConfig { starts: self.starts.max(64), iterations: self.iterations.max(400), ..self }
    }
}

/// Polynomial in player `own`'s coordinates after integrating out the others,
/// or `None` when the utility is not polynomial.
fn collapse_utility(u: &UtilityFunction, own: usize, measures: &[&MixedStrategy], dim: usize) -> Option<Polynomial> {
    match u {
        UtilityFunction::Polynomial(p) => Some(p.collapse(own, measures)),
        UtilityFunction::Polymatrix(terms) => {
            let mut acc = Polynomial::zero(vec![dim]);
            for t in terms {
                let pair = [measures[own], measures[t.other]];
                acc = acc.add(&collapse_utility(&t.term, 0, &pair, dim)?);
            }
            Some(acc)
        }
        UtilityFunction::BlackBox(_) | UtilityFunction::Table(_) => None,
    }
}

/// The map `x ↦ U_i(x, p_{-i})`; the `i`-th entry of `others` is ignored.
pub fn induce_objective<'a>(game: &'a ContinuousGame, i: usize, others: &'a Profile) -> InducedObjective<'a> {
    let measures: Vec<&MixedStrategy> = others.strategies.iter().collect();
    let dim = game.space(i).dimension();
    match collapse_utility(game.utility_fn(i), i, &measures, dim) {
        Some(p) if dim == 1 => InducedObjective::UnivariatePolynomial(p.to_univariate().expect("one block of width one")),
        Some(p) => InducedObjective::MultivariatePolynomial(p),
        None => InducedObjective::Callable(Box::new(move |x| game.expected_utility_vs_pure(i, x, others))),
    }
}

/// Global maximum of a univariate polynomial on `[lo, hi]`.
pub fn best_response_univariate_poly(p: &UnivariatePoly, lo: f64, hi: f64) -> Result<BestResponse> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Oracle(format!("invalid interval [{lo}, {hi}]")));
    }
    let (x, value) = p.maximize(lo, hi);
    Ok(BestResponse { strategy: PureStrategy::scalar(x), value, certified_global: true })
}

/// Exhaustive maximization over an enumerable space; ties keep the first point.
pub fn best_response_enumerate(objective: &InducedObjective<'_>, points: &[PureStrategy]) -> Result<BestResponse> {
    let mut best: Option<(usize, f64)> = None;
    for (k, x) in points.iter().enumerate() {
        let v = objective.eval(x);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    let (k, value) = best.ok_or_else(|| Error::Oracle("empty strategy set".into()))?;
    Ok(BestResponse { strategy: points[k].clone(), value, certified_global: true })
}

/// Multistart projected local ascent.
///
/// Starts are `starts` points sampled from `space` under `seed`, followed by
/// `extra`. Polynomials use normalized-gradient ascent; callables use a
/// pattern search. Every step is projected back onto the space and the step
/// is halved whenever it fails to improve. The best endpoint wins, ties going
/// to the earliest start.
pub fn best_response_multistart(
    objective: &InducedObjective<'_>,
    space: &StrategySpace,
    cfg: &OracleConfig,
    extra: &[PureStrategy],
    seed: u64,
) -> Result<BestResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<PureStrategy> = (0..cfg.starts).map(|_| space.sample(&mut rng)).collect();
    starts.extend(extra.iter().map(|x| space.project(x)));
    if starts.is_empty() {
        return Err(Error::Oracle("multistart needs at least one start".into()));
    }
    let results = exec::map_slice(cfg.exec, &starts, |x0| local_ascent(objective, space, x0, cfg.iterations));
    let mut best: Option<(PureStrategy, f64)> = None;
    for (x, v) in results {
        if !v.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    let (strategy, value) = best.ok_or_else(|| Error::Oracle("objective is not finite at any start".into()))?;
    Ok(BestResponse { strategy, value, certified_global: false })
}

fn initial_step(space: &StrategySpace) -> f64 {
    match space {
        StrategySpace::Box { lower, upper } => {
            let w = lower.iter().zip(upper).map(|(l, u)| u - l).fold(0.0, f64::max);
            0.25 * w.max(MIN_STEP)
        }
        StrategySpace::Simplex { .. } => 0.25,
        StrategySpace::Circle { .. } => 0.5,
        StrategySpace::Finite { .. } => 1.0,
    }
}

fn local_ascent(
    objective: &InducedObjective<'_>,
    space: &StrategySpace,
    x0: &PureStrategy,
    iterations: usize,
) -> (PureStrategy, f64) {
    let mut x = x0.clone();
    let mut fx = objective.eval(&x);
    let mut step = initial_step(space);
    let max_step = 4.0 * step;
    let directions = pattern_directions(space);
    for _ in 0..iterations {
        if step < MIN_STEP {
            break;
        }
        let candidate = match objective.gradient(&x) {
            Some(mut g) => {
                if let StrategySpace::Simplex { .. } = space {
                    let mean = g.iter().sum::<f64>() / g.len() as f64;
                    g.iter_mut().for_each(|v| *v -= mean);
                }
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    break;
                }
                let y: Vec<f64> = x.iter().zip(&g).map(|(xv, gv)| xv + step * gv / norm).collect();
                let y = space.project(&y);
                let fy = objective.eval(&y);
                (fy > fx).then_some((y, fy))
            }
            None => {
                let mut best: Option<(PureStrategy, f64)> = None;
                for d in &directions {
                    let y: Vec<f64> = x.iter().zip(d).map(|(xv, dv)| xv + step * dv).collect();
                    let y = space.project(&y);
                    let fy = objective.eval(&y);
                    if fy > best.as_ref().map_or(fx, |b| b.1) {
                        best = Some((y, fy));
                    }
                }
                best
            }
        };
        match candidate {
            Some((y, fy)) => {
                x = y;
                fx = fy;
                step = (step * 1.5).min(max_step);
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

/// Poll directions: `±e_j` in flat spaces, `e_j - e_k` on the simplex.
fn pattern_directions(space: &StrategySpace) -> Vec<Vec<f64>> {
    let d = space.dimension();
    let unit = |j: usize, s: f64| {
        let mut v = vec![0.0; d];
        v[j] = s;
        v
    };
    match space {
        StrategySpace::Simplex { .. } => {
            let mut dirs = Vec::with_capacity(d * (d - 1));
            for j in 0..d {
                for k in 0..d {
                    if j != k {
                        let mut v = vec![0.0; d];
                        v[j] = 1.0;
                        v[k] = -1.0;
                        dirs.push(v);
                    }
                }
            }
            dirs
        }
        _ => (0..d).flat_map(|j| [unit(j, 1.0), unit(j, -1.0)]).collect(),
    }
}

/// A best response of player `i` to `others`.
///
/// `atoms` are the player's current subgame strategies: they seed the
/// multistart and the returned value is never below any of theirs. The value
/// is recomputed with `expected_utility_vs_pure`.
pub fn best_response(
    game: &ContinuousGame,
    i: usize,
    others: &Profile,
    cfg: &OracleConfig,
    atoms: &[PureStrategy],
    seed: u64,
) -> Result<BestResponse> {
    let space = game.space(i);
    let objective = induce_objective(game, i, others);
    let found = if let Some(points) = space.enumerate() {
        best_response_enumerate(&objective, &points)?
    } else {
        match (cfg.mode, &objective, space) {
            (OracleMode::Auto | OracleMode::PolyExact, InducedObjective::UnivariatePolynomial(p), StrategySpace::Box { lower, upper }) => {
                best_response_univariate_poly(p, lower[0], upper[0])?
            }
            (OracleMode::PolyExact, _, _) => {
                return Err(Error::Oracle(format!(
                    "exact oracle needs a univariate polynomial objective on an interval; player {} has {:?} on {:?}",
                    i + 1,
                    objective,
                    space
                )))
            }
            _ => best_response_multistart(&objective, space, cfg, atoms, seed)?,
        }
    };

    let mut strategy = found.strategy;
    let mut value = game.expected_utility_vs_pure(i, &strategy, others);
    for a in atoms {
        let v = game.expected_utility_vs_pure(i, a, others);
        if v > value {
            strategy = a.clone();
            value = v;
        }
    }
    Ok(BestResponse { strategy, value, certified_global: found.certified_global })
}
