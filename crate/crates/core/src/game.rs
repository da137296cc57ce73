//! Continuous games, utility functions and expected utilities.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::space::{MixedStrategy, Profile, PureStrategy, StrategySpace};
use crate::subgame::Tensor;

/// Tolerance for the zero-sum spot check and subgame certification.
pub const ZERO_SUM_TOL: f64 = 1e-9;
/// Random pure profiles inspected when a game declares itself zero-sum.
pub const ZERO_SUM_SPOT_CHECKS: usize = 100;
/// Slack on strategy-space membership when evaluating utilities.
pub const DOMAIN_TOL: f64 = 1e-7;

/// Evaluator behind a black-box utility. Must be deterministic.
pub type Evaluator = Arc<dyn Fn(&[&[f64]]) -> f64 + Send + Sync>;

/// A named black-box utility. `name` and `params` identify it for serialization.
#[derive(Clone)]
pub struct BlackBox {
    pub name: String,
    pub params: Vec<f64>,
    pub f: Evaluator,
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBox").field("name", &self.name).field("params", &self.params).finish()
    }
}

impl PartialEq for BlackBox {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params
    }
}

/// One bilateral term `u_{i,k}(x_i, x_k)` of a polymatrix utility.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseTerm {
    pub other: usize,
    /// Two-argument utility evaluated at `[x_i, x_k]`.
    pub term: UtilityFunction,
}

#[derive(Clone, Debug, PartialEq)]
pub enum UtilityFunction {
    /// Polynomial with one exponent block per argument.
    Polynomial(Polynomial),
    BlackBox(BlackBox),
    /// `u_i(x) = Σ_k u_{i,k}(x_i, x_k)`.
    Polymatrix(Vec<PairwiseTerm>),
    /// Payoff table over finite action spaces, indexed by action number.
    Table(Tensor),
}

impl UtilityFunction {
    /// Evaluates at one point per argument; no domain checks.
    pub fn eval(&self, x: &[&[f64]], own: usize) -> f64 {
        match self {
            UtilityFunction::Polynomial(p) => p.eval(x),
            UtilityFunction::BlackBox(b) => (b.f)(x),
            UtilityFunction::Polymatrix(terms) => terms
                .iter()
                .map(|t| t.term.eval(&[x[own], x[t.other]], 0))
                .sum(),
            UtilityFunction::Table(t) => {
                let idx: Vec<usize> = x.iter().map(|p| action_index(p[0])).collect();
                t.get(&idx)
            }
        }
    }
}

/// Zero-based action index of a finite-space coordinate.
pub fn action_index(v: f64) -> usize {
    (v.round() as i64 - 1).max(0) as usize
}

/// `⟨N, (X_i), (u_i)⟩` with a declared zero-sum flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousGame {
    spaces: Vec<StrategySpace>,
    utilities: Vec<UtilityFunction>,
    zero_sum: bool,
}

impl ContinuousGame {
    /// Validates the structure and, for declared zero-sum games, spot-checks
    /// `Σ_i u_i = 0` on random pure profiles.
    pub fn new(spaces: Vec<StrategySpace>, utilities: Vec<UtilityFunction>, zero_sum: bool) -> Result<Self> {
        if spaces.is_empty() {
            return Err(Error::InvalidGame("a game needs at least one player".into()));
        }
        if spaces.len() != utilities.len() {
            return Err(Error::InvalidGame(format!(
                "{} strategy spaces but {} utilities",
                spaces.len(),
                utilities.len()
            )));
        }
        for s in &spaces {
            s.validate()?;
        }
        let dims: Vec<usize> = spaces.iter().map(StrategySpace::dimension).collect();
        for (i, u) in utilities.iter().enumerate() {
            validate_utility(u, i, &spaces, &dims)
                .map_err(|e| Error::InvalidGame(format!("utility of player {}: {e}", i + 1)))?;
        }
        let game = ContinuousGame { spaces, utilities, zero_sum };
        if zero_sum {
            game.spot_check_zero_sum()?;
        }
        Ok(game)
    }

    fn spot_check_zero_sum(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000_2e50);
        for _ in 0..ZERO_SUM_SPOT_CHECKS {
            let x: Vec<PureStrategy> = self.spaces.iter().map(|s| s.sample(&mut rng)).collect();
            let refs: Vec<&[f64]> = x.iter().map(|p| p.coords()).collect();
            let total: f64 = (0..self.players()).map(|i| self.eval(i, &refs)).sum();
            if total.abs() > ZERO_SUM_TOL {
                return Err(Error::InvalidGame(format!(
                    "declared zero-sum but utilities sum to {total:.3e} at {:?}",
                    x.iter().map(|p| p.0.clone()).collect::<Vec<_>>()
                )));
            }
        }
        Ok(())
    }

    pub fn players(&self) -> usize {
        self.spaces.len()
    }

    pub fn spaces(&self) -> &[StrategySpace] {
        &self.spaces
    }

    pub fn space(&self, i: usize) -> &StrategySpace {
        &self.spaces[i]
    }

    pub fn utilities(&self) -> &[UtilityFunction] {
        &self.utilities
    }

    pub fn utility_fn(&self, i: usize) -> &UtilityFunction {
        &self.utilities[i]
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    /// True when every utility is a sum of bilateral terms.
    pub fn is_polymatrix(&self) -> bool {
        self.utilities.iter().all(|u| matches!(u, UtilityFunction::Polymatrix(_)))
    }

    /// `u_i(x)` without domain checks.
    pub fn eval(&self, i: usize, x: &[&[f64]]) -> f64 {
        self.utilities[i].eval(x, i)
    }

    /// `u_i(x)`, rejecting profiles outside the strategy spaces.
    pub fn utility(&self, i: usize, x: &[&[f64]]) -> Result<f64> {
        if x.len() != self.players() {
            return Err(Error::DimensionMismatch { expected: self.players(), got: x.len() });
        }
        for (k, (p, s)) in x.iter().zip(&self.spaces).enumerate() {
            if !s.contains(p, DOMAIN_TOL)? {
                return Err(Error::OutsideSpace { player: k, point: p.to_vec() });
            }
        }
        Ok(self.eval(i, x))
    }

    /// `U_i(p)` for a finitely supported profile.
    pub fn expected_utility(&self, i: usize, profile: &Profile) -> f64 {
        let measures: Vec<&MixedStrategy> = profile.strategies.iter().collect();
        expected(&self.utilities[i], i, &measures)
    }

    /// `U_i(x, p_{-i})`; the `i`-th entry of `profile` is ignored.
    pub fn expected_utility_vs_pure(&self, i: usize, x: &[f64], profile: &Profile) -> f64 {
        let dirac = MixedStrategy::dirac(PureStrategy(x.to_vec()));
        let measures: Vec<&MixedStrategy> = profile
            .strategies
            .iter()
            .enumerate()
            .map(|(k, m)| if k == i { &dirac } else { m })
            .collect();
        expected(&self.utilities[i], i, &measures)
    }
}

fn validate_utility(u: &UtilityFunction, own: usize, spaces: &[StrategySpace], dims: &[usize]) -> Result<()> {
    match u {
        UtilityFunction::Polynomial(p) => {
            if p.blocks() != dims {
                return Err(Error::InvalidGame(format!(
                    "polynomial blocks {:?} do not match space dimensions {:?}",
                    p.blocks(),
                    dims
                )));
            }
        }
        UtilityFunction::BlackBox(_) => {}
        UtilityFunction::Polymatrix(terms) => {
            for t in terms {
                if t.other >= spaces.len() || t.other == own {
                    return Err(Error::InvalidGame(format!("pairwise term refers to player {}", t.other + 1)));
                }
                let pair = [spaces[own].clone(), spaces[t.other].clone()];
                let pair_dims = [dims[own], dims[t.other]];
                if matches!(t.term, UtilityFunction::Polymatrix(_)) {
                    return Err(Error::InvalidGame("nested polymatrix terms".into()));
                }
                validate_utility(&t.term, 0, &pair, &pair_dims)?;
            }
        }
        UtilityFunction::Table(t) => {
            if t.shape().len() != spaces.len() {
                return Err(Error::InvalidGame("table rank differs from player count".into()));
            }
            for (k, (s, n)) in spaces.iter().zip(t.shape()).enumerate() {
                match s {
                    StrategySpace::Finite { actions } if actions == n => {}
                    _ => {
                        return Err(Error::InvalidGame(format!(
                            "table axis {} has {} entries but player space is {:?}",
                            k + 1,
                            n,
                            s
                        )))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Expected value of `u` under the product of `measures`.
fn expected(u: &UtilityFunction, own: usize, measures: &[&MixedStrategy]) -> f64 {
    match u {
        UtilityFunction::Polynomial(p) => {
            // independence: E[Π_k m_k(x_k)] = Π_k E[m_k(x_k)]
            let off: Vec<usize> = std::iter::once(0)
                .chain(p.blocks().iter().scan(0, |acc, b| {
                    *acc += b;
                    Some(*acc)
                }))
                .collect();
            p.terms()
                .iter()
                .map(|t| {
                    let mut v = t.coef;
                    for (b, m) in measures.iter().enumerate() {
                        let exps = &t.powers[off[b]..off[b + 1]];
                        if exps.iter().any(|e| *e > 0) {
                            v *= m.expectation(|x| {
                                exps.iter().zip(x).map(|(e, xv)| xv.powi(*e as i32)).product()
                            });
                        }
                    }
                    v
                })
                .sum()
        }
        UtilityFunction::Polymatrix(terms) => terms
            .iter()
            .map(|t| expected(&t.term, 0, &[measures[own], measures[t.other]]))
            .sum(),
        UtilityFunction::BlackBox(_) | UtilityFunction::Table(_) => {
            let mut total = 0.0;
            for_each_product(measures, |x, w| total += w * u.eval(x, own));
            total
        }
    }
}

/// Calls `f(points, weight)` for every element of the product of supports.
pub(crate) fn for_each_product<F: FnMut(&[&[f64]], f64)>(measures: &[&MixedStrategy], mut f: F) {
    let n = measures.len();
    let mut idx = vec![0usize; n];
    let mut point: Vec<&[f64]> = measures.iter().map(|m| m.atoms()[0].coords()).collect();
    loop {
        let w: f64 = idx.iter().zip(measures).map(|(&a, m)| m.weights()[a]).product();
        f(&point, w);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < measures[k].len() {
                point[k] = measures[k].atoms()[idx[k]].coords();
                break;
            }
            idx[k] = 0;
            point[k] = measures[k].atoms()[0].coords();
        }
    }
}
