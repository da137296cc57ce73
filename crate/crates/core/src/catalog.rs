//! Example games, named black-box utilities and random game generators.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::game::{BlackBox, ContinuousGame, Evaluator, PairwiseTerm, UtilityFunction};
use crate::poly::Polynomial;
use crate::space::StrategySpace;
use crate::subgame::Tensor;

/// Number of built-in example games.
pub const EXAMPLES: usize = 5;

fn poly(blocks: Vec<usize>, terms: &[(f64, &[u32], &[u32])]) -> Polynomial {
    Polynomial::new(blocks, terms.iter().map(|(c, a, b)| (*c, vec![a.to_vec(), b.to_vec()])).collect())
        .expect("well-formed literal")
}

fn pairwise(other: usize, terms: &[(f64, &[u32], &[u32])]) -> PairwiseTerm {
    PairwiseTerm { other, term: UtilityFunction::Polynomial(poly(vec![1, 1], terms)) }
}

/// One of the five reference games, numbered from 1.
///
/// 1. zero-sum `u(x, y) = 2xy^2 - x^2 - y` on `[-1, 1]^2`;
/// 2. a general-sum cubic/quartic pair on `[-1, 1]^2`;
/// 3. the torus game with `phi = (0, pi/8)`, `alpha = (1, 1.5)`;
/// 4. General Blotto on two copies of the simplex in `R^5`, `f(t) = sgn(t) t^2`;
/// 5. a three-player zero-sum polynomial network on `[-1, 1]^3`.
pub fn example_game(id: usize) -> Result<ContinuousGame> {
    let interval = || StrategySpace::interval(-1.0, 1.0).expect("valid interval");
    match id {
        1 => {
            let u = poly(vec![1, 1], &[(2.0, &[1], &[2]), (-1.0, &[2], &[0]), (-1.0, &[0], &[1])]);
            ContinuousGame::new(
                vec![interval(), interval()],
                vec![UtilityFunction::Polynomial(u.scale(1.0)), UtilityFunction::Polynomial(u.scale(-1.0))],
                true,
            )
        }
        2 => {
            let u1 = poly(
                vec![1, 1],
                &[(-3.0, &[2], &[2]), (-2.0, &[3], &[0]), (3.0, &[0], &[3]), (2.0, &[1], &[1]), (-1.0, &[1], &[0])],
            );
            let u2 = poly(
                vec![1, 1],
                &[(2.0, &[2], &[2]), (1.0, &[2], &[1]), (-4.0, &[0], &[3]), (-1.0, &[2], &[0]), (4.0, &[0], &[1])],
            );
            ContinuousGame::new(
                vec![interval(), interval()],
                vec![UtilityFunction::Polynomial(u1), UtilityFunction::Polynomial(u2)],
                false,
            )
        }
        3 => ContinuousGame::new(
            vec![StrategySpace::circle(), StrategySpace::circle()],
            vec![builtin("torus", &[1.0, 0.0], 0, 2)?, builtin("torus", &[1.5, PI / 8.0], 1, 2)?],
            false,
        ),
        4 => {
            let s = StrategySpace::simplex(5)?;
            ContinuousGame::new(
                vec![s.clone(), s],
                vec![builtin("blotto", &[], 0, 2)?, builtin("blotto", &[], 1, 2)?],
                true,
            )
        }
        5 => {
            let u1 = vec![
                pairwise(1, &[(-2.0, &[1], &[2]), (5.0, &[1], &[1]), (-1.0, &[0], &[1])]),
                pairwise(2, &[(-2.0, &[2], &[0]), (-4.0, &[1], &[1]), (-2.0, &[0], &[1])]),
            ];
            let u2 = vec![
                pairwise(0, &[(2.0, &[2], &[1]), (-2.0, &[0], &[2]), (-5.0, &[1], &[1]), (1.0, &[1], &[0])]),
                pairwise(2, &[(-2.0, &[1], &[2]), (-2.0, &[2], &[0]), (5.0, &[1], &[1])]),
            ];
            let u3 = vec![
                pairwise(0, &[(4.0, &[0], &[2]), (4.0, &[1], &[1]), (2.0, &[1], &[0])]),
                pairwise(1, &[(2.0, &[2], &[1]), (2.0, &[0], &[2]), (-5.0, &[1], &[1])]),
            ];
            ContinuousGame::new(
                vec![interval(), interval(), interval()],
                vec![
                    UtilityFunction::Polymatrix(u1),
                    UtilityFunction::Polymatrix(u2),
                    UtilityFunction::Polymatrix(u3),
                ],
                true,
            )
        }
        _ => Err(Error::UnknownExample(id)),
    }
}

fn blotto_f(t: f64) -> f64 {
    t.signum() * t * t
}

/// A named black-box utility for player `player` of a `players`-player game.
///
/// * `torus`, params `[alpha, phi]`: `alpha cos(t_i - phi) - cos(t_i - t_j)`;
/// * `blotto`, no params: `Σ_j f(x_ij - y_j)` with `f(t) = sgn(t) t^2`.
///
/// Both are two-player utilities.
pub fn builtin(name: &str, params: &[f64], player: usize, players: usize) -> Result<UtilityFunction> {
    if players != 2 || player > 1 {
        return Err(Error::InvalidGame(format!("builtin `{name}` is a two-player utility")));
    }
    let other = 1 - player;
    let f: Evaluator = match name {
        "torus" => {
            let [alpha, phi] = params else {
                return Err(Error::InvalidGame(format!("builtin `torus` takes [alpha, phi], got {params:?}")));
            };
            let (alpha, phi) = (*alpha, *phi);
            Arc::new(move |x: &[&[f64]]| alpha * (x[player][0] - phi).cos() - (x[player][0] - x[other][0]).cos())
        }
        "blotto" => {
            if !params.is_empty() {
                return Err(Error::InvalidGame(format!("builtin `blotto` takes no params, got {params:?}")));
            }
            Arc::new(move |x: &[&[f64]]| x[player].iter().zip(x[other]).map(|(a, b)| blotto_f(a - b)).sum())
        }
        _ => return Err(Error::InvalidGame(format!("unknown builtin `{name}`"))),
    };
    Ok(UtilityFunction::BlackBox(BlackBox { name: name.to_string(), params: params.to_vec(), f }))
}

/// Bilateral game family of a random polymatrix game.
#[derive(Clone, Debug, PartialEq)]
pub enum PairwiseKind {
    /// Payoff matrices with entries uniform on `[-1, 1]`.
    Finite { actions: usize },
    /// `monomials` random terms `c x_i^a x_k^b` with `a + b <= degree` on `[-1, 1]`.
    Polynomial { degree: u32, monomials: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolymatrixSpec {
    pub players: usize,
    pub kind: PairwiseKind,
    /// Unordered player pairs; the complete graph when absent.
    pub edges: Option<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialGameSpec {
    pub players: usize,
    pub degree: u32,
    /// Every player picks from `[0, 1]^dimension`.
    pub dimension: usize,
    /// Monomials per utility.
    pub monomials: usize,
}

fn edge_list(players: usize, edges: &Option<Vec<(usize, usize)>>) -> Result<Vec<(usize, usize)>> {
    match edges {
        None => Ok((0..players).flat_map(|i| (i + 1..players).map(move |k| (i, k))).collect()),
        Some(list) => {
            for &(i, k) in list {
                if i == k || i >= players || k >= players {
                    return Err(Error::InvalidGame(format!("invalid edge ({}, {})", i + 1, k + 1)));
                }
            }
            Ok(list.clone())
        }
    }
}

/// Random exponents `(a, b)` with `a + b <= degree`, uniform over such pairs.
fn random_pair_exponents<R: Rng + ?Sized>(degree: u32, rng: &mut R) -> (u32, u32) {
    let count = ((degree + 1) * (degree + 2) / 2) as usize;
    let mut k = rng.random_range(0..count);
    for a in 0..=degree {
        let row = (degree - a + 1) as usize;
        if k < row {
            return (a, k as u32);
        }
        k -= row;
    }
    unreachable!()
}

/// Globally zero-sum polymatrix game: every edge gets a random term `A` for
/// one endpoint and its negated transpose for the other.
pub fn random_zero_sum_polymatrix<R: Rng + ?Sized>(spec: &PolymatrixSpec, rng: &mut R) -> Result<ContinuousGame> {
    if spec.players < 2 {
        return Err(Error::InvalidGame("random polymatrix games need at least two players".into()));
    }
    let edges = edge_list(spec.players, &spec.edges)?;
    let mut terms: Vec<Vec<PairwiseTerm>> = vec![Vec::new(); spec.players];
    let spaces = match spec.kind {
        PairwiseKind::Finite { actions } => {
            if actions == 0 {
                return Err(Error::InvalidGame("actions must be positive".into()));
            }
            for &(i, k) in &edges {
                let a: Vec<f64> = (0..actions * actions).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let at = Tensor::from_fn(vec![actions, actions], |ix| -a[ix[1] * actions + ix[0]]);
                terms[i].push(PairwiseTerm { other: k, term: UtilityFunction::Table(Tensor::new(vec![actions, actions], a)?) });
                terms[k].push(PairwiseTerm { other: i, term: UtilityFunction::Table(at) });
            }
            vec![StrategySpace::finite(actions)?; spec.players]
        }
        PairwiseKind::Polynomial { degree, monomials } => {
            if degree == 0 {
                return Err(Error::InvalidGame("degree must be at least 1".into()));
            }
            for &(i, k) in &edges {
                let mut forward = Vec::with_capacity(monomials);
                let mut backward = Vec::with_capacity(monomials);
                for _ in 0..monomials {
                    let c: f64 = StandardNormal.sample(rng);
                    let (a, b) = random_pair_exponents(degree, rng);
                    forward.push((c, vec![vec![a], vec![b]]));
                    backward.push((-c, vec![vec![b], vec![a]]));
                }
                terms[i].push(PairwiseTerm {
                    other: k,
                    term: UtilityFunction::Polynomial(Polynomial::new(vec![1, 1], forward)?),
                });
                terms[k].push(PairwiseTerm {
                    other: i,
                    term: UtilityFunction::Polynomial(Polynomial::new(vec![1, 1], backward)?),
                });
            }
            vec![StrategySpace::interval(-1.0, 1.0)?; spec.players]
        }
    };
    ContinuousGame::new(spaces, terms.into_iter().map(UtilityFunction::Polymatrix).collect(), true)
}

/// General-sum game whose utilities are random polynomials over all players'
/// coordinates with standard normal coefficients.
pub fn random_polynomial_game<R: Rng + ?Sized>(spec: &PolynomialGameSpec, rng: &mut R) -> Result<ContinuousGame> {
    if spec.players < 2 || spec.degree == 0 || spec.dimension == 0 {
        return Err(Error::InvalidGame(format!("invalid polynomial game spec {spec:?}")));
    }
    let vars = spec.players * spec.dimension;
    let blocks = vec![spec.dimension; spec.players];
    let mut utilities = Vec::with_capacity(spec.players);
    for _ in 0..spec.players {
        let mut terms = Vec::with_capacity(spec.monomials);
        for _ in 0..spec.monomials {
            let c: f64 = StandardNormal.sample(rng);
            let total = rng.random_range(0..=spec.degree);
            let mut flat = vec![0u32; vars];
            for _ in 0..total {
                flat[rng.random_range(0..vars)] += 1;
            }
            let powers = flat.chunks(spec.dimension).map(<[u32]>::to_vec).collect();
            terms.push((c, powers));
        }
        utilities.push(UtilityFunction::Polynomial(Polynomial::new(blocks.clone(), terms)?));
    }
    let space = StrategySpace::new_box(vec![0.0; spec.dimension], vec![1.0; spec.dimension])?;
    ContinuousGame::new(vec![space; spec.players], utilities, false)
}

/// General-sum finite game with payoffs uniform on `[-1, 1]`.
pub fn random_finite_game<R: Rng + ?Sized>(actions: &[usize], rng: &mut R) -> Result<ContinuousGame> {
    if actions.is_empty() || actions.contains(&0) {
        return Err(Error::InvalidGame(format!("invalid action counts {actions:?}")));
    }
    let spaces = actions.iter().map(|&m| StrategySpace::finite(m)).collect::<Result<Vec<_>>>()?;
    let utilities = actions
        .iter()
        .map(|_| UtilityFunction::Table(Tensor::from_fn(actions.to_vec(), |_| rng.random_range(-1.0..=1.0))))
        .collect();
    ContinuousGame::new(spaces, utilities, false)
}
