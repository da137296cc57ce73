//! The multiple oracle loop.
//!
//! Each iteration restricts the game to the current strategy lists, solves
//! the finite subgame, asks every player's oracle for a best response and
//! measures how much each player could gain by deviating. The loop stops
//! once no player gains more than `epsilon`; otherwise every new best
//! response joins its player's list.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::{self, MasterConfig, MasterSolver, Method};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::game::{ContinuousGame, DOMAIN_TOL};
use crate::metrics::profile_distance;
use crate::oracle::{best_response, BestResponse, OracleConfig};
use crate::space::{Profile, PureStrategy, DEDUP_RADIUS};
use crate::subgame::restrict;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Starting lists; one sampled point per player when absent.
    pub initial_strategies: Option<Vec<Vec<PureStrategy>>>,
    /// Target gap for the subgame solver; `max(epsilon / 10, 1e-9)` when absent.
    pub master_tol: Option<f64>,
    /// Best responses closer than this to an existing atom are not added.
    pub membership_tol: f64,
    pub record_wasserstein: bool,
    pub master: MasterSolver,
    pub oracle: OracleConfig,
    pub exec: Execution,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilon: 1e-3,
            max_iterations: 100,
            seed: 0,
            initial_strategies: None,
            master_tol: None,
            membership_tol: DEDUP_RADIUS,
            record_wasserstein: false,
            master: MasterSolver::Auto,
            oracle: OracleConfig::default(),
            exec: Execution::default(),
        }
    }
}

impl SolveConfig {
    pub fn effective_master_tol(&self) -> f64 {
        self.master_tol.unwrap_or_else(|| {
            let t = (self.epsilon / 10.0).max(1e-9);
            if self.epsilon > 0.0 && t >= self.epsilon {
                self.epsilon / 10.0
            } else {
                t
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        let tol = self.effective_master_tol();
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("master_tol must be positive, got {tol}")));
        }
        if self.epsilon > 0.0 && tol >= self.epsilon {
            return Err(Error::InvalidConfig(format!(
                "master_tol {tol} must be below epsilon {}",
                self.epsilon
            )));
        }
        if self.membership_tol.is_nan() || self.membership_tol < 0.0 {
            return Err(Error::InvalidConfig("membership_tol must be >= 0".into()));
        }
        if self.oracle.iterations == 0 {
            return Err(Error::InvalidConfig("oracle iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wall-clock milliseconds per phase of one iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub restrict_ms: f64,
    pub master_ms: f64,
    pub oracle_ms: f64,
    pub wasserstein_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// `U_i(x_i^{j+1}, p_{-i}^j) - U_i(p^j)` per player.
    pub instability: Vec<f64>,
    /// `U_i(p^j)` per player.
    pub payoffs: Vec<f64>,
    /// Distance from the previous iteration's profile.
    pub wasserstein_step: Option<f64>,
    pub subgame_sizes: Vec<usize>,
    pub master_certified_gap: f64,
    pub master_certified: bool,
    pub master_method: Method,
    pub timings: PhaseTimings,
}

impl IterationTrace {
    pub fn max_instability(&self) -> f64 {
        self.instability.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Terminated {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub profile: Profile,
    /// Largest instability of the returned profile.
    pub epsilon_certified: f64,
    pub iterations: usize,
    pub trace: Vec<IterationTrace>,
    pub terminated: Terminated,
    /// `U_i(profile)` per player.
    pub payoffs: Vec<f64>,
    /// Per-player instability of the returned profile.
    pub instability: Vec<f64>,
    pub master_tol: f64,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Componentwise `BR value - U_i(profile)`.
pub fn instability(game: &ContinuousGame, profile: &Profile, best_responses: &[BestResponse]) -> Vec<f64> {
    best_responses
        .iter()
        .enumerate()
        .map(|(i, br)| br.value - game.expected_utility(i, profile))
        .collect()
}

fn payoffs(game: &ContinuousGame, profile: &Profile) -> Vec<f64> {
    (0..game.players()).map(|i| game.expected_utility(i, profile)).collect()
}

/// Largest gain any player can obtain by a unilateral deviation, measured
/// with the stricter oracle budget.
pub fn certify_epsilon(game: &ContinuousGame, profile: &Profile, cfg: &OracleConfig, seed: u64) -> Result<f64> {
    profile.validate(game.spaces(), DOMAIN_TOL)?;
    let strict = cfg.strict();
    let mut worst: f64 = 0.0;
    for i in 0..game.players() {
        let atoms: Vec<PureStrategy> = profile.get(i).atoms().to_vec();
        let br = best_response(game, i, profile, &strict, &atoms, derive_seed(seed, u64::MAX, i as u64))?;
        worst = worst.max(br.value - game.expected_utility(i, profile));
    }
    Ok(worst)
}

fn initial_lists(game: &ContinuousGame, cfg: &SolveConfig) -> Result<Vec<Vec<PureStrategy>>> {
    match &cfg.initial_strategies {
        Some(lists) => {
            if lists.len() != game.players() {
                return Err(Error::InvalidConfig(format!(
                    "{} initial lists for {} players",
                    lists.len(),
                    game.players()
                )));
            }
            let mut out = Vec::with_capacity(lists.len());
            for (i, list) in lists.iter().enumerate() {
                if list.is_empty() {
                    return Err(Error::InvalidConfig(format!("initial list of player {} is empty", i + 1)));
                }
                let mut kept: Vec<PureStrategy> = Vec::new();
                for x in list {
                    if !game.space(i).contains(x, DOMAIN_TOL)? {
                        return Err(Error::OutsideSpace { player: i, point: x.0.clone() });
                    }
                    if !kept.iter().any(|y| game.space(i).distance_unchecked(x, y) <= cfg.membership_tol) {
                        kept.push(x.clone());
                    }
                }
                out.push(kept);
            }
            Ok(out)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok(game.spaces().iter().map(|s| vec![s.sample(&mut rng)]).collect())
        }
    }
}

/// Runs the multiple oracle loop.
///
/// Returns `Converged` as soon as every instability is at most `epsilon`, or
/// when no list grows and the instabilities are within `epsilon + master_tol`.
/// After `max_iterations` the iterate with the smallest largest instability
/// is returned as `MaxIterations`.
pub fn solve(game: &ContinuousGame, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let master_tol = cfg.effective_master_tol();
    let mut lists = initial_lists(game, cfg)?;
    let n = game.players();
    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut previous: Option<Profile> = None;
    let mut best: Option<(f64, Profile, usize)> = None;

    for j in 1..=cfg.max_iterations {
        let t = Instant::now();
        let sub = restrict(game, &lists, cfg.exec)?;
        let restrict_ms = ms(t);

        let t = Instant::now();
        let master_cfg = MasterConfig {
            solver: cfg.master,
            tol: master_tol,
            seed: derive_seed(cfg.seed, j as u64, u64::MAX),
            exec: cfg.exec,
            ..MasterConfig::default()
        };
        let eq = equilibrium::solve(&sub, &master_cfg)?;
        let profile = eq.to_profile(&sub, game.spaces())?;
        let master_ms = ms(t);

        let t = Instant::now();
        let brs = exec::map_range(cfg.exec, n, |i| {
            best_response(game, i, &profile, &cfg.oracle, &lists[i], derive_seed(cfg.seed, j as u64, i as u64))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let pay = payoffs(game, &profile);
        let inst: Vec<f64> = brs.iter().zip(&pay).map(|(br, u)| br.value - u).collect();
        let oracle_ms = ms(t);

        let t = Instant::now();
        let wasserstein_step = match (&previous, cfg.record_wasserstein) {
            (Some(prev), true) => Some(profile_distance(prev, &profile, game.spaces())?),
            _ => None,
        };
        let wasserstein_ms = if cfg.record_wasserstein { ms(t) } else { 0.0 };

        let record = IterationTrace {
            iteration: j,
            instability: inst,
            payoffs: pay,
            wasserstein_step,
            subgame_sizes: lists.iter().map(Vec::len).collect(),
            master_certified_gap: eq.certified_gap,
            master_certified: eq.certified,
            master_method: eq.method,
            timings: PhaseTimings { restrict_ms, master_ms, oracle_ms, wasserstein_ms },
        };
        let worst = record.max_instability();
        trace.push(record);
        if best.as_ref().is_none_or(|(b, _, _)| worst < *b) {
            best = Some((worst, profile.clone(), j));
        }

        let finish = |profile: Profile, eps: f64, trace: Vec<IterationTrace>| SolveResult {
            payoffs: trace[j - 1].payoffs.clone(),
            instability: trace[j - 1].instability.clone(),
            profile,
            epsilon_certified: eps,
            iterations: j,
            trace,
            terminated: Terminated::Converged,
            master_tol,
        };
        if worst <= cfg.epsilon {
            return Ok(finish(profile, worst, trace));
        }

        let mut grew = false;
        for (i, br) in brs.into_iter().enumerate() {
            let space = game.space(i);
            if !lists[i].iter().any(|y| space.distance_unchecked(&br.strategy, y) <= cfg.membership_tol) {
                lists[i].push(br.strategy);
                grew = true;
            }
        }
        if !grew && worst <= cfg.epsilon + master_tol {
            return Ok(finish(profile, worst, trace));
        }
        previous = Some(profile);
    }

    let (eps, profile, j) = best.expect("at least one iteration");
    Ok(SolveResult {
        payoffs: trace[j - 1].payoffs.clone(),
        instability: trace[j - 1].instability.clone(),
        profile,
        epsilon_certified: eps,
        iterations: cfg.max_iterations,
        trace,
        terminated: Terminated::MaxIterations,
        master_tol,
    })
}
