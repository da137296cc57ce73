//! Master-problem solvers for finite subgames.
//!
//! * two-player zero-sum: the classical pair of value LPs;
//! * zero-sum polymatrix: the single LP `min Σ w_i` s.t. `w_i >= U_i(a, x_{-i})`,
//!   whose optimum (value zero) is an equilibrium;
//! * everything else: a pure-profile scan, regret-matching+ with linear
//!   averaging, then support enumeration with Newton refinement.
//!
//! Every result carries a gap recomputed by exhaustive deviation checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::space::{MixedStrategy, Profile, StrategySpace, DEDUP_RADIUS};
use crate::subgame::{dot, FiniteSubgame, Weights};

/// Weights below this are treated as numerical noise and removed.
const WEIGHT_FLOOR: f64 = 1e-13;
/// Largest per-player support tried by support enumeration.
const MAX_SUPPORT_TWO_PLAYER: usize = 4;
const MAX_SUPPORT_MULTI_PLAYER: usize = 8;
/// Newton-solved support profiles before giving up.
const SUPPORT_BUDGET: usize = 200_000;
const SUPPORT_BUDGET_MULTI_PLAYER: usize = 5_000;
/// Support profiles visited, pruned or not, before giving up.
const VISIT_BUDGET: usize = 2_000_000;
/// Random restarts of the Newton solve per support with three or more players.
const EXTRA_NEWTON_STARTS: usize = 3;
/// Pure profiles scanned for a pure equilibrium.
const PURE_SCAN_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MasterSolver {
    #[default]
    Auto,
    Lp,
    PolymatrixLp,
    Regret,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ZeroSumLp,
    PolymatrixLp,
    PureScan,
    RegretMatching,
    SupportEnumeration,
    BestEffort,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterConfig {
    pub solver: MasterSolver,
    /// Target exploitability for the general solver.
    pub tol: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            solver: MasterSolver::Auto,
            tol: 1e-6,
            iterations: 2000,
            restarts: 10,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

/// An approximate equilibrium of a finite subgame.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEquilibrium {
    pub weights: Weights,
    /// `max_i` of the exploitability vector, recomputed exhaustively.
    pub certified_gap: f64,
    /// Whether `certified_gap` met the requested tolerance.
    pub certified: bool,
    pub method: Method,
}

impl FiniteEquilibrium {
    fn new(sub: &FiniteSubgame, weights: Weights, tol: f64, method: Method) -> Self {
        let weights = clean(weights);
        let certified_gap = max_gap(sub, &weights);
        FiniteEquilibrium { weights, certified_gap, certified: certified_gap <= tol, method }
    }

    /// The equilibrium as mixed strategies over the subgame's atoms.
    pub fn to_profile(&self, sub: &FiniteSubgame, spaces: &[StrategySpace]) -> Result<Profile> {
        let strategies = self
            .weights
            .iter()
            .zip(sub.strategies())
            .zip(spaces)
            .map(|((w, atoms), space)| MixedStrategy::canonicalize(atoms.clone(), w.clone(), space, DEDUP_RADIUS))
            .collect::<Result<Vec<_>>>()?;
        Ok(Profile::new(strategies))
    }
}

/// Exploitability of a subgame profile, one entry per player.
pub fn exploitability(sub: &FiniteSubgame, weights: &[Vec<f64>]) -> Vec<f64> {
    sub.exploitability(weights)
}

fn max_gap(sub: &FiniteSubgame, weights: &[Vec<f64>]) -> f64 {
    exploitability(sub, weights).into_iter().fold(0.0, f64::max)
}

fn clean(weights: Weights) -> Weights {
    weights
        .into_iter()
        .map(|w| {
            let mut w: Vec<f64> = w.into_iter().map(|v| if v > WEIGHT_FLOOR { v } else { 0.0 }).collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w.iter_mut().for_each(|v| *v /= s);
            } else {
                let n = w.len() as f64;
                w.iter_mut().for_each(|v| *v = 1.0 / n);
            }
            w
        })
        .collect()
}

/// Picks a solver for the subgame and runs it.
pub fn solve(sub: &FiniteSubgame, cfg: &MasterConfig) -> Result<FiniteEquilibrium> {
    match cfg.solver {
        MasterSolver::Lp => {
            if sub.players() == 2 && sub.is_zero_sum() {
                solve_zero_sum_bimatrix(sub, cfg.tol)
            } else {
                Err(Error::Dispatch {
                    solver: "lp",
                    reason: "needs a certified two-player zero-sum subgame".into(),
                })
            }
        }
        MasterSolver::PolymatrixLp => {
            if sub.is_zero_sum() && sub.is_polymatrix() {
                solve_polymatrix_zero_sum(sub, cfg.tol)
            } else {
                Err(Error::Dispatch {
                    solver: "polymatrix-lp",
                    reason: "needs a certified zero-sum polymatrix subgame".into(),
                })
            }
        }
        MasterSolver::Regret => Ok(solve_general(sub, cfg)),
        MasterSolver::Auto => {
            if sub.is_zero_sum() && sub.players() == 2 {
                solve_zero_sum_bimatrix(sub, cfg.tol)
            } else if sub.is_zero_sum() && sub.is_polymatrix() {
                solve_polymatrix_zero_sum(sub, cfg.tol)
            } else {
                Ok(solve_general(sub, cfg))
            }
        }
    }
}

/// Minimax strategies of a two-player zero-sum subgame.
pub fn solve_zero_sum_bimatrix(sub: &FiniteSubgame, tol: f64) -> Result<FiniteEquilibrium> {
    if sub.players() != 2 || !sub.is_zero_sum() {
        return Err(Error::Dispatch { solver: "lp", reason: "subgame is not two-player zero-sum".into() });
    }
    let a = sub.matrix(0);
    let (m, n) = (a.len(), a[0].len());
    let min = a.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;

    // row player: max v s.t. Σ_a x_a A'[a][b] >= v, Σ x = 1
    let mut obj = vec![0.0; m + 1];
    obj[m] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for b in 0..n {
        let mut row: Vec<f64> = (0..m).map(|r| -(a[r][b] + shift)).collect();
        row.push(1.0);
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    let mut sum = vec![1.0; m];
    sum.push(0.0);
    lp.add_constraint(sum, Relation::Eq, 1.0);
    let x = lp.solve()?.x[..m].to_vec();

    // column player: min w s.t. Σ_b A'[a][b] y_b <= w, Σ y = 1
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for row_a in &a {
        let mut row: Vec<f64> = row_a.iter().map(|v| v + shift).collect();
        row.push(-1.0);
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    let mut sum = vec![1.0; n];
    sum.push(0.0);
    lp.add_constraint(sum, Relation::Eq, 1.0);
    let y = lp.solve()?.x[..n].to_vec();

    Ok(FiniteEquilibrium::new(sub, vec![x, y], tol.max(1e-8), Method::ZeroSumLp))
}

/// Equilibrium of a globally zero-sum polymatrix subgame by one LP.
pub fn solve_polymatrix_zero_sum(sub: &FiniteSubgame, tol: f64) -> Result<FiniteEquilibrium> {
    if !sub.is_zero_sum() {
        return Err(Error::Dispatch { solver: "polymatrix-lp", reason: "subgame is not zero-sum".into() });
    }
    if !sub.is_polymatrix() {
        return Err(Error::Dispatch { solver: "polymatrix-lp", reason: "subgame has no bilateral structure".into() });
    }
    let n = sub.players();
    let sizes = sub.sizes();
    let mut offset = vec![0usize; n + 1];
    for i in 0..n {
        offset[i + 1] = offset[i] + sizes[i];
    }
    let nx = offset[n];
    // variables: x blocks, then (w_i+, w_i-) per player
    let nv = nx + 2 * n;
    let mut obj = vec![0.0; nv];
    for i in 0..n {
        obj[nx + 2 * i] = 1.0;
        obj[nx + 2 * i + 1] = -1.0;
    }
    let mut lp = LinearProgram::new(Sense::Minimize, obj);
    for i in 0..n {
        let edges = sub.edges(i).expect("polymatrix");
        for a in 0..sizes[i] {
            let mut row = vec![0.0; nv];
            for (k, m) in edges {
                let nk = sizes[*k];
                for b in 0..nk {
                    row[offset[*k] + b] += m.data()[a * nk + b];
                }
            }
            row[nx + 2 * i] = -1.0;
            row[nx + 2 * i + 1] = 1.0;
            lp.add_constraint(row, Relation::Le, 0.0);
        }
    }
    for k in 0..n {
        let mut row = vec![0.0; nv];
        row[offset[k]..offset[k + 1]].iter_mut().for_each(|v| *v = 1.0);
        lp.add_constraint(row, Relation::Eq, 1.0);
    }
    let sol = lp.solve()?;
    let weights = (0..n).map(|k| sol.x[offset[k]..offset[k + 1]].to_vec()).collect();
    Ok(FiniteEquilibrium::new(sub, weights, tol.max(1e-8), Method::PolymatrixLp))
}

/// General-sum solver: pure scan, regret-matching+ restarts, support enumeration.
///
/// Never fails; when nothing meets `cfg.tol` the best profile found is
/// returned with `certified == false`.
pub fn solve_general(sub: &FiniteSubgame, cfg: &MasterConfig) -> FiniteEquilibrium {
    let tol = cfg.tol;
    if let Some(eq) = pure_scan(sub, tol) {
        return eq;
    }

    let runs = exec::map_range(cfg.exec, cfg.restarts.max(1), |r| regret_matching_plus(sub, cfg, r));
    let mut best: Option<FiniteEquilibrium> = None;
    for eq in runs {
        if best.as_ref().is_none_or(|b| eq.certified_gap < b.certified_gap) {
            best = Some(eq);
        }
    }
    let best = best.expect("at least one restart");
    if best.certified {
        return best;
    }

    // refine on the support regret matching settled on
    let guess: Vec<Vec<usize>> = best
        .weights
        .iter()
        .map(|w| {
            let s: Vec<usize> = (0..w.len()).filter(|&a| w[a] > 1e-3).collect();
            if s.is_empty() {
                vec![argmax(w)]
            } else {
                s
            }
        })
        .collect();
    if let Some(w) = solve_on_support(sub, &guess, Some(&best.weights)) {
        let eq = FiniteEquilibrium::new(sub, w, tol, Method::SupportEnumeration);
        if eq.certified {
            return eq;
        }
    }

    if let Some(eq) = support_enumeration(sub, tol, cfg.seed) {
        return eq;
    }
    FiniteEquilibrium { method: Method::BestEffort, certified: false, ..best }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// First pure profile (in index order) from which no player gains.
fn pure_scan(sub: &FiniteSubgame, tol: f64) -> Option<FiniteEquilibrium> {
    let sizes = sub.sizes();
    let total: usize = sizes.iter().product();
    if total > PURE_SCAN_LIMIT {
        return None;
    }
    let n = sizes.len();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let stable = (0..n).all(|i| {
            let here = sub.payoff(i, &idx);
            let mut dev = idx.clone();
            (0..sizes[i]).all(|a| {
                dev[i] = a;
                sub.payoff(i, &dev) <= here
            })
        });
        if stable {
            let weights = idx
                .iter()
                .zip(&sizes)
                .map(|(&a, &m)| {
                    let mut w = vec![0.0; m];
                    w[a] = 1.0;
                    w
                })
                .collect();
            return Some(FiniteEquilibrium::new(sub, weights, tol, Method::PureScan));
        }
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    None
}

fn normalize_positive(r: &[f64]) -> Vec<f64> {
    let s: f64 = r.iter().sum();
    if s > 0.0 {
        r.iter().map(|v| v / s).collect()
    } else {
        vec![1.0 / r.len() as f64; r.len()]
    }
}

/// Simultaneous regret-matching+ with linearly weighted averaging.
fn regret_matching_plus(sub: &FiniteSubgame, cfg: &MasterConfig, restart: usize) -> FiniteEquilibrium {
    let sizes = sub.sizes();
    let n = sizes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(restart as u64 + 1)));
    let mut regrets: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&m| {
            if restart == 0 {
                vec![0.0; m]
            } else {
                (0..m).map(|_| rng.random::<f64>()).collect()
            }
        })
        .collect();
    let mut avg: Vec<Vec<f64>> = sizes.iter().map(|&m| vec![0.0; m]).collect();
    let mut best: Option<FiniteEquilibrium> = None;
    let check_every = 100;
    for t in 1..=cfg.iterations.max(1) {
        let sigma: Weights = regrets.iter().map(|r| normalize_positive(r)).collect();
        for i in 0..n {
            let u = sub.deviation_payoffs(i, &sigma);
            let v = dot(&u, &sigma[i]);
            for (r, ua) in regrets[i].iter_mut().zip(&u) {
                *r = (*r + ua - v).max(0.0);
            }
            for (a, s) in avg[i].iter_mut().zip(&sigma[i]) {
                *a += t as f64 * s;
            }
        }
        if t % check_every == 0 || t == cfg.iterations {
            let eq = FiniteEquilibrium::new(sub, avg.clone(), cfg.tol, Method::RegretMatching);
            let done = eq.certified;
            if best.as_ref().is_none_or(|b| eq.certified_gap < b.certified_gap) {
                best = Some(eq);
            }
            if done {
                break;
            }
        }
    }
    best.expect("at least one check")
}

/// Support-size vectors in search order: by total size for two players, and
/// balanced sizes first for more players.
fn size_profiles(caps: &[usize]) -> Vec<Vec<usize>> {
    let n = caps.len();
    let mut out = Vec::new();
    let mut k = vec![1usize; n];
    loop {
        out.push(k.clone());
        let mut i = n;
        loop {
            if i == 0 {
                let key = |v: &Vec<usize>| {
                    let total: usize = v.iter().sum();
                    let spread = if n == 2 {
                        0
                    } else {
                        v.iter().max().unwrap_or(&0) - v.iter().min().unwrap_or(&0)
                    };
                    (spread, total, v.clone())
                };
                out.sort_by_key(key);
                return out;
            }
            i -= 1;
            if k[i] < caps[i] {
                k[i] += 1;
                break;
            }
            k[i] = 1;
        }
    }
}

/// True when some action of player `i`'s support earns strictly less than
/// another action against every pure profile drawn from the other supports.
fn conditionally_dominated(sub: &FiniteSubgame, supports: &[Vec<usize>], i: usize) -> bool {
    let n = supports.len();
    let m = sub.sizes()[i];
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let mut pos = vec![0usize; others.len()];
    let mut idx = vec![0usize; n];
    // beats[a][b]: b earns more than a on every profile seen so far
    let mut beats = vec![vec![true; m]; supports[i].len()];
    loop {
        for (k, &p) in others.iter().zip(&pos) {
            idx[*k] = supports[*k][p];
        }
        let row: Vec<f64> = (0..m)
            .map(|b| {
                idx[i] = b;
                sub.payoff(i, &idx)
            })
            .collect();
        for (ja, &a) in supports[i].iter().enumerate() {
            for b in 0..m {
                if beats[ja][b] && row[b] <= row[a] {
                    beats[ja][b] = false;
                }
            }
        }
        let mut j = others.len();
        loop {
            if j == 0 {
                return beats.iter().any(|r| r.iter().any(|&x| x));
            }
            j -= 1;
            pos[j] += 1;
            if pos[j] < supports[others[j]].len() {
                break;
            }
            pos[j] = 0;
        }
    }
}

/// Support enumeration with Newton solves of the indifference conditions.
///
/// Supports containing a conditionally dominated action are skipped. With
/// three or more players a failed solve from the uniform point is retried
/// from random interior points of the support.
fn support_enumeration(sub: &FiniteSubgame, tol: f64, seed: u64) -> Option<FiniteEquilibrium> {
    let sizes = sub.sizes();
    let n = sizes.len();
    let (cap, budget, extra_starts) = if n == 2 {
        (MAX_SUPPORT_TWO_PLAYER, SUPPORT_BUDGET, 0)
    } else {
        (MAX_SUPPORT_MULTI_PLAYER, SUPPORT_BUDGET_MULTI_PLAYER, EXTRA_NEWTON_STARTS)
    };
    let caps: Vec<usize> = sizes.iter().map(|&m| cap.min(m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solved = 0usize;
    let mut visited = 0usize;
    for k in size_profiles(&caps) {
        let subsets: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|i| {
                let mut all = Vec::new();
                combinations(sizes[i], k[i], &mut all);
                all
            })
            .collect();
        let mut choice = vec![0usize; n];
        loop {
            visited += 1;
            if visited > VISIT_BUDGET {
                return None;
            }
            let supports: Vec<Vec<usize>> = (0..n).map(|i| subsets[i][choice[i]].clone()).collect();
            if !(0..n).any(|i| conditionally_dominated(sub, &supports, i)) {
                solved += 1;
                if solved > budget {
                    return None;
                }
                let mut starts: Vec<Option<Weights>> = vec![None];
                for _ in 0..extra_starts {
                    let w: Weights = (0..n)
                        .map(|i| {
                            let mut w = vec![0.0; sizes[i]];
                            let raw: Vec<f64> = supports[i].iter().map(|_| rng.random_range(0.05..1.0)).collect();
                            let total: f64 = raw.iter().sum();
                            for (&a, r) in supports[i].iter().zip(&raw) {
                                w[a] = r / total;
                            }
                            w
                        })
                        .collect();
                    starts.push(Some(w));
                }
                for start in &starts {
                    if let Some(w) = solve_on_support(sub, &supports, start.as_ref()) {
                        let eq = FiniteEquilibrium::new(sub, w, tol, Method::SupportEnumeration);
                        if eq.certified {
                            return Some(eq);
                        }
                    }
                    if supports.iter().all(|s| s.len() == 1) {
                        break;
                    }
                }
            }
            let mut j = n;
            let mut carry = true;
            while carry && j > 0 {
                j -= 1;
                choice[j] += 1;
                if choice[j] < subsets[j].len() {
                    carry = false;
                } else {
                    choice[j] = 0;
                }
            }
            if carry {
                break;
            }
        }
    }
    None
}

fn combinations(m: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < m - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves the indifference conditions on fixed supports by Gauss-Newton.
///
/// Unknowns are the weights on each support and one value per player; the
/// equations say every support strategy earns the player's value and the
/// weights sum to one. Returns full-length weights when a nonnegative
/// solution with negligible residual exists.
fn solve_on_support(sub: &FiniteSubgame, supports: &[Vec<usize>], start: Option<&Weights>) -> Option<Weights> {
    let n = sub.players();
    let sizes = sub.sizes();
    let mut offset = vec![0usize; n + 1];
    for i in 0..n {
        offset[i + 1] = offset[i] + supports[i].len();
    }
    let np = offset[n];
    let nz = np + n;

    let full = |z: &DVector<f64>| -> Weights {
        (0..n)
            .map(|i| {
                let mut w = vec![0.0; sizes[i]];
                for (j, &a) in supports[i].iter().enumerate() {
                    w[a] = z[offset[i] + j];
                }
                w
            })
            .collect()
    };

    let mut z = DVector::zeros(nz);
    for i in 0..n {
        for (j, &a) in supports[i].iter().enumerate() {
            z[offset[i] + j] = match start {
                Some(w) => w[i][a],
                None => 1.0 / supports[i].len() as f64,
            };
        }
    }
    let w0 = full(&z);
    for i in 0..n {
        z[np + i] = sub.expected(i, &w0);
    }

    let residual = |z: &DVector<f64>| -> DVector<f64> {
        let w = full(z);
        let mut f = DVector::zeros(nz);
        let mut row = 0;
        for i in 0..n {
            let dev = sub.deviation_payoffs(i, &w);
            for &a in &supports[i] {
                f[row] = dev[a] - z[np + i];
                row += 1;
            }
        }
        for i in 0..n {
            f[row] = (offset[i]..offset[i + 1]).map(|k| z[k]).sum::<f64>() - 1.0;
            row += 1;
        }
        f
    };

    let mut f = residual(&z);
    for _ in 0..30 {
        if f.amax() <= 1e-13 {
            break;
        }
        // Jacobian: d/dp_k(b) of U_i(a, p_-i) = U_i(a, b, p_-{i,k})
        let w = full(&z);
        let mut jac = DMatrix::zeros(nz, nz);
        let mut row = 0;
        for i in 0..n {
            for k in 0..n {
                if k == i {
                    continue;
                }
                for (jb, &b) in supports[k].iter().enumerate() {
                    let mut wk = w.clone();
                    wk[k] = vec![0.0; sizes[k]];
                    wk[k][b] = 1.0;
                    let dev = sub.deviation_payoffs(i, &wk);
                    for (ja, &a) in supports[i].iter().enumerate() {
                        jac[(row + ja, offset[k] + jb)] = dev[a];
                    }
                }
            }
            for ja in 0..supports[i].len() {
                jac[(row + ja, np + i)] = -1.0;
            }
            row += supports[i].len();
        }
        for i in 0..n {
            for k in offset[i]..offset[i + 1] {
                jac[(row, k)] = 1.0;
            }
            row += 1;
        }
        let step = match jac.clone().lu().solve(&f) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => jac.svd(true, true).solve(&f, 1e-12).ok()?,
        };
        z -= step;
        f = residual(&z);
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    if f.amax() > 1e-10 {
        return None;
    }
    if (0..np).any(|k| z[k] < -1e-10) {
        return None;
    }
    let w = full(&z).into_iter().map(|v| v.into_iter().map(|x| x.max(0.0)).collect()).collect();
    Some(w)
}
