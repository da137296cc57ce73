//! Finite subgames: utilities restricted to sampled strategy lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::game::{ContinuousGame, UtilityFunction, ZERO_SUM_TOL};
use crate::space::PureStrategy;

/// Dense row-major n-dimensional array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let size: usize = shape.iter().product();
        if size != data.len() {
            return Err(Error::DimensionMismatch { expected: size, got: data.len() });
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_fn<F: FnMut(&[usize]) -> f64>(shape: Vec<usize>, mut f: F) -> Self {
        let size: usize = shape.iter().product();
        let mut data = Vec::with_capacity(size);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..size {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Tensor { shape, data }
    }

    /// Two-dimensional tensor from rows.
    pub fn matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGame("ragged matrix".into()));
        }
        Tensor::new(vec![m, n], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for k in (0..self.shape.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut off = 0;
        for (i, n) in idx.iter().zip(&self.shape) {
            off = off * n + i;
        }
        self.data[off]
    }
}

fn increment(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Payoff storage: dense tensors or, for polymatrix games, bilateral matrices.
#[derive(Clone, Debug, PartialEq)]
enum Payoffs {
    Dense(Vec<Tensor>),
    /// `edges[i]` lists `(k, M_ik)` with `M_ik[a][b] = u_ik(X_i[a], X_k[b])`.
    Pairwise(Vec<Vec<(usize, Tensor)>>),
}

/// Mixed strategies over a subgame: one weight vector per player.
pub type Weights = Vec<Vec<f64>>;

/// `⟨N, (X_i^j), (u_i)⟩` with all payoffs precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSubgame {
    strategies: Vec<Vec<PureStrategy>>,
    payoffs: Payoffs,
    zero_sum: bool,
}

impl FiniteSubgame {
    /// Plain finite game from payoff tensors; strategies are labelled `1..=m_i`.
    pub fn from_tensors(tensors: Vec<Tensor>, zero_sum: bool) -> Result<Self> {
        let n = tensors.len();
        let shape = tensors.first().ok_or(Error::InvalidGame("no players".into()))?.shape().to_vec();
        if shape.len() != n || tensors.iter().any(|t| t.shape() != shape.as_slice()) {
            return Err(Error::InvalidGame("tensor shapes must all equal the action counts".into()));
        }
        let strategies = labels(&shape);
        let mut g = FiniteSubgame { strategies, payoffs: Payoffs::Dense(tensors), zero_sum: false };
        g.zero_sum = zero_sum && g.entries_sum_to_zero();
        Ok(g)
    }

    /// Two-player game from the row and column players' payoff matrices.
    pub fn bimatrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let zero_sum = a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x + y).abs() <= ZERO_SUM_TOL);
        Self::from_tensors(vec![Tensor::matrix(a)?, Tensor::matrix(b)?], zero_sum)
    }

    /// Polymatrix game from bilateral matrices `edges[i] = [(k, M_ik)]`.
    pub fn polymatrix(sizes: &[usize], edges: Vec<Vec<(usize, Tensor)>>, zero_sum: bool) -> Result<Self> {
        if edges.len() != sizes.len() {
            return Err(Error::InvalidGame("one edge list per player required".into()));
        }
        for (i, list) in edges.iter().enumerate() {
            for (k, m) in list {
                if *k >= sizes.len() || *k == i || m.shape() != [sizes[i], sizes[*k]] {
                    return Err(Error::InvalidGame(format!("bad bilateral matrix for edge ({}, {})", i + 1, k + 1)));
                }
            }
        }
        let mut g = FiniteSubgame { strategies: labels(sizes), payoffs: Payoffs::Pairwise(edges), zero_sum: false };
        g.zero_sum = zero_sum && g.entries_sum_to_zero();
        Ok(g)
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.strategies.iter().map(Vec::len).collect()
    }

    pub fn strategies(&self) -> &[Vec<PureStrategy>] {
        &self.strategies
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn is_polymatrix(&self) -> bool {
        matches!(self.payoffs, Payoffs::Pairwise(_))
    }

    /// Bilateral matrices of player `i`, when the subgame is polymatrix.
    pub fn edges(&self, i: usize) -> Option<&[(usize, Tensor)]> {
        match &self.payoffs {
            Payoffs::Pairwise(e) => Some(&e[i]),
            Payoffs::Dense(_) => None,
        }
    }

    /// Payoff to player `i` at the pure index profile `idx`.
    pub fn payoff(&self, i: usize, idx: &[usize]) -> f64 {
        match &self.payoffs {
            Payoffs::Dense(t) => t[i].get(idx),
            Payoffs::Pairwise(e) => e[i].iter().map(|(k, m)| m.get(&[idx[i], idx[*k]])).sum(),
        }
    }

    /// Player `i`'s payoff matrix in a two-player subgame.
    pub fn matrix(&self, i: usize) -> Vec<Vec<f64>> {
        let s = self.sizes();
        (0..s[0]).map(|a| (0..s[1]).map(|b| self.payoff(i, &[a, b])).collect()).collect()
    }

    fn entries_sum_to_zero(&self) -> bool {
        let shape = self.sizes();
        let mut idx = vec![0usize; shape.len()];
        loop {
            let total: f64 = (0..self.players()).map(|i| self.payoff(i, &idx)).sum();
            if total.abs() > ZERO_SUM_TOL {
                return false;
            }
            if !increment(&mut idx, &shape) {
                return true;
            }
        }
    }

    /// `U_i(a, p_{-i})` for every strategy `a` of player `i`.
    pub fn deviation_payoffs(&self, i: usize, weights: &[Vec<f64>]) -> Vec<f64> {
        let sizes = self.sizes();
        match &self.payoffs {
            Payoffs::Pairwise(edges) => {
                let mut out = vec![0.0; sizes[i]];
                for (k, m) in &edges[i] {
                    let nk = sizes[*k];
                    for (a, o) in out.iter_mut().enumerate() {
                        let row = &m.data()[a * nk..(a + 1) * nk];
                        *o += row.iter().zip(&weights[*k]).map(|(u, w)| u * w).sum::<f64>();
                    }
                }
                out
            }
            Payoffs::Dense(tensors) => {
                let t = &tensors[i];
                let strides = t.strides();
                // supports of the other players
                let supports: Vec<Vec<usize>> = weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| {
                        if k == i {
                            vec![0]
                        } else {
                            (0..w.len()).filter(|&a| w[a] != 0.0).collect()
                        }
                    })
                    .collect();
                let shape: Vec<usize> = supports.iter().map(Vec::len).collect();
                let mut out = vec![0.0; sizes[i]];
                if shape.contains(&0) {
                    return out;
                }
                let mut pos = vec![0usize; shape.len()];
                loop {
                    let mut w = 1.0;
                    let mut base = 0;
                    for k in 0..shape.len() {
                        if k == i {
                            continue;
                        }
                        let a = supports[k][pos[k]];
                        w *= weights[k][a];
                        base += a * strides[k];
                    }
                    let data = t.data();
                    for (a, o) in out.iter_mut().enumerate() {
                        *o += w * data[base + a * strides[i]];
                    }
                    if !increment(&mut pos, &shape) {
                        break;
                    }
                }
                out
            }
        }
    }

    /// `U_i(p)`.
    pub fn expected(&self, i: usize, weights: &[Vec<f64>]) -> f64 {
        dot(&self.deviation_payoffs(i, weights), &weights[i])
    }

    /// For each player, the best pure deviation gain `max_a U_i(a, p_{-i}) - U_i(p)`.
    pub fn exploitability(&self, weights: &[Vec<f64>]) -> Vec<f64> {
        (0..self.players())
            .map(|i| {
                let dev = self.deviation_payoffs(i, weights);
                let best = dev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (best - dot(&dev, &weights[i])).max(0.0)
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn labels(sizes: &[usize]) -> Vec<Vec<PureStrategy>> {
    sizes
        .iter()
        .map(|&m| (1..=m).map(|a| PureStrategy::scalar(a as f64)).collect())
        .collect()
}

/// Restricts `game` to the given strategy lists.
///
/// Polymatrix games keep their bilateral structure; everything else is
/// tabulated into one dense tensor per player. The subgame is flagged
/// zero-sum only when the game declares it and every entry sums to zero.
pub fn restrict(game: &ContinuousGame, lists: &[Vec<PureStrategy>], exec: Execution) -> Result<FiniteSubgame> {
    let n = game.players();
    if lists.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lists.len() });
    }
    for (i, l) in lists.iter().enumerate() {
        if l.is_empty() {
            return Err(Error::InvalidGame(format!("empty strategy list for player {}", i + 1)));
        }
        for x in l {
            if !game.space(i).contains(x, crate::game::DOMAIN_TOL)? {
                return Err(Error::OutsideSpace { player: i, point: x.0.clone() });
            }
        }
    }
    let sizes: Vec<usize> = lists.iter().map(Vec::len).collect();

    let payoffs = if game.is_polymatrix() {
        let edges = exec::map_range(exec, n, |i| {
            let UtilityFunction::Polymatrix(terms) = game.utility_fn(i) else { unreachable!() };
            let mut merged: Vec<(usize, Tensor)> = Vec::new();
            for t in terms {
                let k = t.other;
                let m = Tensor::from_fn(vec![sizes[i], sizes[k]], |ab| {
                    t.term.eval(&[&lists[i][ab[0]], &lists[k][ab[1]]], 0)
                });
                match merged.iter_mut().find(|(kk, _)| *kk == k) {
                    Some((_, acc)) => {
                        for (a, b) in acc.data.iter_mut().zip(m.data) {
                            *a += b;
                        }
                    }
                    None => merged.push((k, m)),
                }
            }
            merged
        });
        Payoffs::Pairwise(edges)
    } else {
        let size: usize = sizes.iter().product();
        let rows = exec::map_range(exec, size, |flat| {
            let mut idx = vec![0usize; n];
            let mut r = flat;
            for k in (0..n).rev() {
                idx[k] = r % sizes[k];
                r /= sizes[k];
            }
            let point: Vec<&[f64]> = idx.iter().enumerate().map(|(k, &a)| lists[k][a].coords()).collect();
            (0..n).map(|i| game.eval(i, &point)).collect::<Vec<f64>>()
        });
        let tensors = (0..n)
            .map(|i| Tensor { shape: sizes.clone(), data: rows.iter().map(|r| r[i]).collect() })
            .collect();
        Payoffs::Dense(tensors)
    };

    let mut sub = FiniteSubgame { strategies: lists.to_vec(), payoffs, zero_sum: false };
    sub.zero_sum = game.is_zero_sum() && sub.entries_sum_to_zero();
    Ok(sub)
}
