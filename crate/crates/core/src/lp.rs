//! Dense two-phase tableau simplex.
//!
//! Small and exact enough for the transportation problems and master games
//! this crate builds (tens to a few hundred columns). All variables are
//! nonnegative; callers split or shift free variables themselves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const OPT_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;
// consecutive degenerate pivots before switching to Bland's rule
const DEGENERATE_LIMIT: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug)]
struct Row {
    coefs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// A linear program over nonnegative variables.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        LinearProgram { sense, objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coefs.len(), self.objective.len(), "constraint width must match objective");
        self.rows.push(Row { coefs, relation, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.num_vars();
        let m = self.rows.len();
        if m == 0 {
            return self.solve_unconstrained();
        }

        // standard form with b >= 0
        let mut rows: Vec<Row> = self.rows.clone();
        for r in &mut rows {
            if r.rhs < 0.0 {
                r.rhs = -r.rhs;
                r.coefs.iter_mut().for_each(|c| *c = -*c);
                r.relation = match r.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
        let n_cols = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut t = Tableau::new(m, n_cols);
        let mut slack = n;
        let mut art = art_start;
        for (i, r) in rows.iter().enumerate() {
            t.row_mut(i)[..n].copy_from_slice(&r.coefs);
            t.set_rhs(i, r.rhs);
            match r.relation {
                Relation::Le => {
                    t.row_mut(i)[slack] = 1.0;
                    t.basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t.row_mut(i)[slack] = -1.0;
                    slack += 1;
                    t.row_mut(i)[art] = 1.0;
                    t.basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t.row_mut(i)[art] = 1.0;
                    t.basis[i] = art;
                    art += 1;
                }
            }
        }
        let original = t.clone();
        let mut allowed = vec![true; n_cols];

        if n_art > 0 {
            let mut c1 = vec![0.0; n_cols];
            c1[art_start..].iter_mut().for_each(|c| *c = -1.0);
            t.load_objective(&c1);
            t.run(&allowed)?;
            if t.objective_value() < -FEAS_TOL * (1.0 + max_abs_rhs(&rows)) {
                return Err(Error::Lp(format!(
                    "infeasible (phase one residual {:.3e})",
                    -t.objective_value()
                )));
            }
            // drive artificials out of the basis; drop redundant rows
            let mut i = 0;
            while i < t.m {
                if t.basis[i] >= art_start {
                    let pc = (0..art_start)
                        .filter(|&j| t.row(i)[j].abs() > 1e-9)
                        .max_by(|&a, &b| t.row(i)[a].abs().total_cmp(&t.row(i)[b].abs()));
                    match pc {
                        Some(j) => {
                            t.pivot(i, j);
                            i += 1;
                        }
                        None => t.remove_row(i),
                    }
                } else {
                    i += 1;
                }
            }
            allowed[art_start..].iter_mut().for_each(|a| *a = false);
        }

        let mut c2 = vec![0.0; n_cols];
        let sign = if self.sense == Sense::Maximize { 1.0 } else { -1.0 };
        for (j, c) in self.objective.iter().enumerate() {
            c2[j] = sign * c;
        }
        t.load_objective(&c2);
        t.run(&allowed)?;

        let mut full = vec![0.0; n_cols];
        for (i, &b) in t.basis.iter().enumerate() {
            full[b] = t.rhs(i);
        }
        if let Some(polished) = polish(&original, &t.kept_rows, &t.basis) {
            full.iter_mut().for_each(|v| *v = 0.0);
            for (&b, v) in t.basis.iter().zip(polished) {
                full[b] = v;
            }
        }
        let x: Vec<f64> = full[..n].iter().map(|v| v.max(0.0)).collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }

    fn solve_unconstrained(&self) -> Result<LpSolution> {
        let improving = |c: f64| match self.sense {
            Sense::Maximize => c > 0.0,
            Sense::Minimize => c < 0.0,
        };
        if self.objective.iter().any(|c| improving(*c)) {
            return Err(Error::Lp("unbounded".into()));
        }
        Ok(LpSolution { x: vec![0.0; self.num_vars()], objective: 0.0 })
    }
}

fn max_abs_rhs(rows: &[Row]) -> f64 {
    rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max)
}

/// Recomputes the basic solution from the original data to shed pivoting error.
fn polish(original: &Tableau, kept_rows: &[usize], basis: &[usize]) -> Option<Vec<f64>> {
    let m = basis.len();
    let b_mat = DMatrix::from_fn(m, m, |r, c| original.row(kept_rows[r])[basis[c]]);
    let rhs = DVector::from_fn(m, |r, _| original.rhs(kept_rows[r]));
    let sol = b_mat.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite() || *v < -1e-8) {
        return None;
    }
    Some(sol.iter().copied().collect())
}

#[derive(Clone, Debug)]
struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    kept_rows: Vec<usize>,
}

impl Tableau {
    fn new(m: usize, n_cols: usize) -> Self {
        let width = n_cols + 1;
        Tableau {
            m,
            width,
            data: vec![0.0; m * width],
            obj: vec![0.0; width],
            basis: vec![usize::MAX; m],
            kept_rows: (0..m).collect(),
        }
    }

    fn n_cols(&self) -> usize {
        self.width - 1
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn set_rhs(&mut self, i: usize, v: f64) {
        let w = self.width;
        self.data[i * w + w - 1] = v;
    }

    fn objective_value(&self) -> f64 {
        self.obj[self.width - 1]
    }

    fn remove_row(&mut self, i: usize) {
        let w = self.width;
        self.data.drain(i * w..(i + 1) * w);
        self.basis.remove(i);
        self.kept_rows.remove(i);
        self.m -= 1;
    }

    /// Objective row `c_B B^-1 A - c` for maximizing `c·x`.
    fn load_objective(&mut self, c: &[f64]) {
        let w = self.width;
        self.obj = vec![0.0; w];
        for j in 0..self.n_cols() {
            self.obj[j] = -c[j];
        }
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] += cb * self.data[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.data[pr * w + pc];
        for j in 0..w {
            self.data[pr * w + j] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.row(pr).to_vec();
        for i in 0..self.m {
            if i == pr {
                continue;
            }
            let f = self.data[i * w + pc];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (r, pv) in row.iter_mut().zip(&pivot_row) {
                    *r -= f * pv;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (o, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *o -= f * pv;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn run(&mut self, allowed: &[bool]) -> Result<()> {
        let mut degenerate = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let entering = if bland {
                (0..self.n_cols()).find(|&j| allowed[j] && self.obj[j] < -OPT_TOL)
            } else {
                (0..self.n_cols())
                    .filter(|&j| allowed[j] && self.obj[j] < -OPT_TOL)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let a = self.row(i)[pc];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio, a)),
                        Some((bi, br, ba)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            let better = if tie {
                                if bland {
                                    self.basis[i] < self.basis[bi]
                                } else {
                                    a > ba
                                }
                            } else {
                                ratio < br
                            };
                            if better {
                                Some((i, ratio, a))
                            } else {
                                Some((bi, br, ba))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio, _)) = best else {
                return Err(Error::Lp("unbounded".into()));
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
        Err(Error::Lp("pivot limit exceeded".into()))
    }
}
