//! Two-phase bounded-variable revised simplex.
//!
//! The basis inverse is kept explicitly and updated by row operations after
//! each pivot, with a fresh LU-based inverse every `REFACTOR_EVERY` pivots.
//! Pricing is Dantzig's rule until `DEGENERATE_STREAK` consecutive degenerate
//! pivots, then Bland's rule until a pivot makes progress.

use nalgebra::{DMatrix, DVector};

use super::{LpShapeError, LpSolution, LpStatus, SparseLp};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 25;
const REFACTOR_EVERY: usize = 50;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iter: 50_000 }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

struct State<'a> {
    lp: &'a SparseLp,
    n: usize,
    m: usize,
    /// Sign of each artificial column.
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic variable.
    pos: Vec<Option<usize>>,
    binv: DMatrix<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl<'a> State<'a> {
    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.lp.a.column(j).collect()
        } else {
            vec![(j - self.n, self.art_sign[j - self.n])]
        }
    }

    fn ftran(&self, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (r, v) in self.column(j) {
            out.axpy(v, &self.binv.column(r), 1.0);
        }
        out
    }

    fn refactor(&mut self) -> bool {
        let mut b = DMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basis.iter().enumerate() {
            for (r, v) in self.column(j) {
                b[(r, i)] = v;
            }
        }
        let Some(inv) = b.lu().try_inverse() else {
            return false;
        };
        self.binv = inv;
        self.since_refactor = 0;
        // x_B = B⁻¹ (b − N x_N)
        let mut rhs = DVector::from_column_slice(&self.lp.b);
        for j in 0..self.n + self.m {
            if self.pos[j].is_none() && self.x[j] != 0.0 {
                for (r, v) in self.column(j) {
                    rhs[r] -= v * self.x[j];
                }
            }
        }
        let xb = &self.binv * rhs;
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
        true
    }

    fn pivot(&mut self, row: usize, entering: usize, alpha: &DVector<f64>) {
        let leaving = self.basis[row];
        let p = alpha[row];
        let pivot_row = self.binv.row(row) / p;
        for i in 0..self.m {
            if i != row && alpha[i] != 0.0 {
                let a = alpha[i];
                for k in 0..self.m {
                    self.binv[(i, k)] -= a * pivot_row[k];
                }
            }
        }
        self.binv.set_row(row, &pivot_row);
        self.basis[row] = entering;
        self.pos[leaving] = None;
        self.pos[entering] = Some(row);
        if leaving >= self.n {
            // an artificial that leaves never comes back
            self.upper[leaving] = 0.0;
        }
    }

    fn run(&mut self, cost: &[f64], max_iter: usize) -> Outcome {
        let total = self.n + self.m;
        let mut streak = 0usize;
        loop {
            if self.iterations >= max_iter {
                return Outcome::IterationLimit;
            }
            // duals
            let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| cost[j]));
            let y = self.binv.tr_mul(&cb);

            let bland = streak >= DEGENERATE_STREAK;
            let mut entering: Option<(usize, f64)> = None;
            for (j, &cj) in cost.iter().enumerate().take(total) {
                if self.pos[j].is_some() || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cj - self.column(j).iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                let up = d < -COST_TOL && self.x[j] < self.upper[j];
                let down = d > COST_TOL && self.x[j] > self.lower[j];
                if !(up || down) {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((j, d)) = entering else {
                return Outcome::Optimal;
            };
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(j);

            // ratio test; `None` leaving row means a bound flip
            let mut step = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if alpha[i].abs() <= PIVOT_TOL {
                    continue;
                }
                let k = self.basis[i];
                let a = dir * alpha[i];
                let (t, bound) = if a > 0.0 {
                    if self.lower[k] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[k] - self.lower[k]).max(0.0) / a, self.lower[k])
                } else {
                    if self.upper[k] == f64::INFINITY {
                        continue;
                    }
                    ((self.upper[k] - self.x[k]).max(0.0) / -a, self.upper[k])
                };
                let better = match leave {
                    _ if t < step - DEGENERATE_STEP => true,
                    Some((r, _)) if t <= step + DEGENERATE_STEP => {
                        if bland {
                            k < self.basis[r]
                        } else {
                            alpha[i].abs() > alpha[r].abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    step = t;
                    leave = Some((i, bound));
                }
            }
            if step == f64::INFINITY {
                return Outcome::Unbounded;
            }

            self.x[j] += dir * step;
            for i in 0..self.m {
                let k = self.basis[i];
                self.x[k] -= dir * step * alpha[i];
            }
            if let Some((r, bound)) = leave {
                let k = self.basis[r];
                self.x[k] = bound;
                self.pivot(r, j, &alpha);
                self.since_refactor += 1;
            }
            self.iterations += 1;
            streak = if step <= DEGENERATE_STEP { streak + 1 } else { 0 };
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return Outcome::Singular;
            }
        }
    }

    /// Swaps basic artificials for structurals where a usable pivot exists.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.m {
            if self.basis[row] < self.n {
                continue;
            }
            let brow = self.binv.row(row).into_owned();
            let candidate = (0..self.n)
                .filter(|&j| self.pos[j].is_none())
                .map(|j| (j, self.lp.a.column(j).map(|(r, v)| brow[r] * v).sum::<f64>()))
                .find(|(_, a)| a.abs() > 1e-7);
            if let Some((j, _)) = candidate {
                let alpha = self.ftran(j);
                let k = self.basis[row];
                self.x[k] = 0.0;
                self.pivot(row, j, &alpha);
            }
        }
    }
}

/// Solves the LP. Shape errors are reported before any pivoting.
pub fn solve_lp(lp: &SparseLp, opts: &SimplexOptions) -> Result<LpSolution, LpShapeError> {
    lp.check()?;
    let (m, n) = (lp.num_rows(), lp.num_vars());

    let mut x: Vec<f64> = (0..n)
        .map(|j| {
            if lp.lower[j].is_finite() {
                lp.lower[j]
            } else if lp.upper[j].is_finite() {
                lp.upper[j]
            } else {
                0.0
            }
        })
        .collect();
    let ax = lp.a.mul_vec(&x);
    let resid: Vec<f64> = lp.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let art_sign: Vec<f64> = resid.iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }).collect();
    x.extend(resid.iter().map(|r| r.abs()));

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut pos = vec![None; n + m];
    for i in 0..m {
        pos[n + i] = Some(i);
    }

    let mut st = State {
        lp,
        n,
        m,
        art_sign: art_sign.clone(),
        lower,
        upper,
        x,
        basis: (n..n + m).collect(),
        pos,
        binv: DMatrix::from_diagonal(&DVector::from_vec(art_sign)),
        since_refactor: 0,
        iterations: 0,
    };

    let finish = |st: &State, status: LpStatus| {
        let x = st.x[..n].to_vec();
        let objective = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
        LpSolution {
            status,
            x,
            objective,
            iterations: st.iterations,
        }
    };

    let mut phase1 = vec![0.0; n + m];
    for c in &mut phase1[n..] {
        *c = 1.0;
    }
    match st.run(&phase1, opts.max_iter) {
        Outcome::Optimal => {}
        Outcome::IterationLimit => return Ok(finish(&st, LpStatus::IterationLimit)),
        Outcome::Unbounded | Outcome::Singular => return Ok(finish(&st, LpStatus::NumericalFailure)),
    }
    if !st.refactor() {
        return Ok(finish(&st, LpStatus::NumericalFailure));
    }
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let infeas: f64 = st.x[n..].iter().sum();
    if infeas > FEAS_TOL * scale {
        return Ok(finish(&st, LpStatus::Infeasible));
    }
    for i in 0..m {
        st.upper[n + i] = 0.0;
        if st.pos[n + i].is_none() {
            st.x[n + i] = 0.0;
        }
    }
    st.drive_out_artificials();
    if !st.refactor() {
        return Ok(finish(&st, LpStatus::NumericalFailure));
    }

    let mut phase2 = lp.c.clone();
    phase2.extend(std::iter::repeat_n(0.0, m));
    let status = match st.run(&phase2, opts.max_iter) {
        Outcome::Optimal => {
            if !st.refactor() {
                LpStatus::NumericalFailure
            } else {
                LpStatus::Optimal
            }
        }
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
        Outcome::Singular => LpStatus::NumericalFailure,
    };
    let mut sol = finish(&st, status);
    if status == LpStatus::Optimal {
        // remove round-off that pushes a variable a hair past its bound
        for j in 0..n {
            sol.x[j] = sol.x[j].clamp(lp.lower[j], lp.upper[j]);
        }
        sol.objective = sol.x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    }
    Ok(sol)
}
