//! Sparse linear programs in equality form with variable bounds:
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  lower ≤ x ≤ upper
//! ```

mod simplex;

use std::io::{self, Write};

pub use simplex::{solve_lp, SimplexOptions};

/// Real compressed-column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicates are summed; explicit zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> SparseMatrix {
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut m = SparseMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut t = Vec::with_capacity(self.values.len());
        for (r, c, v) in self.iter() {
            if v != 0.0 {
                t.push((r, c, v));
            }
        }
        *self = SparseMatrix::from_triplets(self.nrows, self.ncols, t);
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.column(col).find(|&(r, _)| r == row).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (r, c, v) in self.iter() {
            y[r] += v * x[c];
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLp {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpShapeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {0} has lower > upper")]
    Bounds(usize),
    #[error("row {0} has no nonzero entries")]
    EmptyRow(usize),
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
}

impl SparseLp {
    pub fn num_vars(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn check(&self) -> Result<(), LpShapeError> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        if self.b.len() != m || self.c.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpShapeError::Dimension(format!(
                "A is {m}x{n}, b {}, c {}, lower {}, upper {}",
                self.b.len(),
                self.c.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some(names) = &self.names {
            if names.len() != n {
                return Err(LpShapeError::Dimension(format!("{} names for {n} variables", names.len())));
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpShapeError::Bounds(j));
            }
        }
        if self.b.iter().chain(&self.c).any(|v| !v.is_finite()) || self.a.values.iter().any(|v| !v.is_finite()) {
            return Err(LpShapeError::NonFinite("A, b or c"));
        }
        let mut seen = vec![false; m];
        for (r, _, _) in self.a.iter() {
            seen[r] = true;
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(LpShapeError::EmptyRow(r));
        }
        Ok(())
    }

    pub fn name(&self, j: usize) -> String {
        self.names
            .as_ref()
            .map(|n| n[j].clone())
            .unwrap_or_else(|| format!("x{j}"))
    }

    /// Fixed-column text dump loosely following MPS (ROWS / COLUMNS / RHS /
    /// BOUNDS sections). All rows are equalities.
    pub fn write_mps<W: Write>(&self, mut w: W, name: &str) -> io::Result<()> {
        writeln!(w, "NAME          {name}")?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  COST")?;
        for r in 0..self.num_rows() {
            writeln!(w, " E  R{r}")?;
        }
        writeln!(w, "COLUMNS")?;
        for j in 0..self.num_vars() {
            let n = self.name(j);
            if self.c[j] != 0.0 {
                writeln!(w, "    {:<20} {:<10} {:>24e}", n, "COST", self.c[j])?;
            }
            for (r, v) in self.a.column(j) {
                writeln!(w, "    {:<20} {:<10} {:>24e}", n, format!("R{r}"), v)?;
            }
        }
        writeln!(w, "RHS")?;
        for (r, v) in self.b.iter().enumerate() {
            if *v != 0.0 {
                writeln!(w, "    {:<20} {:<10} {:>24e}", "RHS", format!("R{r}"), v)?;
            }
        }
        writeln!(w, "BOUNDS")?;
        for j in 0..self.num_vars() {
            let n = self.name(j);
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == u {
                writeln!(w, " FX BND       {:<20} {:>24e}", n, l)?;
                continue;
            }
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                writeln!(w, " FR BND       {n}")?;
                continue;
            }
            if l == f64::NEG_INFINITY {
                writeln!(w, " MI BND       {n}")?;
            } else if l != 0.0 {
                writeln!(w, " LO BND       {:<20} {:>24e}", n, l)?;
            }
            if u != f64::INFINITY {
                writeln!(w, " UP BND       {:<20} {:>24e}", n, u)?;
            }
        }
        writeln!(w, "ENDATA")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The basis stayed singular after refactorization.
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// `(‖Ax − b‖∞, largest bound violation)`.
pub fn residuals(lp: &SparseLp, x: &[f64]) -> (f64, f64) {
    let ax = lp.a.mul_vec(x);
    let primal = ax.iter().zip(&lp.b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bound = x
        .iter()
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
        .fold(0.0, f64::max);
    (primal, bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(lower: f64, upper: f64, rows: Vec<(usize, usize, f64)>, b: Vec<f64>, c: f64) -> SparseLp {
        SparseLp {
            a: SparseMatrix::from_triplets(b.len(), 1, rows),
            b,
            c: vec![c],
            lower: vec![lower],
            upper: vec![upper],
            names: None,
        }
    }

    #[test]
    fn shape_checks() {
        let lp = one_var(0.0, 2.0, vec![(0, 0, 1.0)], vec![1.0], 1.0);
        assert!(lp.check().is_ok());
        let bad = one_var(3.0, 2.0, vec![(0, 0, 1.0)], vec![1.0], 1.0);
        assert_eq!(bad.check(), Err(LpShapeError::Bounds(0)));
        let empty = one_var(0.0, 2.0, vec![(0, 0, 1.0)], vec![1.0, 0.0], 1.0);
        assert_eq!(empty.check(), Err(LpShapeError::EmptyRow(1)));
    }

    #[test]
    fn residuals_are_linear_in_perturbation() {
        let lp = one_var(0.0, 2.0, vec![(0, 0, 3.0)], vec![3.0], 1.0);
        assert_eq!(residuals(&lp, &[1.0]), (0.0, 0.0));
        let (p, b) = residuals(&lp, &[1.0 + 1e-3]);
        assert!((p - 3e-3).abs() < 1e-15);
        assert_eq!(b, 0.0);
        assert_eq!(residuals(&lp, &[2.5]).1, 0.5);
    }

    #[test]
    fn mps_dump_sections() {
        let lp = one_var(f64::NEG_INFINITY, f64::INFINITY, vec![(0, 0, 1.0)], vec![1.0], 1.0);
        let mut buf = Vec::new();
        lp.write_mps(&mut buf, "T").unwrap();
        let s = String::from_utf8(buf).unwrap();
        for sec in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "FR BND", "ENDATA"] {
            assert!(s.contains(sec), "{sec} missing in\n{s}");
        }
    }

    #[test]
    fn zeros_are_dropped() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 0.0), (0, 0, -1.0), (1, 0, 2.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), 2.0);
    }
}
