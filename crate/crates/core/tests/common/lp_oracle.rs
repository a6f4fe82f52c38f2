#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use opts_core::lp::SparseMatrix;
use opts_core::SparseLp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Random LP with at most 8 variables and 4 equality rows. Roughly two thirds
/// are built around a known feasible point.
pub fn random_lp(seed: u64) -> SparseLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=8);
    let m = rng.gen_range(1..=4.min(n - 1));
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let l = if rng.gen_bool(0.2) { f64::NEG_INFINITY } else { rng.gen_range(-5.0..0.0) };
        let u = if rng.gen_bool(0.2) {
            f64::INFINITY
        } else if l.is_finite() {
            l + rng.gen_range(0.5..5.0)
        } else {
            rng.gen_range(0.0..5.0)
        };
        lower.push(l);
        upper.push(u);
    }
    let mut trip = Vec::new();
    for r in 0..m {
        for j in 0..n {
            if rng.gen_bool(0.7) {
                trip.push((r, j, rng.gen_range(-3.0..3.0)));
            }
        }
        // keep every row nonempty
        let j = rng.gen_range(0..n);
        trip.push((r, j, rng.gen_range(0.5..3.0)));
    }
    let a = SparseMatrix::from_triplets(m, n, trip);
    let b = if rng.gen_bool(0.67) {
        let x0: Vec<f64> = (0..n)
            .map(|j| {
                let (l, u) = (lower[j], upper[j]);
                match (l.is_finite(), u.is_finite()) {
                    (true, true) => rng.gen_range(l..=u),
                    (true, false) => l + rng.gen_range(0.0..3.0),
                    (false, true) => u - rng.gen_range(0.0..3.0),
                    (false, false) => rng.gen_range(-3.0..3.0),
                }
            })
            .collect();
        a.mul_vec(&x0)
    } else {
        (0..m).map(|_| rng.gen_range(-20.0..20.0)).collect()
    };
    let c = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SparseLp {
        a,
        b,
        c,
        lower,
        upper,
        names: None,
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over all basic solutions with nonbasic variables at a
/// bound, infinite bounds replaced by `±big`.
fn best_vertex(lp: &SparseLp, big: f64) -> Option<f64> {
    let (m, n) = (lp.num_rows(), lp.num_vars());
    let a = DMatrix::from_fn(m, n, |r, c| lp.a.get(r, c));
    let lo: Vec<f64> = lp.lower.iter().map(|l| l.max(-big)).collect();
    let hi: Vec<f64> = lp.upper.iter().map(|u| u.min(big)).collect();
    let mut best: Option<f64> = None;
    for basis in combinations(n, m) {
        let bmat = DMatrix::from_fn(m, m, |r, c| a[(r, basis[c])]);
        let Some(inv) = bmat.clone().try_inverse() else { continue };
        if bmat.determinant().abs() < 1e-10 {
            continue;
        }
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
        for mask in 0u32..(1 << nonbasic.len()) {
            let mut x = vec![0.0; n];
            for (k, &j) in nonbasic.iter().enumerate() {
                x[j] = if mask & (1 << k) == 0 { lo[j] } else { hi[j] };
            }
            let mut rhs = DVector::from_column_slice(&lp.b);
            for &j in &nonbasic {
                for r in 0..m {
                    rhs[r] -= a[(r, j)] * x[j];
                }
            }
            let xb = &inv * rhs;
            let ok = basis
                .iter()
                .enumerate()
                .all(|(i, &j)| xb[i] >= lo[j] - 1e-9 && xb[i] <= hi[j] + 1e-9);
            if !ok {
                continue;
            }
            for (i, &j) in basis.iter().enumerate() {
                x[j] = xb[i];
            }
            let obj: f64 = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

pub fn vertex_oracle(lp: &SparseLp) -> Oracle {
    match (best_vertex(lp, 1e6), best_vertex(lp, 1e7)) {
        (None, None) => Oracle::Infeasible,
        (Some(a), Some(b)) if (a - b).abs() <= 1e-6 * (1.0 + a.abs()) => Oracle::Optimal(a),
        _ => Oracle::Unbounded,
    }
}
