use num_complex::Complex64;

use super::phase::{Phase, PhaseSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaskError {
    #[error("phase {0} is not present in mask {1}")]
    AbsentPhase(Phase, PhaseSet),
    #[error("mask {mask} has {expected} phases but {got} values were given")]
    Arity {
        mask: PhaseSet,
        expected: usize,
        got: usize,
    },
}

/// One value per present phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector<T> {
    mask: PhaseSet,
    values: Vec<T>,
}

impl<T: Clone> PhaseVector<T> {
    pub fn new(mask: PhaseSet, values: Vec<T>) -> Result<Self, MaskError> {
        if values.len() != mask.len() {
            return Err(MaskError::Arity {
                mask,
                expected: mask.len(),
                got: values.len(),
            });
        }
        Ok(PhaseVector { mask, values })
    }

    pub fn filled(mask: PhaseSet, value: T) -> Self {
        PhaseVector {
            mask,
            values: vec![value; mask.len()],
        }
    }

    pub fn from_fn(mask: PhaseSet, mut f: impl FnMut(Phase) -> T) -> Self {
        PhaseVector {
            mask,
            values: mask.iter().map(&mut f).collect(),
        }
    }

    pub fn mask(&self) -> PhaseSet {
        self.mask
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, p: Phase) -> Result<&T, MaskError> {
        self.mask
            .position(p)
            .map(|i| &self.values[i])
            .ok_or(MaskError::AbsentPhase(p, self.mask))
    }

    pub fn get_mut(&mut self, p: Phase) -> Result<&mut T, MaskError> {
        match self.mask.position(p) {
            Some(i) => Ok(&mut self.values[i]),
            None => Err(MaskError::AbsentPhase(p, self.mask)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Phase, &T)> {
        self.mask.iter().zip(self.values.iter())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> PhaseVector<U> {
        PhaseVector {
            mask: self.mask,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Square complex matrix over a phase mask, row-major in mask order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    mask: PhaseSet,
    entries: Vec<Complex64>,
}

impl PhaseMatrix {
    pub fn new(mask: PhaseSet, rows: Vec<Vec<Complex64>>) -> Result<Self, MaskError> {
        let n = mask.len();
        if rows.len() != n {
            return Err(MaskError::Arity {
                mask,
                expected: n,
                got: rows.len(),
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(MaskError::Arity {
                    mask,
                    expected: n,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(PhaseMatrix { mask, entries })
    }

    pub fn zeros(mask: PhaseSet) -> Self {
        let n = mask.len();
        PhaseMatrix {
            mask,
            entries: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn diagonal(mask: PhaseSet, d: Complex64) -> Self {
        let mut m = PhaseMatrix::zeros(mask);
        for p in mask.iter() {
            m.set(p, p, d);
        }
        m
    }

    pub fn from_fn(mask: PhaseSet, mut f: impl FnMut(Phase, Phase) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(mask.len() * mask.len());
        for p in mask.iter() {
            for q in mask.iter() {
                entries.push(f(p, q));
            }
        }
        PhaseMatrix { mask, entries }
    }

    pub fn mask(&self) -> PhaseSet {
        self.mask
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    /// Entry by position within the mask.
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim() + j]
    }

    pub fn get(&self, p: Phase, q: Phase) -> Result<Complex64, MaskError> {
        let i = self.mask.position(p).ok_or(MaskError::AbsentPhase(p, self.mask))?;
        let j = self.mask.position(q).ok_or(MaskError::AbsentPhase(q, self.mask))?;
        Ok(self.at(i, j))
    }

    fn set(&mut self, p: Phase, q: Phase, v: Complex64) {
        let n = self.dim();
        let i = self.mask.position(p).expect("phase in mask");
        let j = self.mask.position(q).expect("phase in mask");
        self.entries[i * n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.entries.chunks(self.dim().max(1)).map(|r| r.to_vec()).collect()
    }

    /// Restriction to a sub-mask.
    pub fn restrict(&self, sub: PhaseSet) -> Result<PhaseMatrix, MaskError> {
        for p in sub.iter() {
            if !self.mask.contains(p) {
                return Err(MaskError::AbsentPhase(p, self.mask));
            }
        }
        Ok(PhaseMatrix::from_fn(sub, |p, q| self.get(p, q).unwrap()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| (self.at(i, j) - self.at(j, i)).norm() <= tol))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.at(i, j))
    }

    pub fn from_dense(mask: PhaseSet, m: &nalgebra::DMatrix<Complex64>) -> PhaseMatrix {
        let n = mask.len();
        assert_eq!(m.nrows(), n);
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(m[(i, j)]);
            }
        }
        PhaseMatrix { mask, entries }
    }

    pub fn inverse(&self) -> Option<PhaseMatrix> {
        self.to_dense()
            .try_inverse()
            .map(|inv| PhaseMatrix::from_dense(self.mask, &inv))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }
}
