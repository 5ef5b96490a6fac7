use super::field::{FieldError, PrimeField};

/// Dense matrix over GF(p), entries in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<u64>) -> Result<Self, FieldError> {
        if entries.len() != rows * cols {
            return Err(FieldError::ShapeMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(FieldMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = FieldMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[Vec<u64>], cols: usize) -> Result<Self, FieldError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(FieldError::ShapeMismatch(format!(
                    "row of length {} in a {}-column matrix",
                    r.len(),
                    cols
                )));
            }
            entries.extend_from_slice(r);
        }
        FieldMatrix::new(rows.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn multiply(&self, field: PrimeField, other: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
        if self.cols != other.rows {
            return Err(FieldError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = FieldMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = field.add(out.get(i, j), field.mul(a, other.get(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, field: PrimeField, v: &[u64]) -> Result<Vec<u64>, FieldError> {
        if v.len() != self.cols {
            return Err(FieldError::ShapeMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![0u64; self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0u64;
            for (a, b) in row.iter().zip(v) {
                acc = field.add(acc, field.mul(*a, *b));
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// In-place reduction to reduced row echelon form. Deterministic: columns
    /// are scanned left to right and the first row with a nonzero entry at or
    /// below the current row becomes the pivot. Returns the pivot columns.
    pub fn rref(&mut self, field: PrimeField) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(src) = (pivot_row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            if src != pivot_row {
                for j in 0..self.cols {
                    let a = self.get(pivot_row, j);
                    let b = self.get(src, j);
                    self.set(pivot_row, j, b);
                    self.set(src, j, a);
                }
            }
            let inv = field
                .inv(self.get(pivot_row, col))
                .expect("pivot is nonzero");
            for j in col..self.cols {
                let v = field.mul(self.get(pivot_row, j), inv);
                self.set(pivot_row, j, v);
            }
            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor == 0 {
                    continue;
                }
                for j in col..self.cols {
                    let v = field.sub(self.get(r, j), field.mul(factor, self.get(pivot_row, j)));
                    self.set(r, j, v);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    pub fn rank(&self, field: PrimeField) -> usize {
        let mut m = self.clone();
        m.rref(field).len()
    }

    /// Deterministic basis of the right null space, one column per free
    /// column of the RREF in ascending index order, with that free variable
    /// set to 1. Returns a `cols x nullity` matrix.
    pub fn null_space_basis(&self, field: PrimeField) -> FieldMatrix {
        self.null_space_with_free_cols(field).0
    }

    /// Null-space basis together with the free column indices. Basis vector
    /// i has a 1 at `free[i]` and 0 at every other free column, so a vector
    /// in the span can be read back off the free coordinates.
    pub fn null_space_with_free_cols(&self, field: PrimeField) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = FieldMatrix::zeros(self.cols, free.len());
        for (bi, &fc) in free.iter().enumerate() {
            basis.set(fc, bi, 1);
            for (pr, &pc) in pivots.iter().enumerate() {
                basis.set(pc, bi, field.neg(m.get(pr, fc)));
            }
        }
        (basis, free)
    }

    /// One solution of `self * x = b` (free variables set to 0), or an error
    /// when the system is inconsistent.
    pub fn solve(&self, field: PrimeField, b: &[u64]) -> Result<Vec<u64>, FieldError> {
        if b.len() != self.rows {
            return Err(FieldError::ShapeMismatch(format!(
                "right-hand side of length {} against {} rows",
                b.len(),
                self.rows
            )));
        }
        let mut aug = FieldMatrix::zeros(self.rows, self.cols + 1);
        for (i, &bi) in b.iter().enumerate() {
            aug.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            aug.set(i, self.cols, bi);
        }
        let pivots = aug.rref(field);
        if pivots.contains(&self.cols) {
            return Err(FieldError::NoSolution);
        }
        let mut x = vec![0u64; self.cols];
        for (pr, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(pr, self.cols);
        }
        Ok(x)
    }

    /// Inverse of a square matrix, or `Singular`.
    pub fn inverse(&self, field: PrimeField) -> Result<FieldMatrix, FieldError> {
        if self.rows != self.cols {
            return Err(FieldError::ShapeMismatch(format!(
                "inverse of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = FieldMatrix::zeros(n, 2 * n);
        for i in 0..n {
            aug.row_mut(i)[..n].copy_from_slice(self.row(i));
            aug.set(i, n + i, 1);
        }
        let pivots = aug.rref(field);
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return Err(FieldError::Singular);
        }
        let mut inv = FieldMatrix::zeros(n, n);
        for i in 0..n {
            inv.row_mut(i).copy_from_slice(&aug.row(i)[n..]);
        }
        Ok(inv)
    }
}
