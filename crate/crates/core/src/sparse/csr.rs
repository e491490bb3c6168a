use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::parallel;

type C64 = Complex64;

/// Compressed sparse row matrix over complex scalars.
///
/// `symmetric` records that the matrix was assembled to be exactly symmetric
/// (A = Aᵀ entrywise, not Hermitian). `coords`, when present, gives a point
/// per row of a square matrix and lets the LU use a geometric ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
    pub symmetric: bool,
    pub coords: Option<Arc<Vec<[f64; 2]>>>,
}

impl CsrMatrix {
    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed in
    /// input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::invalid(format!(
                "triplet ({i}, {j}) out of bounds for {nrows}x{ncols} matrix"
            )));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *values.last_mut().expect("non-empty") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
            coords: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
            symmetric: true,
            coords: None,
        }
    }

    /// All-zero matrix with the given pattern.
    pub fn zeros_with_pattern(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        let nnz = col_idx.len();
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![C64::new(0.0, 0.0); nnz],
            symmetric: false,
            coords: None,
        }
    }

    /// Sparse copy of a dense matrix, dropping exact zeros.
    pub fn from_dense(d: &DMatrix<C64>) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: d.nrows(),
            ncols: d.ncols(),
            row_ptr,
            col_idx,
            values,
            symmetric: false,
            coords: None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Iterator over (column, value) pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// Storage position of entry (i, j), if present in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.position(i, j).map_or(C64::new(0.0, 0.0), |p| self.values[p])
    }

    /// Checks the structural invariants of the format.
    pub fn validate(&self) -> Result<()> {
        if self.row_ptr.len() != self.nrows + 1 || self.row_ptr[0] != 0 {
            return Err(Error::invalid("row_ptr has wrong length or does not start at 0"));
        }
        if self.row_ptr[self.nrows] != self.col_idx.len() || self.col_idx.len() != self.values.len() {
            return Err(Error::invalid("row_ptr[nrows] does not match nnz"));
        }
        for i in 0..self.nrows {
            if self.row_ptr[i] > self.row_ptr[i + 1] {
                return Err(Error::invalid("row_ptr is not monotone"));
            }
            let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= self.ncols) {
                return Err(Error::invalid(format!(
                    "row {i}: columns not strictly increasing or out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in matvec");
        parallel::map_range(self.nrows, |i| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// xᴴ A y
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric,
            coords: if self.is_square() { self.coords.clone() } else { None },
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise |A_ij − A_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).norm());
            }
        }
        worst
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// a·self + b·other for matrices sharing one sparsity pattern.
    pub fn combine(&self, a: C64, other: &CsrMatrix, b: C64) -> Result<CsrMatrix> {
        if !self.same_pattern(other) {
            return Err(Error::invalid("matrices do not share a sparsity pattern"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(CsrMatrix {
            values,
            symmetric: self.symmetric && other.symmetric,
            ..self.clone()
        })
    }

    /// self + other for matrices sharing one sparsity pattern.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if !self.same_pattern(other) {
            return Err(Error::invalid("matrices do not share a sparsity pattern"));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(CsrMatrix {
            values,
            symmetric: self.symmetric && other.symmetric,
            ..self.clone()
        })
    }

    pub fn scaled(&self, c: C64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// The submatrix A[rows, cols], with rows and columns renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let mut entries: Vec<(usize, C64)> = self
                .row(r)
                .filter(|(j, _)| col_map[*j] != usize::MAX)
                .map(|(j, v)| (col_map[j], v))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (j, v) in entries {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric && rows == cols,
            coords: match &self.coords {
                Some(c) if rows == cols => Some(Arc::new(rows.iter().map(|&r| c[r]).collect())),
                _ => None,
            },
        }
    }
}
