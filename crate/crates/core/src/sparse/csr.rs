use std::io::Write;

use crate::error::{Error, Result};

/// Compressed-row sparse matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from raw arrays, checking the structural invariants.
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(Error::DimensionMismatch {
                context: "csr row_ptr",
                expected: nrows + 1,
                actual: row_ptr.len(),
            });
        }
        if col_idx.len() != values.len() || row_ptr[nrows] != values.len() || row_ptr[0] != 0 {
            return Err(Error::DimensionMismatch {
                context: "csr nnz",
                expected: row_ptr[nrows],
                actual: values.len(),
            });
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidParameter(format!(
                    "row_ptr decreases at row {i}"
                )));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "columns of row {i} not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::InvalidParameter(format!(
                    "column index out of range in row {i}"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assemble from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..nrows {
            let row = &mut entries[counts[i]..counts[i + 1]];
            row.sort_unstable_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut trips = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense input");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trips)
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Entry lookup by binary search; zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "spmv",
                expected: self.ncols,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// y = A x without allocation. Panics on shape mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    /// y = Aᵀ x.
    pub fn spmv_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[p]] += self.values[p] * xi;
            }
        }
        y
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let mut row = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[p] * y[self.col_idx[p]];
            }
            acc += xi * row;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[p];
                col_idx[next[c]] = i;
                values[next[c]] = self.values[p];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// α·A + β·B over the union of both patterns.
    pub fn add(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                context: "csr add",
                expected: self.nrows * self.ncols,
                actual: other.nrows * other.ncols,
            });
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_ptr.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                if take_a && take_b {
                    col_idx.push(ca[p]);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if take_a {
                    col_idx.push(ca[p]);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_idx.push(cb[q]);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Sparse product A·B.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                context: "csr matmul",
                expected: self.ncols,
                actual: other.nrows,
            });
        }
        let mut trips = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&j, &b) in cb.iter().zip(vb) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                trips.push((i, j, acc[j]));
            }
        }
        Ok(Self::from_triplets(self.nrows, other.ncols, &trips))
    }

    /// Block-diagonal concatenation.
    pub fn block_diag(blocks: &[&CsrMatrix]) -> Self {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        let mut col_off = 0;
        for b in blocks {
            for i in 0..b.nrows {
                let (c, v) = b.row(i);
                col_idx.extend(c.iter().map(|&j| j + col_off));
                values.extend_from_slice(v);
                row_ptr.push(col_idx.len());
            }
            col_off += b.ncols;
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Assemble a 2×2 block matrix [[a, b], [c, d]].
    pub fn block2x2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        if a.nrows != b.nrows || c.nrows != d.nrows || a.ncols != c.ncols || b.ncols != d.ncols {
            return Err(Error::DimensionMismatch {
                context: "block2x2",
                expected: a.nrows,
                actual: b.nrows,
            });
        }
        let n0 = a.nrows;
        let m0 = a.ncols;
        let nrows = n0 + c.nrows;
        let ncols = m0 + b.ncols;
        let nnz = a.nnz() + b.nnz() + c.nnz() + d.nnz();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (left, right) in [(a, b), (c, d)] {
            for i in 0..left.nrows {
                let (cl, vl) = left.row(i);
                col_idx.extend_from_slice(cl);
                values.extend_from_slice(vl);
                let (cr, vr) = right.row(i);
                col_idx.extend(cr.iter().map(|&j| j + m0));
                values.extend_from_slice(vr);
                row_ptr.push(col_idx.len());
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Submatrix of the given rows and columns (index lists need not be sorted).
    pub fn extract(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let mut trips = Vec::new();
        for (new_r, &old_r) in rows.iter().enumerate() {
            let (c, v) = self.row(old_r);
            for (&j, &x) in c.iter().zip(v) {
                if map[j] != usize::MAX {
                    trips.push((new_r, map[j], x));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &trips)
    }

    /// max |A - Aᵀ| over stored entries of either.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let diff = self.add(1.0, &t, -1.0).expect("square for symmetry check");
        diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        out
    }

    /// Write in MatrixMarket coordinate real general format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, x)?;
            }
        }
        Ok(())
    }
}

/// Kronecker product `small ⊗ big` with the small index outermost.
///
/// Row `i·m + r` of the result holds `small[i][j] * big[r, c]` at column `j·n + c`,
/// so each block of `big` stays contiguous.
pub fn kron(small: &super::DenseMatrix, big: &CsrMatrix) -> CsrMatrix {
    let ns = small.nrows();
    let ms = small.ncols();
    let mut row_ptr = Vec::with_capacity(ns * big.nrows + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for i in 0..ns {
        for r in 0..big.nrows {
            let (c, v) = big.row(r);
            for j in 0..ms {
                let s = small.get(i, j);
                if s == 0.0 {
                    continue;
                }
                col_idx.extend(c.iter().map(|&cc| j * big.ncols + cc));
                values.extend(v.iter().map(|&x| s * x));
            }
            row_ptr.push(col_idx.len());
        }
    }
    CsrMatrix {
        nrows: ns * big.nrows,
        ncols: ms * big.ncols,
        row_ptr,
        col_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::DenseMatrix;

    #[test]
    fn spmv_examples() {
        let id = CsrMatrix::identity(3);
        assert_eq!(id.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = CsrMatrix::zeros(2, 2);
        assert_eq!(z.spmv(&[5.0, 7.0]).unwrap(), vec![0.0, 0.0]);
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn spmv_rejects_bad_length() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn new_validates_structure() {
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
    }

    #[test]
    fn kron_examples() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let lifted = kron(&DenseMatrix::identity(2), &m);
        assert_eq!(lifted, CsrMatrix::block_diag(&[&m, &m]));

        let small = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]);
        let two = CsrMatrix::from_dense(&[vec![2.0]]);
        assert_eq!(
            kron(&small, &two).to_dense(),
            vec![vec![2.0, 2.0], vec![2.0, 4.0]]
        );
    }

    #[test]
    fn transpose_and_add() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0]]);
        let t = a.transpose();
        assert_eq!(
            t.to_dense(),
            vec![vec![1.0, 0.0], vec![2.0, 3.0], vec![0.0, 4.0]]
        );
        let b = CsrMatrix::from_dense(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0]]);
        let s = a.add(2.0, &b, -1.0).unwrap();
        assert_eq!(
            s.to_dense(),
            vec![vec![2.0, 3.0, -1.0], vec![-1.0, 6.0, 8.0]]
        );
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        let b = CsrMatrix::from_dense(&[vec![4.0, 0.0], vec![1.0, 5.0]]);
        assert_eq!(
            a.matmul(&b).unwrap().to_dense(),
            vec![vec![6.0, 10.0], vec![3.0, 15.0]]
        );
    }

    #[test]
    fn matrix_market_dump() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.5, 2.0]]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 3");
        assert!(lines[3].starts_with("2 1 5.0"));
    }
}
