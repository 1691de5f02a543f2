//! Zero-fill incomplete LU.
//!
//! The factors share the input sparsity pattern: strictly-lower entries hold
//! `L` (unit diagonal implied), diagonal and upper entries hold `U`.

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Ilu0Factors {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    lu: Vec<f64>,
    diag: Vec<usize>,
}

/// IKJ-ordered ILU(0).
pub fn ilu0_factor(a: &CsrMatrix) -> Result<Ilu0Factors> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "ilu0 (square)",
            expected: n,
            actual: a.ncols(),
        });
    }
    let row_ptr = a.row_ptr().to_vec();
    let col_idx = a.col_idx().to_vec();
    let mut lu = a.values().to_vec();

    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
        match cols.binary_search(&i) {
            Ok(p) => diag.push(row_ptr[i] + p),
            Err(_) => return Err(Error::MissingDiagonal { row: i }),
        }
    }

    // position of column j within the current row, or usize::MAX
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        for p in start..end {
            pos[col_idx[p]] = p;
        }
        for p in start..diag[i] {
            let k = col_idx[p];
            let pivot = lu[diag[k]];
            let lik = lu[p] / pivot;
            lu[p] = lik;
            for q in diag[k] + 1..row_ptr[k + 1] {
                let target = pos[col_idx[q]];
                if target != usize::MAX {
                    lu[target] -= lik * lu[q];
                }
            }
        }
        for p in start..end {
            pos[col_idx[p]] = usize::MAX;
        }
        let d = lu[diag[i]];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
    }

    Ok(Ilu0Factors {
        n,
        row_ptr,
        col_idx,
        lu,
        diag,
    })
}

impl Ilu0Factors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.lu.len()
    }

    /// Solve (LU) x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut acc = x[i];
            for p in self.row_ptr[i]..self.diag[i] {
                acc -= self.lu[p] * x[self.col_idx[p]];
            }
            x[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc -= self.lu[p] * x[self.col_idx[p]];
            }
            x[i] = acc / self.lu[self.diag[i]];
        }
    }
}
