//! Sparse direct LU with a symmetric fill-reducing permutation.
//!
//! The matrix is permuted as `P A Pᵀ` using an approximate-minimum-degree
//! ordering of the pattern of `A + Aᵀ`, then factored without pivoting by an
//! up-looking algorithm driven by the elimination tree. Because the pattern is
//! symmetrized, row `k` of `L` and column `k` of `U` share one nonzero pattern,
//! so both factors are sized by a single symbolic pass.
//!
//! `L` is stored by columns (unit diagonal implied), `U` by rows with its
//! diagonal kept separately; those are exactly the orientations the
//! up-looking update and the triangular solves need.

use super::CsrMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct DirectFactors {
    n: usize,
    /// `perm[new] = old`; applied to rows and columns alike.
    perm: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<u32>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<u32>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
}

/// Symbolic structure shared by every matrix with the same pattern.
#[derive(Debug, Clone)]
struct Symbolic {
    perm: Vec<usize>,
    parent: Vec<usize>,
    counts: Vec<usize>,
}

/// Factor a square nonsingular matrix.
pub fn direct_factor(a: &CsrMatrix) -> Result<DirectFactors> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "direct_factor (square)",
            expected: n,
            actual: a.ncols(),
        });
    }
    let perm = fill_reducing_order(a)?;
    let b = permute_symmetric(a, &perm);
    let bt = b.transpose();
    let sym = analyze(&b, &bt, perm);
    numeric(&b, &bt, sym, a.max_abs())
}

fn fill_reducing_order(a: &CsrMatrix) -> Result<Vec<usize>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let control = amd::Control::default();
    let (p, _pinv, _info) = amd::order::<usize>(n, a.row_ptr(), a.col_idx(), &control)
        .map_err(|s| Error::InvalidParameter(format!("AMD ordering failed: {s:?}")))?;
    Ok(p)
}

fn permute_symmetric(a: &CsrMatrix, perm: &[usize]) -> CsrMatrix {
    let n = a.nrows();
    let mut pinv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        pinv[old] = new;
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    row_ptr.push(0);
    for &old in perm {
        let (c, v) = a.row(old);
        scratch.clear();
        scratch.extend(c.iter().zip(v).map(|(&j, &x)| (pinv[j], x)));
        scratch.sort_unstable_by_key(|e| e.0);
        for &(j, x) in &scratch {
            col_idx.push(j);
            values.push(x);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(n, n, row_ptr, col_idx, values).expect("permutation preserves structure")
}

/// Strictly-upper neighbours `i < k` of node `k` in the pattern of B + Bᵀ,
/// visited through row k of B and row k of Bᵀ (duplicates are harmless).
fn for_each_lower_neighbor(b: &CsrMatrix, bt: &CsrMatrix, k: usize, mut f: impl FnMut(usize)) {
    for &i in b.row(k).0 {
        if i >= k {
            break;
        }
        f(i);
    }
    for &i in bt.row(k).0 {
        if i >= k {
            break;
        }
        f(i);
    }
}

fn analyze(b: &CsrMatrix, bt: &CsrMatrix, perm: Vec<usize>) -> Symbolic {
    let n = b.nrows();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for_each_lower_neighbor(b, bt, k, |start| {
            let mut i = start;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        });
    }

    // counts[j] = off-diagonal entries in column j of L
    let mut counts = vec![0usize; n];
    let mut flag = vec![NONE; n];
    for k in 0..n {
        flag[k] = k;
        for_each_lower_neighbor(b, bt, k, |start| {
            let mut i = start;
            while flag[i] != k {
                counts[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        });
    }
    Symbolic {
        perm,
        parent,
        counts,
    }
}

fn numeric(b: &CsrMatrix, bt: &CsrMatrix, sym: Symbolic, anorm: f64) -> Result<DirectFactors> {
    let n = b.nrows();
    let Symbolic {
        perm,
        parent,
        counts,
    } = sym;

    let mut l_ptr = Vec::with_capacity(n + 1);
    l_ptr.push(0);
    for &c in &counts {
        l_ptr.push(l_ptr.last().unwrap() + c);
    }
    let nnz = l_ptr[n];
    let u_ptr = l_ptr.clone();
    let mut l_idx = vec![0u32; nnz];
    let mut l_val = vec![0.0; nnz];
    let mut u_idx = vec![0u32; nnz];
    let mut u_val = vec![0.0; nnz];
    let mut next = l_ptr[..n].to_vec();
    let mut u_diag = vec![0.0; n];

    let mut yu = vec![0.0; n];
    let mut zl = vec![0.0; n];
    let mut flag = vec![NONE; n];
    let mut stack = vec![0usize; n];
    let mut pattern = vec![0usize; n];
    let tiny = f64::EPSILON * anorm.max(f64::MIN_POSITIVE);

    for k in 0..n {
        // reach of row k in the elimination tree, topologically ordered in pattern[top..n]
        let mut top = n;
        flag[k] = k;
        for_each_lower_neighbor(b, bt, k, |start| {
            let mut len = 0;
            let mut i = start;
            while flag[i] != k {
                stack[len] = i;
                len += 1;
                flag[i] = k;
                i = parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = stack[len];
            }
        });

        let mut d = 0.0;
        {
            let (c, v) = bt.row(k);
            for (&i, &x) in c.iter().zip(v) {
                if i < k {
                    yu[i] = x;
                } else if i == k {
                    d = x;
                }
            }
            let (c, v) = b.row(k);
            for (&j, &x) in c.iter().zip(v) {
                if j >= k {
                    break;
                }
                zl[j] = x;
            }
        }

        for &j in &pattern[top..n] {
            let ujk = yu[j];
            yu[j] = 0.0;
            let lkj = zl[j] / u_diag[j];
            zl[j] = 0.0;
            for p in l_ptr[j]..next[j] {
                yu[l_idx[p] as usize] -= l_val[p] * ujk;
            }
            for p in u_ptr[j]..next[j] {
                zl[u_idx[p] as usize] -= lkj * u_val[p];
            }
            d -= lkj * ujk;
            let slot = next[j];
            l_idx[slot] = k as u32;
            l_val[slot] = lkj;
            u_idx[slot] = k as u32;
            u_val[slot] = ujk;
            next[j] += 1;
        }

        if !d.is_finite() || d.abs() <= tiny {
            return Err(Error::Singular {
                pivot: k,
                row: perm[k],
            });
        }
        u_diag[k] = d;
    }

    Ok(DirectFactors {
        n,
        perm,
        l_ptr,
        l_idx,
        l_val,
        u_ptr,
        u_idx,
        u_val,
        u_diag,
    })
}

impl DirectFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of L plus U (diagonal included).
    pub fn nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len() + self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| x[old]).collect();
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                    y[self.l_idx[p] as usize] -= self.l_val[p] * yj;
                }
            }
        }
        for j in (0..self.n).rev() {
            let mut acc = y[j];
            for p in self.u_ptr[j]..self.u_ptr[j + 1] {
                acc -= self.u_val[p] * y[self.u_idx[p] as usize];
            }
            y[j] = acc / self.u_diag[j];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}
