//! Unrestarted GMRES with right preconditioning.
//!
//! Arnoldi runs on `A P⁻¹` with modified Gram–Schmidt; the least-squares
//! problem is kept upper triangular with Givens rotations so the residual
//! norm is available every step. Since `P⁻¹` is linear, the solution is
//! recovered with a single preconditioner application, `x = P⁻¹ (V y)`.

use std::time::{Duration, Instant};

use crate::sparse::dense::{axpy, dot, norm2};
use crate::sparse::{CsrMatrix, DirectFactors, Ilu0Factors};

pub const DEFAULT_MAX_ITER: usize = 2000;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    /// `z = P⁻¹ r`; `z` is overwritten.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl Preconditioner for DirectFactors {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}

impl Preconditioner for Ilu0Factors {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub rtol: f64,
    pub max_iter: usize,
    /// Measure `max |VᵀV − I|` over the Krylov basis at exit.
    pub check_orthogonality: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-5,
            max_iter: DEFAULT_MAX_ITER,
            check_orthogonality: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_j‖ / ‖b‖` from the Arnoldi recurrence; entry 0 is the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// True relative residual `‖b − A x‖ / ‖b‖` recomputed at exit.
    pub relative_residual: f64,
    pub wall_time: Duration,
    pub orthogonality_loss: Option<f64>,
}

/// Solve `A x = b` from a zero initial guess.
pub fn gmres<A, P>(op: &A, pc: &P, b: &[f64], opts: &GmresOptions) -> (Vec<f64>, SolveReport)
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let start = Instant::now();
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");

    let beta = norm2(b);
    if beta == 0.0 {
        return (
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                relative_residual: 0.0,
                wall_time: start.elapsed(),
                orthogonality_loss: opts.check_orthogonality.then_some(0.0),
            },
        );
    }

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // columns of the rotated Hessenberg matrix, R[j] has length j + 1
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut history = vec![1.0];
    let mut converged = false;

    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    for j in 0..opts.max_iter {
        pc.apply(&basis[j], &mut z);
        op.apply(&z, &mut w);
        let w_norm0 = norm2(&w);

        let mut h = Vec::with_capacity(j + 2);
        for v in &basis {
            let hij = dot(&w, v);
            axpy(-hij, v, &mut w);
            h.push(hij);
        }
        let h_next = norm2(&w);

        for i in 0..j {
            let (a, c) = (h[i], h[i + 1]);
            h[i] = cs[i] * a + sn[i] * c;
            h[i + 1] = -sn[i] * a + cs[i] * c;
        }
        let denom = h[j].hypot(h_next);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[j] / denom, h_next / denom) };
        h[j] = denom;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        r_cols.push(h);

        let res = g[j + 1].abs();
        history.push(res / beta);
        if res <= opts.rtol * beta {
            converged = true;
            break;
        }
        if h_next <= f64::EPSILON * w_norm0 {
            // invariant subspace: the current iterate is exact up to roundoff
            break;
        }
        basis.push(w.iter().map(|v| v / h_next).collect());
    }

    let m = r_cols.len();
    let mut y = g[..m].to_vec();
    for i in (0..m).rev() {
        for k in i + 1..m {
            y[i] -= r_cols[k][i] * y[k];
        }
        y[i] /= r_cols[i][i];
    }
    let mut vy = vec![0.0; n];
    for (v, &yi) in basis.iter().zip(&y) {
        axpy(yi, v, &mut vy);
    }
    let mut x = vec![0.0; n];
    pc.apply(&vy, &mut x);

    op.apply(&x, &mut w);
    let true_res = norm2(&w.iter().zip(b).map(|(ax, bi)| bi - ax).collect::<Vec<_>>()) / beta;

    let orthogonality_loss = opts.check_orthogonality.then(|| {
        let used = &basis[..m.min(basis.len())];
        let mut worst: f64 = 0.0;
        for (i, vi) in used.iter().enumerate() {
            for (k, vk) in used.iter().enumerate().skip(i) {
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((dot(vi, vk) - target).abs());
            }
        }
        worst
    });

    (
        x,
        SolveReport {
            iterations: m,
            residual_history: history,
            converged,
            relative_residual: true_res,
            wall_time: start.elapsed(),
            orthogonality_loss,
        },
    )
}
