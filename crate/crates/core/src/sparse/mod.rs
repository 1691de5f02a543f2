//! Sparse kernels: CSR storage, SpMV, ILU(0), a sparse direct LU, and the
//! small dense helpers used by the layer algebra.

mod csr;
pub mod dense;
mod direct;
mod ilu;

pub use csr::{kron, CsrMatrix};
pub use dense::DenseMatrix;
pub use direct::{direct_factor, DirectFactors};
pub use ilu::{ilu0_factor, Ilu0Factors};
