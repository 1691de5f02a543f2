//! Preconditioners for the per-step block system.
//!
//! Apart from the monolithic ILU(0) baseline, every variant is block diagonal
//! `[C, M^W]` and differs only in how the velocity block `C` is approximated
//! and inverted. `M^W` is diagonal and inverted exactly.

use std::fmt;

use crate::error::{Error, Result};
use crate::krylov::Preconditioner;
use crate::layers::{coupling_inverse, kron_lift, ldlt, LdlFactors};
use crate::sparse::{direct_factor, ilu0_factor, CsrMatrix, DenseMatrix, DirectFactors, Ilu0Factors};
use crate::system::BlockSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// ILU(0) of the whole system in assembly ordering.
    FullIlu0,
    /// `[M^V + Fr²k² 𝒜⊗E, M^W]`.
    WeightedNorm,
    /// `[M^V + Fr²k² I⊗E, M^W]`.
    LayerDecoupled,
    /// Weighted norm, with `C` inverted through the `ℒ𝒟ℒᵀ` change of variables.
    TridiagonalReform,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::FullIlu0 => "full_ilu0",
            Variant::WeightedNorm => "weighted_norm",
            Variant::LayerDecoupled => "layer_decoupled",
            Variant::TridiagonalReform => "tridiagonal_reform",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    ExactDirect,
    Ilu0,
}

#[derive(Debug, Clone)]
enum Factor {
    Direct(DirectFactors),
    Ilu(Ilu0Factors),
}

impl Factor {
    fn new(a: &CsrMatrix, inner: InnerSolver) -> Result<Self> {
        Ok(match inner {
            InnerSolver::ExactDirect => Factor::Direct(direct_factor(a)?),
            InnerSolver::Ilu0 => Factor::Ilu(ilu0_factor(a)?),
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Factor::Direct(f) => f.solve_in_place(x),
            Factor::Ilu(f) => f.solve_in_place(x),
        }
    }
}

#[derive(Debug, Clone)]
enum Velocity {
    Coupled(Factor),
    PerLayer(Vec<Factor>),
    Reformed { factor: Factor, ldl: LdlFactors },
}

#[derive(Debug, Clone)]
enum Kind {
    Monolithic(Ilu0Factors),
    Block { velocity: Velocity, inv_mass_w: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct BlockPreconditioner {
    variant: Variant,
    inner: InnerSolver,
    n_layers: usize,
    nv: usize,
    n_velocity: usize,
    kind: Kind,
}

/// `C = M^V + Fr²k² (𝒜 ⊗ E)`.
pub fn weighted_norm_matrix(sys: &BlockSystem) -> CsrMatrix {
    sys.mass_v
        .add(1.0, &sys.divdiv_a, sys.divdiv_weight())
        .expect("same velocity space")
}

/// `Ĉ = M^V + Fr²k² (I ⊗ E)`, one block per layer.
pub fn layer_decoupled_blocks(sys: &BlockSystem) -> Vec<CsrMatrix> {
    sys.layer_mass
        .iter()
        .map(|m| m.add(1.0, &sys.single.divdiv, sys.divdiv_weight()).expect("same velocity space"))
        .collect()
}

pub fn layer_decoupled_matrix(sys: &BlockSystem) -> CsrMatrix {
    let blocks = layer_decoupled_blocks(sys);
    CsrMatrix::block_diag(&blocks.iter().collect::<Vec<_>>())
}

/// `C̃ = (ℒ⊗I)ᵀ M^V (ℒ⊗I) + Fr²k² (𝒟⁻¹ ⊗ E)`: block tridiagonal in the layer index.
pub fn reformed_matrix(sys: &BlockSystem, ldl: &LdlFactors) -> CsrMatrix {
    let n = sys.n_layers();
    let nv = sys.nv();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut place = |m: &CsrMatrix, bi: usize, bj: usize, scale: f64| {
        for r in 0..m.nrows() {
            let (cols, vals) = m.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                trips.push((bi * nv + r, bj * nv + c, scale * v));
            }
        }
    };
    for i in 0..n {
        place(&sys.layer_mass[i], i, i, 1.0);
        if i + 1 < n {
            let l = ldl.sub[i];
            let below = &sys.layer_mass[i + 1];
            place(below, i, i, l * l);
            place(below, i, i + 1, l);
            place(below, i + 1, i, l);
        }
    }
    let mass = CsrMatrix::from_triplets(n * nv, n * nv, &trips);
    let dinv = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / ldl.d[i] } else { 0.0 });
    mass.add(1.0, &kron_lift(&dinv, &sys.single.divdiv), sys.divdiv_weight())
        .expect("same velocity space")
}

/// `b̃ = (ℒᵀ ⊗ I) b`.
pub fn apply_lt(ldl: &LdlFactors, nv: usize, b: &mut [f64]) {
    for (i, &l) in ldl.sub.iter().enumerate() {
        for r in 0..nv {
            b[i * nv + r] += l * b[(i + 1) * nv + r];
        }
    }
}

/// `x = (ℒ ⊗ I) x̃`.
pub fn apply_l(ldl: &LdlFactors, nv: usize, x: &mut [f64]) {
    for (i, &l) in ldl.sub.iter().enumerate().rev() {
        for r in 0..nv {
            x[(i + 1) * nv + r] += l * x[i * nv + r];
        }
    }
}

/// `x = (ℒ⁻¹ ⊗ I) x`.
pub fn apply_l_inverse(ldl: &LdlFactors, nv: usize, x: &mut [f64]) {
    for (i, &l) in ldl.sub.iter().enumerate() {
        for r in 0..nv {
            x[(i + 1) * nv + r] -= l * x[i * nv + r];
        }
    }
}

pub fn build_preconditioner(sys: &BlockSystem, variant: Variant, inner: InnerSolver) -> Result<BlockPreconditioner> {
    let wrap = |e: Error| Error::Preconditioner {
        variant: variant.name(),
        source: Box::new(e),
    };
    let kind = match variant {
        Variant::FullIlu0 => Kind::Monolithic(ilu0_factor(sys.monolithic()).map_err(wrap)?),
        _ => {
            let velocity = match variant {
                Variant::WeightedNorm => {
                    Velocity::Coupled(Factor::new(&weighted_norm_matrix(sys), inner).map_err(wrap)?)
                }
                Variant::LayerDecoupled => Velocity::PerLayer(
                    layer_decoupled_blocks(sys)
                        .iter()
                        .map(|b| Factor::new(b, inner))
                        .collect::<Result<_>>()
                        .map_err(wrap)?,
                ),
                Variant::TridiagonalReform => {
                    let ldl = ldlt(&coupling_inverse(&sys.stack)).map_err(wrap)?;
                    let factor = Factor::new(&reformed_matrix(sys, &ldl), inner).map_err(wrap)?;
                    Velocity::Reformed { factor, ldl }
                }
                Variant::FullIlu0 => unreachable!(),
            };
            let inv_mass_w = (0..sys.n_layers())
                .flat_map(|_| sys.single.mass_w.iter().map(|m| 1.0 / m))
                .collect();
            Kind::Block { velocity, inv_mass_w }
        }
    };
    Ok(BlockPreconditioner {
        variant,
        inner,
        n_layers: sys.n_layers(),
        nv: sys.nv(),
        n_velocity: sys.n_velocity(),
        kind,
    })
}

impl BlockPreconditioner {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn inner(&self) -> InnerSolver {
        self.inner
    }

    pub fn apply_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        Preconditioner::apply(self, r, &mut z);
        z
    }

    /// Velocity block only: `C⁻¹ b` (or its approximation).
    pub fn apply_velocity(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        match &self.kind {
            Kind::Block { velocity, .. } => self.solve_velocity(velocity, &mut x),
            Kind::Monolithic(_) => panic!("monolithic ILU(0) has no velocity block"),
        }
        x
    }

    fn solve_velocity(&self, velocity: &Velocity, x: &mut [f64]) {
        match velocity {
            Velocity::Coupled(f) => f.solve_in_place(x),
            Velocity::PerLayer(fs) => {
                for (f, chunk) in fs.iter().zip(x.chunks_mut(self.nv)) {
                    f.solve_in_place(chunk);
                }
            }
            Velocity::Reformed { factor, ldl } => {
                apply_lt(ldl, self.nv, x);
                factor.solve_in_place(x);
                apply_l(ldl, self.nv, x);
            }
        }
        debug_assert_eq!(x.len(), self.n_layers * self.nv);
    }
}

impl Preconditioner for BlockPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        match &self.kind {
            Kind::Monolithic(f) => f.solve_in_place(z),
            Kind::Block { velocity, inv_mass_w } => {
                let (zu, zeta) = z.split_at_mut(self.n_velocity);
                self.solve_velocity(velocity, zu);
                zeta.iter_mut().zip(inv_mass_w).for_each(|(v, m)| *v *= m);
            }
        }
    }
}
