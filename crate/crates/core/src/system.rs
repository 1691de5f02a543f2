//! The multilayer block system, implicit midpoint stepping and energy.
//!
//! Unknowns are ordered velocities first, then elevations, with the dofs of
//! each layer stored contiguously:
//!
//! ```text
//! [ M + ε⁻¹k M̃ + k B   −Fr²k (𝒜⊗D)ᵀ ] [u]   [F₁]
//! [ k (I⊗D)             I⊗M^W        ] [η] = [F₂]
//! ```

use std::io::Write;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_single_layer, mass_matrix, perp_mass_matrix, BoundaryCondition, DofMap, ScalarField,
    SingleLayerMatrices,
};
use crate::krylov::{gmres, GmresOptions, LinearOperator, Preconditioner, SolveReport};
use crate::layers::{coupling_matrix, kron_lift, LayerStack};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub froude: f64,
    /// `ε⁻¹`; zero switches rotation off.
    pub rossby_inv: f64,
    /// Time-step coefficient of the per-step system (`Δt/2` for midpoint).
    pub k: f64,
    /// Diagonal of the layer damping matrix, one entry per layer.
    pub damping: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(froude: f64, rossby_inv: f64, k: f64, n_layers: usize) -> Self {
        Self {
            froude,
            rossby_inv,
            k,
            damping: vec![0.0; n_layers],
        }
    }

    /// Damping only in the bottom layer.
    pub fn with_bottom_damping(mut self, value: f64) -> Self {
        if let Some(last) = self.damping.last_mut() {
            *last = value;
        }
        self
    }

    /// `B*`.
    pub fn damping_bound(&self) -> f64 {
        self.damping.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self, n_layers: usize) -> Result<()> {
        if !(self.froude > 0.0 && self.froude.is_finite()) {
            return Err(Error::InvalidParameter(format!("Froude number must be positive, got {}", self.froude)));
        }
        if !(self.rossby_inv >= 0.0 && self.rossby_inv.is_finite()) {
            return Err(Error::InvalidParameter(format!("inverse Rossby number must be nonnegative, got {}", self.rossby_inv)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if self.damping.len() != n_layers {
            return Err(Error::DimensionMismatch {
                context: "damping coefficients",
                expected: n_layers,
                actual: self.damping.len(),
            });
        }
        if let Some(b) = self.damping.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!("damping must be nonnegative, got {b}")));
        }
        Ok(())
    }
}

/// Layer-contiguous velocity and elevation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
}

impl State {
    pub fn zeros(sys: &BlockSystem) -> Self {
        Self {
            u: vec![0.0; sys.n_velocity()],
            eta: vec![0.0; sys.n_elevation()],
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        x.extend_from_slice(&self.eta);
        x
    }

    pub fn from_vector(x: &[f64], n_velocity: usize) -> Self {
        Self {
            u: x[..n_velocity].to_vec(),
            eta: x[n_velocity..].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub stack: LayerStack,
    pub params: PhysicalParams,
    /// Mesh size `h`.
    pub h: f64,
    /// Unweighted single-layer matrices (`κ ≡ 1`).
    pub single: SingleLayerMatrices,
    pub coupling: DenseMatrix,
    /// `μᵢ`-weighted mass per layer.
    pub layer_mass: Vec<CsrMatrix>,
    /// `M^V = blockdiag(M^{V,μᵢ})`.
    pub mass_v: CsrMatrix,
    /// `M̃^V = blockdiag(μᵢ-weighted perp mass)`.
    pub perp_mass_v: CsrMatrix,
    /// `B = blockdiag(bᵢ M^V)`.
    pub damping: CsrMatrix,
    /// `𝒜 ⊗ D`.
    pub div_a: CsrMatrix,
    /// `𝒜 ⊗ E`.
    pub divdiv_a: CsrMatrix,
    pub a11: CsrMatrix,
    pub a12: CsrMatrix,
    pub a21: CsrMatrix,
    /// Diagonal of `A₂₂ = I ⊗ M^W`.
    pub a22: Vec<f64>,
    monolithic: CsrMatrix,
}

/// Assemble with impermeable walls, the setting of every experiment.
pub fn assemble_block_system(mesh: &Mesh, stack: &LayerStack, params: &PhysicalParams) -> Result<BlockSystem> {
    assemble_block_system_with_bc(mesh, stack, params, BoundaryCondition::NormalTraceZero)
}

pub fn assemble_block_system_with_bc(
    mesh: &Mesh,
    stack: &LayerStack,
    params: &PhysicalParams,
    bc: BoundaryCondition,
) -> Result<BlockSystem> {
    let n = stack.n_layers();
    params.validate(n)?;
    let single = assemble_single_layer(mesh, &ScalarField::Constant(1.0), bc)?;
    let dofs = &single.dofs;

    let mut layer_mass = Vec::with_capacity(n);
    let mut layer_perp = Vec::with_capacity(n);
    for i in 0..n {
        match stack.mu(i) {
            ScalarField::Constant(mu) => {
                layer_mass.push(single.mass_v.scaled(mu));
                layer_perp.push(single.perp_mass_v.scaled(mu));
            }
            field => {
                layer_mass.push(mass_matrix(mesh, dofs, &field)?);
                layer_perp.push(perp_mass_matrix(mesh, dofs, &field)?);
            }
        }
    }
    let mass_v = CsrMatrix::block_diag(&layer_mass.iter().collect::<Vec<_>>());
    let perp_mass_v = CsrMatrix::block_diag(&layer_perp.iter().collect::<Vec<_>>());
    let damping_blocks: Vec<CsrMatrix> = params.damping.iter().map(|&b| single.mass_v.scaled(b)).collect();
    let damping = CsrMatrix::block_diag(&damping_blocks.iter().collect::<Vec<_>>());

    let coupling = coupling_matrix(stack);
    let identity = DenseMatrix::identity(n);
    let div_a = kron_lift(&coupling, &single.div);
    let divdiv_a = kron_lift(&coupling, &single.divdiv);
    let k = params.k;
    let fr2 = params.froude * params.froude;

    let a11 = mass_v
        .add(1.0, &perp_mass_v, params.rossby_inv * k)?
        .add(1.0, &damping, k)?;
    let a12 = div_a.transpose().scaled(-fr2 * k);
    let a21 = kron_lift(&identity, &single.div).scaled(k);
    let a22: Vec<f64> = (0..n).flat_map(|_| single.mass_w.iter().copied()).collect();
    let monolithic = CsrMatrix::block2x2(&a11, &a12, &a21, &CsrMatrix::from_diagonal(&a22))?;

    Ok(BlockSystem {
        stack: stack.clone(),
        params: params.clone(),
        h: mesh.h(),
        single,
        coupling,
        layer_mass,
        mass_v,
        perp_mass_v,
        damping,
        div_a,
        divdiv_a,
        a11,
        a12,
        a21,
        a22,
        monolithic,
    })
}

impl BlockSystem {
    pub fn n_layers(&self) -> usize {
        self.stack.n_layers()
    }

    /// Velocity dofs per layer.
    pub fn nv(&self) -> usize {
        self.single.dofs.len()
    }

    /// Elevation dofs (cells) per layer.
    pub fn nw(&self) -> usize {
        self.single.mass_w.len()
    }

    pub fn n_velocity(&self) -> usize {
        self.n_layers() * self.nv()
    }

    pub fn n_elevation(&self) -> usize {
        self.n_layers() * self.nw()
    }

    pub fn dim(&self) -> usize {
        self.n_velocity() + self.n_elevation()
    }

    pub fn dofs(&self) -> &DofMap {
        &self.single.dofs
    }

    /// The whole operator as one CSR matrix.
    pub fn monolithic(&self) -> &CsrMatrix {
        &self.monolithic
    }

    /// `Fr² k²`, the weight of the div-div term in the preconditioners.
    pub fn divdiv_weight(&self) -> f64 {
        let fk = self.params.froude * self.params.k;
        fk * fk
    }

    /// Apply the four blocks separately and concatenate.
    pub fn apply_blocks(&self, x: &[f64]) -> Vec<f64> {
        let (u, eta) = x.split_at(self.n_velocity());
        let mut top = self.a11.spmv(u).expect("block shape");
        let t2 = self.a12.spmv(eta).expect("block shape");
        top.iter_mut().zip(&t2).for_each(|(a, b)| *a += b);
        let mut bottom = self.a21.spmv(u).expect("block shape");
        bottom.iter_mut().zip(eta.iter().zip(&self.a22)).for_each(|(a, (e, m))| *a += m * e);
        top.extend(bottom);
        top
    }

    /// `ηᵀ (𝒜 ⊗ M^W) ξ`.
    pub fn elevation_inner(&self, eta: &[f64], xi: &[f64]) -> f64 {
        let nw = self.nw();
        let n = self.n_layers();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.coupling.get(i, j);
                let s: f64 = (0..nw)
                    .map(|c| eta[i * nw + c] * self.single.mass_w[c] * xi[j * nw + c])
                    .sum();
                total += a * s;
            }
        }
        total
    }
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.monolithic.spmv_into(x, y);
    }
}

/// `½ uᵀ M^V u + ½ Fr² ηᵀ (𝒜 ⊗ M^W) η`.
pub fn energy(state: &State, sys: &BlockSystem) -> f64 {
    let fr2 = sys.params.froude * sys.params.froude;
    0.5 * sys.mass_v.bilinear(&state.u, &state.u) + 0.5 * fr2 * sys.elevation_inner(&state.eta, &state.eta)
}

/// Fluid at rest with a Gaussian bump in the top-layer elevation, sampled at
/// cell centroids.
pub fn initial_disturbance(
    mesh: &Mesh,
    stack: &LayerStack,
    bc: BoundaryCondition,
    amplitude: f64,
    width: f64,
) -> Result<State> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("disturbance amplitude must be nonzero, got {amplitude}")));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("disturbance width must be positive, got {width}")));
    }
    let n = stack.n_layers();
    let nw = mesh.n_cells();
    let mut eta = vec![0.0; n * nw];
    for (c, e) in eta[..nw].iter_mut().enumerate() {
        let [x, y] = mesh.cell_centroid(c);
        let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        *e = amplitude * (-r2 / (width * width)).exp();
    }
    Ok(State {
        u: vec![0.0; n * DofMap::new(mesh, bc).len()],
        eta,
    })
}

/// Right-hand side of the per-step system for the midpoint rule.
pub fn midpoint_rhs(sys: &BlockSystem, state: &State, forcing: Option<&[f64]>) -> Vec<f64> {
    let mut f1 = sys.mass_v.spmv(&state.u).expect("state shape");
    if let Some(f) = forcing {
        f1.iter_mut().zip(f).for_each(|(a, b)| *a += sys.params.k * b);
    }
    f1.extend(state.eta.iter().zip(&sys.a22).map(|(e, m)| e * m));
    f1
}

/// Which unknown the per-step linear solve is posed in. The matrix is the
/// same; only the right-hand side and the zero initial guess differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepUnknown {
    /// The midpoint state `x^{n+1/2}`; `x^{n+1} = 2 x^{n+1/2} - x^n`.
    #[default]
    Midpoint,
    /// The stage derivative `K` with `x^{n+1/2} = x^n + k K`; this is how
    /// Runge-Kutta front ends pose the step.
    StageDerivative,
}

/// One implicit midpoint step from `state`, solving for the midpoint state.
///
/// `forcing` is the load vector `(F(t + Δt/2), v)` over the velocity dofs.
/// Returns the new state and the solver report even when GMRES stops at the
/// iteration cap.
pub fn midpoint_step_unchecked<P: Preconditioner + ?Sized>(
    sys: &BlockSystem,
    state: &State,
    dt: f64,
    pc: &P,
    opts: &GmresOptions,
    forcing: Option<&[f64]>,
) -> Result<(State, SolveReport)> {
    midpoint_step_as(sys, state, dt, pc, opts, forcing, StepUnknown::Midpoint)
}

/// [`midpoint_step_unchecked`] with a choice of solve unknown.
pub fn midpoint_step_as<P: Preconditioner + ?Sized>(
    sys: &BlockSystem,
    state: &State,
    dt: f64,
    pc: &P,
    opts: &GmresOptions,
    forcing: Option<&[f64]>,
    unknown: StepUnknown,
) -> Result<(State, SolveReport)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if (sys.params.k - 0.5 * dt).abs() > 1e-12 * dt {
        return Err(Error::InvalidParameter(format!(
            "midpoint stepping needs k = dt/2, system has k = {} for dt = {dt}",
            sys.params.k
        )));
    }
    if state.u.len() != sys.n_velocity() || state.eta.len() != sys.n_elevation() {
        return Err(Error::DimensionMismatch {
            context: "midpoint_step state",
            expected: sys.dim(),
            actual: state.u.len() + state.eta.len(),
        });
    }
    if let Some(f) = forcing {
        if f.len() != sys.n_velocity() {
            return Err(Error::DimensionMismatch {
                context: "midpoint_step forcing",
                expected: sys.n_velocity(),
                actual: f.len(),
            });
        }
    }
    let rhs = midpoint_rhs(sys, state, forcing);
    let old = state.to_vector();
    let (next, report) = match unknown {
        StepUnknown::Midpoint => {
            let (half, report) = gmres(sys, pc, &rhs, opts);
            (half.iter().zip(&old).map(|(h, o)| 2.0 * h - o).collect::<Vec<_>>(), report)
        }
        StepUnknown::StageDerivative => {
            // (M + kL) K = F - L x^n, and L x^n = (S x^n - M x^n) / k
            let k = sys.params.k;
            let sx = sys.apply_blocks(&old);
            let rhs: Vec<f64> = rhs.iter().zip(&sx).map(|(r, a)| (r - a) / k).collect();
            let (stage, report) = gmres(sys, pc, &rhs, opts);
            (old.iter().zip(&stage).map(|(o, s)| o + 2.0 * k * s).collect(), report)
        }
    };
    Ok((State::from_vector(&next, sys.n_velocity()), report))
}

/// As [`midpoint_step_unchecked`], but GMRES non-convergence is an error.
pub fn midpoint_step<P: Preconditioner + ?Sized>(
    sys: &BlockSystem,
    state: &State,
    dt: f64,
    pc: &P,
    opts: &GmresOptions,
    forcing: Option<&[f64]>,
) -> Result<(State, SolveReport)> {
    let (next, report) = midpoint_step_unchecked(sys, state, dt, pc, opts, forcing)?;
    if !report.converged {
        return Err(Error::GmresNotConverged(Box::new(report)));
    }
    Ok((next, report))
}

/// Cell centroid and elevation per layer, one row per cell.
pub fn write_snapshot_csv<W: Write>(mesh: &Mesh, n_layers: usize, state: &State, mut w: W) -> std::io::Result<()> {
    let nw = mesh.n_cells();
    write!(w, "x,y")?;
    for i in 1..=n_layers {
        write!(w, ",eta_{i}")?;
    }
    writeln!(w)?;
    for c in 0..nw {
        let [x, y] = mesh.cell_centroid(c);
        write!(w, "{x:?},{y:?}")?;
        for i in 0..n_layers {
            write!(w, ",{:?}", state.eta[i * nw + c])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
