//! Single-layer RT0 × DG0 matrices.
//!
//! Velocity dofs are normal fluxes through edges, normalized so that
//! `∫_e ψ_e · n_e = 1` against the global edge normal. On a triangle with
//! vertices `P0, P1, P2` the basis function of the edge opposite `P_i` is
//! `s_i (x − P_i) / (2|T|)`, with `s_i` the cell's orientation sign for that
//! edge. Products of these are quadratic, so the three-point edge-midpoint
//! rule integrates every local matrix exactly.
//!
//! Elevation dofs are cell averages with the indicator basis, so `M^W` is the
//! diagonal of cell areas.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::CsrMatrix;

/// Cellwise-constant positive coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    PerCell(Vec<f64>),
}

impl ScalarField {
    pub fn value(&self, cell: usize) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::PerCell(v) => v[cell],
        }
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        match self {
            ScalarField::Constant(v) if *v > 0.0 && v.is_finite() => Ok(()),
            ScalarField::Constant(v) => Err(Error::NonPositiveCoefficient { cell: 0, value: *v }),
            ScalarField::PerCell(vals) => {
                if vals.len() != n_cells {
                    return Err(Error::DimensionMismatch {
                        context: "per-cell coefficient",
                        expected: n_cells,
                        actual: vals.len(),
                    });
                }
                match vals.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                    Some(cell) => Err(Error::NonPositiveCoefficient {
                        cell,
                        value: vals[cell],
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::PerCell(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Pointwise `f(self)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            ScalarField::Constant(v) => ScalarField::Constant(f(*v)),
            ScalarField::PerCell(v) => ScalarField::PerCell(v.iter().map(|&x| f(x)).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Every edge carries a dof.
    Natural,
    /// Boundary-edge dofs are eliminated (closed basin).
    NormalTraceZero,
}

/// Map between mesh edges and velocity dofs.
#[derive(Debug, Clone)]
pub struct DofMap {
    edge_to_dof: Vec<Option<usize>>,
    dof_to_edge: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, bc: BoundaryCondition) -> Self {
        let mut edge_to_dof = vec![None; mesh.n_edges()];
        let mut dof_to_edge = Vec::with_capacity(mesh.n_edges());
        for (e, slot) in edge_to_dof.iter_mut().enumerate() {
            if bc == BoundaryCondition::Natural || !mesh.is_boundary_edge(e) {
                *slot = Some(dof_to_edge.len());
                dof_to_edge.push(e);
            }
        }
        Self {
            edge_to_dof,
            dof_to_edge,
        }
    }

    pub fn len(&self) -> usize {
        self.dof_to_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_edge.is_empty()
    }

    pub fn dof(&self, edge: usize) -> Option<usize> {
        self.edge_to_dof[edge]
    }

    pub fn edge(&self, dof: usize) -> usize {
        self.dof_to_edge[dof]
    }
}

#[derive(Debug, Clone)]
pub struct SingleLayerMatrices {
    /// `M^{V,κ}`.
    pub mass_v: CsrMatrix,
    /// `M̃^V` with the same coefficient; skew-symmetric.
    pub perp_mass_v: CsrMatrix,
    /// Diagonal of `M^W` (cell areas).
    pub mass_w: Vec<f64>,
    /// `D`, cells × velocity dofs.
    pub div: CsrMatrix,
    /// `E`, velocity dofs × velocity dofs.
    pub divdiv: CsrMatrix,
    pub bc: BoundaryCondition,
    pub dofs: DofMap,
}

impl SingleLayerMatrices {
    pub fn mass_w_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_diagonal(&self.mass_w)
    }

    pub fn constrained(&self) -> bool {
        self.bc == BoundaryCondition::NormalTraceZero
    }
}

pub fn assemble_single_layer(
    mesh: &Mesh,
    kappa: &ScalarField,
    bc: BoundaryCondition,
) -> Result<SingleLayerMatrices> {
    kappa.validate(mesh.n_cells())?;
    let dofs = DofMap::new(mesh, bc);
    Ok(SingleLayerMatrices {
        mass_v: mass_matrix(mesh, &dofs, kappa)?,
        perp_mass_v: perp_mass_matrix(mesh, &dofs, kappa)?,
        mass_w: cell_areas(mesh),
        div: divergence_matrix(mesh, &dofs),
        divdiv: divdiv_matrix(mesh, &dofs),
        bc,
        dofs,
    })
}

/// `M̃^V` over all edges (natural boundary treatment).
pub fn assemble_perp_mass(mesh: &Mesh, kappa: &ScalarField) -> Result<CsrMatrix> {
    perp_mass_matrix(mesh, &DofMap::new(mesh, BoundaryCondition::Natural), kappa)
}

pub fn cell_areas(mesh: &Mesh) -> Vec<f64> {
    (0..mesh.n_cells()).map(|c| mesh.cell_area(c)).collect()
}

/// Local RT0 basis values `φ_i(x)` at the three edge midpoints, as
/// `vals[quad_point][basis]`, together with the cell area.
fn local_basis_at_midpoints(mesh: &Mesh, c: usize) -> ([[Point; 3]; 3], f64) {
    let verts = mesh.cell_vertices(c);
    let area = mesh.cell_area(c);
    let signs = mesh.cell_edges()[c].map(|(_, s)| s);
    let mut vals = [[[0.0; 2]; 3]; 3];
    for (q, row) in vals.iter_mut().enumerate() {
        let a = verts[(q + 1) % 3];
        let b = verts[(q + 2) % 3];
        let x = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        for (i, v) in row.iter_mut().enumerate() {
            let scale = signs[i] / (2.0 * area);
            *v = [scale * (x[0] - verts[i][0]), scale * (x[1] - verts[i][1])];
        }
    }
    (vals, area)
}

fn local_dofs(mesh: &Mesh, dofs: &DofMap, c: usize) -> [Option<usize>; 3] {
    mesh.cell_edges()[c].map(|(e, _)| dofs.dof(e))
}

pub fn mass_matrix(mesh: &Mesh, dofs: &DofMap, kappa: &ScalarField) -> Result<CsrMatrix> {
    kappa.validate(mesh.n_cells())?;
    let mut trips = Vec::with_capacity(9 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let (vals, area) = local_basis_at_midpoints(mesh, c);
        let w = kappa.value(c) * area / 3.0;
        let ld = local_dofs(mesh, dofs, c);
        for i in 0..3 {
            let Some(gi) = ld[i] else { continue };
            for j in 0..3 {
                let Some(gj) = ld[j] else { continue };
                let v: f64 = vals
                    .iter()
                    .map(|q| q[i][0] * q[j][0] + q[i][1] * q[j][1])
                    .sum();
                trips.push((gi, gj, w * v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dofs.len(), dofs.len(), &trips))
}

/// Entry (i, j) is `(κ ψ_j^⊥, ψ_i)` with `a^⊥ = (−a₂, a₁)`.
pub fn perp_mass_matrix(mesh: &Mesh, dofs: &DofMap, kappa: &ScalarField) -> Result<CsrMatrix> {
    kappa.validate(mesh.n_cells())?;
    let mut trips = Vec::with_capacity(6 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let (vals, area) = local_basis_at_midpoints(mesh, c);
        let w = kappa.value(c) * area / 3.0;
        let ld = local_dofs(mesh, dofs, c);
        for i in 0..3 {
            let Some(gi) = ld[i] else { continue };
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let Some(gj) = ld[j] else { continue };
                let v: f64 = vals
                    .iter()
                    .map(|q| -q[j][1] * q[i][0] + q[j][0] * q[i][1])
                    .sum();
                trips.push((gi, gj, w * v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dofs.len(), dofs.len(), &trips))
}

/// `D[c, e] = ∫_c ∇·ψ_e = ±1`.
pub fn divergence_matrix(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let mut trips = Vec::with_capacity(3 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        for &(e, s) in &mesh.cell_edges()[c] {
            if let Some(g) = dofs.dof(e) {
                trips.push((c, g, s));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_cells(), dofs.len(), &trips)
}

/// `E[i, j] = Σ_c s_i s_j / |c|`, since `∇·ψ = s/|c|` on each cell.
pub fn divdiv_matrix(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let inv_area = 1.0 / mesh.cell_area(c);
        let local = mesh.cell_edges()[c];
        for &(ei, si) in &local {
            let Some(gi) = dofs.dof(ei) else { continue };
            for &(ej, sj) in &local {
                let Some(gj) = dofs.dof(ej) else { continue };
                trips.push((gi, gj, si * sj * inv_area));
            }
        }
    }
    CsrMatrix::from_triplets(dofs.len(), dofs.len(), &trips)
}

/// RT0 interpolant: dof value is the flux `∫_e f · n_e`, taken with the
/// midpoint rule (exact for affine fields).
pub fn interpolate_rt0(mesh: &Mesh, dofs: &DofMap, f: impl Fn(Point) -> Point) -> Vec<f64> {
    (0..dofs.len())
        .map(|d| {
            let e = dofs.edge(d);
            let n = mesh.edge_normal(e);
            let v = f(mesh.edge_midpoint(e));
            (v[0] * n[0] + v[1] * n[1]) * mesh.edge_length(e)
        })
        .collect()
}
