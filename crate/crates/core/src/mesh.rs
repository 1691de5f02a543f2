//! Structured right-triangle meshes of an axis-aligned rectangle.
//!
//! Every grid square is cut along its lower-left to upper-right diagonal.
//! Edges carry a global orientation from the lower to the higher vertex
//! index; the global unit normal is the tangent rotated clockwise by 90°.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    cells: Vec<[usize; 3]>,
    /// `[lo, hi]` with `lo < hi`.
    edges: Vec<[usize; 2]>,
    /// Entry `i` is the edge opposite local vertex `i`, with sign +1 when the
    /// cell's outward normal agrees with the global edge normal.
    cell_edges: Vec<[(usize, f64); 3]>,
    edge_cells: Vec<Vec<usize>>,
    boundary_edges: Vec<usize>,
    h: f64,
}

/// Unit-square mesh with `nx × ny` squares, each split into two triangles.
pub fn build_unit_square_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    Mesh::rectangle(nx, ny, 1.0, 1.0)
}

impl Mesh {
    pub fn rectangle(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "cell counts must be positive, got {nx}x{ny}"
            )));
        }
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::InvalidMesh(format!(
                "domain extents must be positive, got {width}x{height}"
            )));
        }

        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    width * i as f64 / nx as f64,
                    height * j as f64 / ny as f64,
                ]);
            }
        }

        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let v00 = vid(i, j);
                let v10 = vid(i + 1, j);
                let v01 = vid(i, j + 1);
                let v11 = vid(i + 1, j + 1);
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::with_capacity(3 * nx * ny + nx + ny);
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut local = [(0usize, 0.0f64); 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let p = cell[(i + 1) % 3];
                let q = cell[(i + 2) % 3];
                let key = (p.min(q), p.max(q));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_cells.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                edge_cells[e].push(c);
                let sign = if p < q { 1.0 } else { -1.0 };
                *slot = (e, sign);
            }
            cell_edges.push(local);
        }

        let boundary_edges = edge_cells
            .iter()
            .enumerate()
            .filter(|(_, cs)| cs.len() == 1)
            .map(|(e, _)| e)
            .collect();

        Ok(Self {
            nx,
            ny,
            width,
            height,
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            boundary_edges,
            h: (width / nx as f64).min(height / ny as f64),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Mesh size; `1 / max(nx, ny)` on the unit square.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain_area(&self) -> f64 {
        self.width * self.height
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[(usize, f64); 3]] {
        &self.cell_edges
    }

    /// Cells sharing edge `e` (one on the boundary, two inside).
    pub fn edge_cells(&self, e: usize) -> &[usize] {
        &self.edge_cells[e]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_cells[e].len() == 1
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_vertices(&self, c: usize) -> [Point; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    /// Signed area; positive for every cell of a valid mesh.
    pub fn cell_area(&self, c: usize) -> f64 {
        let [p0, p1, p2] = self.cell_vertices(c);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let [p0, p1, p2] = self.cell_vertices(c);
        [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Global unit normal of edge `e`.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let len = self.edge_length(e);
        [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len]
    }
}
