//! Uniform tensor grids on intervals and axis-aligned rectangles.
//!
//! Nodes sit at `x_i = i * h` per axis, so a grid with `c` cells carries
//! `c + 1` nodes per axis. Every node is classified interior xor boundary;
//! in 1D the boundary is the two endpoints, in 2D the rectangle perimeter.

use crate::{cast, Error, Result, Scalar};
use std::sync::Arc;

/// Uniform grid over `(0, L1)` or `(0, L1) x (0, L2)`.
///
/// Grids are immutable after construction and shared by reference counting;
/// fields compare grids structurally, so separately built identical grids are
/// compatible.
#[derive(Debug)]
pub struct Grid<S> {
    dim: usize,
    lengths: [S; 2],
    cells: [usize; 2],
    spacing: [S; 2],
    nodes: [usize; 2],
    boundary: Vec<usize>,
    interior: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl<S: Scalar> PartialEq for Grid<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.cells[..self.dim] == other.cells[..other.dim]
            && self.lengths[..self.dim] == other.lengths[..other.dim]
    }
}

impl<S: Scalar> Grid<S> {
    /// Build a grid; `dim` must be 1 or 2, lengths positive, and every axis
    /// must have at least 2 cells so an interior node exists.
    pub fn new(dim: usize, lengths: &[S], cells: &[usize]) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if lengths.len() != dim || cells.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} lengths and cell counts, got {} and {}",
                lengths.len(),
                cells.len()
            )));
        }
        let mut len_arr = [S::zero(); 2];
        let mut cell_arr = [0usize; 2];
        let mut spacing = [S::one(); 2];
        let mut nodes = [1usize; 2];
        for a in 0..dim {
            if !(lengths[a].is_finite() && lengths[a] > S::zero()) {
                return Err(Error::InvalidGrid(format!(
                    "length along axis {a} must be positive, got {}",
                    lengths[a]
                )));
            }
            if cells[a] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} needs at least 2 cells for an interior node, got {}",
                    cells[a]
                )));
            }
            len_arr[a] = lengths[a];
            cell_arr[a] = cells[a];
            spacing[a] = lengths[a] / cast::<S>(cells[a] as f64);
            nodes[a] = cells[a] + 1;
        }

        let count = nodes[0] * nodes[1];
        let mut is_boundary = vec![false; count];
        let mut boundary = Vec::new();
        let mut interior = Vec::new();
        for id in 0..count {
            let ix = id % nodes[0];
            let iy = id / nodes[0];
            let mut on_boundary = ix == 0 || ix == nodes[0] - 1;
            if dim == 2 {
                on_boundary = on_boundary || iy == 0 || iy == nodes[1] - 1;
            }
            is_boundary[id] = on_boundary;
            if on_boundary {
                boundary.push(id);
            } else {
                interior.push(id);
            }
        }

        Ok(Arc::new(Grid {
            dim,
            lengths: len_arr,
            cells: cell_arr,
            spacing,
            nodes,
            boundary,
            interior,
            is_boundary,
        }))
    }

    /// Interval `(0, length)` with `cells` uniform cells.
    pub fn new_1d(length: S, cells: usize) -> Result<Arc<Self>> {
        Self::new(1, &[length], &[cells])
    }

    /// Rectangle `(0, lx) x (0, ly)`.
    pub fn new_2d(lx: S, ly: S, cx: usize, cy: usize) -> Result<Arc<Self>> {
        Self::new(2, &[lx, ly], &[cx, cy])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[S] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Grid spacing per axis, `lengths[a] / cells[a]` in the working arithmetic.
    pub fn spacing(&self) -> &[S] {
        &self.spacing[..self.dim]
    }

    /// Nodes per axis (`cells + 1`).
    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn node_count(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    /// Flat index of the node at multi-index `(ix, iy)`; `iy` is 0 in 1D.
    #[inline]
    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        iy * self.nodes[0] + ix
    }

    /// Multi-index `(ix, iy)` of a flat node id.
    #[inline]
    pub fn multi_index(&self, id: usize) -> (usize, usize) {
        (id % self.nodes[0], id / self.nodes[0])
    }

    /// Node coordinates; the second entry is zero in 1D.
    #[inline]
    pub fn coords(&self, id: usize) -> [S; 2] {
        let (ix, iy) = self.multi_index(id);
        [
            self.spacing[0] * cast::<S>(ix as f64),
            if self.dim == 2 {
                self.spacing[1] * cast::<S>(iy as f64)
            } else {
                S::zero()
            },
        ]
    }

    #[inline]
    pub fn is_boundary(&self, id: usize) -> bool {
        self.is_boundary[id]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Memory stride between neighbors along an axis.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.nodes[0]
        }
    }

    /// Measure of one grid cell (`h` in 1D, `hx * hy` in 2D).
    pub fn cell_volume(&self) -> S {
        let mut v = self.spacing[0];
        if self.dim == 2 {
            v = v * self.spacing[1];
        }
        v
    }

    /// Trapezoidal quadrature weight of a node (cell volume halved once per
    /// axis the node is extremal on).
    pub fn trapezoid_weight(&self, id: usize) -> S {
        let (ix, iy) = self.multi_index(id);
        let mut w = self.cell_volume();
        let half = cast::<S>(0.5);
        if ix == 0 || ix == self.nodes[0] - 1 {
            w = w * half;
        }
        if self.dim == 2 && (iy == 0 || iy == self.nodes[1] - 1) {
            w = w * half;
        }
        w
    }

    /// Interior nodes with at least one boundary neighbor, where boundary
    /// data is cross-checked against discrete Laplacians of initial data.
    pub fn boundary_adjacent_interior(&self) -> Vec<usize> {
        self.interior
            .iter()
            .copied()
            .filter(|&id| {
                (0..self.dim).any(|a| {
                    let s = self.stride(a);
                    self.is_boundary[id - s] || self.is_boundary[id + s]
                })
            })
            .collect()
    }
}
