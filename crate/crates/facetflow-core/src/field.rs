//! Nodal scalar fields and the discrete calculus built on them: the 3/5-point
//! Laplacian, trapezoidal quadrature, and edge-midpoint gradient energies.

use crate::grid::Grid;
use crate::{cast, Error, Result, Scalar};
use std::sync::Arc;

/// Nodal values of a scalar function on a [`Grid`].
///
/// Public constructors reject NaN and infinity, so a `ScalarField` always
/// holds finite data. Fields are immutable; operations return new fields.
#[derive(Debug, Clone)]
pub struct ScalarField<S: Scalar> {
    grid: Arc<Grid<S>>,
    values: Vec<S>,
}

impl<S: Scalar> ScalarField<S> {
    pub fn from_values(grid: &Arc<Grid<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for a grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        for (node, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "field construction",
                    node,
                });
            }
        }
        Ok(ScalarField {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Sample a closed form `f(x, y)` at the nodes (`y = 0` in 1D).
    pub fn from_fn(grid: &Arc<Grid<S>>, f: impl Fn(S, S) -> S) -> Result<Self> {
        let values = (0..grid.node_count())
            .map(|id| {
                let p = grid.coords(id);
                f(p[0], p[1])
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &Arc<Grid<S>>, c: S) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.node_count()])
    }

    pub fn zeros(grid: &Arc<Grid<S>>) -> Self {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![S::zero(); grid.node_count()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn value(&self, id: usize) -> S {
        self.values[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    pub fn sup_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> S {
        self.values.iter().fold(S::infinity(), |m, v| m.min(*v))
    }

    pub fn max_value(&self) -> S {
        self.values
            .iter()
            .fold(S::neg_infinity(), |m, v| m.max(*v))
    }

    /// `sup |self - other|` over all nodes.
    pub fn sup_diff(&self, other: &Self) -> Result<S> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Result<Self> {
        Self::from_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Self::from_values(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Values mutable only inside the crate; public data is immutable.
    pub(crate) fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    /// Standard second-difference Laplacian at interior nodes (3-point in 1D,
    /// 5-point in 2D); exact on polynomials of degree <= 3 per axis. Boundary
    /// entries of the result are flagged unset.
    pub fn laplacian(&self) -> InteriorField<S> {
        let grid = &self.grid;
        let mut out = vec![S::zero(); grid.node_count()];
        let h = grid.spacing();
        let two = cast::<S>(2.0);
        for &id in grid.interior_nodes() {
            let mut acc = S::zero();
            for a in 0..grid.dim() {
                let s = grid.stride(a);
                let h2 = h[a] * h[a];
                acc += (self.values[id - s] - two * self.values[id] + self.values[id + s]) / h2;
            }
            out[id] = acc;
        }
        InteriorField {
            grid: Arc::clone(grid),
            values: out,
        }
    }

    /// Central difference gradient at an interior node.
    #[inline]
    pub(crate) fn central_gradient_at(&self, id: usize) -> [S; 2] {
        let grid = &self.grid;
        let h = grid.spacing();
        let two = cast::<S>(2.0);
        let mut g = [S::zero(); 2];
        for a in 0..grid.dim() {
            let s = grid.stride(a);
            g[a] = (self.values[id + s] - self.values[id - s]) / (two * h[a]);
        }
        g
    }

    /// Trapezoidal quadrature over the domain; linear in the field and exact
    /// for affine data.
    pub fn integrate(&self) -> S {
        let grid = &self.grid;
        (0..grid.node_count())
            .map(|id| self.values[id] * grid.trapezoid_weight(id))
            .sum()
    }

    /// `sum over edges of w_edge * (difference quotient)^2 * edge measure`,
    /// the discrete form of `int w |grad f|^2`. Edge weights average the two
    /// endpoint values of `weight`; transverse directions carry trapezoid
    /// factors so constants integrate exactly.
    pub fn gradient_square_integral(&self, weight: Option<&ScalarField<S>>) -> Result<S> {
        if let Some(w) = weight {
            if !self.same_grid(w) {
                return Err(Error::GridMismatch);
            }
        }
        let grid = &self.grid;
        let nodes = grid.nodes_per_axis();
        let h = grid.spacing();
        let half = cast::<S>(0.5);
        let mut total = S::zero();
        for axis in 0..grid.dim() {
            let s = grid.stride(axis);
            let n_along = nodes[axis];
            let n_perp = if grid.dim() == 2 { nodes[1 - axis] } else { 1 };
            let measure = grid.cell_volume();
            for p in 0..n_perp {
                let perp_factor = if grid.dim() == 2 && (p == 0 || p == n_perp - 1) {
                    half
                } else {
                    S::one()
                };
                for e in 0..n_along - 1 {
                    let lo = if axis == 0 {
                        grid.node_id(e, p)
                    } else {
                        grid.node_id(p, e)
                    };
                    let hi = lo + s;
                    let dq = (self.values[hi] - self.values[lo]) / h[axis];
                    let w_edge = match weight {
                        Some(w) => half * (w.values[lo] + w.values[hi]),
                        None => S::one(),
                    };
                    total += w_edge * dq * dq * measure * perp_factor;
                }
            }
        }
        Ok(total)
    }

    /// `E(f) = 1/2 int |grad f|^2`, discretized with edge-midpoint difference
    /// quotients. Nonnegative, zero exactly on constants.
    pub fn dirichlet_energy(&self) -> S {
        cast::<S>(0.5)
            * self
                .gradient_square_integral(None)
                .expect("no weight, no mismatch")
    }
}

/// Node values defined on interior nodes only; boundary entries are unset
/// (stored as zero and reported as `None`).
#[derive(Debug, Clone)]
pub struct InteriorField<S: Scalar> {
    grid: Arc<Grid<S>>,
    values: Vec<S>,
}

impl<S: Scalar> InteriorField<S> {
    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    /// Value at an interior node, `None` on the boundary.
    pub fn get(&self, id: usize) -> Option<S> {
        if self.grid.is_boundary(id) {
            None
        } else {
            Some(self.values[id])
        }
    }

    /// Raw storage indexed by node id; boundary slots hold zero.
    pub fn raw(&self) -> &[S] {
        &self.values
    }

    pub fn sup_norm_interior(&self) -> S {
        self.grid
            .interior_nodes()
            .iter()
            .fold(S::zero(), |m, &id| m.max(self.values[id].abs()))
    }

    pub fn min_interior(&self) -> S {
        self.grid
            .interior_nodes()
            .iter()
            .fold(S::infinity(), |m, &id| m.min(self.values[id]))
    }

    pub(crate) fn from_raw(grid: &Arc<Grid<S>>, values: Vec<S>) -> Self {
        InteriorField {
            grid: Arc::clone(grid),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `sum over interior nodes of f * g * cell volume`.
    fn inner_interior(grid: &Grid<f64>, f: &[f64], g: &[f64]) -> f64 {
        let vol = grid.cell_volume();
        grid.interior_nodes()
            .iter()
            .map(|&id| f[id] * g[id])
            .sum::<f64>()
            * vol
    }

    fn grid_1d(cells: usize) -> Arc<Grid<f64>> {
        Grid::new_1d(1.0, cells).unwrap()
    }

    #[test]
    fn constructor_rejects_non_finite() {
        let g = grid_1d(4);
        assert!(ScalarField::from_values(&g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(ScalarField::from_values(&g, vec![0.0, 1.0, f64::INFINITY, 0.0, 0.0]).is_err());
        assert!(ScalarField::from_values(&g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn laplacian_exact_on_quadratic_1d() {
        let g = grid_1d(10);
        let f = ScalarField::from_fn(&g, |x, _| 0.5 * x * x).unwrap();
        let lap = f.laplacian();
        for &id in g.interior_nodes() {
            assert!((lap.get(id).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(lap.get(0), None);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = grid_1d(7);
        let f = ScalarField::constant(&g, 7.0).unwrap();
        let lap = f.laplacian();
        assert_eq!(lap.sup_norm_interior(), 0.0);
    }

    #[test]
    fn laplacian_exact_on_quadratic_2d() {
        let g = Grid::<f64>::new_2d(1.0, 1.0, 8, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| 0.5 * (x * x + y * y)).unwrap();
        let lap = f.laplacian();
        for &id in g.interior_nodes() {
            assert!((lap.get(id).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_exact_on_cubics() {
        let g = grid_1d(10);
        let f = ScalarField::from_fn(&g, |x, _| x * x * x).unwrap();
        let lap = f.laplacian();
        for &id in g.interior_nodes() {
            let x = g.coords(id)[0];
            assert!((lap.get(id).unwrap() - 6.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = grid_1d(10);
        let one = ScalarField::constant(&g, 1.0).unwrap();
        assert!((one.integrate() - 1.0).abs() < 1e-15);
        let x = ScalarField::from_fn(&g, |x, _| x).unwrap();
        assert!((x.integrate() - 0.5).abs() < 1e-15);
        // Closed-form trapezoid sum h*(f0/2 + f1 + ... + f9 + f10/2) for x^2.
        let x2 = ScalarField::from_fn(&g, |x, _| x * x).unwrap();
        assert!((x2.integrate() - 0.335).abs() < 1e-15);
    }

    #[test]
    fn integrate_is_linear_and_monotone() {
        let g = grid_1d(9);
        let f = ScalarField::from_fn(&g, |x, _| x * x - 0.3 * x).unwrap();
        let gfun = ScalarField::from_fn(&g, |x, _| 1.0 + 0.5 * x).unwrap();
        let comb = f.zip_map(&gfun, |a, b| 2.0 * a + 3.0 * b).unwrap();
        let lhs = comb.integrate();
        let rhs = 2.0 * f.integrate() + 3.0 * gfun.integrate();
        assert!((lhs - rhs).abs() < 1e-14);
        // f <= g nodewise implies integrate(f) <= integrate(g)
        let above = f.map(|v| v + 0.25).unwrap();
        assert!(f.integrate() <= above.integrate());
    }

    #[test]
    fn dirichlet_energy_examples() {
        let g = grid_1d(10);
        let c = ScalarField::constant(&g, 3.25).unwrap();
        assert_eq!(c.dirichlet_energy(), 0.0);

        let x = ScalarField::from_fn(&g, |x, _| x).unwrap();
        assert!((x.dirichlet_energy() - 0.5).abs() < 1e-15);

        // For f = x^2/2 with h = 0.1 the edge-midpoint sum is exactly
        // h * sum((x_i + x_{i+1})/2)^2 / 2 = 0.16625; compare with the
        // independent midpoint quadrature and with the exact integral 1/6.
        let f = ScalarField::from_fn(&g, |x, _| 0.5 * x * x).unwrap();
        let e = f.dirichlet_energy();
        let mut oracle = 0.0;
        for i in 0..10 {
            let mid = (i as f64 + 0.5) * 0.1;
            oracle += mid * mid * 0.1;
        }
        oracle *= 0.5;
        assert!((e - oracle).abs() < 1e-15);
        assert!((e - 0.16625).abs() < 1e-15);
        assert!((e - 1.0 / 6.0).abs() < 2.0 * 0.1 * 0.1);
    }

    #[test]
    fn dirichlet_energy_positive_unless_constant() {
        // Exhaustive over sign patterns on a tiny grid.
        let g = grid_1d(3);
        for bits in 0..16u32 {
            let vals: Vec<f64> = (0..4).map(|k| if bits >> k & 1 == 1 { 1.0 } else { 0.0 }).collect();
            let f = ScalarField::from_values(&g, vals.clone()).unwrap();
            let e = f.dirichlet_energy();
            let constant = vals.iter().all(|&v| v == vals[0]);
            if constant {
                assert_eq!(e, 0.0);
            } else {
                assert!(e > 0.0);
            }
        }
    }

    #[test]
    fn dirichlet_energy_2d_linear() {
        let g = Grid::<f64>::new_2d(1.0, 1.0, 6, 6).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| 2.0 * x - y).unwrap();
        // |grad f|^2 = 5 on the unit square.
        assert!((f.dirichlet_energy() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn green_identity_for_strictly_interior_support() {
        let g = grid_1d(12);
        let f = ScalarField::from_fn(&g, |x, _| (3.1 * x).sin() + x * x).unwrap();
        // g vanishes on the boundary and the first interior ring.
        let mut gv = vec![0.0; g.node_count()];
        for id in 2..g.node_count() - 2 {
            let x = g.coords(id)[0];
            gv[id] = (x - 2.0 / 12.0) * (10.0 / 12.0 - x) * (1.0 + x);
        }
        let gfield = ScalarField::from_values(&g, gv).unwrap();
        let lf = f.laplacian();
        let lg = gfield.laplacian();
        let lhs = inner_interior(&g, lf.raw(), gfield.values());
        let rhs = inner_interior(&g, f.values(), lg.raw());
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}
