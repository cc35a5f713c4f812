//! Collocation grid for the source iteration: tensor spatial nodes (lateral
//! axes span the window, depth nodes are strictly interior midpoints) times
//! the angular quadrature nodes. Off-node evaluation is multilinear in space
//! and linear in the angular parameter, with constant extension outside the
//! node hull; interpolating a stored constant returns that constant exactly.

use crate::geometry::SlabDomain;
use crate::medium::multilinear;
use crate::quadrature::{AngularGrid, QuadratureSpec};

#[derive(Debug, Clone)]
pub struct CollocationGrid<const D: usize> {
    domain: SlabDomain<D>,
    bounds: [(f64, f64); D],
    dims: [usize; D],
    angular: AngularGrid<D>,
    n_spatial: usize,
}

impl<const D: usize> CollocationGrid<D> {
    pub fn build(
        domain: SlabDomain<D>,
        lateral_dims: &[usize],
        depth_nodes: usize,
        quad: &QuadratureSpec,
    ) -> Result<Self, crate::quadrature::QuadratureError> {
        assert_eq!(lateral_dims.len(), D - 1, "one node count per lateral axis");
        let angular = AngularGrid::<D>::build(quad)?;
        let mut bounds = [(0.0, 0.0); D];
        let mut dims = [0usize; D];
        for axis in 0..D - 1 {
            bounds[axis] = domain.bounds()[axis];
            dims[axis] = lateral_dims[axis].max(2);
        }
        let nz = depth_nodes.max(2);
        let half = 0.5 / nz as f64;
        bounds[D - 1] = (half, 1.0 - half);
        dims[D - 1] = nz;
        let n_spatial = dims.iter().product();
        Ok(Self {
            domain,
            bounds,
            dims,
            angular,
            n_spatial,
        })
    }

    pub fn domain(&self) -> &SlabDomain<D> {
        &self.domain
    }

    pub fn angular(&self) -> &AngularGrid<D> {
        &self.angular
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_angular(&self) -> usize {
        self.angular.len()
    }

    pub fn dims(&self) -> &[usize; D] {
        &self.dims
    }

    /// Coordinates of spatial node `idx` (row-major, depth axis fastest).
    pub fn node_position(&self, idx: usize) -> [f64; D] {
        let mut rem = idx;
        let mut coords = [0.0; D];
        for axis in (0..D).rev() {
            let n = self.dims[axis];
            let k = rem % n;
            rem /= n;
            let (lo, hi) = self.bounds[axis];
            coords[axis] = if n == 1 {
                lo
            } else {
                lo + k as f64 * (hi - lo) / (n - 1) as f64
            };
        }
        coords
    }

    /// Multilinear interpolation of one angular slice at `x`.
    pub fn interp_spatial(&self, slice: &[f64], x: &[f64; D]) -> f64 {
        debug_assert_eq!(slice.len(), self.n_spatial);
        multilinear(&self.bounds, &self.dims, slice, x)
    }

    /// Ray parameters in (0, length) where the upstream ray `x - s xi`
    /// crosses an interpolation node plane. The interpolant has derivative
    /// kinks exactly there, so quadratures that must stay smooth in the
    /// endpoint split panels at these values.
    pub fn cell_crossings(
        &self,
        x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
        length: f64,
    ) -> Vec<f64> {
        let mut out = Vec::new();
        if !(length > 0.0) || !length.is_finite() {
            return out;
        }
        for axis in 0..D {
            let d = xi.components()[axis];
            if d.abs() < 1e-14 {
                continue;
            }
            let (lo, hi) = self.bounds[axis];
            let n = self.dims[axis];
            let step = (hi - lo) / (n - 1) as f64;
            for k in 0..n {
                let plane = lo + k as f64 * step;
                let s = (x[axis] - plane) / d;
                if s > 0.0 && s < length {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// Values per (angular node, spatial node), angular-major.
#[derive(Debug, Clone)]
pub struct GridValues {
    data: Vec<f64>,
    n_spatial: usize,
}

impl GridValues {
    pub fn zeros(n_angular: usize, n_spatial: usize) -> Self {
        Self {
            data: vec![0.0; n_angular * n_spatial],
            n_spatial,
        }
    }

    pub fn constant(value: f64, n_angular: usize, n_spatial: usize) -> Self {
        Self {
            data: vec![value; n_angular * n_spatial],
            n_spatial,
        }
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_angular(&self) -> usize {
        self.data.len() / self.n_spatial
    }

    pub fn at(&self, angle: usize, spatial: usize) -> f64 {
        self.data[angle * self.n_spatial + spatial]
    }

    pub fn set(&mut self, angle: usize, spatial: usize, value: f64) {
        self.data[angle * self.n_spatial + spatial] = value;
    }

    pub fn angle_slice(&self, angle: usize) -> &[f64] {
        &self.data[angle * self.n_spatial..(angle + 1) * self.n_spatial]
    }

    pub fn angle_slices_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        self.data.chunks_mut(self.n_spatial)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn add_assign(&mut self, other: &GridValues) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// Evaluate at an arbitrary phase point: multilinear in space within each
    /// adjacent angular slice, linear across the angular stencil.
    pub fn eval<const D: usize>(
        &self,
        grid: &CollocationGrid<D>,
        x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
    ) -> f64 {
        grid.angular()
            .interp_stencil(xi)
            .into_iter()
            .map(|(a, w)| w * grid.interp_spatial(self.angle_slice(a), x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Direction;
    use approx::assert_relative_eq;

    fn small_grid() -> CollocationGrid<2> {
        let domain = SlabDomain::new(&[(-1.0, 1.0)]).unwrap();
        let quad = QuadratureSpec::default().with_angular_nodes(8);
        CollocationGrid::build(domain, &[5], 4, &quad).unwrap()
    }

    #[test]
    fn depth_nodes_strictly_interior() {
        let grid = small_grid();
        for idx in 0..grid.n_spatial() {
            let depth = grid.node_position(idx)[1];
            assert!(depth > 0.0 && depth < 1.0);
        }
    }

    #[test]
    fn node_positions_cover_window() {
        let grid = small_grid();
        let first = grid.node_position(0);
        assert_relative_eq!(first[0], -1.0);
        assert_relative_eq!(first[1], 0.125);
        let last = grid.node_position(grid.n_spatial() - 1);
        assert_relative_eq!(last[0], 1.0);
        assert_relative_eq!(last[1], 0.875);
    }

    #[test]
    fn constant_field_interpolates_exactly() {
        let grid = small_grid();
        let values = GridValues::constant(3.25, grid.n_angular(), grid.n_spatial());
        for &(x1, depth, theta) in &[
            (0.33, 0.5, 1.0),
            (-2.5, 0.01, 2.0),
            (0.0, 0.999, 4.5),
            (7.0, 0.5, std::f64::consts::FRAC_PI_2),
        ] {
            let v = values.eval(&grid, &[x1, depth], &Direction::from_theta(theta));
            assert_relative_eq!(v, 3.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn node_values_recovered_at_nodes() {
        let grid = small_grid();
        let mut values = GridValues::zeros(grid.n_angular(), grid.n_spatial());
        for a in 0..grid.n_angular() {
            for s in 0..grid.n_spatial() {
                let x = grid.node_position(s);
                values.set(a, s, x[0] + 10.0 * x[1] + 100.0 * a as f64);
            }
        }
        for (a, s) in [(0usize, 0usize), (3, 7), (7, 19)] {
            let x = grid.node_position(s);
            let v = grid.interp_spatial(values.angle_slice(a), &x);
            assert_relative_eq!(v, values.at(a, s), epsilon = 1e-12);
        }
    }
}
