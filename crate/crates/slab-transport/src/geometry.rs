//! Phase-space primitives for the unit slab: positions with depth in [0, 1],
//! unit directions, exit times along characteristic lines, and backtracing to
//! the incoming boundary.
//!
//! The slab occupies the full lateral plane with depth as the last
//! coordinate. Exit times are closed-form in the depth component and are
//! `+inf` for exactly horizontal directions, which downstream integral
//! operators treat as a separate truncated-ray branch.

use thiserror::Error;

const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("direction norm deviates from 1 by {0:.3e}")]
    NotUnit(f64),
    #[error("cannot normalize a near-zero vector")]
    ZeroVector,
    #[error("depth coordinate {0} lies outside [0, 1]")]
    DepthOutOfRange(f64),
    #[error("boundary point is not incoming: depth {depth}, depth component {xi_d}")]
    NotIncoming { depth: f64, xi_d: f64 },
    #[error("no boundary foot exists for a horizontal direction")]
    HorizontalDirection,
    #[error("lateral window must have min < max on every axis")]
    BadLateralWindow,
}

/// A point of the closed slab; the last coordinate is the depth in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position<const D: usize>(pub [f64; D]);

impl<const D: usize> Position<D> {
    pub fn new(coords: [f64; D]) -> Result<Self, GeometryError> {
        let depth = coords[D - 1];
        if !(0.0..=1.0).contains(&depth) {
            return Err(GeometryError::DepthOutOfRange(depth));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    pub fn depth(&self) -> f64 {
        self.0[D - 1]
    }

    pub fn is_interior(&self) -> bool {
        self.depth() > 0.0 && self.depth() < 1.0
    }

    /// Displace by `t` along `xi`. The caller is responsible for keeping the
    /// result inside the closed slab; the constructor re-checks.
    pub fn advanced(&self, xi: &Direction<D>, t: f64) -> Result<Self, GeometryError> {
        let mut c = self.0;
        for (ci, di) in c.iter_mut().zip(xi.components()) {
            *ci += t * di;
        }
        Self::new(c)
    }
}

/// A unit vector; the depth component is the last coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<const D: usize> {
    components: [f64; D],
}

impl<const D: usize> Direction<D> {
    /// Accepts a vector that is already unit to within 1e-12.
    pub fn new(components: [f64; D]) -> Result<Self, GeometryError> {
        let norm: f64 = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(GeometryError::NotUnit((norm - 1.0).abs()));
        }
        Ok(Self { components })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vector(v: [f64; D]) -> Result<Self, GeometryError> {
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(GeometryError::ZeroVector);
        }
        let mut c = v;
        for ci in c.iter_mut() {
            *ci /= norm;
        }
        Ok(Self { components: c })
    }

    pub fn components(&self) -> &[f64; D] {
        &self.components
    }

    pub fn depth_component(&self) -> f64 {
        self.components[D - 1]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn reversed(&self) -> Self {
        let mut c = self.components;
        for ci in c.iter_mut() {
            *ci = -*ci;
        }
        Self { components: c }
    }

    /// Polar angle in [0, 2pi); meaningful for d=2 where the direction is
    /// (cos theta, sin theta).
    pub fn polar_angle(&self) -> f64 {
        let theta = self.components[D - 1].atan2(self.components[0]);
        if theta < 0.0 {
            theta + 2.0 * std::f64::consts::PI
        } else {
            theta
        }
    }
}

impl Direction<2> {
    pub fn from_theta(theta: f64) -> Self {
        Self {
            components: [theta.cos(), theta.sin()],
        }
    }
}

/// Which face of the slab a boundary point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    /// Depth 0; outer normal is -e_d, so incoming means a positive depth component.
    Bottom,
    /// Depth 1; outer normal is +e_d, so incoming means a negative depth component.
    Top,
}

impl Face {
    pub fn depth(&self) -> f64 {
        match self {
            Face::Bottom => 0.0,
            Face::Top => 1.0,
        }
    }

    /// Depth component of the outer normal.
    pub fn normal_depth_component(&self) -> f64 {
        match self {
            Face::Bottom => -1.0,
            Face::Top => 1.0,
        }
    }
}

/// A point of the solvable phase space: either an interior point with any
/// unit direction, or a boundary point whose direction enters the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const D: usize> {
    x: Position<D>,
    xi: Direction<D>,
}

impl<const D: usize> PhasePoint<D> {
    pub fn new(x: Position<D>, xi: Direction<D>) -> Result<Self, GeometryError> {
        if !x.is_interior() {
            let face = if x.depth() == 0.0 { Face::Bottom } else { Face::Top };
            // Incoming requires n(x) . xi < 0.
            if face.normal_depth_component() * xi.depth_component() >= 0.0 {
                return Err(GeometryError::NotIncoming {
                    depth: x.depth(),
                    xi_d: xi.depth_component(),
                });
            }
        }
        Ok(Self { x, xi })
    }

    pub fn from_coords(x: [f64; D], xi: [f64; D]) -> Result<Self, GeometryError> {
        Self::new(Position::new(x)?, Direction::new(xi)?)
    }

    pub fn position(&self) -> &Position<D> {
        &self.x
    }

    pub fn direction(&self) -> &Direction<D> {
        &self.xi
    }

    pub fn is_interior(&self) -> bool {
        self.x.is_interior()
    }

    pub fn boundary_face(&self) -> Option<Face> {
        if self.x.depth() == 0.0 {
            Some(Face::Bottom)
        } else if self.x.depth() == 1.0 {
            Some(Face::Top)
        } else {
            None
        }
    }

    /// True when the point lies on the incoming boundary.
    pub fn on_incoming_boundary(&self) -> bool {
        self.boundary_face().is_some()
    }
}

/// Distance traveled backwards along `xi` before leaving the slab.
///
/// Closed form in the depth component; `+inf` for horizontal directions.
pub fn tau_minus<const D: usize>(p: &PhasePoint<D>) -> f64 {
    let xd = p.x.depth();
    let xid = p.xi.depth_component();
    if xid > 0.0 {
        xd / xid
    } else if xid < 0.0 {
        (xd - 1.0) / xid
    } else {
        f64::INFINITY
    }
}

/// Distance traveled forwards along `xi` before leaving the slab.
pub fn tau_plus<const D: usize>(p: &PhasePoint<D>) -> f64 {
    let xd = p.x.depth();
    let xid = p.xi.depth_component();
    if xid > 0.0 {
        (1.0 - xd) / xid
    } else if xid < 0.0 {
        -xd / xid
    } else {
        f64::INFINITY
    }
}

/// The incoming-boundary point reached by tracing backwards along `xi`.
///
/// The depth coordinate of the result is snapped to exactly 0 or 1.
pub fn backtrace_foot<const D: usize>(p: &PhasePoint<D>) -> Result<PhasePoint<D>, GeometryError> {
    let xid = p.xi.depth_component();
    if xid == 0.0 {
        return Err(GeometryError::HorizontalDirection);
    }
    let tau = tau_minus(p);
    let mut c = *p.x.coords();
    for (ci, di) in c.iter_mut().zip(p.xi.components()) {
        *ci -= tau * di;
    }
    c[D - 1] = if xid > 0.0 { 0.0 } else { 1.0 };
    PhasePoint::new(Position(c), p.xi)
}

/// The slab with a finite lateral window used for collocation grids and
/// constant-tail conventions; the depth extent is always (0, 1).
#[derive(Debug, Clone)]
pub struct SlabDomain<const D: usize> {
    /// Per-axis bounds; the last entry is pinned to (0, 1).
    bounds: [(f64, f64); D],
}

impl<const D: usize> SlabDomain<D> {
    pub fn new(lateral_window: &[(f64, f64)]) -> Result<Self, GeometryError> {
        assert!(D >= 2, "slab geometry needs at least two coordinates");
        assert_eq!(
            lateral_window.len(),
            D - 1,
            "one lateral interval per lateral axis"
        );
        let mut bounds = [(0.0, 1.0); D];
        for (i, &(lo, hi)) in lateral_window.iter().enumerate() {
            if !(lo < hi) {
                return Err(GeometryError::BadLateralWindow);
            }
            bounds[i] = (lo, hi);
        }
        bounds[D - 1] = (0.0, 1.0);
        Ok(Self { bounds })
    }

    pub fn dimension(&self) -> usize {
        D
    }

    pub fn bounds(&self) -> &[(f64, f64); D] {
        &self.bounds
    }

    pub fn lateral_window(&self) -> &[(f64, f64)] {
        &self.bounds[..D - 1]
    }

    pub fn contains(&self, x: &Position<D>) -> bool {
        x.depth() >= 0.0 && x.depth() <= 1.0
    }
}
